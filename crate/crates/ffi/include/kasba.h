#ifndef KASBA_H
#define KASBA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KasbaDistance {
  KASBA_DISTANCE_EUCLIDEAN = 0,
  KASBA_DISTANCE_DTW = 1,
  KASBA_DISTANCE_MSM = 2,
} KasbaDistance;

/**
 * Result code of every fallible call.
 */
typedef enum KasbaStatus {
  KASBA_STATUS_OK = 0,
  KASBA_STATUS_NULL_POINTER = 1,
  KASBA_STATUS_INVALID_ARGUMENT = 2,
  KASBA_STATUS_SHAPE = 3,
  KASBA_STATUS_FORMAT = 4,
  KASBA_STATUS_IO = 5,
  KASBA_STATUS_CONFIG = 6,
  KASBA_STATUS_CONVERGENCE = 7,
  KASBA_STATUS_EMPTY_CLUSTER = 8,
  KASBA_STATUS_BUFFER_TOO_SMALL = 9,
  KASBA_STATUS_PANIC = 10,
} KasbaStatus;

/**
 * Opaque dataset handle.
 */
typedef struct KasbaDataset KasbaDataset;

/**
 * Opaque fitted-model handle.
 */
typedef struct KasbaModel KasbaModel;

/**
 * Options for [`kasba_fit`]. Obtain defaults from [`kasba_fit_options_default`].
 */
typedef struct KasbaFitOptions {
  size_t k;
  uint64_t seed;
  enum KasbaDistance distance;
  /**
   * MSM split/merge cost, ignored for other distances.
   */
  double msm_c;
  size_t max_its;
  bool use_pruning;
} KasbaFitOptions;

typedef struct KasbaCallCounts {
  uint64_t init;
  uint64_t update;
  uint64_t assign;
} KasbaCallCounts;

typedef struct KasbaScores {
  double clacc;
  double ari;
  double nmi;
  double ami;
} KasbaScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *kasba_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kasba_version(void);

/**
 * Builds a dataset from `n` series of length `m` stored row-major in
 * `values`. `labels` may be NULL; otherwise it holds `n` class ids.
 *
 * # Safety
 * `values` must point to `n * m` readable doubles; `labels`, when non-null,
 * to `n` readable `size_t`; `out` must be writable.
 */
enum KasbaStatus kasba_dataset_new(const double *values,
                                   size_t n,
                                   size_t m,
                                   const size_t *labels,
                                   struct KasbaDataset **out);

/**
 * Loads a tab-separated dataset file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` writable.
 */
enum KasbaStatus kasba_dataset_load_tsv(const char *path,
                                        bool has_label,
                                        struct KasbaDataset **out);

/**
 * Z-normalises every series of `dataset` in place.
 *
 * # Safety
 * `dataset` must be a live handle from this library.
 */
enum KasbaStatus kasba_dataset_z_normalise(struct KasbaDataset *dataset);

/**
 * Writes the number of series and their length.
 *
 * # Safety
 * `dataset` must be a live handle; `n` and `m` writable.
 */
enum KasbaStatus kasba_dataset_shape(const struct KasbaDataset *dataset, size_t *n, size_t *m);

/**
 * Copies the dataset labels into `buf` (`len >= n`). Fails with
 * `INVALID_ARGUMENT` for unlabelled data.
 *
 * # Safety
 * `dataset` must be a live handle and `buf` writable for `len` elements.
 */
enum KasbaStatus kasba_dataset_labels(const struct KasbaDataset *dataset, size_t *buf, size_t len);

/**
 * # Safety
 * `dataset` must be NULL or a handle not yet freed.
 */
void kasba_dataset_free(struct KasbaDataset *dataset);

/**
 * Distance between two series of length `m`.
 *
 * # Safety
 * `a` and `b` must each point to `m` readable doubles; `out` writable.
 */
enum KasbaStatus kasba_distance(enum KasbaDistance kind,
                                double msm_c,
                                const double *a,
                                const double *b,
                                size_t m,
                                double *out);

/**
 * Default options: MSM with c = 1, 300 iterations, pruning on, seed 0.
 */
struct KasbaFitOptions kasba_fit_options_default(size_t k);

/**
 * Fits KASBA to `dataset`.
 *
 * # Safety
 * `dataset` must be a live handle, `options` readable and `out` writable.
 */
enum KasbaStatus kasba_fit(const struct KasbaDataset *dataset,
                           const struct KasbaFitOptions *options,
                           struct KasbaModel **out);

/**
 * Number of clusters of a fitted model.
 *
 * # Safety
 * `model` must be a live handle.
 */
size_t kasba_model_k(const struct KasbaModel *model);

/**
 * Rounds of update and assignment the fit performed.
 *
 * # Safety
 * `model` must be a live handle.
 */
size_t kasba_model_iterations(const struct KasbaModel *model);

/**
 * Copies the per-series cluster labels into `buf` (`len >= n`).
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `len` elements.
 */
enum KasbaStatus kasba_model_labels(const struct KasbaModel *model, size_t *buf, size_t len);

/**
 * Copies each series' distance to its centroid into `buf` (`len >= n`).
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `len` elements.
 */
enum KasbaStatus kasba_model_distances(const struct KasbaModel *model, double *buf, size_t len);

/**
 * Copies the centroids row-major into `buf` (`len >= k * m`).
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `len` elements.
 */
enum KasbaStatus kasba_model_centroids(const struct KasbaModel *model, double *buf, size_t len);

/**
 * Distance calls per stage recorded during the fit.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum KasbaStatus kasba_model_call_counts(const struct KasbaModel *model,
                                         struct KasbaCallCounts *out);

/**
 * Labels every series of `dataset` with its nearest centroid.
 *
 * # Safety
 * `model` and `dataset` must be live handles and `buf` writable for `len` elements.
 */
enum KasbaStatus kasba_model_predict(const struct KasbaModel *model,
                                     const struct KasbaDataset *dataset,
                                     size_t *buf,
                                     size_t len);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void kasba_model_free(struct KasbaModel *model);

/**
 * Clustering accuracy, ARI, NMI and AMI of `y_pred` against `y_true`.
 *
 * # Safety
 * `y_true` and `y_pred` must point to `n` readable `size_t`; `out` writable.
 */
enum KasbaStatus kasba_scores(const size_t *y_true,
                              const size_t *y_pred,
                              size_t n,
                              struct KasbaScores *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KASBA_H */
