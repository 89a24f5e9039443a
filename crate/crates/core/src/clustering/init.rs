use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::distances::{CallCounter, DistanceKind, Stage};
use crate::error::Result;
use crate::tsdata::TimeSeries;

use super::{check_equal_lengths, validate_k};

/// Initial centroids together with the labels and distances they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialisation {
    pub centroids: Vec<TimeSeries>,
    /// Index into the input of the series copied into each centroid.
    pub chosen: Vec<usize>,
    pub labels: Vec<usize>,
    pub distances: Vec<f64>,
}

/// k-means++ seeding under `kind`.
///
/// The first centroid is drawn uniformly. Each later centroid is drawn with
/// probability proportional to the (unsquared) distance of each series to its
/// closest chosen centroid; when every such distance is zero the draw is
/// uniform over series not yet chosen. After each draw, a series moves to the
/// new centroid only if strictly closer. Chosen series are not re-measured.
pub fn elastic_kmeans_pp<R: Rng + ?Sized>(
    series: &[TimeSeries],
    k: usize,
    kind: DistanceKind,
    rng: &mut R,
    counter: &CallCounter,
) -> Result<Initialisation> {
    let n = series.len();
    validate_k(k, n)?;
    check_equal_lengths(series)?;
    kind.validate()?;

    let mut is_chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    is_chosen[first] = true;
    let mut chosen = vec![first];
    let mut labels = vec![0usize; n];
    let mut distances = measure(series, first, &is_chosen, kind, counter)?;
    distances[first] = 0.0;

    for cluster in 1..k {
        let next = if distances.iter().any(|&d| d > 0.0) {
            WeightedIndex::new(&distances)
                .expect("weights are finite, non-negative and not all zero")
                .sample(rng)
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !is_chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        is_chosen[next] = true;
        chosen.push(next);

        let candidate = measure(series, next, &is_chosen, kind, counter)?;
        for j in 0..n {
            if is_chosen[j] && j != next {
                continue;
            }
            let t = if j == next { 0.0 } else { candidate[j] };
            if t < distances[j] {
                labels[j] = cluster;
                distances[j] = t;
            }
        }
    }

    Ok(Initialisation {
        centroids: chosen.iter().map(|&i| series[i].clone()).collect(),
        chosen,
        labels,
        distances,
    })
}

/// Distances from every unchosen series to `series[centre]`; chosen series get +inf.
fn measure(
    series: &[TimeSeries],
    centre: usize,
    is_chosen: &[bool],
    kind: DistanceKind,
    counter: &CallCounter,
) -> Result<Vec<f64>> {
    (0..series.len())
        .into_par_iter()
        .map(|j| {
            if is_chosen[j] {
                Ok(f64::INFINITY)
            } else {
                kind.counted(&series[j], &series[centre], counter, Stage::Init)
            }
        })
        .collect()
}

/// Forgy seeding: `k` distinct series drawn uniformly.
pub fn forgy<R: Rng + ?Sized>(series: &[TimeSeries], k: usize, rng: &mut R) -> Result<Vec<TimeSeries>> {
    validate_k(k, series.len())?;
    Ok(index::sample(rng, series.len(), k)
        .into_iter()
        .map(|i| series[i].clone())
        .collect())
}
