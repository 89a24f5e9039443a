//! KASBA clustering and Lloyd's-style baselines.
//!
//! A KASBA fit seeds centroids with elastic k-means++, then alternates
//! [`recalculate_centroids`] (stochastic subgradient barycentres seeded from
//! the current centroids) with [`fast_assign`] (assignment that skips
//! candidate centroids ruled out by the triangle inequality) until labels stop
//! changing. Distances to assigned centroids are carried between stages so
//! that neither stage recomputes what the previous one already knows.

mod assign;
mod baseline;
mod init;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{kasba_average, kasba_average_from_mean, BarycentreConfig};
use crate::distances::{CallCounter, CallCounts, DistanceKind, Stage};
use crate::error::{Error, Result};
use crate::tsdata::TimeSeries;

pub use assign::fast_assign;
pub use baseline::{fit_baseline, BaselineConfig, BaselineInit, BaselineKind};
pub use init::{elastic_kmeans_pp, forgy, Initialisation};

/// Seed used for each barycentre search in the update stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidSeed {
    /// Start from the current centroid and reuse the known distance sum.
    #[default]
    Previous,
    /// Start from the arithmetic mean of the cluster members.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KasbaConfig {
    pub k: usize,
    pub distance: DistanceKind,
    pub max_its: usize,
    pub barycentre: BarycentreConfig,
    pub seed: u64,
    pub use_triangle_pruning: bool,
    pub centroid_seed: CentroidSeed,
}

impl KasbaConfig {
    pub fn new(k: usize) -> Self {
        KasbaConfig {
            k,
            distance: DistanceKind::default(),
            max_its: 300,
            barycentre: BarycentreConfig::default(),
            seed: 0,
            use_triangle_pruning: true,
            centroid_seed: CentroidSeed::Previous,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_distance(mut self, distance: DistanceKind) -> Self {
        self.distance = distance;
        self
    }

    pub fn with_pruning(mut self, on: bool) -> Self {
        self.use_triangle_pruning = on;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        validate_k(self.k, n)?;
        if self.max_its == 0 {
            return Err(Error::Config("max_its must be at least 1".into()));
        }
        self.distance.validate()?;
        self.barycentre.validate()
    }

    /// Pruning is only sound for metric distances.
    pub fn pruning_enabled(&self) -> bool {
        self.use_triangle_pruning && self.distance.is_metric()
    }
}

pub(crate) fn validate_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds the number of series ({n})")));
    }
    Ok(())
}

/// A fitted partition: centroids, labels, and each series' distance to its
/// assigned centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<TimeSeries>,
    pub labels: Vec<usize>,
    pub distances: Vec<f64>,
    pub distance: DistanceKind,
    pub iterations_run: usize,
    pub converged: bool,
    pub calls: CallCounts,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Sum of squared distances to assigned centroids.
    pub fn sse(&self) -> f64 {
        self.distances.iter().map(|d| d * d).sum()
    }

    pub fn total_distance(&self) -> f64 {
        self.distances.iter().sum()
    }

    /// Labels each series with its nearest centroid (lowest index on ties).
    pub fn predict(&self, series: &[TimeSeries]) -> Result<(Vec<usize>, Vec<f64>)> {
        let counter = CallCounter::new();
        assign::nearest(series, &self.centroids, self.distance, &counter, Stage::Assign)
    }
}

/// Per-cluster member indices; errors on the first empty cluster.
pub(crate) fn members_by_cluster(labels: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut groups = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::Shape(format!("label {l} out of range for k = {k}")));
        }
        groups[l].push(i);
    }
    if let Some(empty) = groups.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCluster(empty));
    }
    Ok(groups)
}

/// Moves a series into every empty cluster. The donor is the series furthest
/// from its centroid among clusters with more than one member; it becomes the
/// new centroid. Returns the number of clusters repaired.
pub(crate) fn repair_empty_clusters(
    series: &[TimeSeries],
    centroids: &mut [TimeSeries],
    labels: &mut [usize],
    distances: &mut [f64],
) -> Result<usize> {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut repaired = 0;
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let donor = (0..series.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if distances[b] >= distances[i] => Some(b),
                _ => Some(i),
            })
            .ok_or_else(|| Error::Convergence(format!("no series available to refill cluster {j}")))?;
        sizes[labels[donor]] -= 1;
        sizes[j] = 1;
        labels[donor] = j;
        distances[donor] = 0.0;
        centroids[j] = series[donor].clone();
        repaired += 1;
    }
    Ok(repaired)
}

/// Recomputes every centroid with a stochastic subgradient barycentre search
/// and returns the new centroids with each series' distance to its (new)
/// centroid under the unchanged labels.
#[allow(clippy::too_many_arguments)]
pub fn recalculate_centroids<R: rand::Rng + ?Sized>(
    series: &[TimeSeries],
    centroids: &[TimeSeries],
    labels: &[usize],
    distances: &[f64],
    kind: DistanceKind,
    config: &BarycentreConfig,
    centroid_seed: CentroidSeed,
    rng: &mut R,
    counter: &CallCounter,
) -> Result<(Vec<TimeSeries>, Vec<f64>)> {
    let k = centroids.len();
    if labels.len() != series.len() || distances.len() != series.len() {
        return Err(Error::Shape(
            "labels and distances must match the number of series".into(),
        ));
    }
    let groups = members_by_cluster(labels, k)?;
    let mut new_centroids = Vec::with_capacity(k);
    let mut new_distances = distances.to_vec();
    for (cluster, idx) in groups.iter().enumerate() {
        let members: Vec<&TimeSeries> = idx.iter().map(|&i| &series[i]).collect();
        let result = match centroid_seed {
            CentroidSeed::Previous => {
                let seed_distances: Vec<f64> = idx.iter().map(|&i| distances[i]).collect();
                kasba_average(
                    &members,
                    &centroids[cluster],
                    &seed_distances,
                    kind,
                    config,
                    rng,
                    counter,
                )?
            }
            CentroidSeed::Mean => kasba_average_from_mean(&members, kind, config, rng, counter)?,
        };
        for (&i, &d) in idx.iter().zip(&result.member_distances) {
            new_distances[i] = d;
        }
        new_centroids.push(result.centroid);
    }
    Ok((new_centroids, new_distances))
}

/// Runs KASBA on `series` (expected z-normalised).
pub fn fit_kasba(series: &[TimeSeries], config: &KasbaConfig) -> Result<ClusterModel> {
    fit_kasba_traced(series, config, |_| {})
}

/// [`fit_kasba`] invoking `on_round` with the labels after every round.
pub fn fit_kasba_traced<F: FnMut(&[usize])>(
    series: &[TimeSeries],
    config: &KasbaConfig,
    mut on_round: F,
) -> Result<ClusterModel> {
    config.validate(series.len())?;
    check_equal_lengths(series)?;

    let kind = config.distance;
    let pruning = config.pruning_enabled();
    let counter = CallCounter::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let Initialisation {
        mut centroids,
        mut labels,
        mut distances,
        ..
    } = elastic_kmeans_pp(series, config.k, kind, &mut rng, &counter)?;
    repair_empty_clusters(series, &mut centroids, &mut labels, &mut distances)?;

    let mut iterations = 1;
    let mut rounds = 0;
    let mut empty_streak = 0;
    let converged = loop {
        let (new_centroids, refreshed) = recalculate_centroids(
            series,
            &centroids,
            &labels,
            &distances,
            kind,
            &config.barycentre,
            config.centroid_seed,
            &mut rng,
            &counter,
        )?;
        let (new_labels, new_distances) =
            fast_assign(series, &new_centroids, &labels, &refreshed, kind, &counter, pruning)?;
        iterations += 1;
        rounds += 1;

        let unchanged = new_labels == labels;
        labels = new_labels;
        distances = new_distances;
        centroids = new_centroids;

        let repaired = repair_empty_clusters(series, &mut centroids, &mut labels, &mut distances)?;
        if repaired > 0 {
            empty_streak += 1;
            if empty_streak >= config.k {
                return Err(Error::Convergence(format!(
                    "empty clusters formed in {empty_streak} consecutive rounds"
                )));
            }
        } else {
            empty_streak = 0;
        }
        on_round(&labels);

        if unchanged && repaired == 0 {
            break true;
        }
        if iterations >= config.max_its {
            break false;
        }
    };

    Ok(ClusterModel {
        centroids,
        labels,
        distances,
        distance: kind,
        iterations_run: rounds,
        converged,
        calls: counter.snapshot(),
    })
}

pub(crate) fn check_equal_lengths(series: &[TimeSeries]) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(Error::EmptyDataset(String::new()));
    };
    match series.iter().find(|s| s.len() != first.len()) {
        Some(bad) => Err(Error::shape(first.len(), bad.len())),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn duplicated_groups() -> Vec<TimeSeries> {
        let protos = [
            vec![0.0, 1.0, 2.0, 1.0, 0.0],
            vec![2.0, -1.0, 0.0, -1.0, 2.0],
            vec![-2.0, -2.0, 3.0, 3.0, -2.0],
        ];
        (0..12).map(|i| ts(&protos[i % 3])).collect()
    }

    #[test]
    fn duplicated_groups_are_recovered_exactly() {
        let data = duplicated_groups();
        let model = fit_kasba(&data, &KasbaConfig::new(3).with_seed(3)).unwrap();
        assert_eq!(model.total_distance(), 0.0);
        assert!(model.converged);
        assert!(model.iterations_run <= 2);
        for i in 0..data.len() {
            for j in 0..data.len() {
                assert_eq!(model.labels[i] == model.labels[j], i % 3 == j % 3);
            }
        }
    }

    #[test]
    fn k_larger_than_n_is_config_error() {
        let data = duplicated_groups();
        assert!(matches!(fit_kasba(&data, &KasbaConfig::new(13)), Err(Error::Config(_))));
        assert!(matches!(fit_kasba(&data, &KasbaConfig::new(0)), Err(Error::Config(_))));
    }

    #[test]
    fn dtw_never_prunes() {
        let cfg = KasbaConfig::new(2).with_distance(DistanceKind::Dtw);
        assert!(cfg.use_triangle_pruning);
        assert!(!cfg.pruning_enabled());
    }

    #[test]
    fn repair_refills_empty_cluster_from_furthest_series() {
        let series = vec![ts(&[0.0]), ts(&[1.0]), ts(&[5.0])];
        let mut centroids = vec![ts(&[0.0]), ts(&[9.0])];
        let mut labels = vec![0, 0, 0];
        let mut distances = vec![0.0, 1.0, 5.0];
        let n = repair_empty_clusters(&series, &mut centroids, &mut labels, &mut distances).unwrap();
        assert_eq!(n, 1);
        assert_eq!(labels, vec![0, 0, 1]);
        assert_eq!(distances[2], 0.0);
        assert_eq!(centroids[1], series[2]);
    }

    #[test]
    fn recalculate_rejects_empty_cluster() {
        let series = vec![ts(&[0.0]), ts(&[1.0])];
        let centroids = vec![ts(&[0.0]), ts(&[1.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = recalculate_centroids(
            &series,
            &centroids,
            &[0, 0],
            &[0.0, 1.0],
            DistanceKind::default(),
            &BarycentreConfig::default(),
            CentroidSeed::Previous,
            &mut rng,
            &CallCounter::new(),
        );
        assert!(matches!(r, Err(Error::EmptyCluster(1))));
    }

    #[test]
    fn recalculate_single_member_cluster_moves_towards_member() {
        let series = vec![ts(&[0.0, 1.0, 0.0])];
        let centroids = vec![ts(&[0.0, 0.5, 0.0])];
        let kind = DistanceKind::default();
        let d0 = kind.distance(&series[0], &centroids[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = BarycentreConfig::default();
        let (c, p) = recalculate_centroids(
            &series,
            &centroids,
            &[0],
            &[d0],
            kind,
            &cfg,
            CentroidSeed::Previous,
            &mut rng,
            &CallCounter::new(),
        )
        .unwrap();
        assert!(p[0] < d0);
        assert_eq!(p[0], kind.distance(&c[0], &series[0]).unwrap());
        assert!(c[0][1] > 0.5 && c[0][1] < 1.0);
    }
}
