//! Lloyd's k-means baselines: Euclidean k-means, elastic assignment with
//! arithmetic-mean centroids, and elastic assignment with elastic barycentre
//! centroids (DBA under DTW, MBA under MSM).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{arithmetic_mean, elastic_barycentre_average, BarycentreConfig};
use crate::distances::{CallCounter, DistanceKind, Stage};
use crate::error::{Error, Result};
use crate::tsdata::TimeSeries;

use super::assign::nearest;
use super::init::{elastic_kmeans_pp, forgy};
use super::{check_equal_lengths, members_by_cluster, repair_empty_clusters, validate_k, ClusterModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Euclidean assignment, arithmetic-mean centroids.
    EuclidMean,
    /// Elastic assignment, arithmetic-mean centroids.
    ElasticAssignOnly,
    /// Elastic assignment, elastic barycentre centroids.
    ElasticBA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineInit {
    Forgy,
    KMeansPlusPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub distance: DistanceKind,
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_its: usize,
    pub init: BaselineInit,
    pub barycentre: BarycentreConfig,
}

impl BaselineConfig {
    /// Defaults per baseline: the mean-centroid variants use Forgy seeding
    /// with 10 restarts and at most 50 rounds; the barycentre variant uses a
    /// single elastic k-means++ start and at most 300 rounds.
    pub fn new(kind: BaselineKind, distance: DistanceKind, k: usize) -> Self {
        let (init, restarts, max_its) = match kind {
            BaselineKind::EuclidMean | BaselineKind::ElasticAssignOnly => (BaselineInit::Forgy, 10, 50),
            BaselineKind::ElasticBA => (BaselineInit::KMeansPlusPlus, 1, 300),
        };
        BaselineConfig {
            kind,
            distance,
            k,
            seed: 0,
            restarts,
            max_its,
            init,
            barycentre: BarycentreConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    /// Distance actually used; the Euclidean baseline ignores `distance`.
    pub fn effective_distance(&self) -> DistanceKind {
        match self.kind {
            BaselineKind::EuclidMean => DistanceKind::Euclidean,
            _ => self.distance,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        validate_k(self.k, n)?;
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_its == 0 {
            return Err(Error::Config("max_its must be at least 1".into()));
        }
        self.distance.validate()?;
        self.barycentre.validate()
    }
}

/// Fits `config.restarts` independent Lloyd's runs and keeps the one with the
/// smallest sum of squared distances (earliest on ties). Restart `r` draws
/// from stream `r` of the generator seeded with `config.seed`.
pub fn fit_baseline(series: &[TimeSeries], config: &BaselineConfig) -> Result<ClusterModel> {
    config.validate(series.len())?;
    check_equal_lengths(series)?;
    let counter = CallCounter::new();
    let mut best: Option<ClusterModel> = None;
    for restart in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let model = lloyd(series, config, &mut rng, &counter)?;
        if best.as_ref().is_none_or(|b| model.sse() < b.sse()) {
            best = Some(model);
        }
    }
    let mut best = best.expect("at least one restart");
    best.calls = counter.snapshot();
    Ok(best)
}

fn lloyd(
    series: &[TimeSeries],
    config: &BaselineConfig,
    rng: &mut ChaCha8Rng,
    counter: &CallCounter,
) -> Result<ClusterModel> {
    let kind = config.effective_distance();
    let k = config.k;

    let (mut centroids, mut labels, mut distances) = match config.init {
        BaselineInit::Forgy => {
            let centroids = forgy(series, k, rng)?;
            let (labels, distances) = nearest(series, &centroids, kind, counter, Stage::Assign)?;
            (centroids, labels, distances)
        }
        BaselineInit::KMeansPlusPlus => {
            let init = elastic_kmeans_pp(series, k, kind, rng, counter)?;
            (init.centroids, init.labels, init.distances)
        }
    };
    repair_empty_clusters(series, &mut centroids, &mut labels, &mut distances)?;

    let mut rounds = 0;
    let mut converged = false;
    let mut empty_streak = 0;
    while rounds < config.max_its {
        let groups = members_by_cluster(&labels, k)?;
        let new_centroids = groups
            .iter()
            .zip(&centroids)
            .map(|(idx, current)| {
                let members: Vec<&TimeSeries> = idx.iter().map(|&i| &series[i]).collect();
                match config.kind {
                    BaselineKind::EuclidMean | BaselineKind::ElasticAssignOnly => arithmetic_mean(&members),
                    BaselineKind::ElasticBA => {
                        elastic_barycentre_average(&members, current, kind, &config.barycentre, counter)
                            .map(|r| r.centroid)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (new_labels, new_distances) = nearest(series, &new_centroids, kind, counter, Stage::Assign)?;
        rounds += 1;

        let unchanged = new_labels == labels;
        centroids = new_centroids;
        labels = new_labels;
        distances = new_distances;

        let repaired = repair_empty_clusters(series, &mut centroids, &mut labels, &mut distances)?;
        if repaired > 0 {
            empty_streak += 1;
            if empty_streak >= k {
                return Err(Error::Convergence(format!(
                    "empty clusters formed in {empty_streak} consecutive rounds"
                )));
            }
        } else {
            empty_streak = 0;
        }
        if unchanged && repaired == 0 {
            converged = true;
            break;
        }
    }

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

#[cfg(test)]
mod tests {
    use super::*;

    fn groups() -> Vec<TimeSeries> {
        let protos = [[0.0, 1.0, 0.0, -1.0], [3.0, 3.0, -3.0, -3.0]];
        (0..10)
            .map(|i| TimeSeries::new(protos[i % 2].to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn euclid_mean_recovers_duplicated_groups() {
        let data = groups();
        let cfg = BaselineConfig::new(BaselineKind::EuclidMean, DistanceKind::Euclidean, 2).with_seed(5);
        let model = fit_baseline(&data, &cfg).unwrap();
        assert_eq!(model.sse(), 0.0);
        for i in 0..data.len() {
            assert_eq!(model.labels[i] == model.labels[0], i % 2 == 0);
        }
    }

    #[test]
    fn euclid_ignores_requested_distance() {
        let cfg = BaselineConfig::new(BaselineKind::EuclidMean, DistanceKind::Dtw, 2);
        assert_eq!(cfg.effective_distance(), DistanceKind::Euclidean);
    }

    #[test]
    fn zero_restarts_rejected() {
        let cfg = BaselineConfig::new(BaselineKind::ElasticBA, DistanceKind::default(), 2).with_restarts(0);
        assert!(matches!(fit_baseline(&groups(), &cfg), Err(Error::Config(_))));
    }
}
