//! Barycentre averaging under elastic distances.
//!
//! Two averages are provided. [`elastic_barycentre_average`] is the classic
//! epoch-wise realign-and-mean heuristic (DBA when used with DTW, MBA with
//! MSM). [`kasba_average`] is a stochastic subgradient search seeded from the
//! previous centroid: the first epoch uses every member, later epochs a random
//! subsample, and the search stops as soon as an epoch fails to strictly
//! reduce the summed distance over the whole cluster.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{alignment_path, AlignmentPath, CallCounter, DistanceKind, Stage};
use crate::error::{Error, Result};
use crate::tsdata::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarycentreConfig {
    pub max_iters: usize,
    pub learning_rate_init: f64,
    pub decay_rate: f64,
    pub subsample_fraction: f64,
    pub min_subsample: usize,
}

impl Default for BarycentreConfig {
    fn default() -> Self {
        BarycentreConfig {
            max_iters: 50,
            learning_rate_init: 0.05,
            decay_rate: 0.1,
            subsample_fraction: 0.5,
            min_subsample: 10,
        }
    }
}

impl BarycentreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("barycentre max_iters must be at least 1".into()));
        }
        if !(self.learning_rate_init > 0.0 && self.learning_rate_init.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate_init
            )));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate.is_finite()) {
            return Err(Error::Config(format!(
                "decay rate must be positive, got {}",
                self.decay_rate
            )));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "subsample fraction must lie in (0, 1], got {}",
                self.subsample_fraction
            )));
        }
        if self.min_subsample == 0 {
            return Err(Error::Config("min_subsample must be at least 1".into()));
        }
        Ok(())
    }

    /// Members drawn per epoch after the first:
    /// `min(n, max(min_subsample, ceil(fraction * n)))`.
    pub fn subsample_size(&self, n: usize) -> usize {
        let frac = (self.subsample_fraction * n as f64).ceil() as usize;
        n.min(self.min_subsample.max(frac))
    }

    /// Learning rate after `epoch` accepted epochs.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.learning_rate_init * (-self.decay_rate * epoch as f64).exp()
    }
}

/// Outcome of a barycentre search.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentreResult {
    pub centroid: TimeSeries,
    /// Distance from each member (input order) to `centroid`.
    pub member_distances: Vec<f64>,
    pub total_distance: f64,
    /// Totals of every accepted centroid, starting with the seed.
    pub accepted: Vec<f64>,
    /// Number of full-collection distance sums evaluated.
    pub evaluations: usize,
}

fn check_members<S: AsRef<[f64]>>(members: &[S], m: usize) -> Result<()> {
    if members.is_empty() {
        return Err(Error::EmptyCluster(0));
    }
    match members.iter().find(|x| x.as_ref().len() != m) {
        Some(bad) => Err(Error::shape(m, bad.as_ref().len())),
        None => Ok(()),
    }
}

/// Distances from `centroid` to every member, charged to the update stage.
pub fn member_distances<S: AsRef<[f64]> + Sync>(
    members: &[S],
    centroid: &[f64],
    kind: DistanceKind,
    counter: &CallCounter,
) -> Result<Vec<f64>> {
    members
        .par_iter()
        .map(|x| kind.counted(centroid, x.as_ref(), counter, Stage::Update))
        .collect()
}

/// Pointwise arithmetic mean.
pub fn arithmetic_mean<S: AsRef<[f64]>>(members: &[S]) -> Result<TimeSeries> {
    let first = members.first().ok_or(Error::EmptyCluster(0))?;
    let m = first.as_ref().len();
    check_members(members, m)?;
    let mut sum = vec![0.0; m];
    for x in members {
        for (s, v) in sum.iter_mut().zip(x.as_ref()) {
            *s += v;
        }
    }
    let n = members.len() as f64;
    TimeSeries::new(sum.into_iter().map(|s| s / n).collect())
}

fn paths_to<S: AsRef<[f64]> + Sync>(
    members: &[S],
    centroid: &[f64],
    kind: DistanceKind,
    counter: &CallCounter,
) -> Result<Vec<AlignmentPath>> {
    members
        .par_iter()
        .map(|x| {
            counter.record(Stage::Update, 1);
            alignment_path(centroid, x.as_ref(), kind).map(|(p, _)| p)
        })
        .collect()
}

/// One realign-and-average pass: every member is aligned to `centroid` and
/// each centroid position becomes the mean of the member values warped onto it.
pub fn elastic_ba_epoch<S: AsRef<[f64]> + Sync>(
    members: &[S],
    centroid: &[f64],
    kind: DistanceKind,
    counter: &CallCounter,
) -> Result<TimeSeries> {
    let m = centroid.len();
    check_members(members, m)?;
    let paths = paths_to(members, centroid, kind, counter)?;
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for (x, path) in members.iter().zip(&paths) {
        let x = x.as_ref();
        for &(ci, xj) in path.pairs() {
            sums[ci] += x[xj];
            counts[ci] += 1;
        }
    }
    // every valid path visits every centroid index
    debug_assert!(counts.iter().all(|&c| c > 0));
    TimeSeries::new(sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect())
}

/// Repeats [`elastic_ba_epoch`] from `init` while the summed distance to the
/// members strictly decreases, up to `config.max_iters` epochs. Returns the
/// best centroid seen.
pub fn elastic_barycentre_average<S: AsRef<[f64]> + Sync>(
    members: &[S],
    init: &TimeSeries,
    kind: DistanceKind,
    config: &BarycentreConfig,
    counter: &CallCounter,
) -> Result<BarycentreResult> {
    config.validate()?;
    check_members(members, init.len())?;

    let mut best_distances = member_distances(members, init, kind, counter)?;
    let mut best = BarycentreResult {
        centroid: init.clone(),
        total_distance: best_distances.iter().sum(),
        member_distances: Vec::new(),
        accepted: Vec::new(),
        evaluations: 1,
    };
    best.accepted.push(best.total_distance);

    for _ in 0..config.max_iters {
        let candidate = elastic_ba_epoch(members, &best.centroid, kind, counter)?;
        let distances = member_distances(members, &candidate, kind, counter)?;
        let total: f64 = distances.iter().sum();
        best.evaluations += 1;
        if total >= best.total_distance {
            break;
        }
        best.centroid = candidate;
        best.total_distance = total;
        best.accepted.push(total);
        best_distances = distances;
    }
    best.member_distances = best_distances;
    Ok(best)
}

/// Sequential subgradient pass over `members` in the given order. After each
/// member is aligned, the centroid moves by `-learning_rate * delta`, where
/// `delta[k]` sums `c[k] - x[j]` over the path pairs `(k, j)`.
pub fn kasba_update_centroid<S: AsRef<[f64]>>(
    members: &[S],
    centroid: &TimeSeries,
    kind: DistanceKind,
    learning_rate: f64,
    counter: &CallCounter,
) -> Result<TimeSeries> {
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    let m = centroid.len();
    if let Some(bad) = members.iter().find(|x| x.as_ref().len() != m) {
        return Err(Error::shape(m, bad.as_ref().len()));
    }
    let mut c = centroid.values().to_vec();
    let mut delta = vec![0.0; m];
    for x in members {
        let x = x.as_ref();
        counter.record(Stage::Update, 1);
        let (path, _) = alignment_path(&c, x, kind)?;
        delta.iter_mut().for_each(|d| *d = 0.0);
        for &(k, j) in path.pairs() {
            delta[k] += c[k] - x[j];
        }
        for (ck, dk) in c.iter_mut().zip(&delta) {
            *ck -= learning_rate * dk;
        }
    }
    TimeSeries::new(c)
}

/// Stochastic subgradient barycentre seeded from an incumbent centroid.
///
/// `seed_distances` are the distances from every member to `seed`; their sum
/// is the incumbent objective. Epoch 1 updates with all members in order;
/// later epochs with a uniform subsample drawn from `rng`. Each candidate is
/// scored on the full membership and accepted only if its sum is strictly
/// smaller, otherwise the incumbent is returned.
pub fn kasba_average<S, R>(
    members: &[S],
    seed: &TimeSeries,
    seed_distances: &[f64],
    kind: DistanceKind,
    config: &BarycentreConfig,
    rng: &mut R,
    counter: &CallCounter,
) -> Result<BarycentreResult>
where
    S: AsRef<[f64]> + Sync,
    R: Rng + ?Sized,
{
    config.validate()?;
    check_members(members, seed.len())?;
    if seed_distances.len() != members.len() {
        return Err(Error::Shape(format!(
            "{} seed distances for {} members",
            seed_distances.len(),
            members.len()
        )));
    }

    let n = members.len();
    let sample_size = config.subsample_size(n);
    let mut learning_rate = config.learning_rate_init;
    let mut result = BarycentreResult {
        centroid: seed.clone(),
        member_distances: seed_distances.to_vec(),
        total_distance: seed_distances.iter().sum(),
        accepted: Vec::new(),
        evaluations: 0,
    };
    result.accepted.push(result.total_distance);

    for epoch in 1..=config.max_iters {
        let candidate = if epoch == 1 {
            kasba_update_centroid(members, &result.centroid, kind, learning_rate, counter)?
        } else {
            let batch: Vec<&[f64]> = index::sample(rng, n, sample_size)
                .into_iter()
                .map(|i| members[i].as_ref())
                .collect();
            kasba_update_centroid(&batch, &result.centroid, kind, learning_rate, counter)?
        };
        let distances = member_distances(members, &candidate, kind, counter)?;
        let total: f64 = distances.iter().sum();
        result.evaluations += 1;
        if result.total_distance <= total {
            break;
        }
        result.centroid = candidate;
        result.member_distances = distances;
        result.total_distance = total;
        result.accepted.push(total);
        learning_rate = config.learning_rate(epoch);
    }
    Ok(result)
}

/// [`kasba_average`] seeded from the arithmetic mean of the members instead
/// of an incumbent; scoring the mean costs one extra full evaluation.
pub fn kasba_average_from_mean<S, R>(
    members: &[S],
    kind: DistanceKind,
    config: &BarycentreConfig,
    rng: &mut R,
    counter: &CallCounter,
) -> Result<BarycentreResult>
where
    S: AsRef<[f64]> + Sync,
    R: Rng + ?Sized,
{
    let mean = arithmetic_mean(members)?;
    let distances = member_distances(members, &mean, kind, counter)?;
    let mut result = kasba_average(members, &mean, &distances, kind, config, rng, counter)?;
    result.evaluations += 1;
    Ok(result)
}
