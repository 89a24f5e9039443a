use rayon::prelude::*;

use crate::distances::{pairwise_self, CallCounter, DistanceKind, Stage};
use crate::error::{Error, Result};
use crate::tsdata::TimeSeries;

/// Reassigns every series given fresh distances to its current centroid.
///
/// `distances[i]` must equal `d(series[i], centroids[labels[i]])`. Each other
/// centroid is tried in index order and wins only on a strictly smaller
/// distance. With `use_pruning`, a candidate `j` is skipped without a distance
/// call whenever `d(c_j, c_best) >= 2 * best`: by the triangle inequality
/// `d(x, c_j) >= best` then holds, so `j` cannot win. The
/// centroid-to-centroid matrix costs `k(k-1)/2` calls up front.
pub fn fast_assign(
    series: &[TimeSeries],
    centroids: &[TimeSeries],
    labels: &[usize],
    distances: &[f64],
    kind: DistanceKind,
    counter: &CallCounter,
    use_pruning: bool,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if use_pruning && !kind.is_metric() {
        return Err(Error::Config(format!(
            "triangle-inequality pruning requires a metric distance, not {kind}"
        )));
    }
    if labels.len() != series.len() || distances.len() != series.len() {
        return Err(Error::Shape(
            "labels and distances must match the number of series".into(),
        ));
    }
    let k = centroids.len();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Shape(format!("label {bad} out of range for k = {k}")));
    }

    let between = if use_pruning && k > 1 {
        Some(pairwise_self(centroids, kind, counter, Stage::Assign)?)
    } else {
        None
    };

    let assigned: Vec<(usize, f64)> = series
        .par_iter()
        .zip(labels.par_iter().zip(distances.par_iter()))
        .map(|(x, (&label, &dist))| {
            let mut closest = label;
            let mut min_dist = dist;
            for j in 0..k {
                if j == closest {
                    continue;
                }
                if let Some(m) = &between {
                    if 2.0 * min_dist <= m[j][closest] {
                        continue;
                    }
                }
                let t = kind.counted(x, &centroids[j], counter, Stage::Assign)?;
                if t < min_dist {
                    min_dist = t;
                    closest = j;
                }
            }
            Ok((closest, min_dist))
        })
        .collect::<Result<_>>()?;

    Ok(assigned.into_iter().unzip())
}

/// Full Lloyd's assignment: every series against every centroid.
pub(crate) fn nearest(
    series: &[TimeSeries],
    centroids: &[TimeSeries],
    kind: DistanceKind,
    counter: &CallCounter,
    stage: Stage,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if centroids.is_empty() {
        return Err(Error::Config("no centroids to assign to".into()));
    }
    let assigned: Vec<(usize, f64)> = series
        .par_iter()
        .map(|x| {
            let mut best = (0, kind.counted(x, &centroids[0], counter, stage)?);
            for (j, c) in centroids.iter().enumerate().skip(1) {
                let t = kind.counted(x, c, counter, stage)?;
                if t < best.1 {
                    best = (j, t);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(assigned.into_iter().unzip())
}
