//! Elastic distance kernels (DTW and MSM), alignment paths, and pairwise
//! distance matrices with per-stage call accounting.
//!
//! Both elastic kernels share one cost-matrix layout: an `(m+1) x (m+1)` grid
//! with `cm[0][0] = 0` and `+inf` along the remaining border, filled by a
//! recurrence over diagonal (match), vertical and horizontal moves. For MSM
//! this border makes `cm[1][1] = |a1 - b1|` and reproduces the first-row and
//! first-column recurrences of the original MSM definition.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance function used at every stage of a clusterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceKind {
    /// Lock-step Euclidean distance, `sqrt(sum (a_i - b_i)^2)`.
    Euclidean,
    /// Unconstrained dynamic time warping with squared pointwise cost.
    Dtw,
    /// Move-split-merge with split/merge cost `c`.
    Msm { c: f64 },
}

impl Default for DistanceKind {
    fn default() -> Self {
        DistanceKind::Msm { c: 1.0 }
    }
}

impl DistanceKind {
    pub fn msm(c: f64) -> Result<Self> {
        let kind = DistanceKind::Msm { c };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistanceKind::Msm { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::Config(format!("MSM cost must be positive and finite, got {c}")))
            }
            _ => Ok(()),
        }
    }

    /// True when the distance satisfies the triangle inequality.
    pub fn is_metric(&self) -> bool {
        !matches!(self, DistanceKind::Dtw)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Dtw => "dtw",
            DistanceKind::Msm { .. } => "msm",
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match *self {
            DistanceKind::Euclidean => euclidean_distance(a, b),
            DistanceKind::Dtw => dtw_distance(a, b),
            DistanceKind::Msm { c } => msm_distance(a, b, c),
        }
    }

    /// [`DistanceKind::distance`] plus one recorded call against `stage`.
    pub fn counted(&self, a: &[f64], b: &[f64], counter: &CallCounter, stage: Stage) -> Result<f64> {
        counter.record(stage, 1);
        self.distance(a, b)
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Msm { c } => write!(f, "msm(c={c})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// Accepts `euclidean`, `dtw`, `msm` (c = 1) or `msm:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "euclidean" | "euclid" | "ed" => Ok(DistanceKind::Euclidean),
            "dtw" => Ok(DistanceKind::Dtw),
            "msm" => Ok(DistanceKind::default()),
            other => match other.strip_prefix("msm:") {
                Some(c) => {
                    let c: f64 = c.parse().map_err(|_| Error::Config(format!("bad MSM cost in {s:?}")))?;
                    DistanceKind::msm(c)
                }
                None => Err(Error::Config(format!("unknown distance {s:?}"))),
            },
        }
    }
}

/// Clustering stage a distance call is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    Update,
    Assign,
}

/// Thread-safe monotone counters of distance computations per stage.
#[derive(Debug, Default)]
pub struct CallCounter {
    init: AtomicU64,
    update: AtomicU64,
    assign: AtomicU64,
}

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, stage: Stage, n: u64) {
        let slot = match stage {
            Stage::Init => &self.init,
            Stage::Update => &self.update,
            Stage::Assign => &self.assign,
        };
        slot.fetch_add(n, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CallCounts {
        CallCounts {
            init: self.init.load(Ordering::Relaxed),
            update: self.update.load(Ordering::Relaxed),
            assign: self.assign.load(Ordering::Relaxed),
        }
    }
}

/// A point-in-time copy of a [`CallCounter`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub init: u64,
    pub update: u64,
    pub assign: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.init + self.update + self.assign
    }
}

/// Monotone path through a cost matrix as 0-based `(a_index, b_index)` pairs,
/// from `(0, 0)` to `(m-1, m-1)`, each step one of `(1,1)`, `(1,0)`, `(0,1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPath(Vec<(usize, usize)>);

impl AlignmentPath {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn diagonal(m: usize) -> Self {
        AlignmentPath((0..m).map(|i| (i, i)).collect())
    }

    /// Checks endpoints and step shapes for series of lengths `m` and `n`.
    pub fn is_valid(&self, m: usize, n: usize) -> bool {
        let (Some(&first), Some(&last)) = (self.0.first(), self.0.last()) else {
            return false;
        };
        first == (0, 0)
            && last == (m - 1, n - 1)
            && self.0.windows(2).all(|w| {
                let di = w[1].0.wrapping_sub(w[0].0);
                let dj = w[1].1.wrapping_sub(w[0].1);
                matches!((di, dj), (1, 1) | (1, 0) | (0, 1))
            })
    }
}

/// Split/merge cost: `c` when `x` lies between `y` and `z` (inclusive),
/// otherwise `c` plus the distance from `x` to the nearer of the two.
#[inline]
pub fn msm_cost(x: f64, y: f64, z: f64, c: f64) -> f64 {
    if (y <= x && x <= z) || (y >= x && x >= z) {
        c
    } else {
        c + (x - y).abs().min((x - z).abs())
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Shape("series must be non-empty".into()));
    }
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    Ok(())
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// DTW distance: final cell of the cost matrix, no warping window.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = b.len();
    let mut prev = vec![f64::INFINITY; n + 1];
    let mut curr = vec![f64::INFINITY; n + 1];
    prev[0] = 0.0;
    for &ai in a {
        curr[0] = f64::INFINITY;
        for j in 1..=n {
            let d = ai - b[j - 1];
            curr[j] = d * d + min3(prev[j - 1], prev[j], curr[j - 1]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[n])
}

/// MSM distance with split/merge cost `c`.
pub fn msm_distance(a: &[f64], b: &[f64], c: f64) -> Result<f64> {
    check_lengths(a, b)?;
    DistanceKind::msm(c)?;
    let n = b.len();
    let mut prev = vec![f64::INFINITY; n + 1];
    let mut curr = vec![f64::INFINITY; n + 1];
    prev[0] = 0.0;
    for i in 1..=a.len() {
        curr[0] = f64::INFINITY;
        for j in 1..=n {
            curr[j] = msm_cell(a, b, c, i, j, prev[j - 1], prev[j], curr[j - 1]).0;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[n])
}

#[inline]
fn min3(diag: f64, up: f64, left: f64) -> f64 {
    diag.min(up).min(left)
}

/// Predecessor move chosen for a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Diagonal,
    Vertical,
    Horizontal,
}

/// Picks the cheapest candidate, keeping diagonal over vertical over
/// horizontal on ties.
#[inline]
fn choose(diag: f64, up: f64, left: f64) -> (f64, Move) {
    let mut best = (diag, Move::Diagonal);
    if up < best.0 {
        best = (up, Move::Vertical);
    }
    if left < best.0 {
        best = (left, Move::Horizontal);
    }
    best
}

/// One MSM cell at 1-based `(i, j)` from its three predecessors.
#[inline]
#[allow(clippy::too_many_arguments)]
fn msm_cell(a: &[f64], b: &[f64], c: f64, i: usize, j: usize, diag: f64, up: f64, left: f64) -> (f64, Move) {
    let (ai, bj) = (a[i - 1], b[j - 1]);
    let d = diag + (ai - bj).abs();
    let u = if i > 1 {
        up + msm_cost(ai, a[i - 2], bj, c)
    } else {
        f64::INFINITY
    };
    let l = if j > 1 {
        left + msm_cost(bj, ai, b[j - 2], c)
    } else {
        f64::INFINITY
    };
    choose(d, u, l)
}

/// Full `(m+1) x (n+1)` cost matrix with the move that produced each cell.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
    moves: Vec<Move>,
}

impl CostMatrix {
    pub fn compute(a: &[f64], b: &[f64], kind: DistanceKind) -> Result<Self> {
        check_lengths(a, b)?;
        kind.validate()?;
        let (rows, cols) = (a.len() + 1, b.len() + 1);
        let mut cost = vec![f64::INFINITY; rows * cols];
        let mut moves = vec![Move::Diagonal; rows * cols];
        cost[0] = 0.0;
        for i in 1..rows {
            for j in 1..cols {
                let diag = cost[(i - 1) * cols + j - 1];
                let up = cost[(i - 1) * cols + j];
                let left = cost[i * cols + j - 1];
                let (value, mv) = match kind {
                    DistanceKind::Dtw => {
                        let d = a[i - 1] - b[j - 1];
                        let (best, mv) = choose(diag, up, left);
                        (d * d + best, mv)
                    }
                    DistanceKind::Msm { c } => msm_cell(a, b, c, i, j, diag, up, left),
                    DistanceKind::Euclidean => {
                        let d = a[i - 1] - b[j - 1];
                        if i == j {
                            (d * d + diag, Move::Diagonal)
                        } else {
                            (f64::INFINITY, Move::Diagonal)
                        }
                    }
                };
                cost[i * cols + j] = value;
                moves[i * cols + j] = mv;
            }
        }
        Ok(CostMatrix {
            rows,
            cols,
            cost,
            moves,
        })
    }

    /// Entry at `(i, j)` of the bordered matrix (row/column 0 is the border).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols + j]
    }

    pub fn final_cost(&self) -> f64 {
        self.get(self.rows - 1, self.cols - 1)
    }

    /// Walks recorded moves back from the final cell.
    pub fn path(&self) -> AlignmentPath {
        let (mut i, mut j) = (self.rows - 1, self.cols - 1);
        let mut pairs = Vec::with_capacity(self.rows + self.cols);
        while i > 0 && j > 0 {
            pairs.push((i - 1, j - 1));
            if i == 1 && j == 1 {
                break;
            }
            match self.moves[i * self.cols + j] {
                Move::Diagonal => {
                    i -= 1;
                    j -= 1;
                }
                Move::Vertical => i -= 1,
                Move::Horizontal => j -= 1,
            }
        }
        pairs.reverse();
        AlignmentPath(pairs)
    }
}

/// Optimal alignment between `a` and `b` and the matching distance.
///
/// For [`DistanceKind::Euclidean`] the path is the diagonal.
pub fn alignment_path(a: &[f64], b: &[f64], kind: DistanceKind) -> Result<(AlignmentPath, f64)> {
    if let DistanceKind::Euclidean = kind {
        let d = euclidean_distance(a, b)?;
        return Ok((AlignmentPath::diagonal(a.len()), d));
    }
    let cm = CostMatrix::compute(a, b, kind)?;
    Ok((cm.path(), cm.final_cost()))
}

/// Row-major dense matrix of distances.
pub type DistanceMatrix = Vec<Vec<f64>>;

/// `out[i][j] = d(rows[i], cols[j])`, one recorded call per cell.
pub fn pairwise<S: AsRef<[f64]> + Sync>(
    rows: &[S],
    cols: &[S],
    kind: DistanceKind,
    counter: &CallCounter,
    stage: Stage,
) -> Result<DistanceMatrix> {
    rows.par_iter()
        .map(|r| {
            cols.iter()
                .map(|c| kind.counted(r.as_ref(), c.as_ref(), counter, stage))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Symmetric matrix of one collection against itself. Only the strict upper
/// triangle is computed (`n(n-1)/2` recorded calls); the diagonal is zero and
/// the lower triangle is mirrored.
pub fn pairwise_self<S: AsRef<[f64]> + Sync>(
    series: &[S],
    kind: DistanceKind,
    counter: &CallCounter,
    stage: Stage,
) -> Result<DistanceMatrix> {
    let n = series.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| kind.counted(series[i].as_ref(), series[j].as_ref(), counter, stage))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![vec![0.0; n]; n];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let j = i + 1 + offset;
            out[i][j] = d;
            out[j][i] = d;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msm_cost_cases() {
        assert_eq!(msm_cost(2.0, 1.0, 3.0, 1.0), 1.0);
        assert_eq!(msm_cost(5.0, 1.0, 3.0, 1.0), 3.0);
        assert_eq!(msm_cost(0.0, 0.0, 9.0, 1.0), 1.0);
        assert_eq!(msm_cost(2.0, 3.0, 1.0, 0.5), 0.5);
    }

    #[test]
    fn dtw_small_cases() {
        assert_eq!(dtw_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(dtw_distance(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn msm_hand_computed() {
        // cm[1][1]=1, cm[2][1]=3, cm[1][2]=2, cm[2][2]=min(1+2, 2+2, 3+1)=3
        let cm = CostMatrix::compute(&[1.0, 2.0], &[0.0, 0.0], DistanceKind::msm(1.0).unwrap()).unwrap();
        assert_eq!(cm.get(1, 1), 1.0);
        assert_eq!(cm.get(2, 1), 3.0);
        assert_eq!(cm.get(1, 2), 2.0);
        assert_eq!(cm.final_cost(), 3.0);
        assert_eq!(msm_distance(&[1.0, 2.0], &[0.0, 0.0], 1.0).unwrap(), 3.0);
    }

    #[test]
    fn dtw_matrix_border() {
        let cm = CostMatrix::compute(&[1.0, 2.0, 3.0], &[0.0, 1.0, 5.0], DistanceKind::Dtw).unwrap();
        assert_eq!(cm.get(0, 0), 0.0);
        for k in 1..=3 {
            assert!(cm.get(k, 0).is_infinite());
            assert!(cm.get(0, k).is_infinite());
        }
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        assert!(matches!(dtw_distance(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(matches!(msm_distance(&[1.0], &[1.0, 2.0], 1.0), Err(Error::Shape(_))));
        assert!(matches!(
            alignment_path(&[1.0], &[1.0, 2.0], DistanceKind::Dtw),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn identical_series_align_on_the_diagonal() {
        let a = [0.3, -1.0, 2.0, 2.0, 0.5];
        for kind in [DistanceKind::Dtw, DistanceKind::default(), DistanceKind::Euclidean] {
            let (path, d) = alignment_path(&a, &a, kind).unwrap();
            assert_eq!(path, AlignmentPath::diagonal(5));
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn dtw_path_for_constant_pair() {
        let (path, d) = alignment_path(&[0.0, 0.0], &[1.0, 1.0], DistanceKind::Dtw).unwrap();
        assert_eq!(d, 2.0);
        assert!(path.is_valid(2, 2));
        let replay: f64 = path.pairs().iter().map(|_| 1.0).sum();
        assert_eq!(replay, 2.0);
    }

    #[test]
    fn invalid_msm_cost_rejected() {
        assert!(DistanceKind::msm(0.0).is_err());
        assert!(DistanceKind::msm(f64::NAN).is_err());
        assert!(msm_distance(&[1.0], &[2.0], -1.0).is_err());
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("dtw".parse::<DistanceKind>().unwrap(), DistanceKind::Dtw);
        assert_eq!("MSM".parse::<DistanceKind>().unwrap(), DistanceKind::Msm { c: 1.0 });
        assert_eq!("msm:0.5".parse::<DistanceKind>().unwrap(), DistanceKind::Msm { c: 0.5 });
        assert!("twe".parse::<DistanceKind>().is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn pairwise_self_counts_upper_triangle() {
        let s = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let counter = CallCounter::new();
        let m = pairwise_self(&s, DistanceKind::default(), &counter, Stage::Assign).unwrap();
        assert_eq!(counter.snapshot().assign, 3);
        for i in 0..3 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        let one = pairwise_self(&s[..1], DistanceKind::Dtw, &counter, Stage::Assign).unwrap();
        assert_eq!(one, vec![vec![0.0]]);
    }

    #[test]
    fn pairwise_counts_every_cell() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![3.0, 3.0]];
        let counter = CallCounter::new();
        let m = pairwise(&a, &b, DistanceKind::Dtw, &counter, Stage::Init).unwrap();
        assert_eq!(counter.snapshot().init, 6);
        assert_eq!(m[1][1], 0.0);
        assert_eq!(m[0][2], dtw_distance(&a[0], &b[2]).unwrap());
    }
}
