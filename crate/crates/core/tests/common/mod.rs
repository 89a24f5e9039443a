//! Independent oracles and synthetic data shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use kasba::TimeSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_series(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

pub fn ts(v: &[f64]) -> TimeSeries {
    TimeSeries::new(v.to_vec()).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Diagonal,
    Vertical,
    Horizontal,
}

/// Every monotone path from (0, 0) to (m - 1, n - 1), as step sequences.
pub fn all_paths(m: usize, n: usize) -> Vec<Vec<Step>> {
    fn go(i: usize, j: usize, m: usize, n: usize, cur: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
        if i == m - 1 && j == n - 1 {
            out.push(cur.clone());
            return;
        }
        for (step, di, dj) in [(Step::Diagonal, 1, 1), (Step::Vertical, 1, 0), (Step::Horizontal, 0, 1)] {
            if i + di < m && j + dj < n {
                cur.push(step);
                go(i + di, j + dj, m, n, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, 0, m, n, &mut Vec::new(), &mut out);
    out
}

fn split_merge(x: f64, y: f64, z: f64, c: f64) -> f64 {
    let (lo, hi) = if y <= z { (y, z) } else { (z, y) };
    if lo <= x && x <= hi {
        c
    } else {
        c + (x - y).abs().min((x - z).abs())
    }
}

/// Cost of one path under DTW: squared differences of every visited cell.
pub fn dtw_path_cost(a: &[f64], b: &[f64], path: &[Step]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut cost = (a[0] - b[0]).powi(2);
    for s in path {
        match s {
            Step::Diagonal => {
                i += 1;
                j += 1
            }
            Step::Vertical => i += 1,
            Step::Horizontal => j += 1,
        }
        cost += (a[i] - b[j]).powi(2);
    }
    cost
}

/// Cost of one path under MSM: a move for the start cell and each diagonal
/// step, a split or merge for each vertical or horizontal step.
pub fn msm_path_cost(a: &[f64], b: &[f64], path: &[Step], c: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut cost = (a[0] - b[0]).abs();
    for s in path {
        cost += match s {
            Step::Diagonal => {
                i += 1;
                j += 1;
                (a[i] - b[j]).abs()
            }
            Step::Vertical => {
                i += 1;
                split_merge(a[i], a[i - 1], b[j], c)
            }
            Step::Horizontal => {
                j += 1;
                split_merge(b[j], a[i], b[j - 1], c)
            }
        };
    }
    cost
}

pub fn brute_dtw(a: &[f64], b: &[f64]) -> f64 {
    all_paths(a.len(), b.len())
        .iter()
        .map(|p| dtw_path_cost(a, b, p))
        .fold(f64::INFINITY, f64::min)
}

pub fn brute_msm(a: &[f64], b: &[f64], c: f64) -> f64 {
    all_paths(a.len(), b.len())
        .iter()
        .map(|p| msm_path_cost(a, b, p, c))
        .fold(f64::INFINITY, f64::min)
}

/// Converts an index-pair path into steps, failing on invalid moves.
pub fn steps_of(pairs: &[(usize, usize)]) -> Option<Vec<Step>> {
    if pairs.first() != Some(&(0, 0)) {
        return None;
    }
    pairs
        .windows(2)
        .map(|w| match (w[1].0 - w[0].0, w[1].1 - w[0].1) {
            (1, 1) => Some(Step::Diagonal),
            (1, 0) => Some(Step::Vertical),
            (0, 1) => Some(Step::Horizontal),
            _ => None,
        })
        .collect()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            cur.push(v);
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

/// Best accuracy over every injective cluster-to-class relabelling.
pub fn brute_accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    let kt = y_true.iter().max().unwrap() + 1;
    let kp = y_pred.iter().max().unwrap() + 1;
    let size = kt.max(kp);
    permutations(size)
        .iter()
        .map(|perm| y_true.iter().zip(y_pred).filter(|(t, p)| perm[**p] == **t).count())
        .max()
        .unwrap() as f64
        / y_true.len() as f64
}

/// Smallest summed distance from any member to all members.
pub fn best_medoid_sum(members: &[TimeSeries], dist: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    members
        .iter()
        .map(|c| members.iter().map(|x| dist(c, x)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Gaussian bump of height `h` centred at `centre` with width `w`.
pub fn bump(m: usize, centre: f64, w: f64, h: f64) -> Vec<f64> {
    (0..m).map(|t| h * (-((t as f64 - centre) / w).powi(2)).exp()).collect()
}

/// `n` series of length `m` from `k` bump prototypes plus uniform noise of
/// half-width `noise`; returns series and true classes (round-robin).
pub fn bump_dataset(rng: &mut impl Rng, n: usize, m: usize, k: usize, noise: f64) -> (Vec<TimeSeries>, Vec<usize>) {
    let protos: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            bump(
                m,
                (c as f64 + 0.5) * m as f64 / k as f64,
                m as f64 / (3.0 * k as f64),
                3.0,
            )
        })
        .collect();
    let mut series = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % k;
        let v: Vec<f64> = protos[class]
            .iter()
            .map(|p| p + rng.gen_range(-noise..=noise))
            .collect();
        series.push(TimeSeries::new(v).unwrap().z_normalised());
        labels.push(class);
    }
    (series, labels)
}

/// A cluster of `n` noisy, randomly shifted copies of one random walk.
pub fn random_cluster(rng: &mut impl Rng, n: usize, m: usize) -> Vec<TimeSeries> {
    let mut base = vec![0.0; m];
    for t in 1..m {
        base[t] = base[t - 1] + rng.gen_range(-1.0..1.0);
    }
    (0..n)
        .map(|_| {
            let shift: i64 = rng.gen_range(-2..=2);
            let v = (0..m)
                .map(|t| {
                    let s = (t as i64 + shift).clamp(0, m as i64 - 1) as usize;
                    base[s] + rng.gen_range(-0.3..0.3)
                })
                .collect();
            TimeSeries::new(v).unwrap()
        })
        .collect()
}

/// Writes a labelled TSV in the archive layout.
pub fn write_labelled(path: &Path, series: &[TimeSeries], labels: &[usize]) {
    let mut text = String::new();
    for (x, l) in series.iter().zip(labels) {
        text.push_str(&l.to_string());
        for v in x.iter() {
            text.push('\t');
            text.push_str(&format!("{v:?}"));
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// Writes `<dir>/<name>/<name>_TRAIN.tsv` and `_TEST.tsv` of a bump dataset.
pub fn write_split_dataset(dir: &Path, name: &str, seed: u64, n: usize, m: usize, k: usize) -> std::path::PathBuf {
    let mut r = rng(seed);
    let (train, train_y) = bump_dataset(&mut r, n, m, k, 0.3);
    let (test, test_y) = bump_dataset(&mut r, n, m, k, 0.3);
    let d = dir.join(name);
    std::fs::create_dir_all(&d).unwrap();
    let train_path = d.join(format!("{name}_TRAIN.tsv"));
    write_labelled(&train_path, &train, &train_y);
    write_labelled(&d.join(format!("{name}_TEST.tsv")), &test, &test_y);
    train_path
}
