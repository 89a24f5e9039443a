//! External clustering evaluation: accuracy under the best cluster-to-class
//! matching, adjusted Rand index, and normalised / adjusted mutual
//! information (arithmetic-mean normaliser, natural log).

use std::collections::BTreeMap;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Co-occurrence counts of predicted clusters (rows) and true classes (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds the table; label values need not be contiguous.
    pub fn new(y_true: &[usize], y_pred: &[usize]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::Shape(format!(
                "{} true labels vs {} predicted labels",
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(Error::Shape("label vectors are empty".into()));
        }
        let rows = dense_ids(y_pred);
        let cols = dense_ids(y_true);
        let mut counts = vec![vec![0u64; cols.len()]; rows.len()];
        for (t, p) in y_true.iter().zip(y_pred) {
            counts[rows[p]][cols[t]] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols.len()).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(ContingencyTable {
            counts,
            row_sums,
            col_sums,
            total: y_true.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// True when both labelings induce the same partition.
    pub fn is_bijective(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self.counts.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
            && (0..self.col_sums.len()).all(|j| self.counts.iter().filter(|r| r[j] > 0).count() == 1)
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(j, &c)| (i, j, c))
        })
    }
}

fn dense_ids(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut ids: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    ids
}

/// Fraction of series whose cluster maps to their class under the
/// count-maximising one-to-one cluster/class matching.
pub fn clustering_accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let size = table.row_sums.len().max(table.col_sums.len());
    let mut weights = Matrix::new(size, size, 0i64);
    for (i, j, c) in table.nonzero() {
        weights[(i, j)] = c as i64;
    }
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / table.total as f64)
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index under the permutation model.
pub fn adjusted_rand_index(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let index: f64 = table.nonzero().map(|(_, _, c)| comb2(c)).sum();
    let rows: f64 = table.row_sums.iter().map(|&a| comb2(a)).sum();
    let cols: f64 = table.col_sums.iter().map(|&b| comb2(b)).sum();
    let expected = rows * cols / comb2(table.total).max(1.0);
    let max_index = (rows + cols) / 2.0;
    if max_index == expected {
        return Ok(if table.is_bijective() { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max_index - expected))
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&a| a > 0)
        .map(|&a| {
            let p = a as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total as f64;
    let mi: f64 = table
        .nonzero()
        .map(|(i, j, c)| {
            let c = c as f64;
            let a = table.row_sums[i] as f64;
            let b = table.col_sums[j] as f64;
            (c / n) * ((n * c) / (a * b)).ln()
        })
        .sum();
    mi.max(0.0)
}

/// Expected mutual information between two labelings with the table's
/// marginals under the hypergeometric model.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total;
    let nf = n as f64;
    let ln_fact = |x: u64| ln_gamma(x as f64 + 1.0);
    let ln_n = ln_fact(n);
    let mut emi = 0.0;
    for &a in &table.row_sums {
        for &b in &table.col_sums {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let base = ln_fact(a) + ln_fact(b) + ln_fact(n - a) + ln_fact(n - b) - ln_n;
            for nij in lo..=hi {
                let term = (nij as f64 / nf) * ((nf * nij as f64) / (a as f64 * b as f64)).ln();
                let ln_p = base - ln_fact(nij) - ln_fact(a - nij) - ln_fact(b - nij) - ln_fact(n + nij - a - b);
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// `(nmi, ami)`. When either labeling has zero entropy both scores are 1 for
/// identical partitions and 0 otherwise.
pub fn mutual_information_scores(y_true: &[usize], y_pred: &[usize]) -> Result<(f64, f64)> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let n = table.total as f64;
    let h_pred = entropy(&table.row_sums, n);
    let h_true = entropy(&table.col_sums, n);
    if h_pred == 0.0 || h_true == 0.0 {
        let v = if table.is_bijective() { 1.0 } else { 0.0 };
        return Ok((v, v));
    }
    let mi = mutual_information(&table);
    let mean_h = (h_pred + h_true) / 2.0;
    let nmi = (mi / mean_h).clamp(0.0, 1.0);

    let emi = expected_mutual_information(&table);
    let mut denom = mean_h - emi;
    denom = if denom < 0.0 {
        denom.min(-f64::EPSILON)
    } else {
        denom.max(f64::EPSILON)
    };
    let ami = (mi - emi) / denom;
    Ok((nmi, ami))
}

/// All four scores for one labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub clacc: f64,
    pub ari: f64,
    pub nmi: f64,
    pub ami: f64,
}

impl Scores {
    pub fn compute(y_true: &[usize], y_pred: &[usize]) -> Result<Scores> {
        let (nmi, ami) = mutual_information_scores(y_true, y_pred)?;
        Ok(Scores {
            clacc: clustering_accuracy(y_true, y_pred)?,
            ari: adjusted_rand_index(y_true, y_pred)?,
            nmi,
            ami,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Clacc => self.clacc,
            Metric::Ari => self.ari,
            Metric::Nmi => self.nmi,
            Metric::Ami => self.ami,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Clacc,
    Ari,
    Nmi,
    Ami,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Clacc, Metric::Ari, Metric::Nmi, Metric::Ami];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Clacc => "clacc",
            Metric::Ari => "ari",
            Metric::Nmi => "nmi",
            Metric::Ami => "ami",
        }
    }
}

/// Scores for one (dataset, algorithm, seed) cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub algorithm: String,
    pub seed: u64,
    pub scores: Scores,
    pub runtime_seconds: f64,
    pub distance_calls: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(clustering_accuracy(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_with_fewer_clusters_than_classes() {
        // one cluster can match only one class
        assert_eq!(clustering_accuracy(&[0, 0, 1, 2], &[0, 0, 0, 0]).unwrap(), 0.5);
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        assert!(matches!(clustering_accuracy(&[0], &[0, 1]), Err(Error::Shape(_))));
        assert!(matches!(adjusted_rand_index(&[0], &[0, 1]), Err(Error::Shape(_))));
        assert!(matches!(mutual_information_scores(&[0], &[0, 1]), Err(Error::Shape(_))));
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        // index 0, expected 2*2/6, max 2: (0 - 2/3) / (2 - 2/3) = -0.5
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&[3, 3, 3], &[7, 7, 7]).unwrap(), 1.0);
    }

    #[test]
    fn mutual_information_examples() {
        let (nmi, ami) = mutual_information_scores(&[0, 0, 1, 1, 2], &[5, 5, 3, 3, 9]).unwrap();
        assert!((nmi - 1.0).abs() < 1e-12);
        assert!((ami - 1.0).abs() < 1e-12);
        assert_eq!(mutual_information_scores(&[1, 1], &[0, 0]).unwrap(), (1.0, 1.0));
        assert_eq!(mutual_information_scores(&[1, 1, 2], &[0, 0, 0]).unwrap(), (0.0, 0.0));
        let (nmi, _) = mutual_information_scores(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!(nmi.abs() < 1e-12);
    }

    #[test]
    fn contingency_marginals() {
        let t = ContingencyTable::new(&[0, 1, 1, 2], &[5, 5, 6, 6]).unwrap();
        assert_eq!(t.counts(), &[vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(t.row_sums(), &[2, 2]);
        assert_eq!(t.col_sums(), &[1, 2, 1]);
        assert_eq!(t.total(), 4);
    }
}
