//! Time-series data model, UCR-style TSV ingestion and per-series z-normalisation.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate series of finite real observations, length at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValue("time series must have at least one value".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite value {} at position {pos}",
                values[pos]
            )));
        }
        Ok(TimeSeries(values))
    }

    /// Zero series of length `m`.
    pub fn zeros(m: usize) -> Self {
        assert!(m > 0, "time series length must be positive");
        TimeSeries(vec![0.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Wraps values that the caller has already checked to be finite and non-empty.
    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
        TimeSeries(values)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let var = self.0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.0.len() as f64;
        var.sqrt()
    }

    /// `(x - mean) / std` with population std; constant series map to zeros.
    pub fn z_normalised(&self) -> TimeSeries {
        let mean = self.mean();
        let std = self.std();
        let scale = self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
        if std <= 1e-12 * scale {
            return TimeSeries::zeros(self.len());
        }
        TimeSeries(self.0.iter().map(|v| (v - mean) / std).collect())
    }
}

impl Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(ts: TimeSeries) -> Self {
        ts.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Combined,
}

/// A named collection of equal-length series with optional class labels.
///
/// Labels are contiguous integers `0..n_classes`. When the dataset was read
/// from a file, `class_names` keeps the raw label text for each integer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    series: Vec<TimeSeries>,
    labels: Option<Vec<usize>>,
    class_names: Option<Vec<String>>,
    split: Split,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        series: Vec<TimeSeries>,
        labels: Option<Vec<usize>>,
        split: Split,
    ) -> Result<Self> {
        let name = name.into();
        let Some(first) = series.first() else {
            return Err(Error::EmptyDataset(name));
        };
        let m = first.len();
        if let Some(bad) = series.iter().find(|s| s.len() != m) {
            return Err(Error::shape(m, bad.len()));
        }
        if let Some(labels) = &labels {
            if labels.len() != series.len() {
                return Err(Error::Shape(format!(
                    "{} labels for {} series",
                    labels.len(),
                    series.len()
                )));
            }
        }
        Ok(Dataset {
            name,
            series,
            labels,
            class_names: None,
            split,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Series length shared by every member.
    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    /// Number of distinct class labels, if labelled.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |max| max + 1))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// Returns a copy with every series z-normalised independently.
    pub fn z_normalise(&self) -> Dataset {
        Dataset {
            series: self.series.iter().map(TimeSeries::z_normalised).collect(),
            ..self.clone()
        }
    }

    /// Concatenates `train` then `test`. Labels read from files are unified
    /// through their raw class names so that equal names share an id.
    pub fn combine(train: &Dataset, test: &Dataset) -> Result<Dataset> {
        if train.series_len() != test.series_len() {
            return Err(Error::shape(train.series_len(), test.series_len()));
        }
        let mut series = train.series.clone();
        series.extend(test.series.iter().cloned());

        let (labels, class_names) = match (&train.labels, &test.labels) {
            (None, None) => (None, None),
            (Some(a), Some(b)) => match (&train.class_names, &test.class_names) {
                (Some(names_a), Some(names_b)) => {
                    let mut names = names_a.clone();
                    let mut index: HashMap<&str, usize> = HashMap::new();
                    for (i, n) in names_a.iter().enumerate() {
                        index.insert(n.as_str(), i);
                    }
                    let mut remap = Vec::with_capacity(names_b.len());
                    for n in names_b {
                        let id = match index.get(n.as_str()) {
                            Some(&id) => id,
                            None => {
                                names.push(n.clone());
                                names.len() - 1
                            }
                        };
                        remap.push(id);
                    }
                    let mut labels = a.clone();
                    labels.extend(b.iter().map(|&l| remap[l]));
                    (Some(labels), Some(names))
                }
                _ => {
                    let mut labels = a.clone();
                    labels.extend_from_slice(b);
                    (Some(labels), None)
                }
            },
            _ => {
                return Err(Error::Shape(
                    "cannot combine a labelled dataset with an unlabelled one".into(),
                ))
            }
        };

        Ok(Dataset {
            name: train.name.clone(),
            series,
            labels,
            class_names,
            split: Split::Combined,
        })
    }
}

/// Reads a tab-separated file with one series per line. With `has_label`,
/// the first field is a class identifier; ids are remapped to `0..n_classes`
/// in order of first appearance.
pub fn load_tsv(path: impl AsRef<Path>, has_label: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let name = dataset_name_from_path(path);

    let mut series = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("expected {w} fields, found {}", fields.len()),
                })
            }
            _ => {}
        }
        let value_fields = if has_label {
            raw_labels.push(fields[0].trim().to_string());
            &fields[1..]
        } else {
            &fields[..]
        };
        if value_fields.is_empty() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: line_no,
                message: "record has no values".into(),
            });
        }
        let mut values = Vec::with_capacity(value_fields.len());
        for field in value_fields {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
        series.push(TimeSeries::from_trusted(values));
    }

    if series.is_empty() {
        return Err(Error::EmptyDataset(name));
    }

    let (labels, class_names) = if has_label {
        let (labels, names) = remap_labels(&raw_labels);
        (Some(labels), Some(names))
    } else {
        (None, None)
    };

    let split = infer_split(path);
    let mut dataset = Dataset::new(name, series, labels, split)?;
    dataset.class_names = class_names;
    Ok(dataset)
}

/// Writes `dataset` in the format read by [`load_tsv`]. Labels, when present,
/// are written as their raw class names if known, otherwise as integers.
pub fn write_tsv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (i, s) in dataset.series.iter().enumerate() {
        if let Some(labels) = &dataset.labels {
            match &dataset.class_names {
                Some(names) => write!(out, "{}\t", names[labels[i]])?,
                None => write!(out, "{}\t", labels[i])?,
            }
        }
        for (j, v) in s.iter().enumerate() {
            if j > 0 {
                out.write_all(b"\t")?;
            }
            write!(out, "{v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Maps raw label strings to contiguous ids in first-appearance order.
pub fn remap_labels<S: AsRef<str>>(raw: &[S]) -> (Vec<usize>, Vec<String>) {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let labels = raw
        .iter()
        .map(|r| {
            let r = r.as_ref();
            *ids.entry(r).or_insert_with(|| {
                names.push(r.to_string());
                names.len() - 1
            })
        })
        .collect();
    (labels, names)
}

fn dataset_name_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.strip_suffix("_TRAIN")
        .or_else(|| stem.strip_suffix("_TEST"))
        .unwrap_or(&stem)
        .to_string()
}

fn infer_split(path: &Path) -> Split {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_uppercase())
        .unwrap_or_default();
    if stem.ends_with("_TEST") {
        Split::Test
    } else {
        Split::Train
    }
}
