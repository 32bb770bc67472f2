use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, FeatureMatrix, Result, RngSeed};

/// Feature table with optional outlier labels (`true` = outlier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub name: String,
    pub features: FeatureMatrix,
    labels: Option<Vec<bool>>,
    /// Names of the feature columns, in order.
    pub columns: Vec<String>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, features: FeatureMatrix, labels: Option<Vec<bool>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != features.n_rows() {
                return Err(Error::invalid(format!(
                    "{} labels for {} rows",
                    l.len(),
                    features.n_rows()
                )));
            }
            if l.iter().all(|&o| o) {
                return Err(Error::invalid("dataset has no inliers"));
            }
        }
        let columns = (0..features.n_cols()).map(|i| format!("x{i}")).collect();
        Ok(LabeledDataset {
            name: name.into(),
            features,
            labels,
            columns,
        })
    }

    /// Outlier labels; evaluation is unavailable without them.
    pub fn labels(&self) -> Result<&[bool]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::invalid(format!("dataset '{}' has no label column", self.name)))
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn inlier_indices(&self) -> Result<Vec<usize>> {
        Ok(self.labels()?.iter().enumerate().filter(|(_, &o)| !o).map(|(i, _)| i).collect())
    }

    pub fn outlier_indices(&self) -> Result<Vec<usize>> {
        Ok(self.labels()?.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| i).collect())
    }

    /// Only the inlier rows, without labels.
    pub fn inliers(&self) -> Result<FeatureMatrix> {
        Ok(self.features.select(&self.inlier_indices()?))
    }
}

/// Standard Gaussian inliers; outliers shifted by `shift` along the unit
/// all-ones direction. Inliers come first.
pub fn make_synthetic(
    n_inlier: usize,
    n_outlier: usize,
    d: usize,
    shift: f64,
    seed: RngSeed,
) -> Result<LabeledDataset> {
    if d == 0 || n_inlier == 0 {
        return Err(Error::invalid("synthetic data needs d >= 1 and at least one inlier"));
    }
    if !(shift >= 0.0 && shift.is_finite()) {
        return Err(Error::invalid(format!("shift must be finite and >= 0, got {shift}")));
    }
    let offset = shift / (d as f64).sqrt();
    let mut rng = seed.rng();
    let n = n_inlier + n_outlier;
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        let mu = if i < n_inlier { 0.0 } else { offset };
        for _ in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(mu + z);
        }
    }
    let labels = (0..n).map(|i| i >= n_inlier).collect();
    LabeledDataset::new("synthetic", FeatureMatrix::new(n, d, values)?, Some(labels))
}

/// Reads a headered comma-separated numeric table. `label_column`, when
/// given, must hold 0/1 values (1 = outlier) and is removed from the features.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<LabeledDataset> {
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_pos = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| schema(format!("label column '{name}' not found")))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| Some(c) != label_pos).collect();
    if feature_cols.is_empty() {
        return Err(schema("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        rows += 1;
        let cell = |c: usize| -> Result<f64> {
            let raw = &record[c];
            let bad = |message: String| Error::Parse {
                path: path.to_path_buf(),
                row: rows,
                column: headers[c].clone(),
                message,
            };
            let v: f64 = raw.parse().map_err(|_| bad(format!("'{raw}' is not a number")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value '{raw}'")));
            }
            Ok(v)
        };
        for &c in &feature_cols {
            values.push(cell(c)?);
        }
        if let Some(c) = label_pos {
            let v = cell(c)?;
            if v != 0.0 && v != 1.0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: rows,
                    column: headers[c].clone(),
                    message: format!("label must be 0 or 1, got {}", &record[c]),
                });
            }
            labels.push(v == 1.0);
        }
    }
    if rows == 0 {
        return Err(schema("file has no data rows".into()));
    }
    let features = FeatureMatrix::new(rows, feature_cols.len(), values)?;
    let name = path
        .file_stem()
        .map_or_else(|| "data".to_owned(), |s| s.to_string_lossy().into_owned());
    let mut ds = LabeledDataset::new(name, features, label_pos.map(|_| labels))
        .map_err(|e| schema(e.to_string()))?;
    ds.columns = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    Ok(ds)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.record() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Parse {
            path: path.to_path_buf(),
            row,
            column: String::new(),
            message: format!("{kind:?}"),
        },
    }
}

/// Writes the dataset as CSV; labels, if any, go to a trailing `y` column.
pub fn write_csv<W: Write>(data: &LabeledDataset, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = data.columns.clone();
    if data.has_labels() {
        header.push("y".into());
    }
    w.write_record(&header)?;
    let labels = data.labels.as_deref();
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in data.features.rows().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        if let Some(l) = labels {
            record.push(if l[i] { "1" } else { "0" }.to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()
}
