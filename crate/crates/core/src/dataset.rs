//! CSV ingestion and encoding of features and responses.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Generator behind [`synthetic_uniform`] and [`shuffle_split`].
pub const RNG_NAME: &str = "ChaCha8Rng";

/// Cell values treated as missing.
const MISSING_MARKERS: [&str; 4] = ["", "NA", "?", "NaN"];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoding {
    Numeric,
    /// `categories[code]` is the category mapped to `code`.
    Ordinal {
        categories: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseEncoding {
    Numeric,
    /// The last class is the reference and encodes as the all-zero row.
    Dummy {
        classes: Vec<String>,
        reference: String,
    },
}

/// Feature matrix `X` and response matrix `Y` sharing the same instances.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub x: DataMatrix,
    pub y: DataMatrix,
    pub feature_encodings: Vec<FeatureEncoding>,
    pub response_encoding: ResponseEncoding,
}

#[derive(Debug, Clone, Serialize)]
pub struct Encodings<'a> {
    pub features: &'a [FeatureEncoding],
    pub response: &'a ResponseEncoding,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary<'a> {
    pub n_instances: usize,
    pub n_features: usize,
    pub n_responses: usize,
    pub encodings: Encodings<'a>,
}

impl EncodedDataset {
    /// Wraps numeric matrices without any categorical encoding.
    pub fn from_matrices(x: DataMatrix, y: DataMatrix) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "X has {} instances but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        Ok(Self {
            feature_encodings: vec![FeatureEncoding::Numeric; x.ncols()],
            response_encoding: ResponseEncoding::Numeric,
            x,
            y,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_responses(&self) -> usize {
        self.y.ncols()
    }

    pub fn summary(&self) -> DatasetSummary<'_> {
        DatasetSummary {
            n_instances: self.n_instances(),
            n_features: self.n_features(),
            n_responses: self.n_responses(),
            encodings: Encodings {
                features: &self.feature_encodings,
                response: &self.response_encoding,
            },
        }
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    /// Same dataset with every feature column standardised.
    pub fn zscored(&self) -> Result<Self> {
        Ok(Self {
            x: zscore(&self.x)?,
            ..self.clone()
        })
    }

    fn take_rows(&self, rows: &[usize]) -> Result<Self> {
        let pick = |m: &DataMatrix| {
            let values = m.values().select_rows(rows.iter());
            DataMatrix::new(values, m.col_names().to_vec())
        };
        Ok(Self {
            x: pick(&self.x)?,
            y: pick(&self.y)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Standardise feature columns after encoding.
    pub zscore_features: bool,
}

pub fn load_csv(
    path: impl AsRef<Path>,
    targets: &[String],
    options: &LoadOptions,
) -> Result<EncodedDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(file, &path.display().to_string(), targets, options)
}

/// Like [`load_csv`] over any reader; `source` names it in error messages.
pub fn read_csv<R: Read>(
    reader: R,
    source: &str,
    targets: &[String],
    options: &LoadOptions,
) -> Result<EncodedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile(source.to_owned()));
    }
    let mut columns: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            col.push(field.to_owned());
        }
    }
    if columns[0].is_empty() {
        return Err(Error::EmptyFile(source.to_owned()));
    }
    for (name, col) in header.iter().zip(&columns) {
        if let Some(row) = col
            .iter()
            .position(|v| MISSING_MARKERS.contains(&v.as_str()))
        {
            return Err(Error::MissingValue {
                row: row + 1,
                column: name.clone(),
            });
        }
    }

    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target column given".into()));
    }
    let mut target_idx = Vec::with_capacity(targets.len());
    for t in targets {
        let idx = header
            .iter()
            .position(|h| h == t)
            .ok_or_else(|| Error::UnknownTarget(t.clone()))?;
        if target_idx.contains(&idx) {
            return Err(Error::InvalidArgument(format!("target '{t}' given twice")));
        }
        target_idx.push(idx);
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|i| !target_idx.contains(i))
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::InvalidArgument("no feature columns remain".into()));
    }

    let mut feature_cols = Vec::with_capacity(feature_idx.len());
    let mut feature_encodings = Vec::with_capacity(feature_idx.len());
    for &j in &feature_idx {
        match parse_numeric(&columns[j], &header[j], j)? {
            Some(values) => {
                feature_cols.push(values);
                feature_encodings.push(FeatureEncoding::Numeric);
            }
            None => {
                let (codes, categories) = ordinal_encode(&columns[j]);
                feature_cols.push(codes);
                feature_encodings.push(FeatureEncoding::Ordinal { categories });
            }
        }
    }
    let feature_names = feature_idx.iter().map(|&j| header[j].clone()).collect();
    let mut x = DataMatrix::from_columns(&feature_cols, feature_names)?;

    let numeric_targets = target_idx
        .iter()
        .map(|&j| parse_numeric(&columns[j], &header[j], j))
        .collect::<Result<Vec<_>>>()?;
    let (y, response_encoding) = if numeric_targets.iter().all(Option::is_some) {
        let cols: Vec<Vec<f64>> = numeric_targets.into_iter().flatten().collect();
        let names = target_idx.iter().map(|&j| header[j].clone()).collect();
        (
            DataMatrix::from_columns(&cols, names)?,
            ResponseEncoding::Numeric,
        )
    } else if target_idx.len() == 1 {
        let labels = &columns[target_idx[0]];
        let y = dummy_encode(labels)?;
        let classes = class_order(labels);
        let reference = classes.last().cloned().unwrap_or_default();
        (y, ResponseEncoding::Dummy { classes, reference })
    } else {
        return Err(Error::InvalidArgument(
            "a categorical target must be the only target".into(),
        ));
    };

    if options.zscore_features {
        x = zscore(&x)?;
    }
    Ok(EncodedDataset {
        x,
        y,
        feature_encodings,
        response_encoding,
    })
}

/// `Ok(None)` when some cell is not a number; non-finite numbers are an error.
fn parse_numeric(col: &[String], name: &str, j: usize) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(col.len());
    for (row, v) in col.iter().enumerate() {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            Ok(_) => {
                log::debug!("non-finite value in column '{name}'");
                return Err(Error::NonFinite {
                    row: row + 1,
                    col: j,
                });
            }
            Err(_) => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Distinct values in order of first appearance.
pub fn class_order(labels: &[String]) -> Vec<String> {
    let mut classes: Vec<String> = Vec::new();
    for l in labels {
        if !classes.contains(l) {
            classes.push(l.clone());
        }
    }
    classes
}

/// Integer codes by first appearance, with the category list.
pub fn ordinal_encode(values: &[String]) -> (Vec<f64>, Vec<String>) {
    let categories = class_order(values);
    let codes = values
        .iter()
        .map(|v| categories.iter().position(|c| c == v).unwrap_or(0) as f64)
        .collect();
    (codes, categories)
}

/// `c` classes to `c - 1` indicator columns; the last class in
/// first-appearance order is the all-zero reference.
pub fn dummy_encode(labels: &[String]) -> Result<DataMatrix> {
    let classes = class_order(labels);
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "dummy encoding needs at least two classes, found {}",
            classes.len()
        )));
    }
    let c = classes.len();
    let mut values = DMatrix::zeros(labels.len(), c - 1);
    for (row, label) in labels.iter().enumerate() {
        let k = classes.iter().position(|cl| cl == label).unwrap_or(c - 1);
        if k < c - 1 {
            values[(row, k)] = 1.0;
        }
    }
    DataMatrix::new(values, classes[..c - 1].to_vec())
}

/// Column-wise z-scores with the sample (N - 1) standard deviation.
pub fn zscore(m: &DataMatrix) -> Result<DataMatrix> {
    let n = m.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "z-scores need at least two instances".into(),
        ));
    }
    let mut values = m.values().clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n - 1) as f64).sqrt();
        let scale = col.amax().max(mean.abs());
        if sd == 0.0 || sd <= f64::EPSILON * scale {
            return Err(Error::ZeroVariance(m.col_names()[j].clone()));
        }
        col /= sd;
    }
    DataMatrix::new(values, m.col_names().to_vec())
}

/// Uniform `[0, 1)` features and responses from a seeded generator.
pub fn synthetic_uniform(
    n_instances: usize,
    n_features: usize,
    n_responses: usize,
    seed: u64,
) -> Result<EncodedDataset> {
    if n_instances == 0 || n_features == 0 || n_responses == 0 {
        return Err(Error::InvalidArgument(
            "synthetic dataset dimensions must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n_instances, n_features, |_, _| rng.random::<f64>());
    let y = DMatrix::from_fn(n_instances, n_responses, |_, _| rng.random::<f64>());
    EncodedDataset::from_matrices(
        DataMatrix::with_prefix(x, "x")?,
        DataMatrix::with_prefix(y, "y")?,
    )
}

/// Shuffles rows with a seeded generator and splits off the last
/// `round(test_fraction * N)` rows as the second dataset.
pub fn shuffle_split(
    data: &EncodedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let n = data.n_instances();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} instances leaves an empty side"
        )));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = rows.split_at(n - n_test);
    Ok((data.take_rows(train)?, data.take_rows(test)?))
}
