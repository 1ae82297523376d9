//! Binomial units, datasets, and CSV ingestion.
//!
//! One-sample files carry `n`, `y` and optional covariates `x*`; two-sample
//! files carry `n1,y1,n2,y2` and optional per-group covariates `g1_x*`,
//! `g2_x*`. Row numbers in errors count the header as row 0.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::numeric::{fmt17, sum};

/// Largest supported trial count. Accuracy of the Stein sums is only
/// characterised up to n = 1000.
pub const MAX_TRIALS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("dataset has no units")]
    Empty,
    #[error("need at least {needed} units, got {got}")]
    TooFewUnits { needed: usize, got: usize },
    #[error("unit {unit}: {message}")]
    Unit { unit: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One binomial observation: `y` successes out of `n` trials.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSampleUnit {
    pub n: u32,
    pub y: u32,
    pub x: Vec<f64>,
}

impl OneSampleUnit {
    pub fn new(n: u32, y: u32, x: Vec<f64>) -> Result<Self, String> {
        if n < 2 {
            return Err(format!("n = {n} < 2"));
        }
        if n > MAX_TRIALS {
            return Err(format!("n = {n} exceeds supported maximum {MAX_TRIALS}"));
        }
        if y > n {
            return Err(format!("y = {y} > n = {n}"));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(format!("non-finite covariate {bad}"));
        }
        Ok(Self { n, y, x })
    }

    /// Observed rate `y / n`.
    #[inline]
    pub fn rate(&self) -> f64 {
        self.y as f64 / self.n as f64
    }
}

/// Paired observation for the two-sample problem.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSampleUnit {
    pub group1: OneSampleUnit,
    pub group2: OneSampleUnit,
}

/// Validated one-sample dataset. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSampleDataset {
    units: Vec<OneSampleUnit>,
    dim: usize,
}

impl OneSampleDataset {
    pub fn new(units: Vec<OneSampleUnit>) -> Result<Self, DataError> {
        let dim = check_group(units.iter())?;
        Ok(Self { units, dim })
    }

    /// Convenience constructor for covariate-free data from `(n, y)` pairs.
    pub fn from_counts(counts: &[(u32, u32)]) -> Result<Self, DataError> {
        let units = counts
            .iter()
            .enumerate()
            .map(|(i, &(n, y))| {
                OneSampleUnit::new(n, y, Vec::new()).map_err(|message| DataError::Unit { unit: i, message })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(units)
    }

    pub fn units(&self) -> &[OneSampleUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Covariate dimension, 0 when the data carry none.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_trials(&self) -> u64 {
        self.units.iter().map(|u| u.n as u64).sum()
    }

    pub fn total_successes(&self) -> u64 {
        self.units.iter().map(|u| u.y as u64).sum()
    }

    /// Dataset made of the units at `indices`, repeats allowed.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            units: indices.iter().map(|&i| self.units[i].clone()).collect(),
            dim: self.dim,
        }
    }

    pub fn into_units(self) -> Vec<OneSampleUnit> {
        self.units
    }
}

/// Validated two-sample dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSampleDataset {
    units: Vec<TwoSampleUnit>,
    dim1: usize,
    dim2: usize,
}

impl TwoSampleDataset {
    pub fn new(units: Vec<TwoSampleUnit>) -> Result<Self, DataError> {
        let dim1 = check_group(units.iter().map(|u| &u.group1))?;
        let dim2 = check_group(units.iter().map(|u| &u.group2))?;
        Ok(Self { units, dim1, dim2 })
    }

    pub fn from_counts(counts: &[(u32, u32, u32, u32)]) -> Result<Self, DataError> {
        let units = counts
            .iter()
            .enumerate()
            .map(|(i, &(n1, y1, n2, y2))| {
                let wrap = |message| DataError::Unit { unit: i, message };
                Ok(TwoSampleUnit {
                    group1: OneSampleUnit::new(n1, y1, Vec::new()).map_err(wrap)?,
                    group2: OneSampleUnit::new(n2, y2, Vec::new()).map_err(wrap)?,
                })
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        Self::new(units)
    }

    pub fn units(&self) -> &[TwoSampleUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn dim1(&self) -> usize {
        self.dim1
    }

    pub fn dim2(&self) -> usize {
        self.dim2
    }

    /// Group `g` (1 or 2) viewed as a one-sample dataset.
    pub fn group(&self, g: usize) -> OneSampleDataset {
        let units = self
            .units
            .iter()
            .map(|u| if g == 1 { u.group1.clone() } else { u.group2.clone() })
            .collect();
        OneSampleDataset {
            units,
            dim: if g == 1 { self.dim1 } else { self.dim2 },
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            units: indices.iter().map(|&i| self.units[i].clone()).collect(),
            dim1: self.dim1,
            dim2: self.dim2,
        }
    }

    /// Pairs two group datasets of equal length unit by unit.
    pub fn from_groups(g1: OneSampleDataset, g2: OneSampleDataset) -> Result<Self, DataError> {
        if g1.len() != g2.len() {
            return Err(DataError::Unit {
                unit: g1.len().min(g2.len()),
                message: format!("group sizes differ: {} vs {}", g1.len(), g2.len()),
            });
        }
        let units = g1
            .units
            .into_iter()
            .zip(g2.units)
            .map(|(group1, group2)| TwoSampleUnit { group1, group2 })
            .collect();
        Self::new(units)
    }
}

fn check_group<'a>(units: impl Iterator<Item = &'a OneSampleUnit>) -> Result<usize, DataError> {
    let mut dim = None;
    for (i, u) in units.enumerate() {
        match dim {
            None => dim = Some(u.x.len()),
            Some(d) if d != u.x.len() => {
                return Err(DataError::Unit {
                    unit: i,
                    message: format!("covariate dimension {} differs from {}", u.x.len(), d),
                })
            }
            _ => {}
        }
    }
    dim.ok_or(DataError::Empty)
}

/// Pooled success rate `Σy / Σn`.
pub fn grand_mean(data: &OneSampleDataset) -> f64 {
    data.total_successes() as f64 / data.total_trials() as f64
}

/// Trial-weighted mean of per-unit values.
pub fn weighted_mean(data: &OneSampleDataset, values: &[f64]) -> f64 {
    let total = data.total_trials() as f64;
    sum(data.units().iter().zip(values).map(|(u, v)| u.n as f64 * v)) / total
}

/// Column names for one-sample CSV files.
#[derive(Clone, Debug)]
pub struct OneSampleSchema {
    pub n: String,
    pub y: String,
    pub covariate_prefix: String,
}

impl Default for OneSampleSchema {
    fn default() -> Self {
        Self {
            n: "n".into(),
            y: "y".into(),
            covariate_prefix: "x".into(),
        }
    }
}

/// Column names for two-sample CSV files.
#[derive(Clone, Debug)]
pub struct TwoSampleSchema {
    pub n1: String,
    pub y1: String,
    pub n2: String,
    pub y2: String,
    pub covariate_prefix1: String,
    pub covariate_prefix2: String,
}

impl Default for TwoSampleSchema {
    fn default() -> Self {
        Self {
            n1: "n1".into(),
            y1: "y1".into(),
            n2: "n2".into(),
            y2: "y2".into(),
            covariate_prefix1: "g1_x".into(),
            covariate_prefix2: "g2_x".into(),
        }
    }
}

struct Header {
    names: Vec<String>,
}

impl Header {
    fn column(&self, name: &str) -> Result<usize, DataError> {
        self.names
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    fn prefixed(&self, prefix: &str) -> Vec<usize> {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, h)| h.len() > prefix.len() && h.starts_with(prefix))
            .map(|(i, _)| i)
            .collect()
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn parse_count(record: &csv::StringRecord, col: usize, name: &str, row: usize) -> Result<u32, DataError> {
    let raw = record.get(col).unwrap_or("");
    raw.parse::<u32>().map_err(|_| DataError::Row {
        row,
        message: format!("column `{name}` must be a non-negative integer, got `{raw}`"),
    })
}

fn parse_covariates(record: &csv::StringRecord, cols: &[usize], row: usize) -> Result<Vec<f64>, DataError> {
    cols.iter()
        .map(|&c| {
            let raw = record.get(c).unwrap_or("");
            if raw.is_empty() {
                return Err(DataError::Row {
                    row,
                    message: "ragged covariates: empty covariate field".into(),
                });
            }
            raw.parse::<f64>().map_err(|_| DataError::Row {
                row,
                message: format!("covariate `{raw}` is not a number"),
            })
        })
        .collect()
}

fn read_header<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Header, DataError> {
    let names = rdr.headers()?.iter().map(str::to_string).collect();
    Ok(Header { names })
}

/// Reads a one-sample dataset from any CSV source.
pub fn read_one_sample<R: Read>(input: R, schema: &OneSampleSchema) -> Result<OneSampleDataset, DataError> {
    let mut rdr = reader(input);
    let header = read_header(&mut rdr)?;
    let n_col = header.column(&schema.n)?;
    let y_col = header.column(&schema.y)?;
    let x_cols = header.prefixed(&schema.covariate_prefix);
    let mut units = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let n = parse_count(&record, n_col, &schema.n, row)?;
        let y = parse_count(&record, y_col, &schema.y, row)?;
        let x = parse_covariates(&record, &x_cols, row)?;
        units.push(OneSampleUnit::new(n, y, x).map_err(|message| DataError::Row { row, message })?);
    }
    OneSampleDataset::new(units)
}

/// Reads a two-sample dataset from any CSV source.
pub fn read_two_sample<R: Read>(input: R, schema: &TwoSampleSchema) -> Result<TwoSampleDataset, DataError> {
    let mut rdr = reader(input);
    let header = read_header(&mut rdr)?;
    let cols = [
        header.column(&schema.n1)?,
        header.column(&schema.y1)?,
        header.column(&schema.n2)?,
        header.column(&schema.y2)?,
    ];
    let names = [&schema.n1, &schema.y1, &schema.n2, &schema.y2];
    let x1 = header.prefixed(&schema.covariate_prefix1);
    let x2 = header.prefixed(&schema.covariate_prefix2);
    let mut units = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let mut c = [0u32; 4];
        for k in 0..4 {
            c[k] = parse_count(&record, cols[k], names[k], row)?;
        }
        let wrap = |message| DataError::Row { row, message };
        let group1 = OneSampleUnit::new(c[0], c[1], parse_covariates(&record, &x1, row)?).map_err(wrap)?;
        let group2 = OneSampleUnit::new(c[2], c[3], parse_covariates(&record, &x2, row)?).map_err(wrap)?;
        units.push(TwoSampleUnit { group1, group2 });
    }
    TwoSampleDataset::new(units)
}

pub fn load_one_sample(path: &Path, schema: &OneSampleSchema) -> Result<OneSampleDataset, DataError> {
    read_one_sample(std::fs::File::open(path)?, schema)
}

pub fn load_two_sample(path: &Path, schema: &TwoSampleSchema) -> Result<TwoSampleDataset, DataError> {
    read_two_sample(std::fs::File::open(path)?, schema)
}

/// Writes a one-sample dataset with the default schema.
pub fn write_one_sample<W: Write>(data: &OneSampleDataset, mut out: W) -> std::io::Result<()> {
    let mut header = vec!["n".to_string(), "y".to_string()];
    header.extend((1..=data.dim()).map(|k| format!("x{k}")));
    writeln!(out, "{}", header.join(","))?;
    for u in data.units() {
        let mut fields = vec![u.n.to_string(), u.y.to_string()];
        fields.extend(u.x.iter().map(|&v| fmt17(v)));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes a two-sample dataset with the default schema.
pub fn write_two_sample<W: Write>(data: &TwoSampleDataset, mut out: W) -> std::io::Result<()> {
    let mut header: Vec<String> = ["n1", "y1", "n2", "y2"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=data.dim1()).map(|k| format!("g1_x{k}")));
    header.extend((1..=data.dim2()).map(|k| format!("g2_x{k}")));
    writeln!(out, "{}", header.join(","))?;
    for u in data.units() {
        let mut fields = vec![
            u.group1.n.to_string(),
            u.group1.y.to_string(),
            u.group2.n.to_string(),
            u.group2.y.to_string(),
        ];
        fields.extend(u.group1.x.iter().map(|&v| fmt17(v)));
        fields.extend(u.group2.x.iter().map(|&v| fmt17(v)));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
