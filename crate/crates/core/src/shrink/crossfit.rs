//! Out-of-fold predictions.

use std::io::Read;

use rayon::prelude::*;

use crate::data::{OneSampleDataset, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::numeric::sum;
use crate::rng::RngSeed;

use super::folds::FoldAssignment;
use super::predictor::Predictor;

/// Clipped per-unit predictions and their trial-weighted mean.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossFitPredictions {
    g_hat: Vec<f64>,
    weighted_mean: f64,
}

impl CrossFitPredictions {
    /// Clips `g_hat` to `[0, 1]` and computes the weighted mean.
    pub fn new(data: &OneSampleDataset, mut g_hat: Vec<f64>) -> Result<Self> {
        if g_hat.len() != data.len() {
            return Err(Error::Misaligned {
                expected: data.len(),
                got: g_hat.len(),
            });
        }
        for (i, g) in g_hat.iter_mut().enumerate() {
            if g.is_nan() {
                return Err(Error::Numerical(format!("prediction for unit {} is NaN", i + 1)));
            }
            *g = g.clamp(0.0, 1.0);
        }
        let total = data.total_trials() as f64;
        let weighted_mean = sum(data.units().iter().zip(&g_hat).map(|(u, g)| u.n as f64 * g)) / total;
        Ok(Self { g_hat, weighted_mean })
    }

    pub fn g_hat(&self) -> &[f64] {
        &self.g_hat
    }

    pub fn weighted_mean(&self) -> f64 {
        self.weighted_mean
    }

    pub fn len(&self) -> usize {
        self.g_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_hat.is_empty()
    }

    /// Centred prediction `ĝᵢ − ĝ̄`.
    #[inline]
    pub fn deviation(&self, i: usize) -> f64 {
        self.g_hat[i] - self.weighted_mean
    }

    /// Predictions restricted to `indices`, re-centred on that subset.
    pub fn select(&self, data_subset: &OneSampleDataset, indices: &[usize]) -> Result<Self> {
        Self::new(data_subset, indices.iter().map(|&i| self.g_hat[i]).collect())
    }
}

/// Fits one model per fold on the complement and predicts the fold.
pub fn cross_fit(
    data: &OneSampleDataset,
    predictor: &dyn Predictor,
    folds: &FoldAssignment,
    seed: RngSeed,
) -> Result<CrossFitPredictions> {
    if folds.len() != data.len() {
        return Err(Error::Misaligned {
            expected: data.len(),
            got: folds.len(),
        });
    }
    let units = data.units();
    let per_fold: Vec<Vec<(usize, f64)>> = (0..folds.k())
        .into_par_iter()
        .map(|fold| {
            let train = folds.complement(fold);
            let features: Vec<&[f64]> = train.iter().map(|&i| units[i].x.as_slice()).collect();
            let targets: Vec<f64> = train.iter().map(|&i| units[i].rate()).collect();
            let model = predictor
                .fit(&features, &targets, seed.child("fit", fold as u64))
                .map_err(|message| Error::Predictor {
                    fold: fold + 1,
                    message,
                })?;
            Ok(folds
                .members(fold)
                .into_iter()
                .map(|i| (i, model.predict(&units[i].x)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut g_hat = vec![0.0; data.len()];
    for (i, g) in per_fold.into_iter().flatten() {
        g_hat[i] = g;
    }
    CrossFitPredictions::new(data, g_hat)
}

/// Cross-fits each group separately on a shared unit-level fold assignment.
pub fn cross_fit_two(
    data: &TwoSampleDataset,
    predictor: &dyn Predictor,
    folds: &FoldAssignment,
    seed: RngSeed,
) -> Result<(CrossFitPredictions, CrossFitPredictions)> {
    let g1 = cross_fit(&data.group(1), predictor, folds, seed.child("group", 1))?;
    let g2 = cross_fit(&data.group(2), predictor, folds, seed.child("group", 2))?;
    Ok((g1, g2))
}

/// Externally produced predictions as read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalPredictions {
    pub folds: FoldAssignment,
    pub g1: Vec<f64>,
    pub g2: Option<Vec<f64>>,
}

/// Reads `unit,fold,g_hat` or `unit,fold,g1_hat,g2_hat` with 1-based unit
/// and fold labels. Every unit `1..=n_units` must appear exactly once.
pub fn read_external<R: Read>(input: R, n_units: usize) -> Result<ExternalPredictions> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(crate::data::DataError::from)?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &str| Error::Data(crate::data::DataError::MissingColumn(name.into()));
    let unit_col = col("unit").ok_or_else(|| missing("unit"))?;
    let fold_col = col("fold").ok_or_else(|| missing("fold"))?;
    let (c1, c2) = match (col("g_hat"), col("g1_hat"), col("g2_hat")) {
        (Some(c), _, _) => (c, None),
        (None, Some(a), Some(b)) => (a, Some(b)),
        _ => return Err(missing("g_hat")),
    };
    let mut fold_of = vec![usize::MAX; n_units];
    let mut g1 = vec![f64::NAN; n_units];
    let mut g2 = vec![f64::NAN; n_units];
    let row_err = |row: usize, message: String| Error::Data(crate::data::DataError::Row { row, message });
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(crate::data::DataError::from)?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let unit: usize = field(unit_col)
            .parse()
            .map_err(|_| row_err(row, format!("unit `{}` is not a positive integer", field(unit_col))))?;
        let fold: usize = field(fold_col)
            .parse()
            .map_err(|_| row_err(row, format!("fold `{}` is not a positive integer", field(fold_col))))?;
        if unit == 0 || unit > n_units {
            return Err(row_err(row, format!("unit {unit} outside 1..={n_units}")));
        }
        if fold == 0 {
            return Err(row_err(row, "folds are numbered from 1".into()));
        }
        if fold_of[unit - 1] != usize::MAX {
            return Err(row_err(row, format!("unit {unit} listed twice")));
        }
        let parse = |c: usize| {
            field(c)
                .parse::<f64>()
                .map_err(|_| row_err(row, format!("prediction `{}` is not a number", field(c))))
        };
        fold_of[unit - 1] = fold - 1;
        g1[unit - 1] = parse(c1)?;
        if let Some(c) = c2 {
            g2[unit - 1] = parse(c)?;
        }
    }
    if let Some(i) = fold_of.iter().position(|&f| f == usize::MAX) {
        return Err(row_err(0, format!("unit {} has no prediction", i + 1)));
    }
    let k = fold_of.iter().max().map_or(0, |&m| m + 1);
    let folds = FoldAssignment::from_labels(fold_of, k)?;
    let clip = |v: Vec<f64>| v.into_iter().map(|g| g.clamp(0.0, 1.0)).collect::<Vec<_>>();
    Ok(ExternalPredictions {
        folds,
        g1: clip(g1),
        g2: c2.map(|_| clip(g2)),
    })
}
