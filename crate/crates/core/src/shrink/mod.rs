//! The shrinkage estimator, λ fitting, and the end-to-end fitting pipeline.

pub mod crossfit;
pub mod folds;
pub mod predictor;

pub use crossfit::{cross_fit, cross_fit_two, read_external, CrossFitPredictions, ExternalPredictions};
pub use folds::{assign_folds, FoldAssignment};
pub use predictor::{Constant, FittedModel, FnPredictor, Ols, Predictor};

use crate::data::{grand_mean, DataError, OneSampleDataset, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::numeric::sym2_eigen;
use crate::rng::RngSeed;
use crate::sure::{sure_one_coeffs, sure_two_coeffs, Lambda, QuadraticForm};

/// Default number of cross-fitting folds.
pub const DEFAULT_FOLDS: usize = 10;

/// Relative tolerance below which a curvature is treated as absent.
const DEGENERATE_TOL: f64 = 1e-12;
/// Largest condition number accepted for an unconstrained solve.
const MAX_CONDITION: f64 = 1e12;

fn check_lambda(lam: Lambda) -> Result<()> {
    if lam.is_feasible() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "lambda = ({}, {}) is infeasible: lambda1 must lie in [0, 1]",
            lam.lambda1, lam.lambda2
        )))
    }
}

/// `θ̂ᵢ = λ₁·Yᵢ/nᵢ + (1−λ₁)·Ȳ + λ₂·(ĝᵢ − ĝ̄)`; the last term vanishes
/// without predictions.
pub fn estimate_one(data: &OneSampleDataset, preds: Option<&CrossFitPredictions>, lam: Lambda) -> Result<Vec<f64>> {
    check_lambda(lam)?;
    if let Some(p) = preds {
        if p.len() != data.len() {
            return Err(Error::Misaligned {
                expected: data.len(),
                got: p.len(),
            });
        }
    }
    let ybar = grand_mean(data);
    Ok(data
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let dev = preds.map_or(0.0, |p| p.deviation(i));
            lam.lambda1 * u.rate() + (1.0 - lam.lambda1) * ybar + lam.lambda2 * dev
        })
        .collect())
}

/// Differences `θ̂ᵢ₁ − θ̂ᵢ₂` with one `λ` shared by both groups.
pub fn estimate_two(
    data: &TwoSampleDataset,
    preds1: Option<&CrossFitPredictions>,
    preds2: Option<&CrossFitPredictions>,
    lam: Lambda,
) -> Result<Vec<f64>> {
    let e1 = estimate_one(&data.group(1), preds1, lam)?;
    let e2 = estimate_one(&data.group(2), preds2, lam)?;
    Ok(e1.into_iter().zip(e2).map(|(a, b)| a - b).collect())
}

fn singular(direction: [f64; 2], condition: f64) -> Error {
    Error::Singular { condition, direction }
}

/// Minimiser of a quadratic form, over `ℝ²` or over `[0, 1] × ℝ`.
///
/// When the `λ₂` curvature is negligible (`a₂₂ ≤ 1e−12·tr a`, e.g. without
/// covariates) the problem is solved in `λ₁` alone with `λ₂ = 0`.
pub fn fit_lambda(q: &QuadraticForm, constrained: bool) -> Result<Lambda> {
    let [[a11, a12], [_, a22]] = q.a;
    let [b1, b2] = q.b;
    let trace = a11 + a22;
    if !(trace.is_finite() && b1.is_finite() && b2.is_finite()) {
        return Err(Error::Numerical("non-finite SURE coefficients".into()));
    }
    if a22 <= DEGENERATE_TOL * trace || a22 <= 0.0 {
        let x = minimise_1d(a11, b1, constrained)?;
        return Ok(Lambda::new(x, 0.0));
    }
    if !constrained {
        let (vals, vecs) = sym2_eigen(&q.a);
        if vals[0] <= vals[1] / MAX_CONDITION {
            let condition = if vals[0] > 0.0 {
                vals[1] / vals[0]
            } else {
                f64::INFINITY
            };
            return Err(singular(vecs[0], condition));
        }
        let det = a11 * a22 - a12 * a12;
        let x = -0.5 * (a22 * b1 - a12 * b2) / det;
        let y = -0.5 * (a11 * b2 - a12 * b1) / det;
        return Ok(Lambda::new(x, y));
    }
    // Profile λ₂ out: λ₂(λ₁) = −(b₂ + 2a₁₂λ₁)/(2a₂₂).
    let s = a11 - a12 * a12 / a22;
    let t = b1 - a12 * b2 / a22;
    let x = if s > DEGENERATE_TOL * trace {
        (-t / (2.0 * s)).clamp(0.0, 1.0)
    } else {
        boundary_by_slope(t, [a22, -a12])?
    };
    Ok(Lambda::new(x, -(b2 + 2.0 * a12 * x) / (2.0 * a22)))
}

fn minimise_1d(a: f64, b: f64, constrained: bool) -> Result<f64> {
    if a > 0.0 {
        let x = -b / (2.0 * a);
        return Ok(if constrained { x.clamp(0.0, 1.0) } else { x });
    }
    if constrained {
        boundary_by_slope(b, [1.0, 0.0])
    } else {
        Err(singular([1.0, 0.0], f64::INFINITY))
    }
}

/// Linear objective `t·λ₁` on `[0, 1]`.
fn boundary_by_slope(t: f64, flat_direction: [f64; 2]) -> Result<f64> {
    if t > 0.0 {
        Ok(0.0)
    } else if t < 0.0 {
        Ok(1.0)
    } else {
        let norm = flat_direction[0].hypot(flat_direction[1]);
        Err(singular(
            [flat_direction[0] / norm, flat_direction[1] / norm],
            f64::INFINITY,
        ))
    }
}

/// True when `λ₁` sits on the boundary of `[0, 1]`.
pub fn is_boundary(lam: Lambda) -> bool {
    lam.lambda1 == 0.0 || lam.lambda1 == 1.0
}

/// Where the prediction term comes from.
#[derive(Clone, Copy)]
pub enum PredictionSource<'a> {
    /// No covariate term; `λ₂ = 0`.
    None,
    /// K-fold cross-fitting of a predictor.
    CrossFit { predictor: &'a dyn Predictor, k: usize },
    /// Predictions supplied from outside, aligned with the units (two-sample
    /// sources carry both groups).
    Fixed { g1: &'a [f64], g2: Option<&'a [f64]> },
}

impl std::fmt::Debug for PredictionSource<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl PredictionSource<'_> {
    pub fn describe(&self) -> String {
        match self {
            PredictionSource::None => "none".into(),
            PredictionSource::CrossFit { predictor, .. } => predictor.name(),
            PredictionSource::Fixed { .. } => "external".into(),
        }
    }

    pub fn folds(&self) -> Option<usize> {
        match self {
            PredictionSource::CrossFit { k, .. } => Some(*k),
            _ => None,
        }
    }
}

/// Outcome of fitting the one-sample estimator.
#[derive(Clone, Debug)]
pub struct OneSampleFit {
    pub lambda: Lambda,
    pub sure: QuadraticForm,
    pub preds: Option<CrossFitPredictions>,
    pub estimates: Vec<f64>,
    pub grand_mean: f64,
    pub constrained: bool,
}

/// Outcome of fitting the two-sample estimator.
#[derive(Clone, Debug)]
pub struct TwoSampleFit {
    pub lambda: Lambda,
    pub sure: QuadraticForm,
    pub preds1: Option<CrossFitPredictions>,
    pub preds2: Option<CrossFitPredictions>,
    pub estimates: Vec<f64>,
    pub grand_mean1: f64,
    pub grand_mean2: f64,
    pub constrained: bool,
}

fn require_units(n: usize) -> Result<()> {
    if n < 2 {
        return Err(DataError::TooFewUnits { needed: 2, got: n }.into());
    }
    Ok(())
}

fn require_covariates(dim: usize, group: &str) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "{group}has no covariate columns; use the no-covariate path (predictor none)"
        )));
    }
    Ok(())
}

/// Builds the prediction term for one-sample data.
pub fn predictions_one(
    data: &OneSampleDataset,
    source: PredictionSource<'_>,
    seed: RngSeed,
) -> Result<Option<CrossFitPredictions>> {
    match source {
        PredictionSource::None => Ok(None),
        PredictionSource::CrossFit { predictor, k } => {
            require_covariates(data.dim(), "data ")?;
            let folds = assign_folds(data.len(), k, seed)?;
            Ok(Some(cross_fit(data, predictor, &folds, seed)?))
        }
        PredictionSource::Fixed { g1, .. } => Ok(Some(CrossFitPredictions::new(data, g1.to_vec())?)),
    }
}

/// Builds the prediction terms for both groups.
pub fn predictions_two(
    data: &TwoSampleDataset,
    source: PredictionSource<'_>,
    seed: RngSeed,
) -> Result<(Option<CrossFitPredictions>, Option<CrossFitPredictions>)> {
    match source {
        PredictionSource::None => Ok((None, None)),
        PredictionSource::CrossFit { predictor, k } => {
            require_covariates(data.dim1(), "group 1 ")?;
            require_covariates(data.dim2(), "group 2 ")?;
            let folds = assign_folds(data.len(), k, seed)?;
            let (p1, p2) = cross_fit_two(data, predictor, &folds, seed)?;
            Ok((Some(p1), Some(p2)))
        }
        PredictionSource::Fixed { g1, g2 } => {
            let g2 =
                g2.ok_or_else(|| Error::InvalidArgument("two-sample predictions need g1_hat and g2_hat".into()))?;
            Ok((
                Some(CrossFitPredictions::new(&data.group(1), g1.to_vec())?),
                Some(CrossFitPredictions::new(&data.group(2), g2.to_vec())?),
            ))
        }
    }
}

/// Cross-fits (if requested), builds the SURE and minimises it.
pub fn fit_one(
    data: &OneSampleDataset,
    source: PredictionSource<'_>,
    constrained: bool,
    seed: RngSeed,
) -> Result<OneSampleFit> {
    require_units(data.len())?;
    let preds = predictions_one(data, source, seed)?;
    let sure = sure_one_coeffs(data, preds.as_ref())?;
    let lambda = fit_lambda(&sure, constrained)?;
    let estimates = if lambda.is_feasible() {
        estimate_one(data, preds.as_ref(), lambda)?
    } else {
        estimate_unchecked(data, preds.as_ref(), lambda)
    };
    Ok(OneSampleFit {
        lambda,
        sure,
        preds,
        estimates,
        grand_mean: grand_mean(data),
        constrained,
    })
}

fn estimate_unchecked(data: &OneSampleDataset, preds: Option<&CrossFitPredictions>, lam: Lambda) -> Vec<f64> {
    let ybar = grand_mean(data);
    data.units()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            lam.lambda1 * u.rate() + (1.0 - lam.lambda1) * ybar + lam.lambda2 * preds.map_or(0.0, |p| p.deviation(i))
        })
        .collect()
}

/// Two-sample analogue of [`fit_one`].
pub fn fit_two(
    data: &TwoSampleDataset,
    source: PredictionSource<'_>,
    constrained: bool,
    seed: RngSeed,
) -> Result<TwoSampleFit> {
    require_units(data.len())?;
    let (preds1, preds2) = predictions_two(data, source, seed)?;
    let sure = sure_two_coeffs(data, preds1.as_ref(), preds2.as_ref())?;
    let lambda = fit_lambda(&sure, constrained)?;
    let (g1, g2) = (data.group(1), data.group(2));
    let estimates = estimate_unchecked(&g1, preds1.as_ref(), lambda)
        .into_iter()
        .zip(estimate_unchecked(&g2, preds2.as_ref(), lambda))
        .map(|(a, b)| a - b)
        .collect();
    Ok(TwoSampleFit {
        lambda,
        sure,
        preds1,
        preds2,
        estimates,
        grand_mean1: grand_mean(&g1),
        grand_mean2: grand_mean(&g2),
        constrained,
    })
}
