//! Pluggable predictors for the covariate term.
//!
//! A predictor is trained on the rates `yᵢ/nᵢ` (unweighted) of the units
//! outside one fold and then asked for predictions on the held-out fold.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::rng::RngSeed;

/// Model produced by [`Predictor::fit`].
pub trait FittedModel: Send + Sync {
    fn predict(&self, x: &[f64]) -> f64;
}

/// Training interface. Implementations must be deterministic given the
/// training set and seed and must tolerate concurrent calls.
pub trait Predictor: Send + Sync {
    fn name(&self) -> String;

    fn fit(&self, features: &[&[f64]], targets: &[f64], seed: RngSeed) -> Result<Box<dyn FittedModel>, String>;
}

struct ConstantModel(f64);

impl FittedModel for ConstantModel {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

/// Predicts the training mean of the rates.
#[derive(Clone, Copy, Debug, Default)]
pub struct Constant;

impl Predictor for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn fit(&self, _features: &[&[f64]], targets: &[f64], _seed: RngSeed) -> Result<Box<dyn FittedModel>, String> {
        if targets.is_empty() {
            return Err("empty training set".into());
        }
        Ok(Box::new(ConstantModel(crate::numeric::mean(targets))))
    }
}

struct LinearModel {
    coef: Vec<f64>,
}

impl FittedModel for LinearModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.coef[0] + x.iter().zip(&self.coef[1..]).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Least squares with intercept.
///
/// A rank-deficient design is an error unless the ridge fallback is enabled,
/// in which case a `1e−8` ridge is added to the normal equations.
#[derive(Clone, Copy, Debug, Default)]
pub struct Ols {
    ridge_fallback: bool,
}

const OLS_RANK_TOL: f64 = 1e-10;
const OLS_RIDGE: f64 = 1e-8;

impl Ols {
    pub fn new() -> Self {
        Self { ridge_fallback: false }
    }

    pub fn with_ridge_fallback() -> Self {
        Self { ridge_fallback: true }
    }
}

impl Predictor for Ols {
    fn name(&self) -> String {
        if self.ridge_fallback { "ols-ridge" } else { "ols" }.into()
    }

    fn fit(&self, features: &[&[f64]], targets: &[f64], _seed: RngSeed) -> Result<Box<dyn FittedModel>, String> {
        let rows = targets.len();
        let p = features.first().map_or(0, |x| x.len()) + 1;
        if rows == 0 {
            return Err("empty training set".into());
        }
        let design = DMatrix::from_fn(rows, p, |i, j| if j == 0 { 1.0 } else { features[i][j - 1] });
        let y = DVector::from_column_slice(targets);
        let svd = design.clone().svd(true, true);
        let s_max = svd.singular_values.max();
        let s_min = if rows >= p { svd.singular_values.min() } else { 0.0 };
        let coef = if s_min > OLS_RANK_TOL * s_max {
            svd.solve(&y, 0.0).map_err(|e| e.to_string())?
        } else if self.ridge_fallback {
            let mut gram = design.transpose() * &design;
            for k in 0..p {
                gram[(k, k)] += OLS_RIDGE;
            }
            let rhs = design.transpose() * &y;
            gram.cholesky()
                .ok_or_else(|| "ridge-regularised normal equations are not positive definite".to_string())?
                .solve(&rhs)
        } else {
            return Err(format!(
                "rank-deficient design ({rows} rows, {p} columns including intercept); collinear covariates"
            ));
        };
        Ok(Box::new(LinearModel {
            coef: coef.iter().copied().collect(),
        }))
    }
}

type SharedFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

struct FnModel(SharedFn);

impl FittedModel for FnModel {
    fn predict(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Fixed function of the covariates; ignores the training data. Useful for
/// designs where the regression function is known.
#[derive(Clone)]
pub struct FnPredictor {
    name: String,
    f: SharedFn,
}

impl FnPredictor {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl Predictor for FnPredictor {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn fit(&self, _features: &[&[f64]], _targets: &[f64], _seed: RngSeed) -> Result<Box<dyn FittedModel>, String> {
        Ok(Box::new(FnModel(self.f.clone())))
    }
}
