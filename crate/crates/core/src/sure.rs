//! Approximate SURE for the linear shrinkage class.
//!
//! The estimator is `θ̂ᵢ(λ) = λ₁·Yᵢ/nᵢ + (1−λ₁)·Ȳ + λ₂·(ĝᵢ − ĝ̄)`. Its risk
//! estimate replaces the unobservable cross term `θᵢ·θ̂ᵢ` by the Stein
//! operator applied to `θ̂ᵢ` as a function of `Yᵢ`, holding `Ȳ` and the
//! predictions fixed. The result is an exact quadratic in `λ`, available
//! both by direct evaluation and as explicit coefficients.

use crate::data::{grand_mean, OneSampleDataset, OneSampleUnit, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::numeric::{sum, sym2_eigen};
use crate::shrink::CrossFitPredictions;
use crate::stein::{t_op, OutcomeTable};

/// Shrinkage parameter `(λ₁, λ₂)`; feasible when `λ₁ ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambda {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Lambda {
    pub const MLE: Lambda = Lambda {
        lambda1: 1.0,
        lambda2: 0.0,
    };
    pub const POOLED: Lambda = Lambda {
        lambda1: 0.0,
        lambda2: 0.0,
    };

    pub const fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    pub fn is_feasible(&self) -> bool {
        (0.0..=1.0).contains(&self.lambda1) && self.lambda2.is_finite()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.lambda1, self.lambda2]
    }
}

impl From<[f64; 2]> for Lambda {
    fn from(v: [f64; 2]) -> Self {
        Lambda::new(v[0], v[1])
    }
}

/// `λ ↦ λᵀaλ + bᵀλ + c` with symmetric `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticForm {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub c: f64,
}

impl QuadraticForm {
    pub fn eval(&self, lam: Lambda) -> f64 {
        let [x, y] = lam.as_array();
        let a = &self.a;
        a[0][0] * x * x + 2.0 * a[0][1] * x * y + a[1][1] * y * y + self.b[0] * x + self.b[1] * y + self.c
    }

    pub fn gradient(&self, lam: Lambda) -> [f64; 2] {
        let [x, y] = lam.as_array();
        [
            2.0 * (self.a[0][0] * x + self.a[0][1] * y) + self.b[0],
            2.0 * (self.a[1][0] * x + self.a[1][1] * y) + self.b[1],
        ]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sym2_eigen(&self.a).0[0]
    }
}

/// Centred MLE and prediction deviations of one unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaVector {
    pub mle_dev: f64,
    pub pred_dev: f64,
}

fn check_preds(data_len: usize, preds: Option<&CrossFitPredictions>) -> Result<()> {
    match preds {
        Some(p) if p.len() != data_len => Err(Error::Misaligned {
            expected: data_len,
            got: p.len(),
        }),
        _ => Ok(()),
    }
}

fn pred_dev(preds: Option<&CrossFitPredictions>, i: usize) -> f64 {
    preds.map_or(0.0, |p| p.deviation(i))
}

/// `βᵢ = (Yᵢ/nᵢ − Ȳ, ĝᵢ − ĝ̄)`; the second entry is zero without predictions.
pub fn beta_vectors(data: &OneSampleDataset, preds: Option<&CrossFitPredictions>) -> Result<Vec<BetaVector>> {
    check_preds(data.len(), preds)?;
    let ybar = grand_mean(data);
    Ok(data
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| BetaVector {
            mle_dev: u.rate() - ybar,
            pred_dev: pred_dev(preds, i),
        })
        .collect())
}

/// `vᵢ = pᵢ(1−pᵢ)/(nᵢ−1)`, the unbiased estimate of `θᵢ(1−θᵢ)/nᵢ`.
#[inline]
pub(crate) fn unbiased_variance(u: &OneSampleUnit) -> f64 {
    let p = u.rate();
    p * (1.0 - p) / (u.n as f64 - 1.0)
}

/// Outcome table of one group's estimate as a function of its own count.
fn estimate_table(n: u32, lam: Lambda, ybar: f64, dev: f64) -> Result<OutcomeTable> {
    let offset = (1.0 - lam.lambda1) * ybar + lam.lambda2 * dev;
    Ok(OutcomeTable::from_fn(n, |y| {
        lam.lambda1 * (y as f64 / n as f64) + offset
    })?)
}

/// `(1/N) Σ [θ̂ᵢ² − 2·𝒯θ̂ᵢ(Yᵢ)]` by applying the Stein operator to each
/// unit's outcome table.
pub fn sure_one_direct(data: &OneSampleDataset, preds: Option<&CrossFitPredictions>, lam: Lambda) -> Result<f64> {
    check_preds(data.len(), preds)?;
    let ybar = grand_mean(data);
    let terms = data
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let h = estimate_table(u.n, lam, ybar, pred_dev(preds, i))?;
            let est = h.values()[u.y as usize];
            Ok(est * est - 2.0 * t_op(&h, u.y)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(sum(terms) / data.len() as f64)
}

fn quadratic_from_terms(rows: impl Iterator<Item = ([f64; 2], [f64; 2])>, n: usize, c: f64) -> QuadraticForm {
    let (mut a00, mut a01, mut a11, mut b0, mut b1) = (vec![], vec![], vec![], vec![], vec![]);
    for (beta, lin) in rows {
        a00.push(beta[0] * beta[0]);
        a01.push(beta[0] * beta[1]);
        a11.push(beta[1] * beta[1]);
        b0.push(lin[0]);
        b1.push(lin[1]);
    }
    let nf = n as f64;
    let a01 = sum(a01) / nf;
    QuadraticForm {
        a: [[sum(a00) / nf, a01], [a01, sum(a11) / nf]],
        b: [2.0 * sum(b0) / nf, 2.0 * sum(b1) / nf],
        c,
    }
}

/// Closed-form coefficients of the one-sample SURE.
///
/// With `pᵢ = Yᵢ/nᵢ`, `βᵢ = (pᵢ − Ȳ, dᵢ)`, `dᵢ = ĝᵢ − ĝ̄`:
/// `a = (1/N) Σ βᵢβᵢᵀ`,
/// `b = (2/N) Σ (vᵢ − (pᵢ − Ȳ)², (Ȳ − pᵢ)·dᵢ)`,
/// and `c` is the direct evaluation at `λ = (0, 0)`.
pub fn sure_one_coeffs(data: &OneSampleDataset, preds: Option<&CrossFitPredictions>) -> Result<QuadraticForm> {
    let betas = beta_vectors(data, preds)?;
    let c = sure_one_direct(data, preds, Lambda::POOLED)?;
    let rows = betas.iter().zip(data.units()).map(|(b, u)| {
        (
            [b.mle_dev, b.pred_dev],
            [unbiased_variance(u) - b.mle_dev * b.mle_dev, -b.mle_dev * b.pred_dev],
        )
    });
    Ok(quadratic_from_terms(rows, data.len(), c))
}

fn check_two(
    data: &TwoSampleDataset,
    preds1: Option<&CrossFitPredictions>,
    preds2: Option<&CrossFitPredictions>,
) -> Result<()> {
    check_preds(data.len(), preds1)?;
    check_preds(data.len(), preds2)
}

/// Two-sample SURE for `θ̂ᵢ = θ̂ᵢ₁ − θ̂ᵢ₂`: the operator is applied once in
/// `Yᵢ₁` with group 2 frozen and once in `Yᵢ₂` with group 1 frozen.
pub fn sure_two_direct(
    data: &TwoSampleDataset,
    preds1: Option<&CrossFitPredictions>,
    preds2: Option<&CrossFitPredictions>,
    lam: Lambda,
) -> Result<f64> {
    check_two(data, preds1, preds2)?;
    let ybar1 = grand_mean(&data.group(1));
    let ybar2 = grand_mean(&data.group(2));
    let terms = data
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let (g1, g2) = (&u.group1, &u.group2);
            let h1 = estimate_table(g1.n, lam, ybar1, pred_dev(preds1, i))?;
            let h2 = estimate_table(g2.n, lam, ybar2, pred_dev(preds2, i))?;
            let est1 = h1.values()[g1.y as usize];
            let est2 = h2.values()[g2.y as usize];
            let diff_in_y1 = OutcomeTable::new(g1.n, h1.values().iter().map(|v| v - est2).collect())?;
            let diff_in_y2 = OutcomeTable::new(g2.n, h2.values().iter().map(|v| est1 - v).collect())?;
            let est = est1 - est2;
            Ok(est * est - 2.0 * t_op(&diff_in_y1, g1.y)? + 2.0 * t_op(&diff_in_y2, g2.y)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(sum(terms) / data.len() as f64)
}

/// Closed-form coefficients of the two-sample SURE.
///
/// With `ΔYᵢ = (pᵢ₁ − Ȳ₁) − (pᵢ₂ − Ȳ₂)` and `Γᵢ = dᵢ₁ − dᵢ₂`:
/// `a = (1/N) Σ (ΔYᵢ, Γᵢ)(ΔYᵢ, Γᵢ)ᵀ`,
/// `b = (2/N) Σ (vᵢ₁ + vᵢ₂ − ΔYᵢ², −ΔYᵢ·Γᵢ)`,
/// and `c` is the direct evaluation at `λ = (0, 0)`.
pub fn sure_two_coeffs(
    data: &TwoSampleDataset,
    preds1: Option<&CrossFitPredictions>,
    preds2: Option<&CrossFitPredictions>,
) -> Result<QuadraticForm> {
    check_two(data, preds1, preds2)?;
    let b1 = beta_vectors(&data.group(1), preds1)?;
    let b2 = beta_vectors(&data.group(2), preds2)?;
    let c = sure_two_direct(data, preds1, preds2, Lambda::POOLED)?;
    let rows = data.units().iter().zip(b1.iter().zip(&b2)).map(|(u, (x, y))| {
        let dy = x.mle_dev - y.mle_dev;
        let gamma = x.pred_dev - y.pred_dev;
        let v = unbiased_variance(&u.group1) + unbiased_variance(&u.group2);
        ([dy, gamma], [v - dy * dy, -dy * gamma])
    });
    Ok(quadratic_from_terms(rows, data.len(), c))
}
