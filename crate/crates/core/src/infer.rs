//! Confidence regions for the shrinkage parameter.
//!
//! Two constructions share one unit-level bootstrap: a Wald-type ellipsoid
//! for interior optima, and a local-quadratic-perturbation region that stays
//! valid when `λ₁` sits on the boundary of `[0, 1]`.

use rand::Rng;
use rayon::prelude::*;

use crate::data::{DataError, OneSampleDataset, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::numeric::{inv2, sym2_eigen};
use crate::rng::RngSeed;
use crate::shrink::{fit_one, fit_two, PredictionSource};
use crate::sure::{Lambda, QuadraticForm};

/// Default bootstrap size.
pub const DEFAULT_B: usize = 500;
/// Largest tolerated share of failed replicates.
pub const MAX_SKIP_FRACTION: f64 = 0.05;

/// Replicate fits from a unit-level bootstrap.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapRun {
    /// Requested number of replicates.
    pub b: usize,
    /// Units per resample (the original `N`).
    pub n: usize,
    pub lambda_reps: Vec<Lambda>,
    pub coeff_reps: Vec<QuadraticForm>,
    pub skipped: usize,
    pub seed: RngSeed,
}

/// Runs `b` replicates of `refit` on unit indices drawn with replacement.
///
/// Replicate `r` draws its indices from stream `("boot", r)` and hands
/// `seed.child("boot-fit", r)` to the refit, so results do not depend on
/// scheduling. Failed replicates are skipped and counted.
pub fn bootstrap_with<F>(n: usize, b: usize, seed: RngSeed, refit: F) -> Result<BootstrapRun>
where
    F: Fn(&[usize], RngSeed) -> Result<(Lambda, QuadraticForm)> + Sync,
{
    if b < 2 {
        return Err(Error::InvalidArgument(format!("bootstrap needs B >= 2, got {b}")));
    }
    if n < 2 {
        return Err(DataError::TooFewUnits { needed: 2, got: n }.into());
    }
    let results: Vec<Result<(Lambda, QuadraticForm)>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.stream("boot", r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            refit(&idx, seed.child("boot-fit", r as u64))
        })
        .collect();
    let mut lambda_reps = Vec::with_capacity(b);
    let mut coeff_reps = Vec::with_capacity(b);
    let mut skipped = 0;
    let mut first = None;
    for res in results {
        match res {
            Ok((lam, q)) => {
                lambda_reps.push(lam);
                coeff_reps.push(q);
            }
            Err(e) => {
                skipped += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if skipped as f64 > MAX_SKIP_FRACTION * b as f64 {
        return Err(Error::TooManySkipped {
            skipped,
            total: b,
            first: first.unwrap_or_default(),
        });
    }
    Ok(BootstrapRun {
        b,
        n,
        lambda_reps,
        coeff_reps,
        skipped,
        seed,
    })
}

fn resample_source<'a>(
    source: PredictionSource<'a>,
    idx: &[usize],
    buf: &'a mut (Vec<f64>, Vec<f64>),
) -> PredictionSource<'a> {
    match source {
        PredictionSource::Fixed { g1, g2 } => {
            buf.0 = idx.iter().map(|&i| g1[i]).collect();
            if let Some(g2) = g2 {
                buf.1 = idx.iter().map(|&i| g2[i]).collect();
            }
            PredictionSource::Fixed {
                g1: &buf.0,
                g2: g2.map(|_| buf.1.as_slice()),
            }
        }
        other => other,
    }
}

/// Bootstrap of the full one-sample pipeline (folds, cross-fit, SURE,
/// constrained fit) on each resample.
pub fn bootstrap_one(
    data: &OneSampleDataset,
    source: PredictionSource<'_>,
    b: usize,
    seed: RngSeed,
) -> Result<BootstrapRun> {
    bootstrap_with(data.len(), b, seed, |idx, rep_seed| {
        let sample = data.select(idx);
        let mut buf = (Vec::new(), Vec::new());
        let src = resample_source(source, idx, &mut buf);
        let fit = fit_one(&sample, src, true, rep_seed)?;
        Ok((fit.lambda, fit.sure))
    })
}

/// Two-sample analogue of [`bootstrap_one`].
pub fn bootstrap_two(
    data: &TwoSampleDataset,
    source: PredictionSource<'_>,
    b: usize,
    seed: RngSeed,
) -> Result<BootstrapRun> {
    bootstrap_with(data.len(), b, seed, |idx, rep_seed| {
        let sample = data.select(idx);
        let mut buf = (Vec::new(), Vec::new());
        let src = resample_source(source, idx, &mut buf);
        let fit = fit_two(&sample, src, true, rep_seed)?;
        Ok((fit.lambda, fit.sure))
    })
}

/// Upper `α` quantile of χ² with two degrees of freedom.
///
/// Tabulated for the usual levels; otherwise the exact closed form
/// `−2 ln α`, since the two-degree-of-freedom law is exponential.
pub fn chi2_2_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    const TABLE: [(f64, f64); 3] = [
        (0.10, 4.605170185988091),
        (0.05, 5.991464547107979),
        (0.01, 9.210340371976182),
    ];
    Ok(TABLE
        .iter()
        .find(|(a, _)| *a == alpha)
        .map_or_else(|| -2.0 * alpha.ln(), |&(_, c)| c))
}

fn sorted_reps(reps: &[Lambda]) -> Vec<[f64; 2]> {
    let mut v: Vec<[f64; 2]> = reps.iter().map(Lambda::as_array).collect();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    v
}

/// Sample covariance of the replicate `λ̂` values, computed after sorting
/// so the result does not depend on replicate order.
pub fn replicate_covariance(reps: &[Lambda]) -> [[f64; 2]; 2] {
    let v = sorted_reps(reps);
    let m = v.len() as f64;
    let mean = [
        crate::numeric::sum(v.iter().map(|r| r[0])) / m,
        crate::numeric::sum(v.iter().map(|r| r[1])) / m,
    ];
    let cov =
        |i: usize, j: usize| crate::numeric::sum(v.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))) / (m - 1.0);
    let c01 = cov(0, 1);
    [[cov(0, 0), c01], [c01, cov(1, 1)]]
}

/// `{λ : N (λ̂−λ)ᵀ V̂⁻¹ (λ̂−λ) ≤ χ²₂(1−α)}` with `V̂ = N·cov(λ̂ replicates)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidRegion {
    pub center: Lambda,
    /// `V̂`, the N-scaled replicate covariance.
    pub covariance: [[f64; 2]; 2],
    pub alpha: f64,
    pub chi2_crit: f64,
    pub n: usize,
    precision: [[f64; 2]; 2],
}

impl EllipsoidRegion {
    pub fn level(&self) -> f64 {
        1.0 - self.alpha
    }

    /// `N (λ̂−λ)ᵀ V̂⁻¹ (λ̂−λ)`.
    pub fn statistic(&self, lam: Lambda) -> f64 {
        let d = [self.center.lambda1 - lam.lambda1, self.center.lambda2 - lam.lambda2];
        let p = &self.precision;
        self.n as f64 * (p[0][0] * d[0] * d[0] + 2.0 * p[0][1] * d[0] * d[1] + p[1][1] * d[1] * d[1])
    }

    pub fn contains(&self, lam: Lambda) -> bool {
        self.statistic(lam) <= self.chi2_crit
    }
}

pub fn ellipsoid_region(run: &BootstrapRun, lam_hat: Lambda, alpha: f64) -> Result<EllipsoidRegion> {
    let chi2_crit = chi2_2_critical(alpha)?;
    if run.lambda_reps.len() < 3 {
        return Err(Error::Numerical("too few bootstrap replicates for a covariance".into()));
    }
    let c = replicate_covariance(&run.lambda_reps);
    let n = run.n as f64;
    let covariance = [[n * c[0][0], n * c[0][1]], [n * c[1][0], n * c[1][1]]];
    let (vals, vecs) = sym2_eigen(&covariance);
    if vals[0].is_nan() || vals[0] <= vals[1] * 1e-12 {
        return Err(Error::Singular {
            condition: if vals[0] > 0.0 {
                vals[1] / vals[0]
            } else {
                f64::INFINITY
            },
            direction: vecs[0],
        });
    }
    let precision =
        inv2(&covariance).ok_or_else(|| Error::Numerical("bootstrap covariance is not invertible".into()))?;
    Ok(EllipsoidRegion {
        center: lam_hat,
        covariance,
        alpha,
        chi2_crit,
        n: run.n,
        precision,
    })
}

/// `−inf_h Ĥ(h)` for one replicate, where
/// `Ĥ(h) = ½ hᵀ(2A* − A)h + N^γ hᵀ{2(A* − A)λ̂ + (b* − b)}`.
///
/// Negative eigenvalues of `2A* − A` are clipped to zero; the returned flag
/// records whether that happened. A linear term with a component in the
/// (clipped) null space makes the infimum `−∞`, reported as `+∞`.
pub fn replicate_statistic(
    q: &QuadraticForm,
    rep: &QuadraticForm,
    lam_hat: Lambda,
    n: usize,
    gamma: f64,
) -> (f64, bool) {
    let m = [
        [2.0 * rep.a[0][0] - q.a[0][0], 2.0 * rep.a[0][1] - q.a[0][1]],
        [2.0 * rep.a[1][0] - q.a[1][0], 2.0 * rep.a[1][1] - q.a[1][1]],
    ];
    let l = lam_hat.as_array();
    let s = [
        2.0 * ((rep.a[0][0] - q.a[0][0]) * l[0] + (rep.a[0][1] - q.a[0][1]) * l[1]) + (rep.b[0] - q.b[0]),
        2.0 * ((rep.a[1][0] - q.a[1][0]) * l[0] + (rep.a[1][1] - q.a[1][1]) * l[1]) + (rep.b[1] - q.b[1]),
    ];
    let (vals, vecs) = sym2_eigen(&m);
    let clipped = vals[0] < 0.0;
    let scale = vals[1].abs().max(vals[0].abs());
    let s_norm = s[0].hypot(s[1]);
    let mut quad = 0.0;
    for k in 0..2 {
        let proj = vecs[k][0] * s[0] + vecs[k][1] * s[1];
        let ev = vals[k].max(0.0);
        if ev > 1e-12 * scale {
            quad += proj * proj / ev;
        } else if proj.abs() > 1e-12 * s_norm.max(f64::MIN_POSITIVE) && proj != 0.0 {
            return (f64::INFINITY, clipped);
        }
    }
    (0.5 * (n as f64).powf(2.0 * gamma) * quad, clipped)
}

/// Grid of candidate `λ` values, row-major in `λ₁` then `λ₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl GridSpec {
    pub fn linspace(lo1: f64, hi1: f64, n1: usize, lo2: f64, hi2: f64, n2: usize) -> Self {
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n <= 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
        };
        Self {
            lambda1: lin(lo1, hi1, n1),
            lambda2: lin(lo2, hi2, n2),
        }
    }

    /// 101 values of `λ₁` on `[0, 1]` by 201 values of `λ₂` over
    /// `λ̂₂ ± 6·sd(λ̂₂ replicates)`; a single `λ₂` when that sd is zero.
    pub fn default_for(run: &BootstrapRun, lam_hat: Lambda) -> Self {
        let sd = replicate_covariance(&run.lambda_reps)[1][1].max(0.0).sqrt();
        if sd > 0.0 && sd.is_finite() {
            Self::linspace(
                0.0,
                1.0,
                101,
                lam_hat.lambda2 - 6.0 * sd,
                lam_hat.lambda2 + 6.0 * sd,
                201,
            )
        } else {
            Self::linspace(0.0, 1.0, 101, lam_hat.lambda2, lam_hat.lambda2, 1)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Lambda> + '_ {
        self.lambda1
            .iter()
            .flat_map(move |&a| self.lambda2.iter().map(move |&b| Lambda::new(a, b)))
    }

    pub fn len(&self) -> usize {
        self.lambda1.len() * self.lambda2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Minimum of `q` over `{λ′ : λ′₁ ∈ [0, 1], ‖λ′ − λ‖ ≤ δ}` for PSD `q.a`.
///
/// The problem is convex, so the optimum is the disk-constrained minimiser
/// when that is feasible, and otherwise lies on one of the segments
/// `λ′₁ = 0` or `λ′₁ = 1` inside the disk. All candidates are evaluated.
pub fn local_minimum(q: &QuadraticForm, center: Lambda, delta: f64) -> (Lambda, f64) {
    let mut best = (center, q.eval(center));
    let mut consider = |lam: Lambda| {
        if (0.0..=1.0).contains(&lam.lambda1) {
            let d = (lam.lambda1 - center.lambda1).hypot(lam.lambda2 - center.lambda2);
            if d <= delta * (1.0 + 1e-12) {
                let v = q.eval(lam);
                if v < best.1 {
                    best = (lam, v);
                }
            }
        }
    };
    for u in disk_minimisers(q, center, delta) {
        consider(Lambda::new(center.lambda1 + u[0], center.lambda2 + u[1]));
    }
    for edge in [0.0, 1.0] {
        let dx = edge - center.lambda1;
        if dx.abs() > delta {
            continue;
        }
        let r = (delta * delta - dx * dx).max(0.0).sqrt();
        // q(edge, y) = a₂₂y² + (2a₁₂·edge + b₂)y + const.
        let a = q.a[1][1];
        let lin = 2.0 * q.a[0][1] * edge + q.b[1];
        let (lo, hi) = (center.lambda2 - r, center.lambda2 + r);
        consider(Lambda::new(edge, lo));
        consider(Lambda::new(edge, hi));
        if a > 0.0 {
            consider(Lambda::new(edge, (-lin / (2.0 * a)).clamp(lo, hi)));
        }
    }
    best
}

/// Candidate steps `u` minimising `q(center + u)` over `‖u‖ ≤ δ`.
fn disk_minimisers(q: &QuadraticForm, center: Lambda, delta: f64) -> Vec<[f64; 2]> {
    let g = q.gradient(center);
    let (vals, vecs) = sym2_eigen(&q.a);
    let scale = vals[1].max(f64::MIN_POSITIVE);
    let vals = vals.map(|v| if v <= 1e-14 * scale { 0.0 } else { v });
    let gp = [
        vecs[0][0] * g[0] + vecs[0][1] * g[1],
        vecs[1][0] * g[0] + vecs[1][1] * g[1],
    ];
    let step = |mu: f64| -> [f64; 2] {
        let mut u = [0.0; 2];
        for k in 0..2 {
            let denom = 2.0 * (vals[k] + mu);
            let c = if denom > 0.0 { -gp[k] / denom } else { 0.0 };
            u[0] += c * vecs[k][0];
            u[1] += c * vecs[k][1];
        }
        u
    };
    let norm = |u: [f64; 2]| u[0].hypot(u[1]);
    let g_norm = g[0].hypot(g[1]);
    if g_norm == 0.0 {
        return vec![[0.0, 0.0]];
    }
    let mut out = Vec::new();
    // Unconstrained minimiser via the pseudo-inverse, plus null-space shifts.
    let null_has_gradient = (0..2).any(|k| vals[k] == 0.0 && gp[k].abs() > 1e-14 * g_norm);
    if !null_has_gradient {
        let u0 = step(0.0);
        if norm(u0) <= delta {
            out.push(u0);
            for k in 0..2 {
                if vals[k] == 0.0 {
                    let t = (delta * delta - norm(u0).powi(2)).max(0.0).sqrt();
                    let base = u0[0] * vecs[k][0] + u0[1] * vecs[k][1];
                    for sign in [-1.0, 1.0] {
                        let shift = sign * t - base;
                        out.push([u0[0] + shift * vecs[k][0], u0[1] + shift * vecs[k][1]]);
                    }
                }
            }
            return out;
        }
    }
    // Boundary solution: ‖u(μ)‖ = δ with μ > 0, found by bisection.
    let mut lo = 0.0;
    let mut hi = g_norm / (2.0 * delta) + 1.0;
    while norm(step(hi)) > delta {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm(step(mid)) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = step(hi);
    let r = norm(u);
    out.push(if r > 0.0 {
        [u[0] * delta / r, u[1] * delta / r]
    } else {
        u
    });
    out
}

/// Local-perturbation confidence region for a possibly constrained `λ*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedRegion {
    pub sure: QuadraticForm,
    pub lam_hat: Lambda,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub n: usize,
    /// `ĉ*`, the `⌈(1−α)B⌉`-th smallest replicate statistic.
    pub critical: f64,
    /// Replicates whose `2A* − A` needed eigenvalue clipping.
    pub clipped: usize,
    /// Replicates with an unbounded local objective.
    pub unbounded: usize,
}

impl ConstrainedRegion {
    /// `N^{2γ} (L̂(λ) − min_{λ′ ∈ [0,1]×ℝ, ‖λ′−λ‖ ≤ δ} L̂(λ′))`.
    pub fn statistic(&self, lam: Lambda) -> f64 {
        let (_, local) = local_minimum(&self.sure, lam, self.delta);
        let drop = (self.sure.eval(lam) - local).max(0.0);
        (self.n as f64).powf(2.0 * self.gamma) * drop
    }

    pub fn contains(&self, lam: Lambda) -> bool {
        lam.is_feasible() && self.statistic(lam) <= self.critical
    }

    pub fn evaluate(&self, grid: &GridSpec) -> GridRegion {
        let points: Vec<Lambda> = grid.points().collect();
        let statistic: Vec<f64> = points.par_iter().map(|&l| self.statistic(l)).collect();
        let member = statistic.iter().map(|&s| s <= self.critical).collect();
        GridRegion {
            grid: grid.clone(),
            statistic,
            member,
            critical: self.critical,
        }
    }
}

/// Pointwise membership over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRegion {
    pub grid: GridSpec,
    pub statistic: Vec<f64>,
    pub member: Vec<bool>,
    pub critical: f64,
}

impl GridRegion {
    pub fn is_empty_region(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn rows(&self) -> impl Iterator<Item = (Lambda, f64, bool)> + '_ {
        self.grid
            .points()
            .zip(self.statistic.iter().zip(&self.member))
            .map(|(l, (&s, &m))| (l, s, m))
    }
}

/// Builds the constrained region from the original SURE, its constrained
/// minimiser and the bootstrap replicate coefficients. `δ = N^{−γ}`.
pub fn constrained_region(
    q: &QuadraticForm,
    lam_hat: Lambda,
    run: &BootstrapRun,
    alpha: f64,
    gamma: f64,
) -> Result<ConstrainedRegion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if run.coeff_reps.is_empty() {
        return Err(Error::Numerical("no bootstrap replicates available".into()));
    }
    let mut clipped = 0;
    let mut stats: Vec<f64> = run
        .coeff_reps
        .iter()
        .map(|rep| {
            let (s, c) = replicate_statistic(q, rep, lam_hat, run.n, gamma);
            clipped += c as usize;
            s
        })
        .collect();
    let unbounded = stats.iter().filter(|s| s.is_infinite()).count();
    stats.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * stats.len() as f64).ceil() as usize;
    let critical = stats[rank.clamp(1, stats.len()) - 1];
    Ok(ConstrainedRegion {
        sure: *q,
        lam_hat,
        alpha,
        gamma,
        delta: (run.n as f64).powf(-gamma),
        n: run.n,
        critical,
        clipped,
        unbounded,
    })
}
