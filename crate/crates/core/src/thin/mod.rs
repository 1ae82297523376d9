//! Hypergeometric data thinning and holdout validation.
//!
//! Each count `Yᵢ ~ Bin(nᵢ, θᵢ)` is split into a holdout count
//! `Yᵢ⁽¹⁾ ~ Bin(mᵢ, θᵢ)` and a training count `Yᵢ⁽²⁾ = Yᵢ − Yᵢ⁽¹⁾ ~
//! Bin(nᵢ − mᵢ, θᵢ)`, independent of each other, by drawing `Yᵢ⁽¹⁾` from the
//! hypergeometric law of `mᵢ` draws out of the `nᵢ` trials.

pub mod sim;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::data::{OneSampleDataset, OneSampleUnit, TwoSampleDataset, TwoSampleUnit};
use crate::error::{Error, Result};
use crate::infer::GridSpec;
use crate::numeric::sum;
use crate::rng::RngSeed;
use crate::shrink::{estimate_one, estimate_two, fit_one, fit_two, predictions_one, predictions_two, PredictionSource};
use crate::sure::{sure_one_coeffs, sure_two_coeffs, Lambda};

/// Holdout fraction used when none is given.
pub const DEFAULT_FRACTION: f64 = 0.2;

/// Draws the number of successes among `m` trials taken without replacement
/// from `m + rest` trials containing `y` successes.
///
/// Exact inverse-CDF sampling: the pmf is built from its mode outwards with
/// the ratio recurrence in log space and normalised before the search.
pub fn hypergeom_sample<R: Rng + ?Sized>(m: u32, rest: u32, y: u32, rng: &mut R) -> Result<u32> {
    let total = m as u64 + rest as u64;
    if y as u64 > total {
        return Err(Error::InvalidArgument(format!(
            "{y} successes exceed population {total}"
        )));
    }
    let lo = y.saturating_sub(rest);
    let hi = y.min(m);
    if lo == hi {
        return Ok(lo);
    }
    let log_w = hypergeom_log_weights(m, rest, y);
    let peak = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - peak).exp()).collect();
    let target = rng.random::<f64>() * sum(w.iter().copied());
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        acc += wk;
        if target < acc {
            return Ok(lo + k as u32);
        }
    }
    Ok(hi)
}

/// Unnormalised log pmf over `max(0, y − rest)..=min(m, y)`, zero at the mode.
fn hypergeom_log_weights(m: u32, rest: u32, y: u32) -> Vec<f64> {
    let lo = y.saturating_sub(rest);
    let hi = y.min(m);
    let (m, rest, y) = (m as f64, rest as f64, y as f64);
    // P(k+1)/P(k) = (y − k)(m − k) / ((k + 1)(rest − y + k + 1)).
    let log_ratio = |k: f64| ((y - k) * (m - k)).ln() - ((k + 1.0) * (rest - y + k + 1.0)).ln();
    let mode = (((m + 1.0) * (y + 1.0) / (m + rest + 2.0)).floor() as u32).clamp(lo, hi);
    let mut log_w = vec![0.0; (hi - lo + 1) as usize];
    for k in mode..hi {
        log_w[(k + 1 - lo) as usize] = log_w[(k - lo) as usize] + log_ratio(k as f64);
    }
    for k in (lo..mode).rev() {
        log_w[(k - lo) as usize] = log_w[(k + 1 - lo) as usize] - log_ratio(k as f64);
    }
    log_w
}

/// Holdout half of one unit: `y` successes out of `m` trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Holdout {
    pub m: u32,
    pub y: u32,
}

impl Holdout {
    pub fn rate(&self) -> f64 {
        self.y as f64 / self.m as f64
    }
}

static NEXT_SPLIT_ID: AtomicU64 = AtomicU64::new(1);

/// A training dataset and the matching holdout counts.
///
/// Each split carries a process-unique id; estimates produced through
/// [`ThinningSplit::estimate`] are stamped with it, and the holdout risks
/// refuse anything else.
#[derive(Clone, Debug)]
pub struct ThinningSplit<D, H> {
    id: u64,
    pub fraction: f64,
    pub train: D,
    pub holdout: Vec<H>,
}

pub type OneSampleSplit = ThinningSplit<OneSampleDataset, Holdout>;
pub type TwoSampleSplit = ThinningSplit<TwoSampleDataset, [Holdout; 2]>;

impl<D, H> ThinningSplit<D, H> {
    /// Runs `fit` on the training data and stamps the result.
    pub fn estimate<F>(&self, fit: F) -> Result<TrainEstimates>
    where
        F: FnOnce(&D) -> Result<Vec<f64>>,
    {
        let values = fit(&self.train)?;
        if values.len() != self.holdout.len() {
            return Err(Error::Misaligned {
                expected: self.holdout.len(),
                got: values.len(),
            });
        }
        Ok(TrainEstimates {
            split_id: Some(self.id),
            values,
        })
    }

    fn check(&self, est: &TrainEstimates) -> Result<()> {
        if est.split_id != Some(self.id) {
            return Err(Error::NotFromTrain);
        }
        Ok(())
    }
}

/// Per-unit estimates tied to the split whose training half produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainEstimates {
    split_id: Option<u64>,
    values: Vec<f64>,
}

impl TrainEstimates {
    /// Estimates of unknown origin; every holdout risk rejects them.
    pub fn untracked(values: Vec<f64>) -> Self {
        Self { split_id: None, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `mᵢ = max(1, ⌊f·nᵢ⌋)`; the unit is rejected when fewer than 2 trials
/// would remain for training.
pub fn holdout_size(n: u32, fraction: f64) -> std::result::Result<u32, String> {
    let m = ((fraction * n as f64).floor() as u32).max(1);
    if n < m + 2 {
        return Err(format!(
            "n = {n} leaves {} training trials after holding out {m}; need at least 2",
            n.saturating_sub(m)
        ));
    }
    Ok(m)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "thinning fraction {fraction} must lie in (0, 1)"
        )))
    }
}

fn thin_unit(u: &OneSampleUnit, i: usize, fraction: f64, rng: &mut impl Rng) -> Result<(OneSampleUnit, Holdout)> {
    let m = holdout_size(u.n, fraction).map_err(|message| Error::Thinning { unit: i + 1, message })?;
    let y1 = hypergeom_sample(m, u.n - m, u.y, rng)?;
    let train = OneSampleUnit {
        n: u.n - m,
        y: u.y - y1,
        x: u.x.clone(),
    };
    Ok((train, Holdout { m, y: y1 }))
}

fn new_id() -> u64 {
    NEXT_SPLIT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Thins every unit with its own stream `("thin", i)`.
pub fn thin_one(data: &OneSampleDataset, fraction: f64, seed: RngSeed) -> Result<OneSampleSplit> {
    check_fraction(fraction)?;
    let (train, holdout): (Vec<_>, Vec<_>) = data
        .units()
        .iter()
        .enumerate()
        .map(|(i, u)| thin_unit(u, i, fraction, &mut seed.stream("thin", i as u64)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(ThinningSplit {
        id: new_id(),
        fraction,
        train: OneSampleDataset::new(train)?,
        holdout,
    })
}

/// Thins both groups independently, streams `("thin-g1", i)` and
/// `("thin-g2", i)`.
pub fn thin_two(data: &TwoSampleDataset, fraction: f64, seed: RngSeed) -> Result<TwoSampleSplit> {
    check_fraction(fraction)?;
    let mut train = Vec::with_capacity(data.len());
    let mut holdout = Vec::with_capacity(data.len());
    for (i, u) in data.units().iter().enumerate() {
        let (t1, h1) = thin_unit(&u.group1, i, fraction, &mut seed.stream("thin-g1", i as u64))?;
        let (t2, h2) = thin_unit(&u.group2, i, fraction, &mut seed.stream("thin-g2", i as u64))?;
        train.push(TwoSampleUnit { group1: t1, group2: t2 });
        holdout.push([h1, h2]);
    }
    Ok(ThinningSplit {
        id: new_id(),
        fraction,
        train: TwoSampleDataset::new(train)?,
        holdout,
    })
}

/// `(1/N)Σ[θ̂ᵢ² − 2·targetᵢ·θ̂ᵢ]`.
fn holdout_statistic(estimates: &[f64], targets: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = estimates
        .iter()
        .zip(targets)
        .map(|(e, t)| e * e - 2.0 * t * e)
        .collect();
    sum(terms.iter().copied()) / estimates.len() as f64
}

fn check_m(holdout: &[Holdout], i: usize) -> Result<()> {
    if holdout.iter().any(|h| h.m == 0) {
        return Err(Error::Thinning {
            unit: i + 1,
            message: "holdout has m = 0 trials".into(),
        });
    }
    Ok(())
}

/// `(1/N)Σ[θ̂ᵢ² − 2(Yᵢ⁽¹⁾/mᵢ)θ̂ᵢ]`, whose expectation is the squared-error
/// risk of training-half estimates minus `(1/N)Σθᵢ²`.
pub fn holdout_risk_one(estimates: &TrainEstimates, split: &OneSampleSplit) -> Result<f64> {
    split.check(estimates)?;
    for (i, h) in split.holdout.iter().enumerate() {
        check_m(std::slice::from_ref(h), i)?;
    }
    Ok(holdout_statistic(
        &estimates.values,
        split.holdout.iter().map(Holdout::rate),
    ))
}

/// Two-sample analogue with targets `Yᵢ₁⁽¹⁾/mᵢ₁ − Yᵢ₂⁽¹⁾/mᵢ₂`.
pub fn holdout_risk_two(estimates: &TrainEstimates, split: &TwoSampleSplit) -> Result<f64> {
    split.check(estimates)?;
    for (i, h) in split.holdout.iter().enumerate() {
        check_m(h, i)?;
    }
    Ok(holdout_statistic(
        &estimates.values,
        split.holdout.iter().map(|[a, b]| a.rate() - b.rate()),
    ))
}

/// An estimator entered into a comparison.
#[derive(Clone, Copy, Debug)]
pub enum EstimatorConfig<'a> {
    /// Per-unit rates, `λ = (1, 0)`.
    Mle,
    /// Full pooling, `λ = (0, 0)`.
    GrandMean,
    /// A given `λ`, with predictions from `source` when `λ₂ ≠ 0`.
    Fixed {
        lambda: Lambda,
        source: PredictionSource<'a>,
    },
    /// `λ` chosen by minimising the SURE on the training half.
    SureFit {
        source: PredictionSource<'a>,
        constrained: bool,
    },
}

impl EstimatorConfig<'_> {
    pub fn name(&self) -> String {
        match self {
            EstimatorConfig::Mle => "mle".into(),
            EstimatorConfig::GrandMean => "grand_mean".into(),
            EstimatorConfig::Fixed { lambda, .. } => format!("fixed({};{})", lambda.lambda1, lambda.lambda2),
            EstimatorConfig::SureFit { source, .. } => format!("sure_fit({})", source.describe()),
        }
    }

    fn source(&self) -> PredictionSource<'_> {
        match self {
            EstimatorConfig::Fixed { source, .. } | EstimatorConfig::SureFit { source, .. } => *source,
            _ => PredictionSource::None,
        }
    }
}

/// One line of the comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub estimator: String,
    pub holdout_risk: f64,
    pub lambda: Lambda,
}

/// SURE on the training half and holdout risk at one `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub lambda: Lambda,
    pub sure: f64,
    pub holdout_risk: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub surface: Vec<SurfacePoint>,
}

fn check_configs(configs: &[EstimatorConfig<'_>]) -> Result<()> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("comparison needs at least one estimator".into()));
    }
    Ok(())
}

/// Predictions used for the surfaces: those of the first configuration that
/// has any.
fn surface_source<'a>(configs: &[EstimatorConfig<'a>]) -> PredictionSource<'a> {
    configs
        .iter()
        .map(|c| match c {
            EstimatorConfig::Fixed { source, .. } | EstimatorConfig::SureFit { source, .. } => *source,
            _ => PredictionSource::None,
        })
        .find(|s| !matches!(s, PredictionSource::None))
        .unwrap_or(PredictionSource::None)
}

fn fit_seed(seed: RngSeed) -> RngSeed {
    seed.child("fit", 0)
}

/// One split; every estimator fit on the training half and scored on the
/// holdout half; SURE and holdout-risk surfaces over `grid`.
pub fn compare_one(
    data: &OneSampleDataset,
    fraction: f64,
    configs: &[EstimatorConfig<'_>],
    grid: &GridSpec,
    seed: RngSeed,
) -> Result<Comparison> {
    check_configs(configs)?;
    let split = thin_one(data, fraction, seed)?;
    let fseed = fit_seed(seed);
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let mut lambda = Lambda::MLE;
        let est = split.estimate(|train| match config {
            EstimatorConfig::Mle => estimate_one(train, None, Lambda::MLE),
            EstimatorConfig::GrandMean => {
                lambda = Lambda::POOLED;
                estimate_one(train, None, Lambda::POOLED)
            }
            EstimatorConfig::Fixed { lambda: l, source } => {
                lambda = *l;
                let preds = predictions_one(train, *source, fseed)?;
                estimate_one(train, preds.as_ref(), *l)
            }
            EstimatorConfig::SureFit { source, constrained } => {
                let fit = fit_one(train, *source, *constrained, fseed)?;
                lambda = fit.lambda;
                Ok(fit.estimates)
            }
        })?;
        rows.push(ComparisonRow {
            estimator: config.name(),
            holdout_risk: holdout_risk_one(&est, &split)?,
            lambda,
        });
    }
    let surface = surface_one(&split, surface_source(configs), grid, fseed)?;
    Ok(Comparison { rows, surface })
}

fn surface_one(
    split: &OneSampleSplit,
    source: PredictionSource<'_>,
    grid: &GridSpec,
    fseed: RngSeed,
) -> Result<Vec<SurfacePoint>> {
    let preds = predictions_one(&split.train, source, fseed)?;
    let q = sure_one_coeffs(&split.train, preds.as_ref())?;
    grid.points()
        .map(|lambda| {
            let est = split.estimate(|train| estimate_one(train, preds.as_ref(), lambda))?;
            Ok(SurfacePoint {
                lambda,
                sure: q.eval(lambda),
                holdout_risk: holdout_risk_one(&est, split)?,
            })
        })
        .collect()
}

/// The surfaces of [`compare_one`] alone: one split, the SURE of the
/// training half and the holdout risk at every grid point.
pub fn holdout_surface_one(
    data: &OneSampleDataset,
    fraction: f64,
    source: PredictionSource<'_>,
    grid: &GridSpec,
    seed: RngSeed,
) -> Result<Vec<SurfacePoint>> {
    let split = thin_one(data, fraction, seed)?;
    surface_one(&split, source, grid, fit_seed(seed))
}

/// Two-sample analogue of [`compare_one`].
pub fn compare_two(
    data: &TwoSampleDataset,
    fraction: f64,
    configs: &[EstimatorConfig<'_>],
    grid: &GridSpec,
    seed: RngSeed,
) -> Result<Comparison> {
    check_configs(configs)?;
    let split = thin_two(data, fraction, seed)?;
    let fseed = fit_seed(seed);
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let mut lambda = Lambda::MLE;
        let est = split.estimate(|train| match config {
            EstimatorConfig::Mle => estimate_two(train, None, None, Lambda::MLE),
            EstimatorConfig::GrandMean => {
                lambda = Lambda::POOLED;
                estimate_two(train, None, None, Lambda::POOLED)
            }
            EstimatorConfig::Fixed { lambda: l, .. } => {
                lambda = *l;
                let (p1, p2) = predictions_two(train, config.source(), fseed)?;
                estimate_two(train, p1.as_ref(), p2.as_ref(), *l)
            }
            EstimatorConfig::SureFit { source, constrained } => {
                let fit = fit_two(train, *source, *constrained, fseed)?;
                lambda = fit.lambda;
                Ok(fit.estimates)
            }
        })?;
        rows.push(ComparisonRow {
            estimator: config.name(),
            holdout_risk: holdout_risk_two(&est, &split)?,
            lambda,
        });
    }
    let surface = surface_two(&split, surface_source(configs), grid, fseed)?;
    Ok(Comparison { rows, surface })
}

fn surface_two(
    split: &TwoSampleSplit,
    source: PredictionSource<'_>,
    grid: &GridSpec,
    fseed: RngSeed,
) -> Result<Vec<SurfacePoint>> {
    let (p1, p2) = predictions_two(&split.train, source, fseed)?;
    let q = sure_two_coeffs(&split.train, p1.as_ref(), p2.as_ref())?;
    grid.points()
        .map(|lambda| {
            let est = split.estimate(|train| estimate_two(train, p1.as_ref(), p2.as_ref(), lambda))?;
            Ok(SurfacePoint {
                lambda,
                sure: q.eval(lambda),
                holdout_risk: holdout_risk_two(&est, split)?,
            })
        })
        .collect()
}

/// Two-sample analogue of [`holdout_surface_one`].
pub fn holdout_surface_two(
    data: &TwoSampleDataset,
    fraction: f64,
    source: PredictionSource<'_>,
    grid: &GridSpec,
    seed: RngSeed,
) -> Result<Vec<SurfacePoint>> {
    let split = thin_two(data, fraction, seed)?;
    surface_two(&split, source, grid, fit_seed(seed))
}
