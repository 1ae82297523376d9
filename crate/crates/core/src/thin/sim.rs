//! Synthetic designs with known θ and exact risks.
//!
//! Risks are computed with the prediction deviations frozen and every count
//! random, including the grand mean. Under that convention the risk of the
//! shrinkage estimator is an exact quadratic form in `λ`, built from the
//! first two moments of `Yᵢ/nᵢ` and `Ȳ`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::data::{OneSampleDataset, OneSampleUnit, TwoSampleDataset, TwoSampleUnit};
use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf, sum};
use crate::rng::RngSeed;
use crate::shrink::{fit_lambda, Predictor};
use crate::stein::OutcomeTable;
use crate::sure::{Lambda, QuadraticForm};

/// Mean function `g(x)` of the θ law.
#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Constant(f64),
    Linear {
        intercept: f64,
        slope: Vec<f64>,
    },
    /// `1 / (1 + exp(−(intercept + slope·x)))`.
    Logistic {
        intercept: f64,
        slope: Vec<f64>,
    },
}

impl Signal {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let linear = |intercept: f64, slope: &[f64]| intercept + slope.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
        match self {
            Signal::Constant(c) => *c,
            Signal::Linear { intercept, slope } => linear(*intercept, slope),
            Signal::Logistic { intercept, slope } => 1.0 / (1.0 + (-linear(*intercept, slope)).exp()),
        }
    }

    fn slope_len(&self) -> usize {
        match self {
            Signal::Constant(_) => 0,
            Signal::Linear { slope, .. } | Signal::Logistic { slope, .. } => slope.len(),
        }
    }
}

/// `θᵢ = clip(g(xᵢ) + ηᵢ)`, `xᵢ ~ U(0,1)^dim`, `ηᵢ ~ N(0, noise_sd²)`,
/// `nᵢ` uniform on `n_min..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDesign {
    pub units: usize,
    pub n_min: u32,
    pub n_max: u32,
    pub dim: usize,
    pub signal: Signal,
    pub noise_sd: f64,
    pub clip: (f64, f64),
    pub seed: RngSeed,
}

/// Default clipping range for generated θ.
pub const DEFAULT_CLIP: (f64, f64) = (0.005, 0.995);

impl SyntheticDesign {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.units == 0 {
            return bad("design needs at least one unit".into());
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return bad(format!(
                "trial range {}..={} must satisfy 2 <= min <= max",
                self.n_min, self.n_max
            ));
        }
        if self.n_max > crate::data::MAX_TRIALS {
            return bad(format!("n_max {} exceeds {}", self.n_max, crate::data::MAX_TRIALS));
        }
        if self.signal.slope_len() > self.dim {
            return bad(format!(
                "signal uses {} covariates but dim = {}",
                self.signal.slope_len(),
                self.dim
            ));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise sd {} must be finite and >= 0", self.noise_sd));
        }
        let (lo, hi) = self.clip;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return bad(format!("clip range ({lo}, {hi}) must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Fixed design: trial counts, covariates and true θ.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub n: Vec<u32>,
    pub x: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

impl Truth {
    /// Draws `nᵢ`, `xᵢ` and `θᵢ` from the design.
    pub fn generate(design: &SyntheticDesign) -> Result<Self> {
        design.validate()?;
        let mut rng = design.seed.stream("design", 0);
        let noise = Normal::new(0.0, design.noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let (lo, hi) = design.clip;
        let mut n = Vec::with_capacity(design.units);
        let mut x = Vec::with_capacity(design.units);
        let mut theta = Vec::with_capacity(design.units);
        for _ in 0..design.units {
            n.push(rng.random_range(design.n_min..=design.n_max));
            let xi: Vec<f64> = (0..design.dim).map(|_| rng.random::<f64>()).collect();
            theta.push((design.signal.eval(&xi) + noise.sample(&mut rng)).clamp(lo, hi));
            x.push(xi);
        }
        Ok(Self { n, x, theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// One draw `Yᵢ ~ Bin(nᵢ, θᵢ)`.
    pub fn draw(&self, seed: RngSeed) -> OneSampleDataset {
        let mut rng = seed.stream("counts", 0);
        let units = self
            .n
            .iter()
            .zip(&self.theta)
            .zip(&self.x)
            .map(|((&n, &t), x)| {
                let y = Binomial::new(n as u64, t).expect("theta in [0, 1]").sample(&mut rng) as u32;
                OneSampleUnit { n, y, x: x.clone() }
            })
            .collect();
        OneSampleDataset::new(units).expect("generated units are valid")
    }

    /// Exact risk `(1/N)Σ E(θ̂ᵢ − θᵢ)²` of the shrinkage estimator as a
    /// quadratic form in `λ`, for frozen prediction deviations `dᵢ`.
    pub fn risk_form(&self, dev: Option<&[f64]>) -> Result<QuadraticForm> {
        let m = self.moments(dev)?;
        let inv = 1.0 / self.len() as f64;
        let mut a = [[0.0; 2]; 2];
        let mut b = [0.0; 2];
        let mut c = 0.0;
        for u in &m {
            a[0][0] += u.uu;
            a[0][1] += u.d * u.mu_u;
            a[1][1] += u.d * u.d;
            b[0] += 2.0 * u.wu;
            b[1] += 2.0 * u.d * u.mu_w;
            c += u.ww;
        }
        a[1][0] = a[0][1];
        Ok(QuadraticForm {
            a: a.map(|r| r.map(|v| v * inv)),
            b: b.map(|v| v * inv),
            c: c * inv,
        })
    }

    /// Exact risk at one `λ`.
    pub fn risk(&self, lam: Lambda, dev: Option<&[f64]>) -> Result<f64> {
        Ok(self.risk_form(dev)?.eval(lam))
    }

    /// The objective the SURE estimates: the risk less `(1/N)Σθᵢ²`,
    /// i.e. `(1/N)Σ[E θ̂ᵢ² − 2θᵢ E θ̂ᵢ]`.
    pub fn objective_form(&self, dev: Option<&[f64]>) -> Result<QuadraticForm> {
        let mut q = self.risk_form(dev)?;
        q.c -= mean_square(&self.theta);
        Ok(q)
    }

    /// Minimiser of the exact risk over `[0, 1] × ℝ` (`λ₂ = 0` without
    /// predictions).
    pub fn oracle_lambda(&self, dev: Option<&[f64]>) -> Result<Lambda> {
        fit_lambda(&self.risk_form(dev)?, true)
    }

    /// Deviations `gᵢ − ḡ` of the population limit of a predictor: trained on
    /// the true `θᵢ` of every unit, clipped to `[0, 1]` and centred on the
    /// `nᵢ`-weighted mean, as cross-fitted predictions are.
    pub fn population_deviations(&self, predictor: &dyn Predictor) -> Result<Vec<f64>> {
        let features: Vec<&[f64]> = self.x.iter().map(Vec::as_slice).collect();
        let model = predictor
            .fit(&features, &self.theta, RngSeed(0))
            .map_err(|e| Error::Numerical(format!("population fit of {}: {e}", predictor.name())))?;
        let g: Vec<f64> = self.x.iter().map(|x| model.predict(x).clamp(0.0, 1.0)).collect();
        let total: f64 = self.n.iter().map(|&n| n as f64).sum();
        let mean = self.n.iter().zip(&g).map(|(&n, g)| n as f64 * g).sum::<f64>() / total;
        Ok(g.into_iter().map(|g| g - mean).collect())
    }

    /// Exact risk of an estimator given as one outcome table per unit,
    /// `(1/N)Σᵢ Σ_y P(Yᵢ = y)(hᵢ(y) − θᵢ)²`.
    pub fn table_risk(&self, tables: &[OutcomeTable]) -> Result<f64> {
        if tables.len() != self.len() {
            return Err(Error::Misaligned {
                expected: self.len(),
                got: tables.len(),
            });
        }
        let per_unit = self
            .n
            .iter()
            .zip(&self.theta)
            .zip(tables)
            .map(|((&n, &t), h)| {
                if h.n() != n {
                    return Err(Error::InvalidArgument(format!(
                        "table for n = {} used for a unit with n = {n}",
                        h.n()
                    )));
                }
                Ok(sum(binomial_pmf(n, t)
                    .iter()
                    .zip(h.values())
                    .map(|(p, v)| p * (v - t) * (v - t))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(sum(per_unit) / self.len() as f64)
    }

    fn moments(&self, dev: Option<&[f64]>) -> Result<Vec<UnitMoments>> {
        if let Some(d) = dev {
            if d.len() != self.len() {
                return Err(Error::Misaligned {
                    expected: self.len(),
                    got: d.len(),
                });
            }
        }
        let total: f64 = self.n.iter().map(|&n| n as f64).sum();
        let mu_bar = sum(self.n.iter().zip(&self.theta).map(|(&n, &t)| n as f64 * t)) / total;
        // Var(Yᵢ/nᵢ) and Var(Ȳ) = Σ nᵢ² Var(Yᵢ/nᵢ) / (Σn)².
        let var: Vec<f64> = self
            .n
            .iter()
            .zip(&self.theta)
            .map(|(&n, &t)| t * (1.0 - t) / n as f64)
            .collect();
        let var_bar = sum(self.n.iter().zip(&var).map(|(&n, v)| (n as f64).powi(2) * v)) / (total * total);
        Ok((0..self.len())
            .map(|i| {
                let cov = self.n[i] as f64 * var[i] / total;
                let gap = self.theta[i] - mu_bar;
                UnitMoments {
                    d: dev.map_or(0.0, |d| d[i]),
                    mu_u: gap,
                    mu_w: -gap,
                    uu: var[i] - 2.0 * cov + var_bar + gap * gap,
                    wu: cov - var_bar - gap * gap,
                    ww: var_bar + gap * gap,
                }
            })
            .collect())
    }
}

/// Moments of `uᵢ = Yᵢ/nᵢ − Ȳ` and `wᵢ = Ȳ − θᵢ`; the error of the
/// estimator is `wᵢ + λ₁uᵢ + λ₂dᵢ`.
struct UnitMoments {
    d: f64,
    mu_u: f64,
    mu_w: f64,
    uu: f64,
    wu: f64,
    ww: f64,
}

impl UnitMoments {
    fn mean_error(&self) -> (f64, [f64; 2]) {
        (self.mu_w, [self.mu_u, self.d])
    }
}

/// Two independent groups observed on the same units.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSampleTruth {
    pub group1: Truth,
    pub group2: Truth,
}

impl TwoSampleTruth {
    pub fn generate(design1: &SyntheticDesign, design2: &SyntheticDesign) -> Result<Self> {
        if design1.units != design2.units {
            return Err(Error::InvalidArgument(format!(
                "group designs have {} and {} units",
                design1.units, design2.units
            )));
        }
        Ok(Self {
            group1: Truth::generate(design1)?,
            group2: Truth::generate(design2)?,
        })
    }

    pub fn len(&self) -> usize {
        self.group1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group1.is_empty()
    }

    /// True differences `θᵢ₁ − θᵢ₂`.
    pub fn differences(&self) -> Vec<f64> {
        self.group1
            .theta
            .iter()
            .zip(&self.group2.theta)
            .map(|(a, b)| a - b)
            .collect()
    }

    pub fn draw(&self, seed: RngSeed) -> TwoSampleDataset {
        let g1 = self.group1.draw(seed.child("group", 1));
        let g2 = self.group2.draw(seed.child("group", 2));
        let units = g1
            .into_units()
            .into_iter()
            .zip(g2.into_units())
            .map(|(group1, group2)| TwoSampleUnit { group1, group2 })
            .collect();
        TwoSampleDataset::new(units).expect("generated units are valid")
    }

    /// Exact risk `(1/N)Σ E(θ̂ᵢ₁ − θ̂ᵢ₂ − θᵢ₁ + θᵢ₂)²` as a quadratic form.
    /// Errors of independent groups combine as
    /// `E e₁² + E e₂² − 2·E e₁·E e₂`.
    pub fn risk_form(&self, dev1: Option<&[f64]>, dev2: Option<&[f64]>) -> Result<QuadraticForm> {
        let q1 = self.group1.risk_form(dev1)?;
        let q2 = self.group2.risk_form(dev2)?;
        let m1 = self.group1.moments(dev1)?;
        let m2 = self.group2.moments(dev2)?;
        let inv = 1.0 / self.len() as f64;
        let mut a = [[0.0; 2]; 2];
        let mut b = [0.0; 2];
        let mut c = 0.0;
        for (u1, u2) in m1.iter().zip(&m2) {
            let (c1, l1) = u1.mean_error();
            let (c2, l2) = u2.mean_error();
            for r in 0..2 {
                for s in 0..2 {
                    a[r][s] -= l1[r] * l2[s] + l2[r] * l1[s];
                }
                b[r] -= 2.0 * (c1 * l2[r] + c2 * l1[r]);
            }
            c -= 2.0 * c1 * c2;
        }
        let mut out = QuadraticForm {
            a: [[0.0; 2]; 2],
            b: [0.0; 2],
            c: q1.c + q2.c + c * inv,
        };
        for r in 0..2 {
            out.a[r] = std::array::from_fn(|s| q1.a[r][s] + q2.a[r][s] + a[r][s] * inv);
            out.b[r] = q1.b[r] + q2.b[r] + b[r] * inv;
        }
        Ok(out)
    }

    pub fn risk(&self, lam: Lambda, dev1: Option<&[f64]>, dev2: Option<&[f64]>) -> Result<f64> {
        Ok(self.risk_form(dev1, dev2)?.eval(lam))
    }

    /// Risk less `(1/N)Σ(θᵢ₁ − θᵢ₂)²`, the quantity the two-sample SURE estimates.
    pub fn objective_form(&self, dev1: Option<&[f64]>, dev2: Option<&[f64]>) -> Result<QuadraticForm> {
        let mut q = self.risk_form(dev1, dev2)?;
        q.c -= mean_square(&self.differences());
        Ok(q)
    }

    pub fn oracle_lambda(&self, dev1: Option<&[f64]>, dev2: Option<&[f64]>) -> Result<Lambda> {
        fit_lambda(&self.risk_form(dev1, dev2)?, true)
    }

    /// Exact risk of per-group outcome tables.
    pub fn table_risk(&self, tables1: &[OutcomeTable], tables2: &[OutcomeTable]) -> Result<f64> {
        if tables1.len() != self.len() || tables2.len() != self.len() {
            return Err(Error::Misaligned {
                expected: self.len(),
                got: tables1.len().min(tables2.len()),
            });
        }
        let moments = |n: u32, t: f64, h: &OutcomeTable| {
            let pmf = binomial_pmf(n, t);
            let e = sum(pmf.iter().zip(h.values()).map(|(p, v)| p * (v - t)));
            let e2 = sum(pmf.iter().zip(h.values()).map(|(p, v)| p * (v - t) * (v - t)));
            (e, e2)
        };
        let per_unit = (0..self.len()).map(|i| {
            let (g1, g2) = (&self.group1, &self.group2);
            let (e1, s1) = moments(g1.n[i], g1.theta[i], &tables1[i]);
            let (e2, s2) = moments(g2.n[i], g2.theta[i], &tables2[i]);
            s1 + s2 - 2.0 * e1 * e2
        });
        Ok(sum(per_unit) / self.len() as f64)
    }
}

fn mean_square(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Draws a design and one dataset from it.
pub fn simulate(design: &SyntheticDesign) -> Result<(Truth, OneSampleDataset)> {
    let truth = Truth::generate(design)?;
    let data = truth.draw(design.seed.child("draw", 0));
    Ok((truth, data))
}

/// Two-sample analogue of [`simulate`]; both designs must have the same
/// number of units.
pub fn simulate_two(
    design1: &SyntheticDesign,
    design2: &SyntheticDesign,
) -> Result<(TwoSampleTruth, TwoSampleDataset)> {
    let truth = TwoSampleTruth::generate(design1, design2)?;
    let data = truth.draw(design1.seed.child("draw", 0));
    Ok((truth, data))
}
