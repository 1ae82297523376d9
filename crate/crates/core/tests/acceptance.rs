//! Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
//!
//! Runs without the libtest harness so the report lines always show. Extra
//! arguments select criteria by substring, e.g.
//! `cargo test --release --test acceptance -- criterion_06`.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use binsure::data::{grand_mean, weighted_mean, OneSampleDataset, OneSampleUnit, TwoSampleDataset};
use binsure::infer::{bootstrap_one, constrained_region, ellipsoid_region, GridSpec};
use binsure::rng::RngSeed;
use binsure::shrink::{
    estimate_one, estimate_two, fit_one, CrossFitPredictions, FnPredictor, Ols, PredictionSource, Predictor,
};
use binsure::stein::{alternating_sum, delta_h, exact_bias, OutcomeTable};
use binsure::sure::{sure_one_coeffs, sure_one_direct, sure_two_coeffs, sure_two_direct, Lambda};
use binsure::thin::sim::{Signal, SyntheticDesign, Truth, DEFAULT_CLIP};
use binsure::thin::{compare_one, holdout_size, thin_one, EstimatorConfig};

fn report(id: u32, name: &str, pass: bool, started: Instant, budget: Duration, detail: String) -> bool {
    let elapsed = started.elapsed();
    let ok = pass && elapsed < budget;
    println!(
        "criterion {id:>2} {}: {name}: {detail} ({:.1}s of {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn theta_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Mean and Monte Carlo standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn deviations(p: Option<&CrossFitPredictions>, n: usize) -> Option<Vec<f64>> {
    p.map(|p| (0..n).map(|i| p.deviation(i)).collect())
}

fn criterion_01_stein_identity_exactness() -> bool {
    let t0 = Instant::now();
    let mut rng = RngSeed(1).stream("acceptance", 1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for n in 2..=12u32 {
        // Monomials in k/n of every degree below n, plus random combinations.
        let mut polys: Vec<Vec<f64>> = (0..n)
            .map(|d| (0..n).map(|j| if j == d { 1.0 } else { 0.0 }).collect())
            .collect();
        polys.extend((0..20).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()));
        for coef in &polys {
            let h = OutcomeTable::from_fn(n, |k| {
                let x = k as f64 / n as f64;
                coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
            })
            .unwrap();
            for &theta in &theta_grid() {
                let b = exact_bias(&h, theta).map(f64::abs).unwrap_or(f64::INFINITY);
                worst = worst.max(b);
                checked += 1;
            }
        }
    }
    report(
        1,
        "Stein identity exactness",
        worst <= 1e-12,
        t0,
        Duration::from_secs(10),
        format!("max |bias| = {worst:.3e} over {checked} (h, theta) pairs"),
    )
}

fn criterion_02_robust_bias_bound() -> bool {
    let t0 = Instant::now();
    let grid = theta_grid();
    let worst = (2..=10u32)
        .into_par_iter()
        .map(|n| {
            let mut rng = RngSeed(2).stream("acceptance", n as u64);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..1000 {
                let h = OutcomeTable::new(n, (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
                let bound = 0.5f64.powi(n as i32) * delta_h(&h).abs() + 1e-12;
                for &theta in &grid {
                    let b = exact_bias(&h, theta).map(f64::abs).unwrap_or(f64::INFINITY);
                    worst = worst.max(b - bound);
                }
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    report(
        2,
        "robust bias bound",
        worst <= 0.0,
        t0,
        Duration::from_secs(30),
        format!("max (|bias| - bound) = {worst:.3e}"),
    )
}

fn criterion_03_combinatorial_identities() -> bool {
    let t0 = Instant::now();
    let (mut worst_a, mut worst_b) = (0.0f64, 0.0f64);
    for n in 2..=60u32 {
        let nf = n as f64;
        for y in 0..=n {
            let a = alternating_sum(n, y, |_| 1.0);
            worst_a = worst_a.max((a - y as f64 / nf).abs());
            let b = alternating_sum(n, y, |j| j as f64) / nf;
            let want = -(y as f64) * (nf - y as f64) / (nf * nf * (nf - 1.0));
            worst_b = worst_b.max((b - want).abs());
        }
    }
    report(
        3,
        "combinatorial identities",
        worst_a <= 1e-12 && worst_b <= 1e-12,
        t0,
        Duration::from_secs(5),
        format!("max error A = {worst_a:.3e}, B = {worst_b:.3e}"),
    )
}

fn random_group(rng: &mut impl Rng, n_units: usize) -> (OneSampleDataset, CrossFitPredictions) {
    let counts: Vec<(u32, u32)> = (0..n_units)
        .map(|_| {
            let n = rng.random_range(2..=12u32);
            (n, rng.random_range(0..=n))
        })
        .collect();
    let data = OneSampleDataset::from_counts(&counts).unwrap();
    let preds = CrossFitPredictions::new(&data, (0..n_units).map(|_| rng.random()).collect()).unwrap();
    (data, preds)
}

fn random_pair(rng: &mut impl Rng) -> (TwoSampleDataset, CrossFitPredictions, CrossFitPredictions) {
    let n_units = rng.random_range(2..=50usize);
    let (g1, p1) = random_group(rng, n_units);
    let (g2, p2) = random_group(rng, n_units);
    (TwoSampleDataset::from_groups(g1, g2).unwrap(), p1, p2)
}

fn criterion_04_direct_vs_quadratic_sure() -> bool {
    let t0 = Instant::now();
    let mut rng = RngSeed(4).stream("acceptance", 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (two, p1, p2) = random_pair(&mut rng);
        let data = two.group(1);
        let q = sure_one_coeffs(&data, Some(&p1)).unwrap();
        let q2 = sure_two_coeffs(&two, Some(&p1), Some(&p2)).unwrap();
        for _ in 0..100 {
            let lam = Lambda::new(rng.random_range(0.0..=1.0), rng.random_range(-5.0..=5.0));
            let direct = sure_one_direct(&data, Some(&p1), lam).unwrap();
            worst = worst.max((q.eval(lam) - direct).abs() / (1.0 + direct.abs()));
            let direct2 = sure_two_direct(&two, Some(&p1), Some(&p2), lam).unwrap();
            worst = worst.max((q2.eval(lam) - direct2).abs() / (1.0 + direct2.abs()));
        }
    }
    report(
        4,
        "direct vs quadratic SURE",
        worst <= 1e-10,
        t0,
        Duration::from_secs(60),
        format!("max relative error = {worst:.3e} (one- and two-sample)"),
    )
}

fn criterion_05_reporting_consistency() -> bool {
    let t0 = Instant::now();
    let mut rng = RngSeed(5).stream("acceptance", 0);
    let (mut worst_one, mut worst_two) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (two, p1, p2) = random_pair(&mut rng);
        let lam = Lambda::new(rng.random_range(0.0..=1.0), rng.random_range(-5.0..=5.0));
        let (g1, g2) = (two.group(1), two.group(2));
        let e1 = estimate_one(&g1, Some(&p1), lam).unwrap();
        let e2 = estimate_one(&g2, Some(&p2), lam).unwrap();
        worst_one = worst_one.max((weighted_mean(&g1, &e1) - grand_mean(&g1)).abs());
        let diff = estimate_two(&two, Some(&p1), Some(&p2), lam).unwrap();
        assert!(diff.iter().zip(e1.iter().zip(&e2)).all(|(d, (a, b))| *d == a - b));
        let lhs = weighted_mean(&g1, &e1) - weighted_mean(&g2, &e2);
        worst_two = worst_two.max((lhs - (grand_mean(&g1) - grand_mean(&g2))).abs());
    }
    report(
        5,
        "reporting consistency",
        worst_one <= 1e-14 && worst_two <= 1e-14,
        t0,
        Duration::from_secs(10),
        format!("max deviation one-sample = {worst_one:.3e}, two-sample = {worst_two:.3e}"),
    )
}

fn interior_design(units: usize, seed: u64) -> SyntheticDesign {
    SyntheticDesign {
        units,
        n_min: 4,
        n_max: 12,
        dim: 1,
        signal: Signal::Linear {
            intercept: 0.2,
            slope: vec![0.6],
        },
        noise_sd: 0.1,
        clip: DEFAULT_CLIP,
        seed: RngSeed(seed),
    }
}

fn criterion_06_sure_approximate_unbiasedness() -> bool {
    let t0 = Instant::now();
    let lams = [
        Lambda::MLE,
        Lambda::POOLED,
        Lambda::new(0.5, 0.5),
        Lambda::new(0.3, 1.0),
        Lambda::new(0.8, -0.5),
    ];
    let ols = Ols::new();
    let reps = 20_000u64;
    let mut pass = true;
    let mut detail = Vec::new();
    for units in [50, 200] {
        let truth = Truth::generate(&interior_design(units, 6)).unwrap();
        let n_bar = truth.n.iter().map(|&n| n as f64).sum::<f64>() / truth.len() as f64;
        // Per replicate: SURE minus the exact objective `(1/N)Σ[E θ̂² − 2θ E θ̂]`
        // with that replicate's cross-fitted predictions frozen.
        let diffs: Vec<[f64; 5]> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = RngSeed(6).child("rep", r);
                let data = truth.draw(seed);
                let fit = fit_one(&data, PredictionSource::CrossFit { predictor: &ols, k: 10 }, true, seed).unwrap();
                let dev = deviations(fit.preds.as_ref(), data.len());
                let objective = truth.objective_form(dev.as_deref()).unwrap();
                let mut out = [0.0; 5];
                for (o, &l) in out.iter_mut().zip(&lams) {
                    *o = fit.sure.eval(l) - objective.eval(l);
                }
                out
            })
            .collect();
        let tol_base = n_bar / units as f64;
        let mut worst = 0.0f64;
        for k in 0..lams.len() {
            let col: Vec<f64> = diffs.iter().map(|d| d[k]).collect();
            let (m, se) = mean_se(&col);
            pass &= m.abs() <= tol_base + 3.0 * se;
            worst = worst.max(m.abs() / (tol_base + 3.0 * se));
        }
        detail.push(format!("N = {units}: max |bias| / tolerance = {worst:.3}"));
    }
    report(
        6,
        "SURE approximate unbiasedness",
        pass,
        t0,
        Duration::from_secs(600),
        format!("{} at {} lambdas", detail.join(", "), lams.len()),
    )
}

/// Mean regret `L(λ̂) − L(λ*)` of the SURE fit at one sample size.
fn mean_regret(units: usize, reps: u64) -> f64 {
    let truth = Truth::generate(&interior_design(units, 7)).unwrap();
    let ols = Ols::new();
    let regrets: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let seed = RngSeed(7).child("rep", r);
            let data = truth.draw(seed);
            let fit = fit_one(&data, PredictionSource::CrossFit { predictor: &ols, k: 10 }, true, seed).unwrap();
            let dev = deviations(fit.preds.as_ref(), data.len());
            let risk = truth.risk_form(dev.as_deref()).unwrap();
            let star = truth.oracle_lambda(dev.as_deref()).unwrap();
            (risk.eval(fit.lambda) - risk.eval(star)).abs()
        })
        .collect();
    regrets.iter().sum::<f64>() / reps as f64
}

fn criterion_07_regret_scaling() -> bool {
    let t0 = Instant::now();
    let r: Vec<f64> = [250, 1000, 4000].iter().map(|&n| mean_regret(n, 200)).collect();
    let f1 = r[0] / r[1];
    let f2 = r[1] / r[2];
    report(
        7,
        "regret scaling",
        (2.0..=8.0).contains(&f1) && (2.0..=8.0).contains(&f2),
        t0,
        Duration::from_secs(900),
        format!(
            "mean regret {:.3e}, {:.3e}, {:.3e}; factors {f1:.2}, {f2:.2}",
            r[0], r[1], r[2]
        ),
    )
}

fn criterion_08_thinning_correctness() -> bool {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let t0 = Instant::now();
    let design = SyntheticDesign {
        noise_sd: 0.25,
        ..interior_design(20, 8)
    };
    let truth = Truth::generate(&design).unwrap();
    let reps = 20_000u64;
    let fraction = 0.3;
    let draws: Vec<Vec<(u32, u32)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let seed = RngSeed(8).child("rep", r);
            let data = truth.draw(seed);
            let split = thin_one(&data, fraction, seed).unwrap();
            split
                .holdout
                .iter()
                .zip(split.train.units())
                .map(|(h, t)| (h.y, t.y))
                .collect()
        })
        .collect();
    let pmf = |n: u32, t: f64| -> Vec<f64> {
        let mut p = vec![0.0; n as usize + 1];
        let mut c = 1.0;
        for k in 0..=n {
            p[k as usize] = c * t.powi(k as i32) * (1.0 - t).powi((n - k) as i32);
            c = c * (n - k) as f64 / (k + 1) as f64;
        }
        p
    };
    // Goodness of fit with cells pooled until each expects at least 5.
    let chi2 = |counts: &[u64], probs: &[f64]| -> (f64, usize) {
        let total = counts.iter().sum::<u64>() as f64;
        let (mut stat, mut cells) = (0.0, 0usize);
        let (mut oc, mut ep) = (0.0, 0.0);
        for (k, (&c, &p)) in counts.iter().zip(probs).enumerate() {
            oc += c as f64;
            ep += p;
            if ep * total >= 5.0 || k == probs.len() - 1 {
                stat += (oc - ep * total).powi(2) / (ep * total);
                cells += 1;
                oc = 0.0;
                ep = 0.0;
            }
        }
        (stat, cells.saturating_sub(1))
    };
    let (mut stat, mut df) = (0.0, 0usize);
    let (mut z_sum, mut z_count) = (0.0, 0usize);
    for i in 0..truth.len() {
        let n = truth.n[i];
        let t = truth.theta[i];
        let m = holdout_size(n, fraction).unwrap();
        let mut c1 = vec![0u64; m as usize + 1];
        let mut c2 = vec![0u64; (n - m) as usize + 1];
        let (mu1, mu2) = (m as f64 * t, (n - m) as f64 * t);
        let (sd1, sd2) = ((mu1 * (1.0 - t)).sqrt(), (mu2 * (1.0 - t)).sqrt());
        for d in &draws {
            let (y1, y2) = d[i];
            c1[y1 as usize] += 1;
            c2[y2 as usize] += 1;
            z_sum += (y1 as f64 - mu1) * (y2 as f64 - mu2) / (sd1 * sd2);
            z_count += 1;
        }
        for (c, p) in [(c1, pmf(m, t)), (c2, pmf(n - m, t))] {
            let (s, d) = chi2(&c, &p);
            stat += s;
            df += d;
        }
    }
    let p_value = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    // Standardised cross-products of independent counts have mean 0 and
    // variance 1.
    let corr = z_sum / z_count as f64;
    let se = 1.0 / (z_count as f64).sqrt();
    report(
        8,
        "thinning correctness",
        p_value > 0.01 && corr.abs() <= 3.0 * se,
        t0,
        Duration::from_secs(120),
        format!("aggregated chi2 = {stat:.1} on {df} df (p = {p_value:.3}); corr = {corr:+.2e} (se {se:.1e})"),
    )
}

fn criterion_09_surface_parallelism() -> bool {
    let t0 = Instant::now();
    let truth = Truth::generate(&interior_design(1000, 9)).unwrap();
    let ols = Ols::new();
    let grid = GridSpec::linspace(0.0, 1.0, 11, 0.0, 2.0, 11);
    let stats: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|r| {
            let seed = RngSeed(9).child("rep", r);
            let data = truth.draw(seed);
            let source = PredictionSource::CrossFit { predictor: &ols, k: 10 };
            let cmp = compare_one(
                &data,
                0.2,
                &[EstimatorConfig::SureFit {
                    source,
                    constrained: true,
                }],
                &grid,
                seed,
            )
            .unwrap();
            let diff: Vec<f64> = cmp.surface.iter().map(|p| p.sure - p.holdout_risk).collect();
            let (m, _) = mean_se(&diff);
            let sd = (diff.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (diff.len() as f64 - 1.0)).sqrt();
            let hold: Vec<f64> = cmp.surface.iter().map(|p| p.holdout_risk).collect();
            let range = hold.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - hold.iter().copied().fold(f64::INFINITY, f64::min);
            (sd, range)
        })
        .collect();
    let sd = stats.iter().map(|s| s.0).sum::<f64>() / stats.len() as f64;
    let range = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    report(
        9,
        "surface parallelism",
        sd <= 0.1 * range,
        t0,
        Duration::from_secs(600),
        format!(
            "mean sd of SURE - holdout = {sd:.3e}, mean holdout range = {range:.3e}, ratio {:.3}",
            sd / range
        ),
    )
}

/// `λ*` of the estimator whose predictions are the population limit of the
/// predictor, the target of the confidence regions.
fn population_oracle(truth: &Truth, predictor: &dyn Predictor) -> Lambda {
    let dev = truth.population_deviations(predictor).unwrap();
    truth.oracle_lambda(Some(&dev)).unwrap()
}

fn criterion_10_ellipsoid_coverage() -> bool {
    let t0 = Instant::now();
    let truth = Truth::generate(&interior_design(1000, 10)).unwrap();
    // A fixed, miscalibrated prior model. Least-squares predictors are
    // calibrated, which pins λ₁ + λ₂ to 1 up to O(1/N) and leaves the
    // limiting covariance singular; a fixed model keeps both directions
    // at the √N rate.
    let prior = FnPredictor::new("prior", |x: &[f64]| 0.35 + 0.3 * x[0]);
    let star = population_oracle(&truth, &prior);
    let covered: Vec<bool> = (0..200u64)
        .map(|r| {
            let seed = RngSeed(10).child("rep", r);
            let data = truth.draw(seed);
            let source = PredictionSource::CrossFit {
                predictor: &prior,
                k: 10,
            };
            let fit = fit_one(&data, source, true, seed).unwrap();
            let run = bootstrap_one(&data, source, 300, seed).unwrap();
            ellipsoid_region(&run, fit.lambda, 0.05).unwrap().contains(star)
        })
        .collect();
    let rate = covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64;
    report(
        10,
        "ellipsoid coverage",
        rate >= 0.90,
        t0,
        Duration::from_secs(1800),
        format!(
            "coverage of the oracle ({:.4}, {:.4}) = {rate:.3} over {} simulations",
            star.lambda1,
            star.lambda2,
            covered.len()
        ),
    )
}

fn criterion_11_constrained_region() -> bool {
    let t0 = Instant::now();
    // No residual heterogeneity beyond the linear signal: the oracle sits
    // at λ₁ = 0 up to the O(1/N²) pull of the random grand mean, and the
    // truth tested is (0, λ₂*).
    let design = SyntheticDesign {
        noise_sd: 0.0,
        ..interior_design(1000, 11)
    };
    let truth = Truth::generate(&design).unwrap();
    let ols = Ols::new();
    let star = population_oracle(&truth, &ols);
    let outcomes: Vec<(bool, bool)> = (0..200u64)
        .map(|r| {
            let seed = RngSeed(11).child("rep", r);
            let data = truth.draw(seed);
            let source = PredictionSource::CrossFit { predictor: &ols, k: 10 };
            let fit = fit_one(&data, source, true, seed).unwrap();
            let run = bootstrap_one(&data, source, 300, seed).unwrap();
            let region = constrained_region(&fit.sure, fit.lambda, &run, 0.05, 0.5).unwrap();
            (
                region.contains(fit.lambda),
                region.contains(Lambda::new(0.0, star.lambda2)),
            )
        })
        .collect();
    assert!(
        star.lambda1 < 1e-5,
        "boundary design must put the oracle at lambda1 = 0, got {star:?}"
    );
    let own = outcomes.iter().all(|o| o.0);
    let rate = outcomes.iter().filter(|o| o.1).count() as f64 / outcomes.len() as f64;
    report(
        11,
        "constrained-region sanity",
        own && rate >= 0.90,
        t0,
        Duration::from_secs(2700),
        format!(
            "lambda_hat in region: {own}; coverage of the truth (0, {:.4}) = {rate:.3} over {} simulations",
            star.lambda2,
            outcomes.len()
        ),
    )
}

fn criterion_12_mse_dominance() -> bool {
    let t0 = Instant::now();
    let designs = [
        ("linear", interior_design(2000, 12)),
        (
            "logistic",
            SyntheticDesign {
                dim: 2,
                signal: Signal::Logistic {
                    intercept: -1.5,
                    slope: vec![3.0, -1.0],
                },
                noise_sd: 0.08,
                ..interior_design(2000, 13)
            },
        ),
    ];
    let ols = Ols::new();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, design) in &designs {
        let truth = Truth::generate(design).unwrap();
        let diffs: Vec<(f64, f64)> = (0..500u64)
            .into_par_iter()
            .map(|r| {
                let seed = RngSeed(12).child(name, r);
                let data = truth.draw(seed);
                let fit = fit_one(&data, PredictionSource::CrossFit { predictor: &ols, k: 10 }, true, seed).unwrap();
                let mse = |est: &[f64]| {
                    est.iter().zip(&truth.theta).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / est.len() as f64
                };
                let shrink = mse(&fit.estimates);
                let mle = mse(&data.units().iter().map(OneSampleUnit::rate).collect::<Vec<_>>());
                let pred = mse(fit.preds.as_ref().unwrap().g_hat());
                (shrink - mle, shrink - pred)
            })
            .collect();
        let (dm, sm) = mean_se(&diffs.iter().map(|d| d.0).collect::<Vec<_>>());
        let (dp, sp) = mean_se(&diffs.iter().map(|d| d.1).collect::<Vec<_>>());
        pass &= dm <= 2.0 * sm && dp <= 2.0 * sp;
        detail.push(format!(
            "{name}: vs mle {dm:+.3e} (se {sm:.1e}), vs predictor {dp:+.3e} (se {sp:.1e})"
        ));
    }
    report(
        12,
        "MSE dominance",
        pass,
        t0,
        Duration::from_secs(1200),
        detail.join("; "),
    )
}

type Criterion = (&'static str, fn() -> bool);

fn main() {
    let criteria: [Criterion; 12] = [
        (
            "criterion_01_stein_identity_exactness",
            criterion_01_stein_identity_exactness,
        ),
        ("criterion_02_robust_bias_bound", criterion_02_robust_bias_bound),
        (
            "criterion_03_combinatorial_identities",
            criterion_03_combinatorial_identities,
        ),
        (
            "criterion_04_direct_vs_quadratic_sure",
            criterion_04_direct_vs_quadratic_sure,
        ),
        ("criterion_05_reporting_consistency", criterion_05_reporting_consistency),
        (
            "criterion_06_sure_approximate_unbiasedness",
            criterion_06_sure_approximate_unbiasedness,
        ),
        ("criterion_07_regret_scaling", criterion_07_regret_scaling),
        ("criterion_08_thinning_correctness", criterion_08_thinning_correctness),
        ("criterion_09_surface_parallelism", criterion_09_surface_parallelism),
        ("criterion_10_ellipsoid_coverage", criterion_10_ellipsoid_coverage),
        ("criterion_11_constrained_region", criterion_11_constrained_region),
        ("criterion_12_mse_dominance", criterion_12_mse_dominance),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let pass = std::panic::catch_unwind(check).unwrap_or_else(|_| {
            println!("{name} FAIL: panicked");
            false
        });
        if !pass {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
