//! Command-line front end: `fit`, `surface`, `infer`, `validate` and
//! `simulate`. Every output is CSV or `key=value` text with floats printed to
//! 17 significant digits, and every run is a pure function of its inputs,
//! flags and seed.
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 numerical degeneracy.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{
    grand_mean, load_one_sample, load_two_sample, weighted_mean, write_one_sample, write_two_sample, OneSampleDataset,
    OneSampleSchema, TwoSampleDataset, TwoSampleSchema,
};
use crate::error::{Error, Result};
use crate::infer::{
    bootstrap_one, bootstrap_two, constrained_region, ellipsoid_region, BootstrapRun, GridSpec, DEFAULT_B,
};
use crate::numeric::fmt17;
use crate::rng::RngSeed;
use crate::shrink::{
    estimate_one, estimate_two, fit_lambda, fit_one, fit_two, predictions_one, predictions_two, read_external,
    Constant, ExternalPredictions, Ols, PredictionSource, Predictor, DEFAULT_FOLDS,
};
use crate::sure::{sure_one_coeffs, sure_two_coeffs, Lambda, QuadraticForm};
use crate::thin::sim::{simulate, simulate_two, Signal, SyntheticDesign};
use crate::thin::{
    compare_one, compare_two, holdout_surface_one, holdout_surface_two, Comparison, EstimatorConfig, SurfacePoint,
    DEFAULT_FRACTION,
};

/// Smallest bootstrap size accepted without `--allow-small-b`.
pub const MIN_B: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "binsure",
    version,
    about = "Shrinkage estimation of many binomial proportions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit λ and write per-unit estimates.
    Fit(FitArgs),
    /// Evaluate the SURE over a λ grid.
    Surface(SurfaceArgs),
    /// Bootstrap confidence region for λ*.
    Infer(InferArgs),
    /// Compare estimators on a thinned holdout split.
    Validate(ValidateArgs),
    /// Generate a synthetic dataset and its true θ.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum YesNo {
    Yes,
    No,
}

/// `none`, `constant`, `ols`, `ols-ridge` or `external:PATH`.
#[derive(Clone, Debug, PartialEq)]
pub enum PredictorSpec {
    None,
    Constant,
    Ols,
    OlsRidge,
    External(PathBuf),
}

fn parse_predictor(s: &str) -> std::result::Result<PredictorSpec, String> {
    match s {
        "none" => Ok(PredictorSpec::None),
        "constant" => Ok(PredictorSpec::Constant),
        "ols" => Ok(PredictorSpec::Ols),
        "ols-ridge" => Ok(PredictorSpec::OlsRidge),
        _ => match s.strip_prefix("external:") {
            Some(path) if !path.is_empty() => Ok(PredictorSpec::External(PathBuf::from(path))),
            _ => Err(format!(
                "unknown predictor `{s}`; expected none, constant, ols, ols-ridge or external:PATH"
            )),
        },
    }
}

fn parse_lambda(s: &str) -> std::result::Result<Lambda, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `lambda1,lambda2`, got `{s}`"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number"));
    Ok(Lambda::new(num(parts[0])?, num(parts[1])?))
}

/// `lo:hi:count`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

fn parse_axis(s: &str) -> std::result::Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected `lo:hi:count`, got `{s}`"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number"));
    let count = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("`{}` is not a count", parts[2]))?;
    let (lo, hi) = (num(parts[0])?, num(parts[1])?);
    if count == 0 || !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(format!("axis `{s}` needs finite lo <= hi and count >= 1"));
    }
    Ok(Axis { lo, hi, count })
}

fn parse_signal(s: &str) -> std::result::Result<Signal, String> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `kind:params`, got `{s}`"))?;
    let nums = rest
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match (kind, nums.as_slice()) {
        ("constant", [c]) => Ok(Signal::Constant(*c)),
        ("linear", [b0, slope @ ..]) => Ok(Signal::Linear {
            intercept: *b0,
            slope: slope.to_vec(),
        }),
        ("logistic", [b0, slope @ ..]) => Ok(Signal::Logistic {
            intercept: *b0,
            slope: slope.to_vec(),
        }),
        _ => Err(format!(
            "unknown signal `{s}`; expected constant:c, linear:b0,b1,... or logistic:b0,b1,..."
        )),
    }
}

fn parse_clip(s: &str) -> std::result::Result<(f64, f64), String> {
    let l = parse_lambda(s)?;
    Ok((l.lambda1, l.lambda2))
}

/// `mle`, `grand_mean`, `fixed:L1:L2` or `sure_fit`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimatorSpec {
    Mle,
    GrandMean,
    Fixed(Lambda),
    SureFit,
}

fn parse_estimator(s: &str) -> std::result::Result<EstimatorSpec, String> {
    match s {
        "mle" => Ok(EstimatorSpec::Mle),
        "grand_mean" => Ok(EstimatorSpec::GrandMean),
        "sure_fit" => Ok(EstimatorSpec::SureFit),
        _ => {
            let rest = s
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("unknown estimator `{s}`; expected mle, grand_mean, fixed:L1:L2 or sure_fit"))?;
            parse_lambda(&rest.replacen(':', ",", 1)).map(EstimatorSpec::Fixed)
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::One)]
    pub mode: Mode,
    /// none | constant | ols | ols-ridge | external:PATH
    #[arg(long, default_value = "none", value_parser = parse_predictor)]
    pub predictor: PredictorSpec,
    /// Cross-fitting folds.
    #[arg(long, short = 'k', default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long)]
    pub seed: u64,
    /// Prefix for output files; a directory when it ends in `/` or exists.
    #[arg(long, default_value = "")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// λ₁ axis as lo:hi:count.
    #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
    pub lambda1_grid: Option<Axis>,
    /// λ₂ axis as lo:hi:count.
    #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
    pub lambda2_grid: Option<Axis>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Use this λ instead of fitting, as `lambda1,lambda2`.
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    pub lambda: Option<Lambda>,
    /// Minimise over ℝ² instead of [0,1]×ℝ.
    #[arg(long)]
    pub unconstrained: bool,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Thin with this holdout fraction and add a holdout-risk column.
    #[arg(long)]
    pub thin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Bootstrap replicates.
    #[arg(long = "b", default_value_t = DEFAULT_B)]
    pub b: usize,
    /// Accept fewer than 100 replicates.
    #[arg(long)]
    pub allow_small_b: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// `no`: ellipsoid for an interior optimum; `yes`: grid region valid at
    /// the boundary of λ₁.
    #[arg(long, value_enum, default_value_t = YesNo::No)]
    pub boundary: YesNo,
    /// Local scaling exponent; the neighbourhood radius is N^−γ.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Holdout fraction.
    #[arg(long, default_value_t = DEFAULT_FRACTION)]
    pub fraction: f64,
    /// Comma-separated: mle, grand_mean, fixed:L1:L2, sure_fit.
    #[arg(long, value_delimiter = ',', default_value = "mle,grand_mean,sure_fit", value_parser = parse_estimator)]
    pub estimators: Vec<EstimatorSpec>,
    #[arg(long)]
    pub unconstrained: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Mode::One)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1000)]
    pub units: usize,
    #[arg(long, default_value_t = 4)]
    pub n_min: u32,
    #[arg(long, default_value_t = 12)]
    pub n_max: u32,
    /// Covariates per unit, drawn uniform on [0,1].
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// constant:c | linear:b0,b1,... | logistic:b0,b1,...
    #[arg(long, default_value = "linear:0.2,0.6", value_parser = parse_signal, allow_hyphen_values = true)]
    pub signal: Signal,
    /// Signal of group 2 in two-sample mode.
    #[arg(long, default_value = "linear:0.3,0.4", value_parser = parse_signal, allow_hyphen_values = true)]
    pub signal2: Signal,
    #[arg(long, default_value_t = 0.05)]
    pub noise_sd: f64,
    /// θ clipping range as lo,hi.
    #[arg(long, value_parser = parse_clip, default_value = "0.005,0.995")]
    pub clip: (f64, f64),
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "")]
    pub out: String,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Messages go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Surface(a) => cmd_surface(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

enum Dataset {
    One(OneSampleDataset),
    Two(TwoSampleDataset),
}

impl Dataset {
    fn load(input: &InputArgs) -> Result<Self> {
        Ok(match input.mode {
            Mode::One => Dataset::One(load_one_sample(&input.input, &OneSampleSchema::default())?),
            Mode::Two => Dataset::Two(load_two_sample(&input.input, &TwoSampleSchema::default())?),
        })
    }

    fn len(&self) -> usize {
        match self {
            Dataset::One(d) => d.len(),
            Dataset::Two(d) => d.len(),
        }
    }
}

/// Owns whatever a [`PredictionSource`] borrows.
struct Predictions {
    predictor: Option<Box<dyn Predictor>>,
    external: Option<ExternalPredictions>,
    k: usize,
}

impl Predictions {
    fn new(input: &InputArgs, n_units: usize) -> Result<Self> {
        let mut out = Self {
            predictor: None,
            external: None,
            k: input.folds,
        };
        match &input.predictor {
            PredictorSpec::None => {}
            PredictorSpec::Constant => out.predictor = Some(Box::new(Constant)),
            PredictorSpec::Ols => out.predictor = Some(Box::new(Ols::new())),
            PredictorSpec::OlsRidge => out.predictor = Some(Box::new(Ols::with_ridge_fallback())),
            PredictorSpec::External(path) => {
                let ext = read_external(File::open(path).map_err(crate::data::DataError::from)?, n_units)?;
                if input.mode == Mode::Two && ext.g2.is_none() {
                    return Err(crate::data::DataError::MissingColumn("g2_hat".into()).into());
                }
                out.k = ext.folds.k();
                out.external = Some(ext);
            }
        }
        Ok(out)
    }

    fn source(&self) -> PredictionSource<'_> {
        if let Some(p) = &self.predictor {
            PredictionSource::CrossFit {
                predictor: p.as_ref(),
                k: self.k,
            }
        } else if let Some(e) = &self.external {
            PredictionSource::Fixed {
                g1: &e.g1,
                g2: e.g2.as_deref(),
            }
        } else {
            PredictionSource::None
        }
    }

    fn folds_label(&self) -> String {
        if self.predictor.is_some() || self.external.is_some() {
            self.k.to_string()
        } else {
            "none".into()
        }
    }
}

fn out_path(prefix: &str, name: &str) -> Result<PathBuf> {
    if prefix.is_empty() {
        return Ok(PathBuf::from(name));
    }
    let p = Path::new(prefix);
    if prefix.ends_with('/') || p.is_dir() {
        std::fs::create_dir_all(p)?;
        return Ok(p.join(name));
    }
    Ok(PathBuf::from(format!("{prefix}{name}")))
}

fn write_file(prefix: &str, name: &str, contents: &str) -> Result<PathBuf> {
    let path = out_path(prefix, name)?;
    let mut w = BufWriter::new(File::create(&path)?);
    w.write_all(contents.as_bytes())?;
    w.flush()?;
    Ok(path)
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

/// Evaluates `q` and the matching estimates; fitting unless `lambda` is
/// given.
fn cmd_fit(args: &FitArgs) -> Result<()> {
    let input = &args.input;
    let data = Dataset::load(input)?;
    let preds = Predictions::new(input, data.len())?;
    let source = preds.source();
    let seed = RngSeed(input.seed);
    let constrained = !args.unconstrained;
    if let Some(l) = args.lambda {
        if l.lambda2 != 0.0 && matches!(source, PredictionSource::None) {
            return Err(Error::InvalidArgument("lambda2 != 0 needs a predictor".into()));
        }
    }
    let mut txt = String::new();
    kv(&mut txt, "mode", if input.mode == Mode::One { "one" } else { "two" });
    let (lambda, sure, estimates) = match &data {
        Dataset::One(d) => {
            let (lambda, q, est, p) = match args.lambda {
                Some(l) => {
                    let p = predictions_one(d, source, seed)?;
                    let q = sure_one_coeffs(d, p.as_ref())?;
                    let est = estimate_one(d, p.as_ref(), l)?;
                    (l, q, est, p)
                }
                None => {
                    let fit = fit_one(d, source, constrained, seed)?;
                    (fit.lambda, fit.sure, fit.estimates, fit.preds)
                }
            };
            kv(&mut txt, "n_units", d.len());
            kv(&mut txt, "grand_mean", fmt17(grand_mean(d)));
            kv(&mut txt, "weighted_mean_estimate", fmt17(weighted_mean(d, &est)));
            if let Some(p) = &p {
                kv(&mut txt, "prediction_weighted_mean", fmt17(p.weighted_mean()));
            }
            (lambda, q, est)
        }
        Dataset::Two(d) => {
            let (lambda, q, est, p1, p2) = match args.lambda {
                Some(l) => {
                    let (p1, p2) = predictions_two(d, source, seed)?;
                    let q = sure_two_coeffs(d, p1.as_ref(), p2.as_ref())?;
                    let est = estimate_two(d, p1.as_ref(), p2.as_ref(), l)?;
                    (l, q, est, p1, p2)
                }
                None => {
                    let fit = fit_two(d, source, constrained, seed)?;
                    (fit.lambda, fit.sure, fit.estimates, fit.preds1, fit.preds2)
                }
            };
            let (g1, g2) = (d.group(1), d.group(2));
            let group_est = |g: &OneSampleDataset, p: &Option<_>| -> Vec<f64> {
                let ybar = grand_mean(g);
                g.units()
                    .iter()
                    .enumerate()
                    .map(|(i, u)| {
                        let dev = p
                            .as_ref()
                            .map_or(0.0, |p: &crate::shrink::CrossFitPredictions| p.deviation(i));
                        lambda.lambda1 * u.rate() + (1.0 - lambda.lambda1) * ybar + lambda.lambda2 * dev
                    })
                    .collect()
            };
            let w1 = weighted_mean(&g1, &group_est(&g1, &p1));
            let w2 = weighted_mean(&g2, &group_est(&g2, &p2));
            kv(&mut txt, "n_units", d.len());
            kv(&mut txt, "grand_mean1", fmt17(grand_mean(&g1)));
            kv(&mut txt, "grand_mean2", fmt17(grand_mean(&g2)));
            kv(
                &mut txt,
                "grand_mean_difference",
                fmt17(grand_mean(&g1) - grand_mean(&g2)),
            );
            kv(&mut txt, "weighted_difference", fmt17(w1 - w2));
            (lambda, q, est)
        }
    };
    kv(&mut txt, "lambda1", fmt17(lambda.lambda1));
    kv(&mut txt, "lambda2", fmt17(lambda.lambda2));
    kv(&mut txt, "constrained", args.lambda.is_none() && constrained);
    kv(&mut txt, "override", args.lambda.is_some());
    kv(&mut txt, "sure", fmt17(sure.eval(lambda)));
    kv(&mut txt, "predictor", source.describe());
    kv(&mut txt, "folds", preds.folds_label());
    kv(&mut txt, "seed", input.seed);
    let mut csv = String::from("unit,theta_hat\n");
    for (i, e) in estimates.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i + 1, fmt17(*e));
    }
    write_file(&input.out, "estimates.csv", &csv)?;
    write_file(&input.out, "fit.txt", &txt)?;
    Ok(())
}

fn sure_form(data: &Dataset, source: PredictionSource<'_>, seed: RngSeed) -> Result<QuadraticForm> {
    match data {
        Dataset::One(d) => sure_one_coeffs(d, predictions_one(d, source, seed)?.as_ref()),
        Dataset::Two(d) => {
            let (p1, p2) = predictions_two(d, source, seed)?;
            sure_two_coeffs(d, p1.as_ref(), p2.as_ref())
        }
    }
}

/// Default plotting grid: λ₁ over [0, 1] in 101 steps; λ₂ fixed at 0
/// without predictions, else `λ̂₂ ± 2` in 81 steps.
fn plot_grid(grid: &GridArgs, q: &QuadraticForm, with_predictions: bool, n1: usize, n2: usize) -> Result<GridSpec> {
    let a1 = grid.lambda1_grid.unwrap_or(Axis {
        lo: 0.0,
        hi: 1.0,
        count: n1,
    });
    let a2 = match grid.lambda2_grid {
        Some(a) => a,
        None if !with_predictions => Axis {
            lo: 0.0,
            hi: 0.0,
            count: 1,
        },
        None => {
            let centre = fit_lambda(q, true).map(|l| l.lambda2).unwrap_or(0.0);
            Axis {
                lo: centre - 2.0,
                hi: centre + 2.0,
                count: n2,
            }
        }
    };
    if a1.lo < 0.0 || a1.hi > 1.0 {
        return Err(Error::InvalidArgument("lambda1 grid must lie within [0, 1]".into()));
    }
    Ok(GridSpec::linspace(a1.lo, a1.hi, a1.count, a2.lo, a2.hi, a2.count))
}

fn surface_csv(points: &[SurfacePoint]) -> String {
    let mut csv = String::from("lambda1,lambda2,sure,holdout_risk\n");
    for p in points {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt17(p.lambda.lambda1),
            fmt17(p.lambda.lambda2),
            fmt17(p.sure),
            fmt17(p.holdout_risk)
        );
    }
    csv
}

fn cmd_surface(args: &SurfaceArgs) -> Result<()> {
    let input = &args.input;
    let data = Dataset::load(input)?;
    let preds = Predictions::new(input, data.len())?;
    let source = preds.source();
    let seed = RngSeed(input.seed);
    let q = sure_form(&data, source, seed)?;
    let grid = plot_grid(&args.grid, &q, !matches!(source, PredictionSource::None), 101, 81)?;
    let csv = match args.thin {
        None => {
            let mut csv = String::from("lambda1,lambda2,sure\n");
            for l in grid.points() {
                let _ = writeln!(csv, "{},{},{}", fmt17(l.lambda1), fmt17(l.lambda2), fmt17(q.eval(l)));
            }
            csv
        }
        Some(fraction) => {
            let points = match &data {
                Dataset::One(d) => holdout_surface_one(d, fraction, source, &grid, seed)?,
                Dataset::Two(d) => holdout_surface_two(d, fraction, source, &grid, seed)?,
            };
            surface_csv(&points)
        }
    };
    write_file(&input.out, "surface.csv", &csv)?;
    Ok(())
}

fn cmd_infer(args: &InferArgs) -> Result<()> {
    let input = &args.input;
    if args.b < MIN_B && !args.allow_small_b {
        return Err(Error::InvalidArgument(format!(
            "B = {} is below {MIN_B}; pass --allow-small-b to run anyway",
            args.b
        )));
    }
    if !(args.gamma > 0.0 && args.gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma = {} must be positive",
            args.gamma
        )));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {} must lie in (0, 1)",
            args.alpha
        )));
    }
    let data = Dataset::load(input)?;
    let preds = Predictions::new(input, data.len())?;
    let source = preds.source();
    let seed = RngSeed(input.seed);
    let (lam_hat, q, run): (Lambda, QuadraticForm, BootstrapRun) = match &data {
        Dataset::One(d) => {
            let fit = fit_one(d, source, true, seed)?;
            (fit.lambda, fit.sure, bootstrap_one(d, source, args.b, seed)?)
        }
        Dataset::Two(d) => {
            let fit = fit_two(d, source, true, seed)?;
            (fit.lambda, fit.sure, bootstrap_two(d, source, args.b, seed)?)
        }
    };
    let mut txt = String::new();
    kv(&mut txt, "lambda1_hat", fmt17(lam_hat.lambda1));
    kv(&mut txt, "lambda2_hat", fmt17(lam_hat.lambda2));
    kv(&mut txt, "alpha", fmt17(args.alpha));
    kv(&mut txt, "b", run.b);
    kv(&mut txt, "skipped", run.skipped);
    kv(&mut txt, "n_units", run.n);
    kv(&mut txt, "seed", input.seed);
    match args.boundary {
        YesNo::No => {
            let region = ellipsoid_region(&run, lam_hat, args.alpha)?;
            kv(&mut txt, "region", "ellipsoid");
            kv(&mut txt, "level", fmt17(region.level()));
            kv(&mut txt, "chi2_crit", fmt17(region.chi2_crit));
            kv(&mut txt, "center_lambda1", fmt17(region.center.lambda1));
            kv(&mut txt, "center_lambda2", fmt17(region.center.lambda2));
            kv(&mut txt, "cov11", fmt17(region.covariance[0][0]));
            kv(&mut txt, "cov12", fmt17(region.covariance[0][1]));
            kv(&mut txt, "cov22", fmt17(region.covariance[1][1]));
            write_file(&input.out, "ellipsoid.txt", &txt)?;
        }
        YesNo::Yes => {
            let region = constrained_region(&q, lam_hat, &run, args.alpha, args.gamma)?;
            let grid = match (args.grid.lambda1_grid, args.grid.lambda2_grid) {
                (None, None) => GridSpec::default_for(&run, lam_hat),
                _ => {
                    let d = GridSpec::default_for(&run, lam_hat);
                    let axis = |v: &[f64]| Axis {
                        lo: v[0],
                        hi: v[v.len() - 1],
                        count: v.len(),
                    };
                    let a1 = args.grid.lambda1_grid.unwrap_or(axis(&d.lambda1));
                    let a2 = args.grid.lambda2_grid.unwrap_or(axis(&d.lambda2));
                    GridSpec::linspace(a1.lo, a1.hi, a1.count, a2.lo, a2.hi, a2.count)
                }
            };
            let evaluated = region.evaluate(&grid);
            kv(&mut txt, "region", "constrained");
            kv(&mut txt, "critical", fmt17(region.critical));
            kv(&mut txt, "gamma", fmt17(region.gamma));
            kv(&mut txt, "delta", fmt17(region.delta));
            kv(&mut txt, "clipped", region.clipped);
            kv(&mut txt, "unbounded", region.unbounded);
            kv(&mut txt, "grid_points", grid.len());
            kv(&mut txt, "members", evaluated.member.iter().filter(|&&m| m).count());
            let mut csv = String::from("lambda1,lambda2,statistic,member\n");
            for (l, s, m) in evaluated.rows() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    fmt17(l.lambda1),
                    fmt17(l.lambda2),
                    fmt17(s),
                    m as u8
                );
            }
            write_file(&input.out, "region.csv", &csv)?;
            write_file(&input.out, "region.txt", &txt)?;
            if evaluated.is_empty_region() {
                eprintln!("warning: the confidence region contains no grid point");
            }
        }
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let input = &args.input;
    let data = Dataset::load(input)?;
    let preds = Predictions::new(input, data.len())?;
    let source = preds.source();
    let seed = RngSeed(input.seed);
    let configs: Vec<EstimatorConfig<'_>> = args
        .estimators
        .iter()
        .map(|e| match e {
            EstimatorSpec::Mle => EstimatorConfig::Mle,
            EstimatorSpec::GrandMean => EstimatorConfig::GrandMean,
            EstimatorSpec::Fixed(lambda) => EstimatorConfig::Fixed {
                lambda: *lambda,
                source,
            },
            EstimatorSpec::SureFit => EstimatorConfig::SureFit {
                source,
                constrained: !args.unconstrained,
            },
        })
        .collect();
    let q = sure_form(&data, source, seed)?;
    let grid = plot_grid(&args.grid, &q, !matches!(source, PredictionSource::None), 21, 41)?;
    let cmp: Comparison = match &data {
        Dataset::One(d) => compare_one(d, args.fraction, &configs, &grid, seed)?,
        Dataset::Two(d) => compare_two(d, args.fraction, &configs, &grid, seed)?,
    };
    let mut csv = String::from("estimator,holdout_risk,lambda1,lambda2\n");
    for r in &cmp.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.estimator,
            fmt17(r.holdout_risk),
            fmt17(r.lambda.lambda1),
            fmt17(r.lambda.lambda2)
        );
    }
    write_file(&input.out, "comparison.csv", &csv)?;
    write_file(&input.out, "surface.csv", &surface_csv(&cmp.surface))?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let design = |signal: &Signal, seed: RngSeed| SyntheticDesign {
        units: args.units,
        n_min: args.n_min,
        n_max: args.n_max,
        dim: args.dim,
        signal: signal.clone(),
        noise_sd: args.noise_sd,
        clip: args.clip,
        seed,
    };
    let seed = RngSeed(args.seed);
    let mut data = Vec::new();
    let mut truth = String::new();
    match args.mode {
        Mode::One => {
            let (t, d) = simulate(&design(&args.signal, seed))?;
            write_one_sample(&d, &mut data)?;
            truth.push_str("unit,theta\n");
            for (i, th) in t.theta.iter().enumerate() {
                let _ = writeln!(truth, "{},{}", i + 1, fmt17(*th));
            }
        }
        Mode::Two => {
            let d1 = design(&args.signal, seed.child("group", 1));
            let d2 = design(&args.signal2, seed.child("group", 2));
            let (t, d) = simulate_two(&d1, &d2)?;
            write_two_sample(&d, &mut data)?;
            truth.push_str("unit,theta1,theta2,difference\n");
            for (i, (a, b)) in t.group1.theta.iter().zip(&t.group2.theta).enumerate() {
                let _ = writeln!(truth, "{},{},{},{}", i + 1, fmt17(*a), fmt17(*b), fmt17(a - b));
            }
        }
    }
    write_file(
        &args.out,
        "data.csv",
        &String::from_utf8(data).expect("csv output is utf-8"),
    )?;
    write_file(&args.out, "truth.csv", &truth)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_predictor("ols"), Ok(PredictorSpec::Ols));
        assert_eq!(
            parse_predictor("external:p.csv"),
            Ok(PredictorSpec::External("p.csv".into()))
        );
        assert!(parse_predictor("external:").is_err());
        assert!(parse_predictor("gbt").is_err());
        assert_eq!(parse_lambda("1,0"), Ok(Lambda::MLE));
        assert_eq!(parse_lambda("0.5, -2"), Ok(Lambda::new(0.5, -2.0)));
        assert!(parse_lambda("1").is_err());
        assert_eq!(
            parse_axis("0:1:3"),
            Ok(Axis {
                lo: 0.0,
                hi: 1.0,
                count: 3
            })
        );
        assert!(parse_axis("1:0:3").is_err());
        assert!(parse_axis("0:1:0").is_err());
        assert_eq!(parse_signal("constant:0.3"), Ok(Signal::Constant(0.3)));
        assert_eq!(
            parse_signal("logistic:-1,2"),
            Ok(Signal::Logistic {
                intercept: -1.0,
                slope: vec![2.0]
            })
        );
        assert!(parse_signal("constant:0.3,1").is_err());
        assert_eq!(
            parse_estimator("fixed:0.5:0"),
            Ok(EstimatorSpec::Fixed(Lambda::new(0.5, 0.0)))
        );
        assert_eq!(parse_estimator("sure_fit"), Ok(EstimatorSpec::SureFit));
        assert!(parse_estimator("xie").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["binsure", "fit", "--input", "x.csv"]), 1);
        assert_eq!(run(["binsure", "frobnicate"]), 1);
        assert_eq!(
            run([
                "binsure",
                "fit",
                "--input",
                "x.csv",
                "--seed",
                "1",
                "--predictor",
                "gbt"
            ]),
            1
        );
    }

    #[test]
    fn out_paths() {
        assert_eq!(out_path("", "a.csv").unwrap(), PathBuf::from("a.csv"));
        assert_eq!(out_path("run1_", "a.csv").unwrap(), PathBuf::from("run1_a.csv"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().to_str().unwrap().to_string();
        assert_eq!(out_path(&p, "a.csv").unwrap(), dir.path().join("a.csv"));
    }
}
