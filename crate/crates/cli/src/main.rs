//! `xicor`: rank-correlation estimates, intervals, tests, simulations and
//! constant tables from the command line.
//!
//! Exit codes: 0 success, 2 input or parameter error, 3 too few points,
//! 4 invalid test parameter (`kappa >= 1` or `alpha` outside (0, 1)).
//! Only the report goes to stdout; diagnostics go to stderr.

mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use xicor_core::inference::{O_CONSTANT_SAMPLES, O_CONSTANT_SEED};
use xicor_core::simlab::{
    run_experiment, sample_model, ExperimentConfig, ExperimentKind, ExperimentResult, KindChoice,
    Link,
};
use xicor_core::{
    confidence_interval, estimate, threshold_test, AsymptoticConstants, EstimateReport,
    EstimatorKind, Mode,
};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    TooFewPoints(String),
    InvalidTestParameter(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::TooFewPoints(_) => 3,
            Self::InvalidTestParameter(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input(m) | Self::TooFewPoints(m) | Self::InvalidTestParameter(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<xicor_core::Error> for CliError {
    fn from(e: xicor_core::Error) -> Self {
        use xicor_core::Error as E;
        match e {
            E::TooFewPoints { .. } => Self::TooFewPoints(e.to_string()),
            E::InvalidKappa(_) => Self::InvalidTestParameter(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "xicor",
    version,
    about = "Nearest-neighbor rank correlations with asymptotic inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient and variance estimate for a CSV dataset.
    Estimate(DataArgs),
    /// Asymptotic confidence interval.
    Ci {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// One-sided test of `xi <= kappa`.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Monte Carlo experiment on a synthetic model.
    Simulate(SimulateArgs),
    /// Table of the dimension constants behind the null variance.
    Constants(ConstantsArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Output {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct DataArgs {
    /// CSV with columns x1,...,xd,y.
    #[arg(long)]
    input: PathBuf,
    /// Skip the first row.
    #[arg(long)]
    header: bool,
    /// auto, nn or right-nn; auto means right-nn for d = 1.
    #[arg(long, default_value = "auto")]
    kind: KindChoice,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key-value experiment file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// clt, coverage, test or hajek (default clt).
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// independent_uniform, gaussian_copula, noisy_function, exact_function
    /// or sphere_manifold.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long)]
    sigma_e: Option<f64>,
    /// linear, cubic, square or sine.
    #[arg(long)]
    link: Option<Link>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Replicates (default 1000).
    #[arg(long)]
    reps: Option<usize>,
    /// Default 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long)]
    kind: Option<KindChoice>,
    /// Also write the replicate-0 sample to this CSV path.
    #[arg(long)]
    dump_sample: Option<PathBuf>,
    /// json emits the full result; csv emits one row per replicate.
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Args)]
struct ConstantsArgs {
    /// A dimension or an inclusive range such as 1-5.
    #[arg(long, default_value = "1")]
    d: String,
    /// right-nn reports the right-NN null variance (d = 1 only); anything
    /// else reports the Euclidean one.
    #[arg(long, default_value = "auto")]
    kind: KindChoice,
    /// Monte Carlo draws for o_d.
    #[arg(long, default_value_t = O_CONSTANT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = O_CONSTANT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

/// Report for estimate, ci and test; the trailing groups appear only for
/// the command that fills them.
#[derive(Serialize)]
struct Report {
    n: usize,
    d: usize,
    estimator_kind: &'static str,
    coefficient: f64,
    variance_est: Option<f64>,
    variance_clamped: bool,
    stderr: Option<f64>,
    ties_flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reject: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
}

impl Report {
    fn new(r: &EstimateReport, ties: bool) -> Self {
        Self {
            n: r.n,
            d: r.d,
            estimator_kind: r.estimator_kind.as_str(),
            coefficient: r.coefficient,
            variance_est: r.variance_est,
            variance_clamped: r.variance_clamped,
            stderr: r.stderr(),
            ties_flag: ties,
            alpha: None,
            lower: None,
            upper: None,
            level: None,
            target_note: None,
            reject: None,
            threshold: None,
            kappa: None,
        }
    }
}

#[derive(Serialize)]
struct ReplicateRow {
    rep: usize,
    coefficient: f64,
    variance_est: f64,
    ci_hit: Option<bool>,
    ci_width: Option<f64>,
    reject: Option<bool>,
    hajek_gap: Option<f64>,
}

#[derive(Serialize)]
struct ConstantsRow {
    d: usize,
    q_d: f64,
    o_d: f64,
    o_d_stderr: f64,
    null_variance: f64,
}

fn render<T: Serialize>(doc: &T, rows: &[T], output: Output) -> Result<String, CliError> {
    match output {
        Output::Json => Ok(report::to_json(doc) + "\n"),
        Output::Csv => report::to_csv(rows).map_err(|e| CliError::Input(e.to_string())),
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::InvalidTestParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Reads the data and estimates, requiring a variance when `inference`.
fn load_and_estimate(
    args: &DataArgs,
    inference: bool,
) -> Result<(Report, EstimateReport), CliError> {
    let sample = input::read_sample(&args.input, args.header)?;
    let kind = args.kind.resolve(sample.d());
    let est = estimate(&sample, kind, true, Mode::Optimized)?;
    if inference && est.variance_est.is_none() {
        return Err(CliError::TooFewPoints(format!(
            "need at least 4 points for a variance estimate, got {}",
            sample.n()
        )));
    }
    Ok((Report::new(&est, sample.ties_in_y()), est))
}

fn cmd_estimate(args: &DataArgs) -> Result<String, CliError> {
    let (report, _) = load_and_estimate(args, false)?;
    render(&report, std::slice::from_ref(&report), args.output)
}

fn cmd_ci(args: &DataArgs, alpha: f64) -> Result<String, CliError> {
    check_alpha(alpha)?;
    let (mut report, est) = load_and_estimate(args, true)?;
    let var = est.variance_for_inference().expect("checked above");
    let ci = confidence_interval(est.coefficient, var, est.n, alpha, est.d)?;
    report.alpha = Some(alpha);
    report.lower = Some(ci.lower);
    report.upper = Some(ci.upper);
    report.level = Some(ci.level);
    report.target_note = Some(ci.target_note);
    render(&report, std::slice::from_ref(&report), args.output)
}

fn cmd_test(args: &DataArgs, kappa: f64, alpha: f64) -> Result<String, CliError> {
    if kappa.is_nan() || kappa >= 1.0 {
        return Err(xicor_core::Error::InvalidKappa(kappa).into());
    }
    check_alpha(alpha)?;
    let (mut report, est) = load_and_estimate(args, true)?;
    let var = est.variance_for_inference().expect("checked above");
    let t = threshold_test(est.coefficient, var, est.n, kappa, alpha)?;
    report.alpha = Some(alpha);
    report.reject = Some(t.reject);
    report.threshold = Some(t.threshold);
    report.kappa = Some(t.kappa);
    render(&report, std::slice::from_ref(&report), args.output)
}

fn simulate_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            Some(ExperimentConfig::from_kv_str(&text)?)
        }
        None => None,
    };
    let missing =
        |flag: &str| CliError::Input(format!("simulate needs --{flag} (or a --config entry)"));
    let family = args
        .model
        .clone()
        .or_else(|| base.as_ref().map(|b| b.family.clone()))
        .ok_or_else(|| missing("model"))?;
    let n = args
        .n
        .or(base.as_ref().map(|b| b.n))
        .ok_or_else(|| missing("n"))?;
    let pick = |flag: Option<f64>, from_base: fn(&ExperimentConfig) -> Option<f64>| {
        flag.or_else(|| base.as_ref().and_then(from_base))
    };
    Ok(ExperimentConfig {
        experiment: args
            .experiment
            .or(base.as_ref().map(|b| b.experiment))
            .unwrap_or(ExperimentKind::Clt),
        family,
        d: args.d.or(base.as_ref().map(|b| b.d)).unwrap_or(1),
        rho: pick(args.rho, |b| b.rho),
        sigma_e: pick(args.sigma_e, |b| b.sigma_e),
        link: args.link.or(base.as_ref().and_then(|b| b.link)),
        n,
        reps: args.reps.or(base.as_ref().map(|b| b.reps)).unwrap_or(1000),
        seed: args.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(0),
        alpha: pick(args.alpha, |b| Some(b.alpha)).unwrap_or(0.05),
        kappa: pick(args.kappa, |b| b.kappa),
        kind: args
            .kind
            .or(base.as_ref().map(|b| b.kind))
            .unwrap_or_default(),
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let config = simulate_config(args)?;
    let result: ExperimentResult = run_experiment(&config)?;
    if let Some(path) = &args.dump_sample {
        let sample = sample_model(&config.model()?, config.n, config.seed)?;
        input::write_sample(path, &sample)?;
    }
    match args.output {
        Output::Json => Ok(report::to_json(&result) + "\n"),
        Output::Csv => {
            let rows: Vec<ReplicateRow> = result
                .replicates
                .iter()
                .enumerate()
                .map(|(rep, r)| ReplicateRow {
                    rep,
                    coefficient: r.coefficient,
                    variance_est: r.variance_est,
                    ci_hit: r.ci_hit,
                    ci_width: r.ci_width,
                    reject: r.reject,
                    hajek_gap: r.hajek_gap,
                })
                .collect();
            report::to_csv(&rows).map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

fn parse_dims(spec: &str) -> Result<std::ops::RangeInclusive<usize>, CliError> {
    let bad = || {
        CliError::Input(format!(
            "--d expects N or LO-HI with 1 <= LO <= HI, got '{spec}'"
        ))
    };
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match spec.split_once('-') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let d = parse(spec)?;
            (d, d)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn cmd_constants(args: &ConstantsArgs) -> Result<String, CliError> {
    let dims = parse_dims(&args.d)?;
    let right = matches!(args.kind, KindChoice::RightNn);
    if right && *dims.end() != 1 {
        return Err(CliError::Input(
            "the right-NN estimator is only defined for d = 1".into(),
        ));
    }
    let mut rows = Vec::new();
    for d in dims {
        let c = AsymptoticConstants::compute(d, args.samples, args.seed)?;
        let null_variance = if right {
            xicor_core::null_asymptotic_variance(1, EstimatorKind::RightNn)?
        } else {
            c.null_variance
        };
        rows.push(ConstantsRow {
            d,
            q_d: c.q_d,
            o_d: c.o_d,
            o_d_stderr: c.o_d_stderr,
            null_variance,
        });
    }
    match args.output {
        Output::Json => Ok(report::to_json(&rows) + "\n"),
        Output::Csv => report::to_csv(&rows).map_err(|e| CliError::Input(e.to_string())),
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Ci { data, alpha } => cmd_ci(data, *alpha),
        Command::Test { data, kappa, alpha } => cmd_test(data, *kappa, *alpha),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Constants(args) => cmd_constants(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_ranges() {
        assert_eq!(parse_dims("3").unwrap(), 3..=3);
        assert_eq!(parse_dims("1-5").unwrap(), 1..=5);
        for bad in ["0", "4-2", "x", "1-", ""] {
            assert!(parse_dims(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        use xicor_core::Error as E;
        assert_eq!(
            CliError::from(E::TooFewPoints { n: 1, required: 2 }).exit_code(),
            3
        );
        assert_eq!(CliError::from(E::InvalidKappa(1.5)).exit_code(), 4);
        assert_eq!(CliError::from(E::EmptySample).exit_code(), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
