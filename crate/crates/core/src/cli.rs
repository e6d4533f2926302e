//! Command-line interface: `estimate`, `simulate` and `report`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{EstimatorConfig, EstimatorKind, Learner, MediatorDensity, NuisanceLearners, OutcomeKind};
use crate::data::{load_csv, MediatorKind, Schema};
use crate::density::load_ratio_csv;
use crate::eif::EstimateResult;
use crate::error::{Error, Result};
use crate::estimate::{estimate, estimate_ace};
use crate::sim::{run_study, Dgp, SimReport, StudyConfig, Target};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "frontdoor", version, about = "Front-door estimation of average causal effects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate ψ(a0) or the ACE on a CSV dataset.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo study on a built-in data-generating process.
    Simulate(SimulateArgs),
    /// Render a simulation report as a table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DensityArg {
    Kernel,
    Normal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MediatorKindArg {
    Binary,
    Continuous,
    Multivariate,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column.
    #[arg(long)]
    pub y: Option<String>,
    /// Binary treatment column.
    #[arg(long)]
    pub a: Option<String>,
    /// Mediator column(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<String>,
    /// Covariate column(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Estimator name.
    #[arg(long, default_value = "tmle-1")]
    pub estimator: String,
    /// Treatment level of the counterfactual mean.
    #[arg(long, default_value_t = 1, conflicts_with = "ace")]
    pub a0: u8,
    /// Estimate ψ(1) − ψ(0).
    #[arg(long)]
    pub ace: bool,
    /// Working-model design for every regression: main-terms, pairwise or intercept-only.
    #[arg(long, default_value = "main-terms")]
    pub learner: String,
    /// Conditional density estimator for a continuous mediator.
    #[arg(long, value_enum, default_value = "kernel")]
    pub mediator_density: DensityArg,
    /// Overrides mediator-type inference.
    #[arg(long, value_enum)]
    pub mediator_kind: Option<MediatorKindArg>,
    /// Treat the outcome as binary (logistic outcome model and fluctuations).
    #[arg(long)]
    pub binary_outcome: bool,
    /// Number of cross-fitting folds (1 disables cross-fitting).
    #[arg(long, default_value_t = 1)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum targeting iterations.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// CSV with an `fm_ratio` column giving f(M|a0,X)/f(M|A,X) per row
    /// (for a0 = 1 when --ace is set).
    #[arg(long)]
    pub ratio_file: Option<PathBuf>,
    /// Ratio table for a0 = 0 when --ace is set.
    #[arg(long)]
    pub ratio_file_control: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Data-generating process.
    #[arg(long)]
    pub dgp: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Estimator names, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "tmle-1,onestep-1")]
    pub estimators: Vec<String>,
    #[arg(long, default_value = "main-terms")]
    pub learner: String,
    #[arg(long, value_enum, default_value = "kernel")]
    pub mediator_density: DensityArg,
    #[arg(long, default_value_t = 1)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `ace`, `0` or `1`.
    #[arg(long, default_value = "ace")]
    pub target: String,
    /// Monte Carlo draws for the truth oracle.
    #[arg(long, default_value_t = 1_000_000)]
    pub truth_draws: usize,
    /// Output prefix: writes `<out>.csv` and `<out>.json`. Prints JSON when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Text,
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Simulation report JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

fn names_help() -> String {
    let est: Vec<&str> = EstimatorKind::ALL.iter().map(|k| k.name()).collect();
    format!(
        "Estimators: {}\nData-generating processes: {}\nLearners: intercept-only, main-terms, pairwise",
        est.join(", "),
        Dgp::names().join(", ")
    )
}

/// The clap command with the estimator and DGP name lists attached.
pub fn command() -> clap::Command {
    let help = names_help();
    Cli::command()
        .after_help(help.clone())
        .mut_subcommand("estimate", |c| c.after_help(help.clone()))
        .mut_subcommand("simulate", |c| c.after_help(help.clone()))
}

fn learners(name: &str, density: DensityArg) -> Result<NuisanceLearners> {
    let learner: Learner = name.parse()?;
    Ok(NuisanceLearners::uniform(learner).with_density(match density {
        DensityArg::Kernel => MediatorDensity::Kernel,
        DensityArg::Normal => MediatorDensity::Normal,
    }))
}

fn result_json(r: &EstimateResult) -> Value {
    json!({
        "psi": r.psi,
        "se": r.se,
        "ci": [r.ci.0, r.ci.1],
        "diagnostics": {
            "iterations": r.iterations,
            "converged": r.converged,
            "epsilon_history": r.epsilon_history,
            "score_residuals": r.score_residuals,
            "warnings": r.warnings,
        },
    })
}

fn cmd_estimate(args: &EstimateArgs) -> Result<Value> {
    let y = args.y.clone().ok_or_else(|| Error::InvalidConfig("outcome column required".into()))?;
    let a = args.a.clone().ok_or_else(|| Error::InvalidConfig("treatment column required".into()))?;
    if args.m.is_empty() {
        return Err(Error::InvalidConfig("mediator column(s) required".into()));
    }
    if args.x.is_empty() {
        return Err(Error::InvalidConfig("covariate column(s) required".into()));
    }
    let kind: EstimatorKind = args.estimator.parse()?;
    let mut cfg = EstimatorConfig::new(kind, args.a0);
    cfg.learners = learners(&args.learner, args.mediator_density)?;
    cfg.crossfit_folds = args.folds;
    cfg.seed = args.seed;
    cfg.max_tmle_iter = args.max_iter;
    cfg.outcome_kind = if args.binary_outcome { OutcomeKind::Binary } else { OutcomeKind::Continuous };
    cfg.validate()?;

    let mut schema = Schema {
        outcome: y,
        treatment: a,
        covariates: args.x.clone(),
        mediators: args.m.clone(),
        mediator_kind: None,
    };
    schema.mediator_kind = args.mediator_kind.map(|k| match k {
        MediatorKindArg::Binary => MediatorKind::Binary,
        MediatorKindArg::Continuous => MediatorKind::Continuous,
        MediatorKindArg::Multivariate => MediatorKind::Multivariate,
    });
    let data = load_csv(&args.data, &schema)?;
    let ratio1 = args.ratio_file.as_ref().map(load_ratio_csv).transpose()?;
    let ratio0 = args.ratio_file_control.as_ref().map(load_ratio_csv).transpose()?;

    let config = json!({
        "learner": cfg.learners.outcome.name(),
        "mediator_density": format!("{:?}", cfg.learners.density).to_lowercase(),
        "outcome_kind": format!("{:?}", cfg.outcome_kind).to_lowercase(),
        "folds": cfg.crossfit_folds,
        "seed": cfg.seed,
        "max_tmle_iter": cfg.max_tmle_iter,
        "prob_clip": cfg.prob_clip,
        "integration_grid_size": cfg.integration_grid_size,
    });
    let mut out = json!({
        "schema": 1,
        "estimator": kind.name(),
        "n": data.n(),
        "mediator_kind": data.mediator_kind(),
        "config": config,
    });
    if args.ace {
        let r = estimate_ace(&data, &cfg, [ratio0.as_deref(), ratio1.as_deref()])?;
        out["ace"] = Value::Bool(true);
        out["psi"] = json!(r.ace.psi);
        out["se"] = json!(r.ace.se);
        out["ci"] = json!([r.ace.ci.0, r.ace.ci.1]);
        out["arms"] = json!({ "1": result_json(&r.psi1), "0": result_json(&r.psi0) });
    } else {
        if ratio0.is_some() {
            return Err(Error::InvalidConfig("--ratio-file-control requires --ace".into()));
        }
        let r = estimate(&data, &cfg, ratio1.as_deref())?;
        out["a0"] = json!(args.a0);
        if let Value::Object(fields) = result_json(&r) {
            for (k, v) in fields {
                out[k] = v;
            }
        }
    }
    Ok(out)
}

fn parse_target(s: &str) -> Result<Target> {
    match s {
        "ace" => Ok(Target::Ace),
        "0" => Ok(Target::Mean(0)),
        "1" => Ok(Target::Mean(1)),
        other => Err(Error::InvalidConfig(format!("target must be ace, 0 or 1, got {other}"))),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<SimReport> {
    let dgp: Dgp = args.dgp.parse()?;
    let estimators = args.estimators.iter().map(|s| s.parse()).collect::<Result<Vec<EstimatorKind>>>()?;
    let mut cfg = StudyConfig::new(dgp, args.n, args.reps, estimators, args.seed);
    cfg.learners = learners(&args.learner, args.mediator_density)?;
    cfg.folds = args.folds;
    cfg.target = parse_target(&args.target)?;
    cfg.truth_draws = args.truth_draws;
    if args.n < 2 {
        return Err(Error::InvalidConfig("n must be at least 2".into()));
    }
    run_study(&cfg)
}

fn write_text(path: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => {
            let v = cmd_estimate(&args)?;
            let text = serde_json::to_string_pretty(&v)? + "\n";
            write_text(args.out.as_ref(), &text, stdout)
        }
        Command::Simulate(args) => {
            let report = cmd_simulate(&args)?;
            let json = report.to_json()? + "\n";
            match &args.out {
                Some(prefix) => {
                    std::fs::write(prefix.with_extension("json"), &json)?;
                    std::fs::write(prefix.with_extension("csv"), report.to_csv()?)?;
                    stdout.write_all(report.to_text().as_bytes())?;
                }
                None => stdout.write_all(json.as_bytes())?,
            }
            Ok(())
        }
        Command::Report(args) => {
            let text = std::fs::read_to_string(&args.input)?;
            let report = SimReport::from_json(&text)?;
            let rendered = match args.format {
                ReportFormat::Text => report.to_text(),
                ReportFormat::Markdown => report.to_markdown(),
                ReportFormat::Csv => report.to_csv()?,
                ReportFormat::Json => report.to_json()? + "\n",
            };
            stdout.write_all(rendered.as_bytes())?;
            Ok(())
        }
    }
}

/// Runs the CLI and returns the process exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return EXIT_VALIDATION;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_ESTIMATION
            }
        }
    }
}
