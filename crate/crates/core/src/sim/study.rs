//! Monte Carlo studies: repeated generation, estimation and aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate, truth_ace, truth_psi, Dgp, DgpSpec, ORACLE_SEED};
use crate::config::{EstimatorConfig, EstimatorKind, NuisanceLearners};
use crate::eif::EstimateResult;
use crate::error::{Error, Result};
use crate::estimate::{estimate, estimate_ace};

/// Estimand targeted by a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "a0")]
pub enum Target {
    /// `ψ(1) − ψ(0)`.
    Ace,
    /// `ψ(a0)`.
    Mean(u8),
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub dgp: Dgp,
    pub n: usize,
    pub replicates: usize,
    pub estimators: Vec<EstimatorKind>,
    pub learners: NuisanceLearners,
    pub folds: usize,
    pub seed: u64,
    pub target: Target,
    pub truth_draws: usize,
}

impl StudyConfig {
    pub fn new(dgp: Dgp, n: usize, replicates: usize, estimators: Vec<EstimatorKind>, seed: u64) -> Self {
        StudyConfig {
            dgp,
            n,
            replicates,
            estimators,
            learners: NuisanceLearners::default(),
            folds: 1,
            seed,
            target: Target::Ace,
            truth_draws: 1_000_000,
        }
    }

    fn estimator_config(&self, kind: EstimatorKind, seed: u64) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::new(kind, 1);
        cfg.outcome_kind = self.dgp.outcome_kind();
        cfg.learners = self.learners;
        cfg.crossfit_folds = self.folds;
        cfg.seed = seed;
        cfg
    }
}

/// One estimator on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub estimator: EstimatorKind,
    pub psi: Option<f64>,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub bias: f64,
    pub sd: f64,
    pub mse: f64,
    pub coverage: f64,
    pub width: f64,
    pub failed: usize,
    pub mean_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema: u32,
    pub dgp: Dgp,
    pub n: usize,
    pub replicates: usize,
    pub target: Target,
    pub truth: f64,
    pub rows: Vec<EstimatorSummary>,
    pub records: Vec<ReplicateRecord>,
}

/// Number of worker threads: `FD_THREADS` when set, otherwise rayon's default.
pub fn thread_count() -> usize {
    std::env::var("FD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

pub fn truth_for(dgp: Dgp, target: Target, draws: usize) -> f64 {
    match target {
        Target::Ace => truth_ace(dgp, draws, ORACLE_SEED),
        Target::Mean(a0) => truth_psi(dgp, a0, draws, ORACLE_SEED),
    }
}

fn run_one(cfg: &StudyConfig, kind: EstimatorKind, replicate: usize) -> ReplicateRecord {
    let seed = cfg.seed.wrapping_add(replicate as u64);
    let outcome = generate(&DgpSpec { dgp: cfg.dgp, n: cfg.n, seed }).and_then(|data| {
        let ecfg = cfg.estimator_config(kind, seed);
        match cfg.target {
            Target::Ace => estimate_ace(&data, &ecfg, [None, None]).map(|r| r.ace),
            Target::Mean(a0) => {
                let mut c = ecfg;
                c.a0 = a0;
                estimate(&data, &c, None)
            }
        }
    });
    let finite = |r: &EstimateResult| r.psi.is_finite() && r.se.is_finite();
    match outcome {
        Ok(r) if finite(&r) => ReplicateRecord {
            replicate,
            estimator: kind,
            psi: Some(r.psi),
            se: Some(r.se),
            ci: Some(r.ci),
            error: None,
        },
        Ok(_) => failed(replicate, kind, "non-finite estimate".into()),
        Err(e) => failed(replicate, kind, e.to_string()),
    }
}

fn failed(replicate: usize, estimator: EstimatorKind, error: String) -> ReplicateRecord {
    ReplicateRecord { replicate, estimator, psi: None, se: None, ci: None, error: Some(error) }
}

/// Aggregates per-replicate estimates. `sd` uses the `R − 1` denominator, so
/// `mse = bias² + sd² (R − 1) / R`.
pub fn summarize(estimator: EstimatorKind, n: usize, truth: f64, records: &[ReplicateRecord]) -> EstimatorSummary {
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.estimator == estimator && r.psi.is_some()).collect();
    let failed = records.iter().filter(|r| r.estimator == estimator && r.psi.is_none()).count();
    let r = ok.len() as f64;
    let psi: Vec<f64> = ok.iter().map(|r| r.psi.unwrap()).collect();
    let mean = psi.iter().sum::<f64>() / r;
    let sd = if ok.len() > 1 { (psi.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt() } else { f64::NAN };
    let mse = psi.iter().map(|p| (p - truth).powi(2)).sum::<f64>() / r;
    let coverage = ok.iter().filter(|r| r.ci.is_some_and(|(lo, hi)| lo <= truth && truth <= hi)).count() as f64 / r;
    let width = ok.iter().map(|r| r.ci.map_or(0.0, |(lo, hi)| hi - lo)).sum::<f64>() / r;
    let mean_se = ok.iter().map(|r| r.se.unwrap_or(0.0)).sum::<f64>() / r;
    EstimatorSummary { estimator, n, bias: mean - truth, sd, mse, coverage, width, failed, mean_se }
}

/// Runs every estimator on `replicates` datasets drawn with seeds
/// `seed, seed + 1, …`. Failed replicates are counted and excluded.
pub fn run_study(cfg: &StudyConfig) -> Result<SimReport> {
    if cfg.replicates < 2 {
        return Err(Error::InvalidConfig("a study needs at least 2 replicates".into()));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidConfig("no estimators requested".into()));
    }
    let truth = truth_for(cfg.dgp, cfg.target, cfg.truth_draws);
    let jobs: Vec<(usize, EstimatorKind)> =
        (0..cfg.replicates).flat_map(|r| cfg.estimators.iter().map(move |&k| (r, k))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let records: Vec<ReplicateRecord> =
        pool.install(|| jobs.par_iter().map(|&(r, k)| run_one(cfg, k, r)).collect());
    let rows = cfg.estimators.iter().map(|&k| summarize(k, cfg.n, truth, &records)).collect();
    Ok(SimReport {
        schema: 1,
        dgp: cfg.dgp,
        n: cfg.n,
        replicates: cfg.replicates,
        target: cfg.target,
        truth,
        rows,
        records,
    })
}

impl SimReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Summary table with columns `estimator, n, bias, sd, mse, coverage, width, failed`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["estimator", "n", "bias", "sd", "mse", "coverage", "width", "failed"])?;
        for r in &self.rows {
            w.write_record([
                r.estimator.name().to_string(),
                r.n.to_string(),
                format!("{:?}", r.bias),
                format!("{:?}", r.sd),
                format!("{:?}", r.mse),
                format!("{:?}", r.coverage),
                format!("{:?}", r.width),
                r.failed.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!(
            "DGP `{}`, n = {}, {} replicates, truth = {:.4}\n\n",
            self.dgp, self.n, self.replicates, self.truth
        );
        s.push_str("| estimator | n | bias | sd | mse | coverage | width | failed |\n");
        s.push_str("|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            s.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {:.5} | {:.1}% | {:.4} | {} |\n",
                r.estimator,
                r.n,
                r.bias,
                r.sd,
                r.mse,
                100.0 * r.coverage,
                r.width,
                r.failed
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "dgp={} n={} replicates={} truth={:.4}\n{:<12} {:>6} {:>9} {:>9} {:>10} {:>9} {:>9} {:>6}\n",
            self.dgp, self.n, self.replicates, self.truth, "estimator", "n", "bias", "sd", "mse", "coverage", "width", "failed"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<12} {:>6} {:>9.4} {:>9.4} {:>10.5} {:>8.1}% {:>9.4} {:>6}\n",
                r.estimator.name(),
                r.n,
                r.bias,
                r.sd,
                r.mse,
                100.0 * r.coverage,
                r.width,
                r.failed
            ));
        }
        s
    }
}
