//! Efficient influence function, plug-in functionals and Wald inference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, Folds};
use crate::error::{Error, Result};
use crate::nuisance::{BinaryMediatorRow, DensityRows, RatioRow, RowSummary};

/// Per-row EIF components and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EifDecomposition {
    pub phi_y: Vec<f64>,
    pub phi_m: Vec<f64>,
    pub phi_a: Vec<f64>,
    pub phi_x: Vec<f64>,
    pub total: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl EifDecomposition {
    pub fn new(phi_y: Vec<f64>, phi_m: Vec<f64>, phi_a: Vec<f64>, phi_x: Vec<f64>) -> Self {
        let total = (0..phi_y.len()).map(|i| phi_y[i] + phi_m[i] + phi_a[i] + phi_x[i]).collect();
        EifDecomposition { phi_y, phi_m, phi_a, phi_x, total }
    }

    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }

    pub fn score_residuals(&self) -> ScoreResiduals {
        ScoreResiduals {
            y: mean(&self.phi_y),
            m: mean(&self.phi_m),
            a: mean(&self.phi_a),
            x: mean(&self.phi_x),
            total: mean(&self.total),
        }
    }
}

/// Empirical means `P_n Φ_j` of each component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreResiduals {
    pub y: f64,
    pub m: f64,
    pub a: f64,
    pub x: f64,
    pub total: f64,
}

impl ScoreResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.y, self.m, self.a, self.x].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One accepted fluctuation coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStep {
    pub iteration: usize,
    /// One of `A`, `M`, `Y`, `gamma`.
    pub component: String,
    pub value: f64,
}

impl EpsilonStep {
    pub fn new(iteration: usize, component: &str, value: f64) -> Self {
        EpsilonStep { iteration, component: component.to_string(), value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub psi: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub score_residuals: ScoreResiduals,
    pub epsilon_history: Vec<EpsilonStep>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub eif: Option<EifDecomposition>,
}

impl EstimateResult {
    pub fn n(&self) -> usize {
        self.eif.as_ref().map_or(0, |e| e.len())
    }
}

pub fn z_quantile(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(0.5 + level / 2.0)
}

/// `se = sqrt(mean(Φ²) / n)` and `ψ ± z·se`.
pub fn wald(psi: f64, eif: EifDecomposition, level: f64) -> EstimateResult {
    let n = eif.len().max(1) as f64;
    let second = eif.total.iter().map(|v| v * v).sum::<f64>() / n;
    let se = (second / n).sqrt();
    let z = z_quantile(level);
    EstimateResult {
        psi,
        se,
        ci: (psi - z * se, psi + z * se),
        score_residuals: eif.score_residuals(),
        epsilon_history: Vec::new(),
        iterations: 0,
        converged: true,
        warnings: Vec::new(),
        eif: Some(eif),
    }
}

/// `ψ(1) − ψ(0)` with the standard error of the differenced influence values.
pub fn ace(result_a1: &EstimateResult, result_a0: &EstimateResult) -> Result<EstimateResult> {
    let (Some(e1), Some(e0)) = (&result_a1.eif, &result_a0.eif) else {
        return Err(Error::RowMismatch("both results must carry per-row influence values".into()));
    };
    if e1.len() != e0.len() {
        return Err(Error::RowMismatch(format!("{} vs {} influence rows", e1.len(), e0.len())));
    }
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    let eif = EifDecomposition::new(
        diff(&e1.phi_y, &e0.phi_y),
        diff(&e1.phi_m, &e0.phi_m),
        diff(&e1.phi_a, &e0.phi_a),
        diff(&e1.phi_x, &e0.phi_x),
    );
    let mut out = wald(result_a1.psi - result_a0.psi, eif, 0.95);
    out.iterations = result_a1.iterations + result_a0.iterations;
    out.converged = result_a1.converged && result_a0.converged;
    out.warnings = result_a1.warnings.iter().chain(&result_a0.warnings).cloned().collect();
    Ok(out)
}

/// `ψ_1 = P_n θ`, averaged fold by fold.
pub fn plugin_psi1_from(summaries: &[RowSummary], folds: &Folds) -> f64 {
    let theta: Vec<f64> = summaries.iter().map(|s| s.theta).collect();
    folds.fold_average(&theta)
}

pub fn plugin_psi1(rows: &DensityRows, data: &Dataset, a0: u8) -> Result<f64> {
    Ok(plugin_psi1_from(&rows.summaries(data, a0)?, &Folds::single(data.n())))
}

/// `ψ_2 = P_n γ`, averaged fold by fold.
pub fn plugin_psi2(rows: &[RatioRow], folds: &Folds) -> f64 {
    let gamma: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
    folds.fold_average(&gamma)
}

fn indicator(a: u8, a0: u8) -> f64 {
    if a == a0 {
        1.0
    } else {
        0.0
    }
}

fn pi_a0(pi1: f64, a0: u8) -> f64 {
    if a0 == 1 {
        pi1
    } else {
        1.0 - pi1
    }
}

pub fn eif_from_summaries(summaries: &[RowSummary], data: &Dataset, a0: u8, psi: f64) -> EifDecomposition {
    let n = summaries.len();
    let mut phi_y = Vec::with_capacity(n);
    let mut phi_m = Vec::with_capacity(n);
    let mut phi_a = Vec::with_capacity(n);
    let mut phi_x = Vec::with_capacity(n);
    for (i, s) in summaries.iter().enumerate() {
        let a = data.a()[i];
        phi_y.push(s.ratio * (data.y()[i] - s.mu_own));
        phi_m.push(indicator(a, a0) / pi_a0(s.pi1, a0) * (s.xi_obs - s.theta));
        phi_a.push((s.eta[1] - s.eta[0]) * (a as f64 - s.pi1));
        phi_x.push(s.theta - psi);
    }
    EifDecomposition::new(phi_y, phi_m, phi_a, phi_x)
}

/// EIF under the mediator-density parameterization.
pub fn eif_density(rows: &DensityRows, data: &Dataset, a0: u8, psi: f64) -> Result<EifDecomposition> {
    Ok(eif_from_summaries(&rows.summaries(data, a0)?, data, a0, psi))
}

/// Binary-mediator form `1(A=a0)/π(a0|X) · (ξ(1,X) − ξ(0,X)) · (M − f(1|a0,X))`.
pub fn phi_m_binary(rows: &[BinaryMediatorRow], data: &Dataset, a0: u8) -> Vec<f64> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            indicator(data.a()[i], a0) / pi_a0(r.pi1, a0)
                * (r.xi(1) - r.xi(0))
                * (data.m_scalar(i) - r.fm1[a0 as usize])
        })
        .collect()
}

/// EIF under the density-ratio parameterization.
pub fn eif_ratio(rows: &[RatioRow], data: &Dataset, a0: u8, psi: f64) -> Result<EifDecomposition> {
    if rows.len() != data.n() {
        return Err(Error::RowMismatch(format!("{} nuisance rows for {} data rows", rows.len(), data.n())));
    }
    let n = rows.len();
    let mut phi_y = Vec::with_capacity(n);
    let mut phi_m = Vec::with_capacity(n);
    let mut phi_a = Vec::with_capacity(n);
    let mut phi_x = Vec::with_capacity(n);
    for (i, r) in rows.iter().enumerate() {
        let a = data.a()[i];
        phi_y.push(r.ratio * (data.y()[i] - r.mu[a as usize]));
        phi_m.push(indicator(a, a0) / pi_a0(r.pi1, a0) * (r.xi() - r.gamma));
        phi_a.push((r.kappa[1] - r.kappa[0]) * (a as f64 - r.pi1));
        phi_x.push(r.gamma - psi);
    }
    Ok(EifDecomposition::new(phi_y, phi_m, phi_a, phi_x))
}

/// Ratio rows that reproduce a binary-mediator density parameterization
/// exactly (`γ = θ`, `κ_a = η(a, ·)`, ratio from the density).
pub fn ratio_rows_from_binary(rows: &[BinaryMediatorRow], data: &Dataset, a0: u8) -> Vec<RatioRow> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let s = r.summarize(data.a()[i], data.m_scalar(i), a0);
            let mi = data.m_scalar(i) as usize;
            RatioRow {
                mu: [r.mu[mi][0], r.mu[mi][1]],
                pi1: r.pi1,
                ratio: s.ratio,
                gamma: s.theta,
                kappa: s.eta,
            }
        })
        .collect()
}
