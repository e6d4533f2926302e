//! Data-generating processes with known truth.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Stream};
use crate::config::OutcomeKind;
use crate::data::{Dataset, MediatorKind};
use crate::density::normal_pdf;
use crate::error::{Error, Result};
use crate::glm::expit;
use crate::nuisance::{BinaryMediatorRow, RatioRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dgp {
    UnivBinary,
    UnivContinuous,
    UnivBinaryBinaryY,
    Bivariate,
    Quadrivariate,
    WeakOverlapBinary,
    WeakOverlapContinuous,
    WeakOverlapBivariate,
    MisspecBinary,
    MisspecContinuous,
    CrossfitBinary,
    CrossfitContinuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub dgp: Dgp,
    pub n: usize,
    pub seed: u64,
}

const V_A: [f64; 21] = [
    0.48, 0.07, 1.0, -1.0, -0.34, -0.12, 0.3, -0.35, 1.0, -0.1, 0.46, 0.33, 0.0, 0.45, 0.1, -0.32, -0.08, -0.2, 0.5,
    0.5, -0.03,
];
const V_U: [f64; 17] = [-2.0, -1.0, -1.0, 2.0, 3.0, 0.5, 3.0, 2.0, -1.0, 1.0, -3.0, 1.5, -3.0, -2.0, 1.0, 3.0, 1.5];
const V_M: [f64; 22] = [
    3.0, 1.5, -1.5, -1.5, -1.0, -2.0, -3.0, -3.0, -1.5, 2.0, 1.5, 3.0, 1.5, 2.0, 0.5, 0.5, 3.0, -0.2, -0.33, 0.5, 0.3,
    -0.5,
];
const V_Y: [f64; 23] = [
    1.0, -2.0, -3.0, -1.5, 1.0, 0.5, -2.0, 1.5, -2.0, -3.0, -3.0, -1.5, -1.0, 0.5, 3.0, 1.5, 0.5, 3.0, 1.0, 1.5, -2.0,
    3.0, -1.0,
];
const BIVARIATE_COV: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 3.0]];
const QUADRIVARIATE_COV: [[f64; 4]; 4] =
    [[5.0, -1.0, 0.0, 2.0], [-1.0, 6.0, 1.0, 0.0], [0.0, 1.0, 4.0, 3.0], [2.0, 0.0, 3.0, 7.0]];

/// Seed used by the truth oracles.
pub const ORACLE_SEED: u64 = 20_240_601;

impl Dgp {
    pub const ALL: [Dgp; 12] = [
        Dgp::UnivBinary,
        Dgp::UnivContinuous,
        Dgp::UnivBinaryBinaryY,
        Dgp::Bivariate,
        Dgp::Quadrivariate,
        Dgp::WeakOverlapBinary,
        Dgp::WeakOverlapContinuous,
        Dgp::WeakOverlapBivariate,
        Dgp::MisspecBinary,
        Dgp::MisspecContinuous,
        Dgp::CrossfitBinary,
        Dgp::CrossfitContinuous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dgp::UnivBinary => "univ-binary",
            Dgp::UnivContinuous => "univ-continuous",
            Dgp::UnivBinaryBinaryY => "univ-binary-binary-y",
            Dgp::Bivariate => "bivariate",
            Dgp::Quadrivariate => "quadrivariate",
            Dgp::WeakOverlapBinary => "weak-overlap-binary",
            Dgp::WeakOverlapContinuous => "weak-overlap-continuous",
            Dgp::WeakOverlapBivariate => "weak-overlap-bivariate",
            Dgp::MisspecBinary => "misspec-binary",
            Dgp::MisspecContinuous => "misspec-continuous",
            Dgp::CrossfitBinary => "crossfit-binary",
            Dgp::CrossfitContinuous => "crossfit-continuous",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Dgp::ALL.iter().map(|d| d.name()).collect()
    }

    pub fn n_covariates(self) -> usize {
        match self {
            Dgp::CrossfitBinary | Dgp::CrossfitContinuous => 10,
            _ => 1,
        }
    }

    pub fn n_mediators(self) -> usize {
        match self {
            Dgp::Bivariate | Dgp::WeakOverlapBivariate => 2,
            Dgp::Quadrivariate => 4,
            _ => 1,
        }
    }

    pub fn mediator_kind(self) -> MediatorKind {
        match self {
            Dgp::UnivBinary | Dgp::UnivBinaryBinaryY | Dgp::WeakOverlapBinary | Dgp::MisspecBinary | Dgp::CrossfitBinary => {
                MediatorKind::Binary
            }
            Dgp::Bivariate | Dgp::Quadrivariate | Dgp::WeakOverlapBivariate => MediatorKind::Multivariate,
            _ => MediatorKind::Continuous,
        }
    }

    pub fn outcome_kind(self) -> OutcomeKind {
        if self == Dgp::UnivBinaryBinaryY {
            OutcomeKind::Binary
        } else {
            OutcomeKind::Continuous
        }
    }

    fn is_crossfit(self) -> bool {
        matches!(self, Dgp::CrossfitBinary | Dgp::CrossfitContinuous)
    }

    fn is_misspec(self) -> bool {
        matches!(self, Dgp::MisspecBinary | Dgp::MisspecContinuous)
    }

    /// `P(A = 1 | X)`.
    pub fn propensity(self, x: &[f64]) -> f64 {
        match self {
            Dgp::WeakOverlapBinary | Dgp::WeakOverlapContinuous | Dgp::WeakOverlapBivariate => 0.001 + 0.998 * x[0],
            Dgp::MisspecBinary | Dgp::MisspecContinuous => expit(-1.0 + x[0]),
            Dgp::CrossfitBinary | Dgp::CrossfitContinuous => {
                let mut f = vec![1.0];
                f.extend_from_slice(x);
                f.extend(x.iter().map(|v| v * v));
                expit(0.1 * dot(&V_A, &f))
            }
            _ => 0.3 + 0.2 * x[0],
        }
    }

    /// `(E[U | a, x], Var[U | a, x])`.
    pub fn latent_moments(self, a: f64, x: &[f64]) -> (f64, f64) {
        if self.is_crossfit() {
            let mut f = vec![1.0, a];
            f.extend_from_slice(x);
            f.extend(x[..5].iter().map(|v| a * v));
            let var = if self == Dgp::CrossfitBinary { 2.0 } else { 1.0 };
            return (dot(&V_U, &f), var);
        }
        if self.is_misspec() {
            return (1.0 + a + x[0] - a * x[0], 2.0);
        }
        (1.0 + a + x[0], 1.0)
    }

    /// Conditional mean of the mediator (the success probability when binary).
    pub fn mediator_mean(self, a: f64, x: &[f64]) -> Vec<f64> {
        let x0 = x[0];
        match self {
            Dgp::Bivariate | Dgp::WeakOverlapBivariate => vec![1.0 + a + x0, -1.0 - 0.5 * a + 2.0 * x0],
            Dgp::Quadrivariate => vec![
                1.0 + a + x0,
                -1.0 - 0.5 * a + 2.0 * x0,
                -1.0 + 2.0 * a + x0,
                1.0 + 0.5 * a - x0,
            ],
            Dgp::MisspecBinary => vec![expit(-1.0 + a + x0 - a * x0)],
            Dgp::MisspecContinuous => vec![1.0 + a + x0 - a * x0],
            Dgp::CrossfitBinary | Dgp::CrossfitContinuous => {
                let mut f = vec![1.0, a];
                f.extend_from_slice(x);
                f.extend(x[..5].iter().map(|v| a * v));
                f.extend(x[5..].iter().map(|v| v * v));
                let lin = 0.025 * dot(&V_M, &f);
                vec![if self == Dgp::CrossfitBinary { expit(lin) } else { lin }]
            }
            Dgp::UnivBinary | Dgp::UnivBinaryBinaryY | Dgp::WeakOverlapBinary => vec![expit(-1.0 + a + x0)],
            Dgp::UnivContinuous | Dgp::WeakOverlapContinuous => vec![1.0 + a + x0],
        }
    }

    /// Covariance of a Gaussian mediator.
    pub fn mediator_cov(self) -> DMatrix<f64> {
        match self {
            Dgp::Bivariate | Dgp::WeakOverlapBivariate => {
                DMatrix::from_fn(2, 2, |r, c| BIVARIATE_COV[r][c])
            }
            Dgp::Quadrivariate => DMatrix::from_fn(4, 4, |r, c| QUADRIVARIATE_COV[r][c]),
            Dgp::MisspecContinuous => DMatrix::from_element(1, 1, 2.0),
            _ => DMatrix::from_element(1, 1, 1.0),
        }
    }

    /// `E[Y | U = u, M = m, X = x]` (a probability for a binary outcome).
    pub fn outcome_mean(self, u: f64, m: &[f64], x: &[f64]) -> f64 {
        let x0 = x[0];
        if self.is_crossfit() {
            let mm = m[0];
            let mut f = vec![u, mm];
            f.extend_from_slice(x);
            f.extend(x[..5].iter().map(|v| mm * v));
            f.push(mm * mm);
            f.extend(x[5..].iter().map(|v| v * v));
            return dot(&V_Y, &f);
        }
        match self {
            Dgp::UnivBinaryBinaryY => expit(-2.0 + 0.5 * u + 0.5 * m[0] + 0.5 * x0),
            Dgp::MisspecBinary | Dgp::MisspecContinuous => u + m[0] + x0 - m[0] * x0,
            _ => u + m.iter().sum::<f64>() + x0,
        }
    }

    fn outcome_var(self) -> f64 {
        match self {
            Dgp::MisspecBinary | Dgp::MisspecContinuous | Dgp::CrossfitBinary => 2.0,
            _ => 1.0,
        }
    }

    /// `μ(m, a, x) = E[Y | M = m, A = a, X = x]`. Closed form whenever the
    /// outcome mean is linear in the latent confounder.
    pub fn mu(self, m: &[f64], a: f64, x: &[f64]) -> Result<f64> {
        if self.outcome_kind() == OutcomeKind::Binary {
            return Err(Error::Unsupported(format!("no closed-form outcome regression for {self}")));
        }
        let (eu, _) = self.latent_moments(a, x);
        Ok(self.outcome_mean(eu, m, x))
    }

    /// Density (or probability mass) of `M = m` given `A = a, X = x`.
    pub fn mediator_density(self, m: &[f64], a: f64, x: &[f64]) -> f64 {
        let mean = self.mediator_mean(a, x);
        match self.mediator_kind() {
            MediatorKind::Binary => {
                if m[0] == 1.0 {
                    mean[0]
                } else {
                    1.0 - mean[0]
                }
            }
            MediatorKind::Continuous => normal_pdf(m[0] - mean[0], self.mediator_cov()[(0, 0)].sqrt()),
            MediatorKind::Multivariate => mvn_pdf(m, &mean, &self.mediator_cov()),
        }
    }

    fn sample_x(self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.n_covariates()).map(|_| rng.random::<f64>()).collect()
    }

    fn sample_m(self, rng: &mut ChaCha8Rng, a: f64, x: &[f64], chol: &DMatrix<f64>) -> Vec<f64> {
        let mean = self.mediator_mean(a, x);
        if self.mediator_kind() == MediatorKind::Binary {
            return vec![f64::from(u8::from(rng.random::<f64>() < mean[0]))];
        }
        let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let draw = chol * z;
        mean.iter().zip(draw.iter()).map(|(m, d)| m + d).collect()
    }

    fn cholesky(self) -> DMatrix<f64> {
        self.mediator_cov().cholesky().expect("covariance is positive definite").l()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn mvn_pdf(m: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> f64 {
    let d = m.len();
    let chol = cov.clone().cholesky().expect("covariance is positive definite");
    let diff = DVector::from_fn(d, |i, _| m[i] - mean[i]);
    let sol = chol.solve(&diff);
    let quad = diff.dot(&sol);
    let det = chol.determinant();
    (-0.5 * quad).exp() / ((2.0 * std::f64::consts::PI).powi(d as i32) * det).sqrt()
}

impl fmt::Display for Dgp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dgp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dgp::ALL
            .iter()
            .copied()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::UnknownDgp(format!("{s} (valid: {})", Dgp::names().join(", "))))
    }
}

/// Draws `spec.n` rows. Deterministic in `spec.seed`; the latent confounder
/// is discarded.
pub fn generate(spec: &DgpSpec) -> Result<Dataset> {
    let dgp = spec.dgp;
    let n = spec.n;
    let (p, d) = (dgp.n_covariates(), dgp.n_mediators());
    let mut rx = stream(spec.seed, Stream::Covariates);
    let mut ra = stream(spec.seed, Stream::Treatment);
    let mut ru = stream(spec.seed, Stream::Latent);
    let mut rm = stream(spec.seed, Stream::Mediator);
    let mut ry = stream(spec.seed, Stream::Outcome);
    let chol = dgp.cholesky();
    let mut x = DMatrix::zeros(n, p);
    let mut m = DMatrix::zeros(n, d);
    let mut a = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xi = dgp.sample_x(&mut rx);
        let ai = u8::from(ra.random::<f64>() < dgp.propensity(&xi));
        let af = ai as f64;
        let (eu, vu) = dgp.latent_moments(af, &xi);
        let u = eu + vu.sqrt() * ru.sample::<f64, _>(StandardNormal);
        let mi = dgp.sample_m(&mut rm, af, &xi, &chol);
        let ey = dgp.outcome_mean(u, &mi, &xi);
        let yi = match dgp.outcome_kind() {
            OutcomeKind::Binary => f64::from(u8::from(ry.random::<f64>() < ey)),
            OutcomeKind::Continuous => ey + dgp.outcome_var().sqrt() * ry.sample::<f64, _>(StandardNormal),
        };
        for (c, v) in xi.iter().enumerate() {
            x[(i, c)] = *v;
        }
        for (c, v) in mi.iter().enumerate() {
            m[(i, c)] = *v;
        }
        a.push(ai);
        y.push(yi);
    }
    Dataset::new(x, a, m, y, Some(dgp.mediator_kind()))
}

/// Monte Carlo value of the front-door functional at `a0`: draw `X`, draw
/// `M ~ p(m | a0, X)`, and average `Σ_a π(a | X) E[Y | M, a, X]`, where the
/// inner expectation integrates the latent confounder by one draw from its
/// conditional law.
pub fn truth_psi(dgp: Dgp, a0: u8, draws: usize, seed: u64) -> f64 {
    let mut rx = stream(seed, Stream::Covariates);
    let mut rm = stream(seed, Stream::Mediator);
    let mut ru = stream(seed, Stream::Latent);
    let chol = dgp.cholesky();
    let mut total = 0.0;
    for _ in 0..draws {
        let x = dgp.sample_x(&mut rx);
        let m = dgp.sample_m(&mut rm, a0 as f64, &x, &chol);
        let pi1 = dgp.propensity(&x);
        let mut v = 0.0;
        for (a, w) in [(0.0, 1.0 - pi1), (1.0, pi1)] {
            let (eu, vu) = dgp.latent_moments(a, &x);
            let u = match dgp.outcome_kind() {
                OutcomeKind::Binary => eu + vu.sqrt() * ru.sample::<f64, _>(StandardNormal),
                OutcomeKind::Continuous => eu,
            };
            v += w * dgp.outcome_mean(u, &m, &x);
        }
        total += v;
    }
    total / draws as f64
}

/// `ψ(1) − ψ(0)` with common random numbers.
pub fn truth_ace(dgp: Dgp, draws: usize, seed: u64) -> f64 {
    truth_psi(dgp, 1, draws, seed) - truth_psi(dgp, 0, draws, seed)
}

/// Generating-process nuisances for a binary-mediator DGP.
pub fn oracle_binary_rows(dgp: Dgp, data: &Dataset) -> Result<Vec<BinaryMediatorRow>> {
    if dgp.mediator_kind() != MediatorKind::Binary {
        return Err(Error::Unsupported(format!("{dgp} does not have a binary mediator")));
    }
    (0..data.n())
        .map(|i| {
            let x = data.x_row(i);
            let mut mu = [[0.0; 2]; 2];
            for (m, row) in mu.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    *v = dgp.mu(&[m as f64], a as f64, &x)?;
                }
            }
            Ok(BinaryMediatorRow {
                mu,
                pi1: dgp.propensity(&x),
                fm1: [dgp.mediator_mean(0.0, &x)[0], dgp.mediator_mean(1.0, &x)[0]],
            })
        })
        .collect()
}

/// `E[g(M) | A = a0, X = x]` for the generating mediator law. Gaussian
/// mediators use a three-point Gauss–Hermite rule per coordinate, exact for
/// polynomials of degree five in each coordinate and for sums of such terms.
fn mediator_expectation<F: Fn(&[f64]) -> f64>(dgp: Dgp, a0: f64, x: &[f64], g: F) -> f64 {
    let mean = dgp.mediator_mean(a0, x);
    match dgp.mediator_kind() {
        MediatorKind::Binary => mean[0] * g(&[1.0]) + (1.0 - mean[0]) * g(&[0.0]),
        MediatorKind::Continuous => {
            let sd = dgp.mediator_cov()[(0, 0)].sqrt();
            let s3 = 3f64.sqrt();
            [(0.0, 2.0 / 3.0), (s3, 1.0 / 6.0), (-s3, 1.0 / 6.0)]
                .iter()
                .map(|(z, w)| w * g(&[mean[0] + sd * z]))
                .sum()
        }
        MediatorKind::Multivariate => {
            // Outcome means of the multivariate designs are additive in M.
            let base = g(&mean);
            let cov = dgp.mediator_cov();
            let s3 = 3f64.sqrt();
            let mut total = base;
            for j in 0..mean.len() {
                let sd = cov[(j, j)].sqrt();
                let mut shifted = mean.clone();
                let mut e = 0.0;
                for (z, w) in [(0.0, 2.0 / 3.0), (s3, 1.0 / 6.0), (-s3, 1.0 / 6.0)] {
                    shifted[j] = mean[j] + sd * z;
                    e += w * g(&shifted);
                }
                total += e - base;
            }
            total
        }
    }
}

/// Generating-process nuisances in the ratio parameterization for `a0`.
pub fn oracle_ratio_rows(dgp: Dgp, data: &Dataset, a0: u8) -> Result<Vec<RatioRow>> {
    let a0f = a0 as f64;
    (0..data.n())
        .map(|i| {
            let (x, m) = (data.x_row(i), data.m_row(i));
            let a = data.a()[i];
            let pi1 = dgp.propensity(&x);
            let ratio = if a == a0 {
                1.0
            } else {
                dgp.mediator_density(&m, a0f, &x) / dgp.mediator_density(&m, a as f64, &x)
            };
            let mu_at = |mm: &[f64], aa: f64| dgp.mu(mm, aa, &x).unwrap_or(f64::NAN);
            let kappa = [
                mediator_expectation(dgp, a0f, &x, |mm| mu_at(mm, 0.0)),
                mediator_expectation(dgp, a0f, &x, |mm| mu_at(mm, 1.0)),
            ];
            Ok(RatioRow {
                mu: [dgp.mu(&m, 0.0, &x)?, dgp.mu(&m, 1.0, &x)?],
                pi1,
                ratio,
                gamma: (1.0 - pi1) * kappa[0] + pi1 * kappa[1],
                kappa,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for d in Dgp::ALL {
            assert_eq!(d.name().parse::<Dgp>().unwrap(), d);
        }
        let err = "nope".parse::<Dgp>().unwrap_err().to_string();
        assert!(err.contains("univ-binary") && err.contains("crossfit-continuous"));
    }

    #[test]
    fn treatment_mean_matches_generating_law() {
        let d = generate(&DgpSpec { dgp: Dgp::UnivBinary, n: 100_000, seed: 3 }).unwrap();
        let mean = d.a().iter().map(|&a| a as f64).sum::<f64>() / d.n() as f64;
        assert!((mean - 0.4).abs() < 0.01, "{mean}");
    }

    #[test]
    fn generation_is_reproducible() {
        let s = DgpSpec { dgp: Dgp::Quadrivariate, n: 50, seed: 9 };
        assert_eq!(generate(&s).unwrap().y(), generate(&s).unwrap().y());
    }

    #[test]
    fn weak_overlap_spans_the_unit_interval() {
        let d = generate(&DgpSpec { dgp: Dgp::WeakOverlapBinary, n: 10_000, seed: 1 }).unwrap();
        let mut low = (0.0, 0.0);
        let mut high = (0.0, 0.0);
        for i in 0..d.n() {
            let x = d.x()[(i, 0)];
            if x < 0.05 {
                low = (low.0 + d.a_f64(i), low.1 + 1.0);
            } else if x > 0.95 {
                high = (high.0 + d.a_f64(i), high.1 + 1.0);
            }
        }
        assert!(low.0 / low.1 < 0.05);
        assert!(high.0 / high.1 > 0.95);
    }

    #[test]
    fn quadrivariate_residual_covariance() {
        let d = generate(&DgpSpec { dgp: Dgp::Quadrivariate, n: 10_000, seed: 4 }).unwrap();
        let mut cov = [[0.0; 4]; 4];
        for i in 0..d.n() {
            let mean = Dgp::Quadrivariate.mediator_mean(d.a_f64(i), &d.x_row(i));
            let r: Vec<f64> = (0..4).map(|j| d.m()[(i, j)] - mean[j]).collect();
            for j in 0..4 {
                for k in 0..4 {
                    cov[j][k] += r[j] * r[k] / d.n() as f64;
                }
            }
        }
        for j in 0..4 {
            for k in 0..4 {
                assert!((cov[j][k] - QUADRIVARIATE_COV[j][k]).abs() < 0.3, "{j}{k}: {}", cov[j][k]);
            }
        }
    }

    #[test]
    fn continuous_ace_is_one() {
        let ace = truth_ace(Dgp::UnivContinuous, 1_000_000, ORACLE_SEED);
        assert!((ace - 1.0).abs() < 0.005, "{ace}");
    }

    #[test]
    fn binary_ace_matches_closed_form() {
        let ace = truth_ace(Dgp::UnivBinary, 1_000_000, ORACLE_SEED);
        let mut exact = 0.0;
        let k = 100_000;
        for j in 0..k {
            let x = (j as f64 + 0.5) / k as f64;
            exact += (expit(x) - expit(-1.0 + x)) / k as f64;
        }
        assert!((ace - exact).abs() < 0.002, "{ace} vs {exact}");
    }

    #[test]
    fn binary_outcome_truth_is_seed_stable() {
        let t1 = truth_psi(Dgp::UnivBinaryBinaryY, 1, 1_000_000, 1);
        let t2 = truth_psi(Dgp::UnivBinaryBinaryY, 1, 1_000_000, 2);
        assert!((t1 - t2).abs() < 3.0 * 2f64.sqrt() * 0.5 / 1000.0);
    }

    #[test]
    fn oracle_ratio_gamma_matches_truth() {
        for dgp in [Dgp::UnivContinuous, Dgp::Bivariate, Dgp::MisspecContinuous, Dgp::CrossfitContinuous] {
            let d = generate(&DgpSpec { dgp, n: 200_000, seed: 8 }).unwrap();
            let rows = oracle_ratio_rows(dgp, &d, 1).unwrap();
            let g = rows.iter().map(|r| r.gamma).sum::<f64>() / d.n() as f64;
            let t = truth_psi(dgp, 1, 1_000_000, ORACLE_SEED);
            assert!((g - t).abs() < 0.05 * (1.0 + t.abs()), "{dgp}: {g} vs {t}");
        }
    }
}
