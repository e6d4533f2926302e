//! Plug-in and one-step estimators.

use crate::data::{Dataset, Folds};
use crate::eif::{self, EstimateResult};
use crate::error::Result;
use crate::nuisance::{DensityRows, RatioRow};

pub fn plugin_density(rows: &DensityRows, data: &Dataset, a0: u8, folds: &Folds) -> Result<EstimateResult> {
    let s = rows.summaries(data, a0)?;
    let psi = eif::plugin_psi1_from(&s, folds);
    Ok(eif::wald(psi, eif::eif_from_summaries(&s, data, a0, psi), 0.95))
}

pub fn plugin_ratio(rows: &[RatioRow], data: &Dataset, a0: u8, folds: &Folds) -> Result<EstimateResult> {
    let psi = eif::plugin_psi2(rows, folds);
    Ok(eif::wald(psi, eif::eif_ratio(rows, data, a0, psi)?, 0.95))
}

/// `ψ1⁺ = ψ1 + P_n Φ(Q̂)`, computed fold by fold and averaged. The reported
/// influence values are centred at `ψ1⁺`.
pub fn onestep_density(rows: &DensityRows, data: &Dataset, a0: u8, folds: &Folds) -> Result<EstimateResult> {
    let s = rows.summaries(data, a0)?;
    let plugin = eif::plugin_psi1_from(&s, folds);
    let at_plugin = eif::eif_from_summaries(&s, data, a0, plugin);
    let corrected: Vec<f64> = (0..data.n())
        .map(|i| s[i].theta + at_plugin.phi_y[i] + at_plugin.phi_m[i] + at_plugin.phi_a[i])
        .collect();
    let psi = folds.fold_average(&corrected);
    Ok(eif::wald(psi, eif::eif_from_summaries(&s, data, a0, psi), 0.95))
}

/// `ψ2⁺ = ψ2 + P_n Φ(Q̂)` under the ratio parameterization.
pub fn onestep_ratio(rows: &[RatioRow], data: &Dataset, a0: u8, folds: &Folds) -> Result<EstimateResult> {
    let plugin = eif::plugin_psi2(rows, folds);
    let at_plugin = eif::eif_ratio(rows, data, a0, plugin)?;
    let corrected: Vec<f64> = (0..data.n())
        .map(|i| rows[i].gamma + at_plugin.phi_y[i] + at_plugin.phi_m[i] + at_plugin.phi_a[i])
        .collect();
    let psi = folds.fold_average(&corrected);
    Ok(eif::wald(psi, eif::eif_ratio(rows, data, a0, psi)?, 0.95))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuisance::BinaryMediatorRow;
    use nalgebra::DMatrix;

    fn data(a: &[u8], m: &[f64], y: &[f64]) -> Dataset {
        let n = a.len();
        Dataset::new(
            DMatrix::from_element(n, 1, 0.0),
            a.to_vec(),
            DMatrix::from_column_slice(n, 1, m),
            y.to_vec(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn onestep_identity() {
        let d = data(&[1, 0, 1, 0], &[1.0, 0.0, 0.0, 1.0], &[2.0, 0.5, 1.1, 0.3]);
        let row = BinaryMediatorRow { mu: [[0.0, 1.0], [1.0, 2.0]], pi1: 0.5, fm1: [0.4, 0.5] };
        let rows = DensityRows::Binary(vec![row; 4]);
        let folds = Folds::single(4);
        let plug = plugin_density(&rows, &d, 1, &folds).unwrap();
        let one = onestep_density(&rows, &d, 1, &folds).unwrap();
        let mean_total: f64 = plug.eif.as_ref().unwrap().total.iter().sum::<f64>() / 4.0;
        assert!((one.psi - (plug.psi + mean_total)).abs() < 1e-12);
        assert!(one.score_residuals.total.abs() < 1e-12);
    }

    #[test]
    fn constant_gamma_with_zero_residuals() {
        let d = data(&[1, 0], &[1.0, 0.0], &[3.0, 3.0]);
        let row = RatioRow { mu: [3.0, 3.0], pi1: 0.5, ratio: 1.0, gamma: 3.0, kappa: [3.0, 3.0] };
        let r = onestep_ratio(&[row; 2], &d, 1, &Folds::single(2)).unwrap();
        assert_eq!(r.psi, 3.0);
        assert_eq!(r.se, 0.0);
    }
}
