//! Sample splitting: nuisances are trained outside each fold and evaluated
//! on it. With a single fold everything is trained and evaluated on the full
//! sample.

use crate::config::EstimatorConfig;
use crate::data::{Dataset, Folds};
use crate::density::DensityRatioModel;
use crate::error::Result;
use crate::nuisance::{DensityRows, NuisanceSetDensity, NuisanceSetRatio, RatioRow, RatioSource};

/// Density-parameterized rows, each evaluated with its own fold's models.
pub fn density_rows(data: &Dataset, cfg: &EstimatorConfig, folds: &Folds) -> Result<DensityRows> {
    if folds.k() == 1 {
        return NuisanceSetDensity::fit(data, cfg)?.rows(data, cfg.a0, cfg.integration_grid_size);
    }
    let n = data.n();
    let mut binary = vec![None; n];
    let mut continuous = vec![None; n];
    for k in 0..folds.k() {
        let set = NuisanceSetDensity::fit(&data.subset(&folds.rows_outside(k)), cfg)?;
        let idx = folds.rows_in(k);
        match set.rows(&data.subset(&idx), cfg.a0, cfg.integration_grid_size)? {
            DensityRows::Binary(rows) => idx.iter().zip(rows).for_each(|(&i, r)| binary[i] = Some(r)),
            DensityRows::Continuous(rows) => idx.iter().zip(rows).for_each(|(&i, r)| continuous[i] = Some(r)),
        }
    }
    if binary.iter().all(Option::is_some) {
        Ok(DensityRows::Binary(binary.into_iter().flatten().collect()))
    } else {
        Ok(DensityRows::Continuous(continuous.into_iter().flatten().collect()))
    }
}

/// Ratio-parameterized rows: entry `k` holds fold `k`'s models evaluated on
/// every row.
pub fn ratio_rows_by_fold(
    data: &Dataset,
    cfg: &EstimatorConfig,
    source: &RatioSource,
    folds: &Folds,
) -> Result<Vec<Vec<RatioRow>>> {
    (0..folds.k())
        .map(|k| {
            let train = folds.rows_outside(k);
            let train_source = match source {
                RatioSource::Plugged(v) => RatioSource::Plugged(train.iter().map(|&i| v[i]).collect()),
                other => other.clone(),
            };
            let mut set = NuisanceSetRatio::fit(&data.subset(&train), cfg, &train_source)?;
            if let RatioSource::Plugged(v) = source {
                set.fratio = DensityRatioModel::Plugged(v.clone());
            }
            set.rows(data)
        })
        .collect()
}

/// Row `i` taken from the models of its own fold.
pub fn own_fold_rows(fold_rows: &[Vec<RatioRow>], folds: &Folds) -> Vec<RatioRow> {
    (0..folds.n()).map(|i| fold_rows[folds.fold_of(i)][i]).collect()
}
