//! Observed data `(X, A, M, Y)`, CSV ingestion and fold assignment.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediatorKind {
    Binary,
    Continuous,
    Multivariate,
}

/// Immutable observed sample. Covariates and mediators are stored row-major
/// (`n × p` and `n × d`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    a: Vec<u8>,
    m: DMatrix<f64>,
    y: Vec<f64>,
    mediator_kind: MediatorKind,
}

fn is_binary(v: f64) -> bool {
    v == 0.0 || v == 1.0
}

impl Dataset {
    /// Builds a dataset, inferring the mediator kind when `kind` is `None`.
    pub fn new(
        x: DMatrix<f64>,
        a: Vec<u8>,
        m: DMatrix<f64>,
        y: Vec<f64>,
        kind: Option<MediatorKind>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        if x.nrows() != n || a.len() != n || m.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "columns have lengths x={}, a={}, m={}, y={}",
                x.nrows(),
                a.len(),
                m.nrows(),
                n
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidDataset("at least one covariate is required".into()));
        }
        if m.ncols() == 0 {
            return Err(Error::InvalidDataset("at least one mediator is required".into()));
        }
        for (row, &ai) in a.iter().enumerate() {
            if ai > 1 {
                return Err(Error::NonBinaryTreatment {
                    column: "A".into(),
                    row,
                    value: ai as f64,
                });
            }
        }
        check_finite(&x, "X")?;
        check_finite(&m, "M")?;
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { column: "Y".into(), row });
        }

        let inferred = if m.ncols() > 1 {
            MediatorKind::Multivariate
        } else if m.iter().all(|&v| is_binary(v)) {
            MediatorKind::Binary
        } else {
            MediatorKind::Continuous
        };
        let mediator_kind = match kind {
            None => inferred,
            Some(MediatorKind::Binary) => {
                if m.ncols() != 1 || !m.iter().all(|&v| is_binary(v)) {
                    return Err(Error::InvalidDataset(
                        "binary mediator must be a single 0/1 column".into(),
                    ));
                }
                MediatorKind::Binary
            }
            Some(MediatorKind::Continuous) => {
                if m.ncols() != 1 {
                    return Err(Error::InvalidDataset(
                        "continuous mediator kind requires a single column".into(),
                    ));
                }
                MediatorKind::Continuous
            }
            Some(MediatorKind::Multivariate) => MediatorKind::Multivariate,
        };

        Ok(Dataset { x, a, m, y, mediator_kind })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_mediators(&self) -> usize {
        self.m.ncols()
    }

    pub fn mediator_kind(&self) -> MediatorKind {
        self.mediator_kind
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn m_row(&self, i: usize) -> Vec<f64> {
        self.m.row(i).iter().copied().collect()
    }

    /// First mediator column value; the only one for univariate mediators.
    pub fn m_scalar(&self, i: usize) -> f64 {
        self.m[(i, 0)]
    }

    pub fn a_f64(&self, i: usize) -> f64 {
        self.a[i] as f64
    }

    pub fn outcome_is_binary(&self) -> bool {
        self.y.iter().all(|&v| is_binary(v))
    }

    pub fn arm_size(&self, arm: u8) -> usize {
        self.a.iter().filter(|&&a| a == arm).count()
    }

    /// Rows (in the given order) as a new dataset with the same mediator kind.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.x.ncols(), |r, c| self.x[(rows[r], c)]);
        let m = DMatrix::from_fn(rows.len(), self.m.ncols(), |r, c| self.m[(rows[r], c)]);
        Dataset {
            x,
            a: rows.iter().map(|&i| self.a[i]).collect(),
            m,
            y: rows.iter().map(|&i| self.y[i]).collect(),
            mediator_kind: self.mediator_kind,
        }
    }

    /// Same rows with a different outcome vector.
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(
            self.x.clone(),
            self.a.clone(),
            self.m.clone(),
            y,
            Some(self.mediator_kind),
        )
    }
}

fn check_finite(mat: &DMatrix<f64>, name: &str) -> Result<()> {
    for r in 0..mat.nrows() {
        for c in 0..mat.ncols() {
            if !mat[(r, c)].is_finite() {
                return Err(Error::NonFiniteValue {
                    column: format!("{name}[{c}]"),
                    row: r,
                });
            }
        }
    }
    Ok(())
}

/// Maps CSV header names onto dataset roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
    pub mediators: Vec<String>,
    /// Overrides mediator-kind inference.
    pub mediator_kind: Option<MediatorKind>,
}

impl Schema {
    pub fn new(
        outcome: impl Into<String>,
        treatment: impl Into<String>,
        covariates: &[&str],
        mediators: &[&str],
    ) -> Self {
        Schema {
            outcome: outcome.into(),
            treatment: treatment.into(),
            covariates: covariates.iter().map(|s| s.to_string()).collect(),
            mediators: mediators.iter().map(|s| s.to_string()).collect(),
            mediator_kind: None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    if schema.covariates.is_empty() {
        return Err(Error::InvalidDataset("schema names no covariate columns".into()));
    }
    if schema.mediators.is_empty() {
        return Err(Error::InvalidDataset("schema names no mediator columns".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let y_idx = index_of(&schema.outcome)?;
    let a_idx = index_of(&schema.treatment)?;
    let x_idx: Vec<usize> = schema.covariates.iter().map(|c| index_of(c)).collect::<Result<_>>()?;
    let m_idx: Vec<usize> = schema.mediators.iter().map(|c| index_of(c)).collect::<Result<_>>()?;

    let mut x = Vec::new();
    let mut m = Vec::new();
    let mut a = Vec::new();
    let mut y = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("").trim();
            let v: f64 = raw.parse().map_err(|_| Error::NonFiniteValue {
                column: name.to_string(),
                row,
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { column: name.to_string(), row });
            }
            Ok(v)
        };
        y.push(field(y_idx, &schema.outcome)?);
        let av = field(a_idx, &schema.treatment)?;
        if !is_binary(av) {
            return Err(Error::NonBinaryTreatment {
                column: schema.treatment.clone(),
                row,
                value: av,
            });
        }
        a.push(av as u8);
        for (&idx, name) in x_idx.iter().zip(&schema.covariates) {
            x.push(field(idx, name)?);
        }
        for (&idx, name) in m_idx.iter().zip(&schema.mediators) {
            m.push(field(idx, name)?);
        }
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, x_idx.len(), &x);
    let m = DMatrix::from_row_slice(n, m_idx.len(), &m);
    Dataset::new(x, a, m, y, schema.mediator_kind)
}

/// Writes the dataset with the schema's column names. Floats use the shortest
/// representation that round-trips.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset, schema: &Schema) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    let mut wtr = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = schema.covariates.iter().map(String::as_str).collect();
    header.push(&schema.treatment);
    header.extend(schema.mediators.iter().map(String::as_str));
    header.push(&schema.outcome);
    if schema.covariates.len() != data.n_covariates() || schema.mediators.len() != data.n_mediators() {
        return Err(Error::DimensionMismatch(
            "schema column counts do not match the dataset".into(),
        ));
    }
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(data.a[i].to_string());
        rec.extend(data.m.row(i).iter().map(|v| format!("{v:?}")));
        rec.push(format!("{:?}", data.y[i]));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Balanced random assignment of `n` rows to `k` folds, labelled `0..k`.
pub fn split_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::TooManyFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    Ok(folds)
}

/// Fold membership of each row. A single fold means no sample splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    assignment: Vec<usize>,
    k: usize,
}

impl Folds {
    pub fn single(n: usize) -> Self {
        Folds { assignment: vec![0; n], k: 1 }
    }

    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
        if k == 0 {
            return Err(Error::InvalidDataset("empty fold assignment".into()));
        }
        for fold in 0..k {
            if !assignment.contains(&fold) {
                return Err(Error::InvalidConfig(format!("fold {fold} has no rows")));
            }
        }
        Ok(Folds { assignment, k })
    }

    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 1 {
            return Ok(Folds::single(n));
        }
        Folds::from_assignment(split_folds(n, k, seed)?)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn rows_in(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == fold).collect()
    }

    /// Training rows for fold `fold`; every row when there is a single fold.
    pub fn rows_outside(&self, fold: usize) -> Vec<usize> {
        if self.k == 1 {
            return (0..self.n()).collect();
        }
        (0..self.n()).filter(|&i| self.assignment[i] != fold).collect()
    }

    /// `(1/K) Σ_k mean_{i in fold k} values[i]`.
    pub fn fold_average(&self, values: &[f64]) -> f64 {
        let mut sums = vec![0.0; self.k];
        let mut counts = vec![0usize; self.k];
        for (i, v) in values.iter().enumerate() {
            sums[self.assignment[i]] += v;
            counts[self.assignment[i]] += 1;
        }
        sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).sum::<f64>() / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_ROWS: &str = "X,A,M,Y\n0.1,0,1,2.5\n0.5,1,0,1.0\n0.9,1,1,3.2\n0.3,0,0,0.4\n";

    fn schema() -> Schema {
        Schema::new("Y", "A", &["X"], &["M"])
    }

    #[test]
    fn four_row_binary_file() {
        let d = read_csv(FOUR_ROWS.as_bytes(), &schema()).unwrap();
        assert_eq!(d.n(), 4);
        assert_eq!(d.n_mediators(), 1);
        assert_eq!(d.mediator_kind(), MediatorKind::Binary);
    }

    #[test]
    fn non_binary_treatment_is_rejected() {
        let text = FOUR_ROWS.replace("0.5,1,0", "0.5,2,0");
        match read_csv(text.as_bytes(), &schema()) {
            Err(Error::NonBinaryTreatment { row, value, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(value, 2.0);
            }
            other => panic!("expected NonBinaryTreatment, got {other:?}"),
        }
    }

    #[test]
    fn two_mediators_are_multivariate() {
        let text = "X,A,M1,M2,Y\n0.1,0,1.5,-0.2,2\n0.2,1,0.3,2.2,1\n0.7,1,2.5,0.1,0\n";
        let s = Schema::new("Y", "A", &["X"], &["M1", "M2"]);
        let d = read_csv(text.as_bytes(), &s).unwrap();
        assert_eq!(d.mediator_kind(), MediatorKind::Multivariate);
        assert_eq!(d.n_mediators(), 2);
    }

    #[test]
    fn missing_and_non_finite_columns() {
        let s = Schema::new("Y", "A", &["X", "Z"], &["M"]);
        assert!(matches!(read_csv(FOUR_ROWS.as_bytes(), &s), Err(Error::MissingColumn(c)) if c == "Z"));
        let text = FOUR_ROWS.replace("3.2", "NaN");
        assert!(matches!(
            read_csv(text.as_bytes(), &schema()),
            Err(Error::NonFiniteValue { row: 2, .. })
        ));
    }

    #[test]
    fn mediator_kind_override() {
        let mut s = schema();
        s.mediator_kind = Some(MediatorKind::Continuous);
        let d = read_csv(FOUR_ROWS.as_bytes(), &s).unwrap();
        assert_eq!(d.mediator_kind(), MediatorKind::Continuous);
    }

    #[test]
    fn fold_sizes_are_balanced() {
        let f = split_folds(10, 5, 1).unwrap();
        for k in 0..5 {
            assert_eq!(f.iter().filter(|&&s| s == k).count(), 2);
        }
        let f = split_folds(7, 3, 1).unwrap();
        let mut sizes: Vec<_> = (0..3).map(|k| f.iter().filter(|&&s| s == k).count()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2, 3]);
        assert_eq!(split_folds(7, 3, 1).unwrap(), f);
        assert!(matches!(split_folds(3, 4, 0), Err(Error::TooManyFolds { .. })));
    }

    #[test]
    fn different_seeds_give_different_splits() {
        let splits: Vec<_> = (0..10).map(|s| split_folds(100, 5, s).unwrap()).collect();
        let mut distinct = splits.clone();
        distinct.sort();
        distinct.dedup();
        assert!(distinct.len() >= 9);
    }

    #[test]
    fn fold_average_is_mean_of_fold_means() {
        let folds = Folds::from_assignment(vec![0, 0, 1]).unwrap();
        assert_eq!(folds.fold_average(&[1.0, 3.0, 10.0]), (2.0 + 10.0) / 2.0);
        assert_eq!(Folds::single(3).fold_average(&[1.0, 3.0, 10.0]), 14.0 / 3.0);
    }
}
