use nalgebra::DMatrix;

use crate::{Error, Result};

/// Feature matrix with one real label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, feature_names: Vec<String>, target_name: impl Into<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape { expected: x.nrows(), got: y.len() });
        }
        if y.is_empty() {
            return Err(Error::InvalidParameter("a dataset needs at least one row".into()));
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::Shape { expected: x.ncols(), got: feature_names.len() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dataset values must be finite".into()));
        }
        Ok(Dataset { x, y, feature_names, target_name: target_name.into() })
    }

    /// Builds a dataset from row vectors with generated column names.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::Shape { expected: ncols, got: bad.len() });
        }
        let x = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        let names = (0..ncols).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names, "y")
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(idx.len(), self.x.ncols(), |i, j| self.x[(idx[i], j)]);
        Dataset {
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }

    /// Same features with replaced labels.
    pub fn with_labels(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), y, self.feature_names.clone(), self.target_name.clone())
    }
}
