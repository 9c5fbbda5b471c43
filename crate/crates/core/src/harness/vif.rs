use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Variance inflation factor of one covariate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vif {
    /// `1 / (1 − R²)`, or `+∞` when the column is a linear combination of
    /// the others.
    pub value: f64,
    pub collinear: bool,
}

const COLLINEAR_TOL: f64 = 1e-10;

/// VIF of column `target`: regress it by least squares (with intercept) on
/// every other column and return `1 / (1 − R²)`.
pub fn vif(columns: &[Vec<f64>], target: usize) -> Result<Vif> {
    let d = columns.len();
    if target >= d {
        return Err(invalid(format!(
            "column {target} out of range for {d} columns"
        )));
    }
    let rows = columns[target].len();
    if columns.iter().any(|c| c.len() != rows) {
        return Err(invalid("columns have different lengths"));
    }
    if rows < d + 2 {
        return Err(invalid(format!(
            "need at least {} rows for {d} columns, got {rows}",
            d + 2
        )));
    }
    let y = DVector::from_column_slice(&columns[target]);
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Ok(Vif {
            value: f64::INFINITY,
            collinear: true,
        });
    }
    let others: Vec<usize> = (0..d).filter(|&j| j != target).collect();
    let design = DMatrix::from_fn(rows, others.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            columns[others[j - 1]][i]
        }
    });
    let svd = design.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-12 * svd.singular_values.max())
        .map_err(|e| invalid(format!("least squares failed: {e}")))?;
    let residual = &y - design * beta;
    let one_minus_r2 = residual.norm_squared() / sst;
    if one_minus_r2 <= COLLINEAR_TOL {
        return Ok(Vif {
            value: f64::INFINITY,
            collinear: true,
        });
    }
    Ok(Vif {
        value: 1.0 / one_minus_r2,
        collinear: false,
    })
}

/// VIF of every column.
pub fn vif_all(columns: &[Vec<f64>]) -> Result<Vec<Vif>> {
    (0..columns.len()).map(|j| vif(columns, j)).collect()
}
