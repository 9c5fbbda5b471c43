//! Evaluation grids.

use crate::error::{invalid, Result};

/// `count` equally spaced values from `lo` to `hi` inclusive.
pub fn equally_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("grid needs at least one point"));
    }
    if !(lo <= hi) {
        return Err(invalid(format!("grid bounds reversed: [{lo}, {hi}]")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * i as f64 / last
            }
        })
        .collect())
}

/// Values from `lo` to `hi` with the given increment, endpoints included.
pub fn stepped(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(invalid(format!("grid step must be positive, got {step}")));
    }
    let intervals = ((hi - lo) / step).round();
    if !(intervals >= 0.0) || ((hi - lo) - intervals * step).abs() > 1e-9 * step.max(hi - lo) {
        return Err(invalid(format!(
            "step {step} does not divide [{lo}, {hi}] evenly"
        )));
    }
    equally_spaced(lo, hi, intervals as usize + 1)
}

/// One-dimensional grid as a list of points.
pub fn as_points(values: &[f64]) -> Vec<Vec<f64>> {
    values.iter().map(|&v| vec![v]).collect()
}

/// The 51-point grid `0, 0.02, ..., 1`.
pub fn unit_grid_step_002() -> Vec<Vec<f64>> {
    as_points(&stepped(0.0, 1.0, 0.02).expect("valid grid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid() {
        let g = unit_grid_step_002();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], vec![0.0]);
        assert_eq!(g[50], vec![1.0]);
        assert!((g[1][0] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn spaced() {
        let g = equally_spaced(0.2, 0.8, 10).unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[9], 0.8);
        assert!(stepped(0.0, 1.0, 0.3).is_err());
        assert!(equally_spaced(1.0, 0.0, 3).is_err());
    }
}
