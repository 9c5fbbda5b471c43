//! Closed-form constants and convergence-rate curves.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Constants entering the rate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub d: usize,
    /// Lower bound on first-order inclusion probabilities.
    pub lambda: f64,
    /// Bound on `|y|`.
    pub m1: f64,
    /// Lipschitz constant of the regression function.
    pub lipschitz: f64,
    /// Bound on the residual variance.
    pub sigma2: f64,
    /// Neighborhood density constant.
    pub c: f64,
    /// Tuning constant of the k schedule.
    pub m5: f64,
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams {
            d: 1,
            lambda: 1.0,
            m1: 1.0,
            lipschitz: 1.0,
            sigma2: 1.0,
            c: 1.0,
            m5: 1.0,
        }
    }
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid(format!("lambda = {} outside (0, 1]", self.lambda)));
        }
        for (name, v) in [
            ("M1", self.m1),
            ("L", self.lipschitz),
            ("sigma2", self.sigma2),
            ("C", self.c),
            ("M5", self.m5),
        ] {
            if !(v >= 0.0) {
                return Err(invalid(format!("{name} = {v} must be nonnegative")));
            }
        }
        Ok(())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `Γ(d/2 + 1)` from the integer and half-integer closed forms.
pub fn gamma_half_plus_one(d: usize) -> f64 {
    if d.is_multiple_of(2) {
        // Γ(m) = (m-1)! with m = d/2 + 1
        factorial(d / 2)
    } else {
        // Γ(m + 1/2) = (2m)! √π / (4^m m!) with m = (d+1)/2
        let m = d.div_ceil(2);
        let mut v = std::f64::consts::PI.sqrt();
        // (2m)! / (4^m m!) = Π_{i=1..m} (2i-1)/2, kept as a product for range.
        for i in 1..=m {
            v *= (2 * i - 1) as f64 / 2.0;
        }
        v
    }
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    Ok(std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_plus_one(d))
}

/// `c_d = 2^{3+2/d} (1+√d)² / V_d^{2/d}` for `d >= 2`.
pub fn c_d(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(invalid(format!(
            "c_d is defined for d >= 2, got d = {d}; d = 1 uses the constant 8"
        )));
    }
    let df = d as f64;
    let vd = unit_ball_volume(d)?;
    Ok(2f64.powf(3.0 + 2.0 / df) * (1.0 + df.sqrt()).powi(2) / vd.powf(2.0 / df))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// `1/k + k/n` (d = 1) or `1/k + (k/n)^{2/d}`.
    Shape,
    /// The bound with its constants for the hypothetical estimator.
    Constants,
}

/// Rate bound at `(k, n)`.
pub fn rate_bound(k: usize, n: usize, params: &TheoryParams, mode: BoundMode) -> Result<f64> {
    params.validate()?;
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    let d = params.d;
    let ratio = kf / nf;
    Ok(match (mode, d) {
        (BoundMode::Shape, 1) => 1.0 / kf + ratio,
        (BoundMode::Shape, _) => 1.0 / kf + ratio.powf(2.0 / d as f64),
        (BoundMode::Constants, 1) => {
            params.sigma2 / kf + 8.0 * params.lipschitz.powi(2) * params.c * ratio
        }
        (BoundMode::Constants, _) => {
            params.sigma2 / kf
                + c_d(d)? * params.lipschitz.powi(2) * (params.c * ratio).powf(2.0 / d as f64)
        }
    })
}

fn floor_tolerant(v: f64) -> usize {
    let f = v.floor();
    if (f + 1.0) - v <= 1e-9 * v.max(1.0) {
        (f + 1.0) as usize
    } else {
        f as usize
    }
}

/// Number of neighbors for sample size `n`: `⌊√n⌋` when `d = 1`, otherwise
/// `⌊M5^{d/(d+2)} n^{2/(d+2)}⌋`, clamped to `[1, n]`.
pub fn kn_schedule(d: usize, n: usize, m5: f64) -> usize {
    if n == 0 {
        return 1;
    }
    let k = if d <= 1 {
        n.isqrt()
    } else {
        let df = d as f64;
        floor_tolerant(m5.powf(df / (df + 2.0)) * (n as f64).powf(2.0 / (df + 2.0)))
    };
    k.clamp(1, n)
}

/// `(M2, M3, M4)` for a lower bound `λ` on the inclusion probabilities.
pub fn lemma1_constants(lambda: f64) -> Result<(f64, f64, f64)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("lambda = {lambda} outside (0, 1]")));
    }
    let inv = 1.0 / lambda;
    Ok((
        inv - 1.0,
        (inv * (inv - 2.0)).max(1.0),
        2.0 * inv + inv * inv,
    ))
}

/// Bound on `E_p[(m̂*_n - m̂_n)²]`:
/// `4 M1² [ (M2 + M3 E|r|)/k + N (c8 + M4 E|r|)/k ]`.
pub fn prop2_bound(
    params: &TheoryParams,
    k: usize,
    population_size: usize,
    c8_measure: f64,
    expected_max_abs_r: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(c8_measure >= 0.0) || !(expected_max_abs_r >= 0.0) || !(params.m1 >= 0.0) {
        return Err(invalid("bound inputs must be nonnegative"));
    }
    let (m2, m3, m4) = lemma1_constants(params.lambda)?;
    let kf = k as f64;
    let first = (m2 + m3 * expected_max_abs_r) / kf;
    let second = population_size as f64 / kf * (c8_measure + m4 * expected_max_abs_r);
    Ok(4.0 * params.m1 * params.m1 * (first + second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert_abs_diff_eq!(unit_ball_volume(1).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(unit_ball_volume(2).unwrap(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(
            unit_ball_volume(3).unwrap(),
            4.0 * PI / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(unit_ball_volume(4).unwrap(), PI * PI / 2.0, epsilon = 1e-12);
        assert!(unit_ball_volume(0).is_err());
    }

    #[test]
    fn volume_recurrence() {
        // V_d = V_{d-2} * 2π / d, independent of the Gamma route.
        for d in 3..=20 {
            let lhs = unit_ball_volume(d).unwrap();
            let rhs = unit_ball_volume(d - 2).unwrap() * 2.0 * PI / d as f64;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
        for d in 2..=20 {
            let rhs = unit_ball_volume(d - 1).unwrap() * PI.sqrt() * gamma_half_plus_one(d - 1)
                / gamma_half_plus_one(d);
            assert_abs_diff_eq!(unit_ball_volume(d).unwrap(), rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn cd_values() {
        assert_abs_diff_eq!(
            c_d(2).unwrap(),
            16.0 * (1.0 + 2f64.sqrt()).powi(2) / PI,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(c_d(2).unwrap(), 29.683936, epsilon = 1e-6);
        assert_abs_diff_eq!(c_d(4).unwrap(), 45.836, epsilon = 1e-3);
        for d in 2..=20 {
            let v = c_d(d).unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
        assert!(c_d(1).is_err());
    }

    #[test]
    fn shape_bounds() {
        let p = TheoryParams::default();
        assert_abs_diff_eq!(
            rate_bound(10, 100, &p, BoundMode::Shape).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        for n in [100usize, 10_000, 1_000_000] {
            let k = n.isqrt();
            let b = rate_bound(k, n, &p, BoundMode::Shape).unwrap();
            assert_abs_diff_eq!(b, 2.0 / (n as f64).sqrt(), epsilon = 1e-12);
        }
        assert!(rate_bound(0, 10, &p, BoundMode::Shape).is_err());
        assert!(rate_bound(11, 10, &p, BoundMode::Shape).is_err());
    }

    #[test]
    fn constants_bound() {
        let p = TheoryParams {
            d: 2,
            ..TheoryParams::default()
        };
        let b = rate_bound(10, 100, &p, BoundMode::Constants).unwrap();
        assert_abs_diff_eq!(b, 0.1 + c_d(2).unwrap() * 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.1 + 2.9683936, epsilon = 1e-6);
        let p1 = TheoryParams {
            sigma2: 2.0,
            lipschitz: 0.5,
            c: 3.0,
            ..TheoryParams::default()
        };
        assert_abs_diff_eq!(
            rate_bound(5, 50, &p1, BoundMode::Constants).unwrap(),
            2.0 / 5.0 + 8.0 * 0.25 * 3.0 * 0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn schedules() {
        assert_eq!(kn_schedule(1, 100, 1.0), 10);
        assert_eq!(kn_schedule(1, 99, 1.0), 9);
        assert_eq!(kn_schedule(2, 10_000, 1.0), 100);
        assert_eq!(kn_schedule(10, 4096, 1.0), 4);
        assert_eq!(kn_schedule(1, 1, 1.0), 1);
        assert_eq!(kn_schedule(3, 2, 1e-9), 1);
        assert_eq!(kn_schedule(2, 5, 1e6), 5);
    }

    #[test]
    fn schedule_satisfies_growth_conditions() {
        for d in [1usize, 2, 5] {
            let ladder = [1_000usize, 10_000, 100_000, 1_000_000];
            let ks: Vec<usize> = ladder.iter().map(|&n| kn_schedule(d, n, 1.0)).collect();
            assert!(ks.windows(2).all(|w| w[1] > w[0]), "{d}: {ks:?}");
            let fr: Vec<f64> = ladder
                .iter()
                .zip(&ks)
                .map(|(&n, &k)| k as f64 / n as f64)
                .collect();
            assert!(fr.windows(2).all(|w| w[1] < w[0]), "{d}: {fr:?}");
        }
    }

    #[test]
    fn shape_rate_at_schedule() {
        let p = |d| TheoryParams {
            d,
            ..TheoryParams::default()
        };
        for d in [1usize, 2, 3] {
            let exponent = if d == 1 { 0.5 } else { 2.0 / (d as f64 + 2.0) };
            let ratios: Vec<f64> = [1_000usize, 10_000, 100_000]
                .iter()
                .map(|&n| {
                    let k = kn_schedule(d, n, 1.0);
                    rate_bound(k, n, &p(d), BoundMode::Shape).unwrap() / (n as f64).powf(-exponent)
                })
                .collect();
            let (lo, hi) = ratios
                .iter()
                .fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
            assert!(hi / lo < 1.1, "d={d}: {ratios:?}");
        }
    }

    #[test]
    fn lemma_constants() {
        assert_eq!(lemma1_constants(1.0).unwrap(), (0.0, 1.0, 3.0));
        assert_eq!(lemma1_constants(0.5).unwrap(), (1.0, 1.0, 8.0));
        assert_eq!(lemma1_constants(0.25).unwrap(), (3.0, 8.0, 24.0));
        assert!(lemma1_constants(0.0).is_err());
        assert!(lemma1_constants(1.5).is_err());
    }

    #[test]
    fn prop2_values() {
        let census = TheoryParams {
            m1: 3.0,
            lambda: 1.0,
            ..TheoryParams::default()
        };
        assert_eq!(prop2_bound(&census, 5, 100, 0.0, 0.0).unwrap(), 0.0);
        let p = TheoryParams {
            m1: 1.0,
            lambda: 0.5,
            ..TheoryParams::default()
        };
        assert_abs_diff_eq!(
            prop2_bound(&p, 10, 100, 0.01, 0.0).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        let b: Vec<f64> = (1..20)
            .map(|k| prop2_bound(&p, k, 100, 0.01, 0.02).unwrap())
            .collect();
        assert!(b.windows(2).all(|w| w[1] <= w[0]));
    }
}
