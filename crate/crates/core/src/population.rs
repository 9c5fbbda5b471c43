//! Finite populations and the superpopulation model used to simulate them.
//!
//! Populations are stored row-major (`x[i * d + j]` is coordinate `j` of unit
//! `i`). Unit ids are the zero-based row positions. A population generated at
//! size `N` is the prefix of the one generated at any larger size with the same
//! spec and seed, so a whole ladder of embedded populations is obtained by
//! generating once and taking prefixes.

use std::str::FromStr;

use rand::distr::{Distribution, Open01};
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Tag};

/// A finite population of `(x, y, z)` records.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Option<Vec<f64>>,
}

impl Population {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<f64>, z: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("population dimension must be at least 1"));
        }
        if y.is_empty() {
            return Err(invalid("population must contain at least one unit"));
        }
        if x.len() != y.len() * dim {
            return Err(invalid(format!(
                "covariate matrix has {} values, expected {} rows x {} columns",
                x.len(),
                y.len(),
                dim
            )));
        }
        if let Some(z) = &z {
            if z.len() != y.len() {
                return Err(invalid(format!(
                    "size variable has {} values, expected {}",
                    z.len(),
                    y.len()
                )));
            }
            if let Some(i) = z.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(invalid(format!(
                    "size variable must be strictly positive, unit {i} has {}",
                    z[i]
                )));
            }
        }
        Ok(Population { dim, x, y, z })
    }

    /// Number of units `N`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Covariate dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn size_variable(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    /// Column `j` of the covariate matrix.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// The first `n` units, bit-for-bit.
    pub fn prefix(&self, n: usize) -> Result<Population> {
        if n == 0 || n > self.len() {
            return Err(invalid(format!(
                "prefix size {n} outside 1..={}",
                self.len()
            )));
        }
        Ok(Population {
            dim: self.dim,
            x: self.x[..n * self.dim].to_vec(),
            y: self.y[..n].to_vec(),
            z: self.z.as_ref().map(|z| z[..n].to_vec()),
        })
    }

    /// Replace the size variable.
    pub fn with_size_variable(self, z: Vec<f64>) -> Result<Population> {
        Population::new(self.dim, self.x, self.y, Some(z))
    }
}

/// Regression function families for simulated populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RegressionFamily {
    /// `2x + sin(2 * 3.14 * x)`, summed over coordinates.
    LinearSine,
    /// Same as [`RegressionFamily::LinearSine`] with `π` in place of `3.14`.
    LinearSinePi,
    /// `m(x) = 1`.
    Constant,
}

impl RegressionFamily {
    pub fn name(self) -> &'static str {
        match self {
            RegressionFamily::LinearSine => "2x+sin",
            RegressionFamily::LinearSinePi => "2x+sin-pi",
            RegressionFamily::Constant => "constant",
        }
    }
}

impl FromStr for RegressionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2x+sin" => Ok(RegressionFamily::LinearSine),
            "2x+sin-pi" => Ok(RegressionFamily::LinearSinePi),
            "constant" => Ok(RegressionFamily::Constant),
            other => Err(Error::UnsupportedModel(format!(
                "unknown regression family {other:?} (known: 2x+sin, 2x+sin-pi, constant)"
            ))),
        }
    }
}

impl TryFrom<String> for RegressionFamily {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RegressionFamily> for String {
    fn from(f: RegressionFamily) -> String {
        f.name().to_string()
    }
}

/// Superpopulation model: `y = m(x) + ε`, `x ~ U(0,1)^d`, `ε ~ N(0, noise_sd²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpopSpec {
    pub regression: RegressionFamily,
    pub noise_sd: f64,
    pub dim: usize,
}

impl Default for SuperpopSpec {
    fn default() -> Self {
        SuperpopSpec {
            regression: RegressionFamily::LinearSine,
            noise_sd: 0.5,
            dim: 1,
        }
    }
}

impl SuperpopSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("superpopulation dimension must be at least 1"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(invalid(format!(
                "noise standard deviation must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Evaluate the regression function `m(x)`.
pub fn true_regression(spec: &SuperpopSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(invalid(format!(
            "point has dimension {}, model expects {}",
            x.len(),
            spec.dim
        )));
    }
    Ok(regression_value(spec.regression, x))
}

pub(crate) fn regression_value(family: RegressionFamily, x: &[f64]) -> f64 {
    match family {
        RegressionFamily::LinearSine => x.iter().map(|&v| 2.0 * v + (2.0 * 3.14 * v).sin()).sum(),
        RegressionFamily::LinearSinePi => x
            .iter()
            .map(|&v| 2.0 * v + (2.0 * std::f64::consts::PI * v).sin())
            .sum(),
        RegressionFamily::Constant => 1.0,
    }
}

/// Generate one population per size, each a prefix of the largest.
///
/// Covariates come from one stream and noise from another, so the values of
/// unit `i` do not depend on the largest size requested. The size variable is
/// the first covariate coordinate.
pub fn generate_embedded_populations(
    spec: &SuperpopSpec,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<Population>> {
    spec.validate()?;
    if sizes.is_empty() {
        return Err(invalid("at least one population size is required"));
    }
    if sizes[0] == 0 {
        return Err(invalid("population sizes must be at least 1"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!(
            "population sizes must be strictly increasing, got {sizes:?}"
        )));
    }
    let largest = generate_population(spec, *sizes.last().unwrap(), seed)?;
    sizes.iter().map(|&n| largest.prefix(n)).collect()
}

/// Generate a single population of size `n`.
pub fn generate_population(spec: &SuperpopSpec, n: usize, seed: u64) -> Result<Population> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("population size must be at least 1"));
    }
    let d = spec.dim;
    let mut cov_rng = rng::stream(seed, &[Tag::Str("population"), Tag::Str("covariates")]);
    let x: Vec<f64> = Open01.sample_iter(&mut cov_rng).take(n * d).collect();

    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| invalid(e.to_string()))?;
    let mut noise_rng = rng::stream(seed, &[Tag::Str("population"), Tag::Str("noise")]);
    let y: Vec<f64> = x
        .chunks_exact(d)
        .map(|row| {
            let e: f64 = noise.sample(&mut noise_rng);
            regression_value(spec.regression, row) + if spec.noise_sd > 0.0 { e } else { 0.0 }
        })
        .collect();
    let z: Vec<f64> = x.iter().step_by(d).copied().collect();
    Population::new(d, x, y, Some(z))
}
