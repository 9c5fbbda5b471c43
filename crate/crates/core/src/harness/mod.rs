//! Seeded Monte Carlo studies producing long-format result tables.
//!
//! Every random draw comes from a stream keyed by the master seed, the study
//! id, the population size and the replicate index, so results are identical
//! whatever the thread count or execution order.

mod c4;
mod c9;
mod consistency;
mod vif;
mod wine;

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::kn_schedule;
use crate::design::DesignSpec;
use crate::error::{invalid, Result};
use crate::grid;
use crate::population::{Population, RegressionFamily, SuperpopSpec};

pub use c4::run_c4_study;
pub use c9::run_c9_study;
pub use consistency::run_consistency_study;
pub use vif::{vif, vif_all, Vif};
pub use wine::{corner_grid, run_wine_study};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyId {
    C4,
    C9,
    Consistency,
    Wine,
}

impl StudyId {
    pub fn name(self) -> &'static str {
        match self {
            StudyId::C4 => "c4",
            StudyId::C9 => "c9",
            StudyId::Consistency => "consistency",
            StudyId::Wine => "wine",
        }
    }
}

impl fmt::Display for StudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c4" => Ok(StudyId::C4),
            "c9" => Ok(StudyId::C9),
            "consistency" => Ok(StudyId::Consistency),
            "wine" => Ok(StudyId::Wine),
            other => Err(invalid(format!("unknown study `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(invalid(format!("unknown preset `{other}`"))),
        }
    }
}

/// How the number of neighbors follows the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnRule {
    /// `⌊√n⌋`.
    Sqrt,
    Fixed(usize),
    /// Rate-optimal schedule for the covariate dimension.
    Theory {
        m5: f64,
    },
}

impl KnRule {
    pub fn apply(&self, n: usize, dim: usize) -> Result<usize> {
        let k = match *self {
            KnRule::Sqrt => n.isqrt(),
            KnRule::Fixed(k) => k,
            KnRule::Theory { m5 } => kn_schedule(dim, n, m5),
        };
        if k == 0 || k > n {
            return Err(invalid(format!("k = {k} is not in 1..={n}")));
        }
        Ok(k)
    }
}

/// Where the estimators are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridSpec {
    /// `lo, lo + step, ..., hi`.
    Stepped { lo: f64, hi: f64, step: f64 },
    /// `count` equally spaced values between the smallest and largest
    /// covariate of the largest population.
    Span { count: usize },
    /// `count` vectors drawn without replacement from the `3^d` combinations
    /// of each covariate's minimum, midpoint and maximum.
    Corners { count: usize },
}

/// Everything needed to reproduce a study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyId,
    pub preset: Preset,
    pub sizes: Vec<usize>,
    pub fraction: f64,
    pub replicates: usize,
    pub seed: u64,
    pub designs: Vec<String>,
    pub kn: KnRule,
    pub grid: GridSpec,
    pub regression: RegressionFamily,
    pub noise_sd: f64,
    /// Scale applied to the rate-shape overlay curve.
    pub adjustment: f64,
    /// Shares of `n` given to the quartile strata.
    pub strata_fractions: Vec<f64>,
    /// Neighbors used by the full-data reference estimator; `⌊√N⌋` if unset.
    pub reference_k: Option<usize>,
    /// Standardize covariates with the full-data mean and deviation.
    pub standardize: bool,
    pub dataset: Option<PathBuf>,
}

impl StudyConfig {
    pub fn preset(study: StudyId, preset: Preset) -> StudyConfig {
        let paper = preset == Preset::Paper;
        let unit_grid = GridSpec::Stepped {
            lo: 0.0,
            hi: 1.0,
            step: 0.02,
        };
        let base = StudyConfig {
            study,
            preset,
            sizes: vec![],
            fraction: 0.4,
            replicates: 1,
            seed: 1,
            designs: vec!["srswor".into()],
            kn: KnRule::Sqrt,
            grid: unit_grid,
            regression: RegressionFamily::LinearSine,
            noise_sd: 0.5,
            adjustment: 1.0,
            strata_fractions: vec![0.1, 0.2, 0.2, 0.5],
            reference_k: None,
            standardize: false,
            dataset: None,
        };
        match study {
            StudyId::C4 => {
                let mut sizes = vec![50, 100, 200, 500, 1000, 5000, 10_000, 20_000];
                if paper {
                    sizes.push(50_000);
                }
                StudyConfig {
                    sizes,
                    designs: vec!["pps".into(), "srswor".into(), "stratified".into()],
                    ..base
                }
            }
            StudyId::C9 => StudyConfig {
                sizes: if paper {
                    (10..=50).step_by(5).collect()
                } else {
                    vec![10, 15, 20]
                },
                ..base
            },
            StudyId::Consistency => {
                let mut sizes = vec![50, 100, 200, 500, 1000, 5000];
                if paper {
                    sizes.extend([10_000, 20_000, 50_000]);
                }
                StudyConfig {
                    sizes,
                    fraction: 0.2,
                    replicates: if paper { 1000 } else { 200 },
                    grid: GridSpec::Span { count: 10 },
                    adjustment: 2.2,
                    ..base
                }
            }
            StudyId::Wine => StudyConfig {
                sizes: vec![100, 500, 1000, 2000, 4898],
                fraction: 0.2,
                replicates: if paper { 1000 } else { 200 },
                grid: GridSpec::Corners { count: 100 },
                adjustment: 4.5,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(invalid(format!(
                "sampling fraction must lie in (0, 1), got {}",
                self.fraction
            )));
        }
        if self.replicates == 0 {
            return Err(invalid("at least one replicate is required"));
        }
        if self.sizes.is_empty() {
            return Err(invalid("the population size ladder is empty"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "population sizes must be strictly increasing, got {:?}",
                self.sizes
            )));
        }
        for &big_n in &self.sizes {
            sample_size(self.fraction, big_n)?;
        }
        if self.designs.is_empty() {
            return Err(invalid("no designs configured"));
        }
        let allowed: &[&str] = match self.study {
            StudyId::C4 => &["pps", "srswor", "stratified"],
            _ => &["srswor"],
        };
        for d in &self.designs {
            if !allowed.contains(&d.as_str()) {
                return Err(invalid(format!(
                    "design `{d}` is not available for the {} study (allowed: {})",
                    self.study,
                    allowed.join(", ")
                )));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid(format!(
                "noise sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        if !(self.adjustment >= 0.0 && self.adjustment.is_finite()) {
            return Err(invalid(format!(
                "adjustment must be finite and >= 0, got {}",
                self.adjustment
            )));
        }
        if self.reference_k == Some(0) {
            return Err(invalid("reference k must be at least 1"));
        }
        if let GridSpec::Span { count } | GridSpec::Corners { count } = self.grid {
            if count == 0 {
                return Err(invalid("grid needs at least one point"));
            }
        }
        Ok(())
    }

    pub(crate) fn superpopulation(&self) -> SuperpopSpec {
        SuperpopSpec {
            regression: self.regression,
            noise_sd: self.noise_sd,
            dim: 1,
        }
    }

    /// One-dimensional grid points; `span_of` supplies the covariate range for
    /// [`GridSpec::Span`].
    pub(crate) fn line_grid(&self, span_of: &Population) -> Result<Vec<Vec<f64>>> {
        match self.grid {
            GridSpec::Stepped { lo, hi, step } => {
                Ok(grid::as_points(&grid::stepped(lo, hi, step)?))
            }
            GridSpec::Span { count } => {
                let x = span_of.column(0);
                let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(grid::as_points(&grid::equally_spaced(lo, hi, count)?))
            }
            GridSpec::Corners { .. } => Err(invalid("corner grids need a multivariate dataset")),
        }
    }
}

/// `⌊f N⌋`, guarded against representation error and required to be ≥ 1.
pub fn sample_size(fraction: f64, population_size: usize) -> Result<usize> {
    let n = (fraction * population_size as f64 + 1e-9).floor() as usize;
    if n == 0 {
        return Err(invalid(format!(
            "fraction {fraction} of {population_size} units selects nobody"
        )));
    }
    Ok(n.min(population_size))
}

/// Build a named design for a population.
pub fn build_design(name: &str, pop: &Population, n: usize, strata: &[f64]) -> Result<DesignSpec> {
    match name {
        "srswor" => Ok(DesignSpec::Srswor { n }),
        "pps" => Ok(DesignSpec::PpsSystematic { n }),
        "stratified" => DesignSpec::stratified_by_quantiles(pop, n, strata),
        other => Err(invalid(format!("unknown design `{other}`"))),
    }
}

/// One row of a long-format result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub study: String,
    pub population_size: usize,
    pub sample_size: usize,
    pub kn: usize,
    pub design: String,
    pub grid_point: Option<usize>,
    /// `None` marks an aggregate over replicates.
    pub replicate: Option<usize>,
    pub statistic: String,
    pub value: f64,
}

impl Record {
    fn key_cmp(&self, other: &Record) -> Ordering {
        (
            &self.study,
            self.population_size,
            &self.design,
            &self.statistic,
            self.grid_point,
            self.replicate,
            self.sample_size,
            self.kn,
        )
            .cmp(&(
                &other.study,
                other.population_size,
                &other.design,
                &other.statistic,
                other.grid_point,
                other.replicate,
                other.sample_size,
                other.kn,
            ))
            .then(self.value.total_cmp(&other.value))
    }
}

/// Records plus optional side tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyResult {
    pub records: Vec<Record>,
    /// Evaluation points, persisted so later runs can be compared.
    pub grid: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl StudyResult {
    /// Sort records by key.
    pub fn sort(&mut self) {
        self.records.sort_by(Record::key_cmp);
    }

    /// Records with the given statistic, in key order.
    pub fn select<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records
            .iter()
            .filter(move |r| r.statistic == statistic)
    }

    /// Aggregate (non-grid) value of `statistic` at `population_size` for
    /// `design`.
    pub fn value(&self, population_size: usize, design: &str, statistic: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| {
                r.population_size == population_size
                    && r.design == design
                    && r.statistic == statistic
                    && r.grid_point.is_none()
                    && r.replicate.is_none()
            })
            .map(|r| r.value)
    }
}

/// Context shared by every record of one population size and design.
#[derive(Debug, Clone)]
pub(crate) struct RecordScope<'a> {
    pub study: StudyId,
    pub population_size: usize,
    pub sample_size: usize,
    pub kn: usize,
    pub design: &'a str,
}

impl RecordScope<'_> {
    pub fn record(
        &self,
        statistic: &str,
        grid_point: Option<usize>,
        replicate: Option<usize>,
        value: f64,
    ) -> Record {
        Record {
            study: self.study.name().to_string(),
            population_size: self.population_size,
            sample_size: self.sample_size,
            kn: self.kn,
            design: self.design.to_string(),
            grid_point,
            replicate,
            statistic: statistic.to_string(),
            value,
        }
    }
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per-grid-point MSE records, their median and the overlay curve, plus
/// the individual replicate estimates.
pub(crate) fn mse_records(
    scope: &RecordScope<'_>,
    estimates: &[Vec<f64>],
    targets: &[f64],
    shape: f64,
    adjustment: f64,
) -> Vec<Record> {
    let reps = estimates.len() as f64;
    let mut out = Vec::new();
    let mut mses = Vec::with_capacity(targets.len());
    for (g, &target) in targets.iter().enumerate() {
        let mse = estimates
            .iter()
            .map(|e| (e[g] - target).powi(2))
            .sum::<f64>()
            / reps;
        mses.push(mse);
        out.push(scope.record("mse", Some(g), None, mse));
        out.push(scope.record("target", Some(g), None, target));
    }
    for (l, est) in estimates.iter().enumerate() {
        for (g, &v) in est.iter().enumerate() {
            out.push(scope.record("estimate", Some(g), Some(l), v));
        }
    }
    out.push(scope.record("median_mse", None, None, median(&mses)));
    out.push(scope.record(
        "mean_mse",
        None,
        None,
        mses.iter().sum::<f64>() / mses.len() as f64,
    ));
    out.push(scope.record("rate_shape", None, None, shape));
    out.push(scope.record("overlay", None, None, adjustment * shape));
    out.push(scope.record("replicates", None, None, reps));
    out
}

/// Run any study. The wine study reads `config.dataset`.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    match config.study {
        StudyId::C4 => run_c4_study(config),
        StudyId::C9 => run_c9_study(config),
        StudyId::Consistency => run_consistency_study(config),
        StudyId::Wine => {
            let path = config.dataset.as_deref().ok_or_else(|| {
                invalid(format!(
                    "the wine study needs the dataset path (expected the UCI file `{}`)",
                    crate::io::WINE_FILE_NAME
                ))
            })?;
            run_wine_study(config, path)
        }
    }
}
