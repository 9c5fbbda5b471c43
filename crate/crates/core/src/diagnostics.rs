//! Computable diagnostics for the design conditions: local sampling fraction
//! (C4), minimum inclusion probability (C7), pairwise dependence (C8) and the
//! conditional joint-inclusion gap `r_ij` (C9).
//!
//! Diagnostics report values only, with no pass/fail verdict.

use rayon::prelude::*;

use crate::design::Sample;
use crate::design::{
    enumerate_all_samples, inclusion_probs, DesignSpec, InclusionProbs, JointProbs,
};
use crate::error::{invalid, Error, Result};
use crate::estimators::{partition_signature, PopulationKnn, SampleKnn};
use crate::neighbors::{Backend, NeighborIndex};
use crate::population::Population;

/// Condition id, summary statistics and a per-point/per-pair detail table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: String,
    pub summary: Vec<(String, f64)>,
    /// `(label, index, value)` rows.
    pub detail: Vec<(String, usize, f64)>,
}

/// Per-grid-point ratio of the overall sampling fraction to the local one.
#[derive(Debug, Clone, PartialEq)]
pub struct C4Scan {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

impl C4Scan {
    pub fn to_report(&self) -> ConditionReport {
        ConditionReport {
            condition: "C4".into(),
            summary: vec![("max_ratio".into(), self.max_ratio)],
            detail: self
                .ratios
                .iter()
                .enumerate()
                .map(|(g, &r)| ("ratio".to_string(), g, r))
                .collect(),
        }
    }
}

/// `(n/N) / (#S ∩ B / #U ∩ B)` at every grid point, with
/// `B = B(x, ρ_{kS}(x))`. The sample count in the ball is `k` unless units
/// tie at the boundary.
pub fn c4_ratio_scan_with(
    pop_knn: &PopulationKnn<'_>,
    sample_knn: &SampleKnn<'_>,
    k: usize,
    grid: &[Vec<f64>],
) -> Result<C4Scan> {
    let fraction = sample_knn.len() as f64 / pop_knn.population().len() as f64;
    let ratios = grid
        .iter()
        .map(|x| {
            let (knn, sample_ball) = sample_knn.ball(x, k)?;
            let pop_ball = pop_knn.ball(x, knn.radius_sq)?;
            Ok(fraction * pop_ball.len() as f64 / sample_ball.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(C4Scan { ratios, max_ratio })
}

pub fn c4_ratio_scan(
    pop: &Population,
    sample: &Sample,
    k: usize,
    grid: &[Vec<f64>],
) -> Result<C4Scan> {
    if grid.is_empty() {
        return Err(invalid("grid must contain at least one point"));
    }
    let pi = vec![1.0; pop.len()];
    let sample_knn = SampleKnn::new(pop, sample, &pi, Backend::Auto)?;
    c4_ratio_scan_with(
        &PopulationKnn::new(pop, Backend::Auto),
        &sample_knn,
        k,
        grid,
    )
}

/// `min_i π_i`.
pub fn c7_min_inclusion(probs: &InclusionProbs) -> f64 {
    probs.pi().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `max_{i≠j} |π_ij/(π_i π_j) − 1|` computed pair by pair from `probs`.
pub fn max_pairwise_dependence(probs: &InclusionProbs) -> Result<f64> {
    let n = probs.len();
    let pi = probs.pi();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = probs.pij(i, j).ok_or_else(|| {
                Error::UnsupportedDiagnostic("joint inclusion probabilities unavailable".into())
            })?;
            let denom = pi[i] * pi[j];
            if !(denom > 0.0) {
                return Err(Error::UnsupportedDiagnostic(format!(
                    "units {i} and {j} have zero inclusion probability"
                )));
            }
            best = best.max((pij / denom - 1.0).abs());
        }
    }
    Ok(best)
}

/// Dependence measure `max_{i≠j} |π_ij/(π_i π_j) − 1|`.
///
/// Closed forms per design; dense (estimated) matrices are scanned pair by
/// pair. Pairs that cannot occur (for instance same-cluster pairs when every
/// cluster is a singleton) do not contribute.
pub fn c8_dependence_measure(probs: &InclusionProbs) -> Result<f64> {
    let big_n = probs.len();
    let max_of = |vals: &[Option<f64>]| vals.iter().flatten().copied().fold(0.0, f64::max);
    Ok(match probs.joint() {
        JointProbs::Srswor { population_size, n } => {
            if *population_size < 2 {
                0.0
            } else {
                let (big, n) = (*population_size as f64, *n as f64);
                (big - n) / (n * (big - 1.0))
            }
        }
        JointProbs::Independent => 0.0,
        JointProbs::Stratified { sizes, .. } => {
            let within: Vec<Option<f64>> = sizes
                .iter()
                .map(|&(size, n_h)| {
                    (size >= 2).then(|| {
                        let (size, n_h) = (size as f64, n_h as f64);
                        (size - n_h) / (n_h * (size - 1.0))
                    })
                })
                .collect();
            max_of(&within)
        }
        JointProbs::Systematic { step } => {
            let n = big_n / step;
            let same = (n >= 2).then(|| (big_n as f64 / n as f64 - 1.0).abs());
            let other = (*step >= 2).then_some(1.0);
            max_of(&[same, other])
        }
        JointProbs::Cluster {
            cluster_of,
            t,
            clusters,
        } => {
            let mut sizes = vec![0usize; *clusters];
            for &c in cluster_of {
                sizes[c] += 1;
            }
            let (tf, big_t) = (*t as f64, *clusters as f64);
            let same = sizes.iter().any(|&s| s >= 2).then(|| big_t / tf - 1.0);
            let cross =
                (*clusters >= 2).then(|| (1.0 - (tf - 1.0) / (big_t - 1.0) * (big_t / tf)).abs());
            max_of(&[same, cross])
        }
        JointProbs::Dense(_) => max_pairwise_dependence(probs)?,
        JointProbs::Unavailable => {
            return Err(Error::UnsupportedDiagnostic(
                "no closed-form joint probabilities; estimate them first".into(),
            ))
        }
    })
}

/// C8 measure of a design on a population.
pub fn c8_for_design(design: &DesignSpec, pop: &Population) -> Result<f64> {
    c8_dependence_measure(&inclusion_probs(design, pop)?)
}

/// Exhaustive-enumeration summary of `r_ij = E_p(I_i I_j | Q_n) − π_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct C9Report {
    pub population_size: usize,
    pub samples: usize,
    pub groups: usize,
    /// `E_p |r_ij|`, row-major `N x N`.
    pub expected_abs_r: Vec<f64>,
    /// Mean of `E_p |r_ij|` over all `N²` pairs, diagonal included.
    pub mean_abs_all: f64,
    /// Mean over the `N(N−1)` pairs with `i ≠ j`.
    pub mean_abs_offdiag: f64,
    /// `E_p max_{i,j} |r_ij|`.
    pub expected_max_abs_r: f64,
    /// `Σ_groups p(group) E[I_i I_j | group]`, row-major; equals `π_ij`.
    pub total_expectation: Vec<f64>,
    /// `max_{i,j} |total_expectation_ij − π_ij|`.
    pub identity_error: f64,
}

impl C9Report {
    pub fn to_report(&self) -> ConditionReport {
        let n = self.population_size;
        ConditionReport {
            condition: "C9".into(),
            summary: vec![
                ("mean_abs_r_all".into(), self.mean_abs_all),
                ("mean_abs_r_offdiag".into(), self.mean_abs_offdiag),
                ("expected_max_abs_r".into(), self.expected_max_abs_r),
                ("identity_error".into(), self.identity_error),
                ("groups".into(), self.groups as f64),
                ("samples".into(), self.samples as f64),
            ],
            detail: (0..n * n)
                .map(|p| ("expected_abs_r".to_string(), p, self.expected_abs_r[p]))
                .collect(),
        }
    }
}

/// Enumerate every sample, group samples by their partition signature over
/// `grid`, and average `|r_ij|` over the design.
pub fn c9_rij_exhaustive(
    pop: &Population,
    design: &DesignSpec,
    k: usize,
    grid: &[Vec<f64>],
) -> Result<C9Report> {
    let probs = inclusion_probs(design, pop)?;
    let joint = probs.dense_joint().ok_or_else(|| {
        Error::UnsupportedDiagnostic("closed-form joint probabilities required".into())
    })?;
    let samples: Vec<(Vec<usize>, f64)> = enumerate_all_samples(design, pop)?
        .map(|(s, p)| (s.members().to_vec(), p))
        .collect();
    if let Some((m, _)) = samples.iter().find(|(m, _)| m.len() < k) {
        return Err(invalid(format!(
            "k = {k} exceeds a sample of size {}",
            m.len()
        )));
    }
    let keys: Vec<Vec<u32>> = samples
        .par_iter()
        .map(|(members, _)| {
            let index = NeighborIndex::from_units(pop, members, Backend::BruteForce)?;
            Ok(partition_signature(&index, k, grid)?.encode())
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));

    let big_n = pop.len();
    let mut expected_abs = vec![0.0; big_n * big_n];
    let mut total = vec![0.0; big_n * big_n];
    let mut expected_max = 0.0;
    let mut groups = 0usize;
    let mut joint_mass = vec![0.0; big_n * big_n];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && keys[order[end]] == keys[order[start]] {
            end += 1;
        }
        groups += 1;
        joint_mass.iter_mut().for_each(|v| *v = 0.0);
        let mut p_group = 0.0;
        for &s in &order[start..end] {
            let (members, p) = &samples[s];
            p_group += p;
            for &i in members {
                for &j in members {
                    joint_mass[i * big_n + j] += p;
                }
            }
        }
        let mut group_max: f64 = 0.0;
        for idx in 0..big_n * big_n {
            let conditional = joint_mass[idx] / p_group;
            let r = (conditional - joint[idx]).abs();
            expected_abs[idx] += p_group * r;
            total[idx] += p_group * conditional;
            group_max = group_max.max(r);
        }
        expected_max += p_group * group_max;
        start = end;
    }

    let nf = big_n as f64;
    let sum_all: f64 = expected_abs.iter().sum();
    let sum_diag: f64 = (0..big_n).map(|i| expected_abs[i * big_n + i]).sum();
    let identity_error = total
        .iter()
        .zip(&joint)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(C9Report {
        population_size: big_n,
        samples: samples.len(),
        groups,
        expected_abs_r: expected_abs,
        mean_abs_all: sum_all / (nf * nf),
        mean_abs_offdiag: if big_n > 1 {
            (sum_all - sum_diag) / (nf * (nf - 1.0))
        } else {
            0.0
        },
        expected_max_abs_r: expected_max,
        total_expectation: total,
        identity_error,
    })
}
