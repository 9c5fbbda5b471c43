//! Sampling designs: first- and second-order inclusion probabilities, sample
//! drawing, exhaustive enumeration and Monte Carlo joint probabilities.

mod draw;
mod enumerate;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::population::Population;

pub use enumerate::{binomial, enumerate_all_samples, support_size, MAX_ENUMERATION};

/// Largest population for which a dense `N x N` joint-probability matrix is
/// materialized.
pub const DENSE_JOINT_CAP: usize = 2000;

/// A stratum: the units it contains and how many to draw from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub units: Vec<usize>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    Srswor,
    Poisson,
    StratifiedSrswor,
    PpsSystematic,
    SystematicEqual,
    ClusterEqual,
}

impl DesignKind {
    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Srswor => "srswor",
            DesignKind::Poisson => "poisson",
            DesignKind::StratifiedSrswor => "stratified_srswor",
            DesignKind::PpsSystematic => "pps_systematic",
            DesignKind::SystematicEqual => "systematic_equal",
            DesignKind::ClusterEqual => "cluster_equal",
        }
    }

    /// Whether every sample has exactly the same size.
    pub fn is_fixed_size(self) -> bool {
        !matches!(self, DesignKind::Poisson)
    }
}

/// A single-stage sampling design over the units `0..N` of a population.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignSpec {
    /// Simple random sampling without replacement of `n` units.
    Srswor { n: usize },
    /// Independent Bernoulli trials with the given inclusion probabilities.
    Poisson { pi: Vec<f64> },
    /// Independent srswor within each stratum.
    StratifiedSrswor { strata: Vec<Stratum> },
    /// Systematic probability-proportional-to-size sampling on a randomly
    /// permuted frame, sizes taken from the population's size variable.
    PpsSystematic { n: usize },
    /// Equal-probability systematic sampling with step `N / n`.
    SystematicEqual { n: usize },
    /// srswor of `t` whole clusters.
    ClusterEqual { clusters: Vec<Vec<usize>>, t: usize },
}

impl DesignSpec {
    pub fn kind(&self) -> DesignKind {
        match self {
            DesignSpec::Srswor { .. } => DesignKind::Srswor,
            DesignSpec::Poisson { .. } => DesignKind::Poisson,
            DesignSpec::StratifiedSrswor { .. } => DesignKind::StratifiedSrswor,
            DesignSpec::PpsSystematic { .. } => DesignKind::PpsSystematic,
            DesignSpec::SystematicEqual { .. } => DesignKind::SystematicEqual,
            DesignSpec::ClusterEqual { .. } => DesignKind::ClusterEqual,
        }
    }

    /// Poisson design with equal probabilities and expected size `n`.
    pub fn poisson_equal(expected_n: f64, population_size: usize) -> Result<DesignSpec> {
        if population_size == 0 || !(expected_n > 0.0) || expected_n > population_size as f64 {
            return Err(invalid(format!(
                "expected size {expected_n} outside (0, {population_size}]"
            )));
        }
        Ok(DesignSpec::Poisson {
            pi: vec![expected_n / population_size as f64; population_size],
        })
    }

    /// Poisson design with probabilities proportional to `sizes`, capped at 1.
    pub fn poisson_pps(expected_n: usize, sizes: &[f64]) -> Result<DesignSpec> {
        Ok(DesignSpec::Poisson {
            pi: pps_probabilities(expected_n, sizes)?,
        })
    }

    /// Stratified srswor with strata cut at the quantiles of the first
    /// covariate and allocation `fractions` of the total `n`.
    ///
    /// Units are ranked by the first covariate (ties by id) and split into
    /// `fractions.len()` groups whose sizes differ by at most one.
    pub fn stratified_by_quantiles(
        pop: &Population,
        n: usize,
        fractions: &[f64],
    ) -> Result<DesignSpec> {
        let h = fractions.len();
        if h == 0 || h > pop.len() {
            return Err(invalid(format!(
                "cannot form {h} strata from {} units",
                pop.len()
            )));
        }
        let x = pop.column(0);
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let base = pop.len() / h;
        let extra = pop.len() % h;
        let mut groups = Vec::with_capacity(h);
        let mut start = 0;
        for g in 0..h {
            let len = base + usize::from(g < extra);
            let mut units = order[start..start + len].to_vec();
            units.sort_unstable();
            groups.push(units);
            start += len;
        }
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let alloc = allocate(n, fractions, &sizes)?;
        Ok(DesignSpec::StratifiedSrswor {
            strata: groups
                .into_iter()
                .zip(alloc)
                .map(|(units, n)| Stratum { units, n })
                .collect(),
        })
    }

    /// Contiguous clusters of `cluster_size` units (the last may be shorter).
    pub fn contiguous_clusters(
        population_size: usize,
        cluster_size: usize,
        t: usize,
    ) -> DesignSpec {
        let clusters = (0..population_size)
            .collect::<Vec<_>>()
            .chunks(cluster_size.max(1))
            .map(<[usize]>::to_vec)
            .collect();
        DesignSpec::ClusterEqual { clusters, t }
    }

    /// Check the design against a population of size `N`.
    pub fn validate(&self, pop: &Population) -> Result<()> {
        let big_n = pop.len();
        match self {
            DesignSpec::Srswor { n } | DesignSpec::PpsSystematic { n } => {
                check_n(*n, big_n)?;
                if let DesignSpec::PpsSystematic { .. } = self {
                    if pop.size_variable().is_none() {
                        return Err(invalid("pps design needs a positive size variable"));
                    }
                }
                Ok(())
            }
            DesignSpec::SystematicEqual { n } => {
                check_n(*n, big_n)?;
                if !big_n.is_multiple_of(*n) {
                    return Err(Error::UnsupportedConfiguration(format!(
                        "systematic sampling needs N/n integer, got N={big_n}, n={n}"
                    )));
                }
                Ok(())
            }
            DesignSpec::Poisson { pi } => {
                if pi.len() != big_n {
                    return Err(invalid(format!(
                        "poisson design has {} probabilities for {big_n} units",
                        pi.len()
                    )));
                }
                if let Some(i) = pi.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
                    return Err(invalid(format!(
                        "poisson inclusion probability of unit {i} is {}, must be in (0, 1]",
                        pi[i]
                    )));
                }
                Ok(())
            }
            DesignSpec::StratifiedSrswor { strata } => {
                check_partition(strata.iter().map(|s| s.units.as_slice()), big_n, "strata")?;
                for (h, s) in strata.iter().enumerate() {
                    if s.n == 0 || s.n > s.units.len() {
                        return Err(invalid(format!(
                            "stratum {h} draws {} of {} units",
                            s.n,
                            s.units.len()
                        )));
                    }
                }
                Ok(())
            }
            DesignSpec::ClusterEqual { clusters, t } => {
                check_partition(clusters.iter().map(Vec::as_slice), big_n, "clusters")?;
                if *t == 0 || *t > clusters.len() {
                    return Err(invalid(format!(
                        "cannot select {t} of {} clusters",
                        clusters.len()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Validate against `pop` and precompute everything needed to draw.
    pub fn prepare(&self, pop: &Population) -> Result<PreparedDesign> {
        let probs = inclusion_probs(self, pop)?;
        Ok(PreparedDesign {
            spec: self.clone(),
            probs,
        })
    }
}

fn check_n(n: usize, big_n: usize) -> Result<()> {
    if n == 0 || n > big_n {
        return Err(invalid(format!("sample size {n} outside 1..={big_n}")));
    }
    Ok(())
}

fn check_partition<'a>(
    groups: impl Iterator<Item = &'a [usize]>,
    big_n: usize,
    what: &str,
) -> Result<()> {
    let mut seen = vec![false; big_n];
    let mut count = 0usize;
    for (g, units) in groups.enumerate() {
        if units.is_empty() {
            return Err(invalid(format!("{what}: group {g} is empty")));
        }
        for &u in units {
            if u >= big_n {
                return Err(invalid(format!("{what}: unit {u} out of range 0..{big_n}")));
            }
            if std::mem::replace(&mut seen[u], true) {
                return Err(invalid(format!("{what}: unit {u} appears twice")));
            }
            count += 1;
        }
    }
    if count != big_n {
        return Err(invalid(format!(
            "{what} cover {count} of {big_n} units, must partition the population"
        )));
    }
    Ok(())
}

/// Round stratum allocations `fractions * n` to integers.
///
/// Each share is rounded to the nearest integer and clamped to `[1, N_h]`;
/// the residual goes to the stratum with the largest allocation, spilling to
/// the next largest when a stratum runs out of room.
pub fn allocate(n: usize, fractions: &[f64], stratum_sizes: &[usize]) -> Result<Vec<usize>> {
    if fractions.len() != stratum_sizes.len() {
        return Err(invalid("one allocation fraction per stratum is required"));
    }
    if fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(invalid("allocation fractions must be positive"));
    }
    let total: usize = stratum_sizes.iter().sum();
    if n < fractions.len() || n > total {
        return Err(invalid(format!(
            "cannot allocate {n} units over {} strata of total size {total}",
            fractions.len()
        )));
    }
    let mut alloc: Vec<usize> = fractions
        .iter()
        .zip(stratum_sizes)
        .map(|(&f, &size)| ((f * n as f64).round() as usize).clamp(1, size))
        .collect();
    let mut by_size: Vec<usize> = (0..alloc.len()).collect();
    by_size.sort_by(|&a, &b| alloc[b].cmp(&alloc[a]).then(a.cmp(&b)));
    let mut assigned: usize = alloc.iter().sum();
    while assigned != n {
        let progressed = if assigned < n {
            by_size
                .iter()
                .find(|&&h| alloc[h] < stratum_sizes[h])
                .map(|&h| {
                    let room = (stratum_sizes[h] - alloc[h]).min(n - assigned);
                    alloc[h] += room;
                    assigned += room;
                })
        } else {
            by_size.iter().find(|&&h| alloc[h] > 1).map(|&h| {
                let give = (alloc[h] - 1).min(assigned - n);
                alloc[h] -= give;
                assigned -= give;
            })
        };
        if progressed.is_none() {
            return Err(invalid(format!("cannot allocate {n} units")));
        }
    }
    Ok(alloc)
}

/// Inclusion probabilities proportional to `sizes` summing to `n`.
///
/// Units whose share would exceed one are fixed at one and the remaining
/// sample size is spread over the rest, repeatedly, until no share exceeds one.
pub fn pps_probabilities(n: usize, sizes: &[f64]) -> Result<Vec<f64>> {
    let big_n = sizes.len();
    check_n(n, big_n)?;
    if let Some(i) = sizes.iter().position(|&z| !(z > 0.0) || !z.is_finite()) {
        return Err(invalid(format!(
            "size variable must be strictly positive, unit {i} has {}",
            sizes[i]
        )));
    }
    let mut certain = vec![false; big_n];
    let mut pi = vec![0.0; big_n];
    loop {
        let n_certain = certain.iter().filter(|&&c| c).count();
        let remaining = (n - n_certain) as f64;
        let total: f64 = sizes
            .iter()
            .zip(&certain)
            .filter(|(_, &c)| !c)
            .map(|(z, _)| z)
            .sum();
        let mut changed = false;
        for i in 0..big_n {
            if certain[i] {
                pi[i] = 1.0;
            } else {
                pi[i] = if total > 0.0 {
                    remaining * sizes[i] / total
                } else {
                    0.0
                };
                if pi[i] >= 1.0 {
                    certain[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(pi);
        }
    }
}

/// Second-order inclusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum JointProbs {
    Srswor {
        population_size: usize,
        n: usize,
    },
    /// `π_ij = π_i π_j`.
    Independent,
    Stratified {
        stratum_of: Vec<usize>,
        /// `(N_h, n_h)` per stratum.
        sizes: Vec<(usize, usize)>,
    },
    /// `π_ij = n/N` when `i ≡ j (mod step)`, else 0.
    Systematic {
        step: usize,
    },
    Cluster {
        cluster_of: Vec<usize>,
        t: usize,
        clusters: usize,
    },
    /// Row-major `N x N` matrix.
    Dense(Vec<f64>),
    Unavailable,
}

/// First- and second-order inclusion probabilities of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionProbs {
    pi: Vec<f64>,
    joint: JointProbs,
    exact: bool,
}

impl InclusionProbs {
    pub fn new(pi: Vec<f64>, joint: JointProbs, exact: bool) -> Self {
        InclusionProbs { pi, joint, exact }
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn joint(&self) -> &JointProbs {
        &self.joint
    }

    /// Whether the joint probabilities are closed-form rather than estimated.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn has_joint(&self) -> bool {
        !matches!(self.joint, JointProbs::Unavailable)
    }

    /// `π_ij`, with `π_ii = π_i`. `None` when unavailable.
    pub fn pij(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return match &self.joint {
                JointProbs::Dense(m) => Some(m[i * self.pi.len() + i]),
                _ => Some(self.pi[i]),
            };
        }
        let (pi, pj) = (self.pi[i], self.pi[j]);
        Some(match &self.joint {
            JointProbs::Srswor { population_size, n } => {
                let (big, n) = (*population_size as f64, *n as f64);
                n * (n - 1.0) / (big * (big - 1.0))
            }
            JointProbs::Independent => pi * pj,
            JointProbs::Stratified { stratum_of, sizes } => {
                if stratum_of[i] == stratum_of[j] {
                    let (size, n_h) = sizes[stratum_of[i]];
                    let (size, n_h) = (size as f64, n_h as f64);
                    n_h * (n_h - 1.0) / (size * (size - 1.0))
                } else {
                    pi * pj
                }
            }
            JointProbs::Systematic { step } => {
                if i % step == j % step {
                    pi
                } else {
                    0.0
                }
            }
            JointProbs::Cluster {
                cluster_of,
                t,
                clusters,
            } => {
                let (t, big_t) = (*t as f64, *clusters as f64);
                if cluster_of[i] == cluster_of[j] {
                    t / big_t
                } else {
                    t / big_t * (t - 1.0) / (big_t - 1.0)
                }
            }
            JointProbs::Dense(m) => m[i * self.pi.len() + j],
            JointProbs::Unavailable => return None,
        })
    }

    /// Dense row-major matrix of `π_ij`, if available and `N` is under the cap.
    pub fn dense_joint(&self) -> Option<Vec<f64>> {
        let big_n = self.pi.len();
        if !self.has_joint() || big_n > DENSE_JOINT_CAP {
            return None;
        }
        if let JointProbs::Dense(m) = &self.joint {
            return Some(m.clone());
        }
        let mut m = vec![0.0; big_n * big_n];
        for i in 0..big_n {
            for j in 0..big_n {
                m[i * big_n + j] = self.pij(i, j)?;
            }
        }
        Some(m)
    }
}

/// Exact first-order probabilities and, where available, closed-form joint
/// probabilities.
pub fn inclusion_probs(design: &DesignSpec, pop: &Population) -> Result<InclusionProbs> {
    design.validate(pop)?;
    let big_n = pop.len();
    let probs = match design {
        DesignSpec::Srswor { n } => InclusionProbs::new(
            vec![*n as f64 / big_n as f64; big_n],
            JointProbs::Srswor {
                population_size: big_n,
                n: *n,
            },
            true,
        ),
        DesignSpec::Poisson { pi } => {
            InclusionProbs::new(pi.clone(), JointProbs::Independent, true)
        }
        DesignSpec::StratifiedSrswor { strata } => {
            let mut pi = vec![0.0; big_n];
            let mut stratum_of = vec![0; big_n];
            for (h, s) in strata.iter().enumerate() {
                let p = s.n as f64 / s.units.len() as f64;
                for &u in &s.units {
                    pi[u] = p;
                    stratum_of[u] = h;
                }
            }
            let sizes = strata.iter().map(|s| (s.units.len(), s.n)).collect();
            InclusionProbs::new(pi, JointProbs::Stratified { stratum_of, sizes }, true)
        }
        DesignSpec::PpsSystematic { n } => {
            let z = pop
                .size_variable()
                .ok_or_else(|| invalid("pps design needs a positive size variable"))?;
            InclusionProbs::new(pps_probabilities(*n, z)?, JointProbs::Unavailable, false)
        }
        DesignSpec::SystematicEqual { n } => InclusionProbs::new(
            vec![*n as f64 / big_n as f64; big_n],
            JointProbs::Systematic { step: big_n / n },
            true,
        ),
        DesignSpec::ClusterEqual { clusters, t } => {
            let mut cluster_of = vec![0; big_n];
            for (c, units) in clusters.iter().enumerate() {
                for &u in units {
                    cluster_of[u] = c;
                }
            }
            InclusionProbs::new(
                vec![*t as f64 / clusters.len() as f64; big_n],
                JointProbs::Cluster {
                    cluster_of,
                    t: *t,
                    clusters: clusters.len(),
                },
                true,
            )
        }
    };
    Ok(probs)
}

/// A drawn sample: sorted member ids with Horvitz-Thompson weights `1/π_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    population_size: usize,
    members: Vec<usize>,
    weights: Vec<f64>,
}

impl Sample {
    /// Build a sample from member ids (any order, no duplicates) and the
    /// design's first-order probabilities.
    pub fn new(mut members: Vec<usize>, pi: &[f64]) -> Result<Sample> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("sample members must be distinct"));
        }
        if let Some(&last) = members.last() {
            if last >= pi.len() {
                return Err(invalid(format!(
                    "sample member {last} outside population of size {}",
                    pi.len()
                )));
            }
        }
        let weights = members
            .iter()
            .map(|&i| {
                let p = pi[i];
                if p > 0.0 && p <= 1.0 {
                    Ok(1.0 / p)
                } else {
                    Err(invalid(format!("unit {i} has inclusion probability {p}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sample {
            population_size: pi.len(),
            members,
            weights,
        })
    }

    /// Every unit, weight one.
    pub fn census(population_size: usize) -> Sample {
        Sample {
            population_size,
            members: (0..population_size).collect(),
            weights: vec![1.0; population_size],
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.members.binary_search(&unit).is_ok()
    }

    /// Membership indicators `I_i` for every population unit.
    pub fn indicators(&self) -> Vec<bool> {
        let mut ind = vec![false; self.population_size];
        for &i in &self.members {
            ind[i] = true;
        }
        ind
    }
}

/// A validated design with its probabilities, ready for repeated draws.
#[derive(Debug, Clone)]
pub struct PreparedDesign {
    spec: DesignSpec,
    probs: InclusionProbs,
}

impl PreparedDesign {
    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    pub fn probs(&self) -> &InclusionProbs {
        &self.probs
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let members = draw::draw_members(&self.spec, &self.probs, rng);
        Sample::new(members, self.probs.pi()).expect("drawn members are valid by construction")
    }
}

/// Draw one sample.
pub fn draw<R: Rng + ?Sized>(design: &DesignSpec, pop: &Population, rng: &mut R) -> Result<Sample> {
    Ok(design.prepare(pop)?.draw(rng))
}

/// Monte Carlo estimate of the joint inclusion probabilities from
/// `replicates` independent draws.
pub fn estimate_joint_probs(
    design: &DesignSpec,
    pop: &Population,
    replicates: usize,
    seed: u64,
) -> Result<InclusionProbs> {
    if replicates == 0 {
        return Err(invalid("at least one replicate is required"));
    }
    let big_n = pop.len();
    if big_n > DENSE_JOINT_CAP {
        return Err(Error::Capacity {
            what: "dense joint-probability matrix".into(),
            count: big_n as u128,
            limit: DENSE_JOINT_CAP as u128,
        });
    }
    let prepared = design.prepare(pop)?;
    let mut rng = crate::rng::stream(seed, &["joint-probs".into()]);
    let mut counts = vec![0u64; big_n * big_n];
    for _ in 0..replicates {
        let s = prepared.draw(&mut rng);
        let m = s.members();
        for (a, &i) in m.iter().enumerate() {
            for &j in &m[a..] {
                counts[i * big_n + j] += 1;
            }
        }
    }
    let reps = replicates as f64;
    let mut dense = vec![0.0; big_n * big_n];
    for i in 0..big_n {
        for j in i..big_n {
            let p = counts[i * big_n + j] as f64 / reps;
            dense[i * big_n + j] = p;
            dense[j * big_n + i] = p;
        }
    }
    let pi = (0..big_n).map(|i| dense[i * big_n + i]).collect();
    Ok(InclusionProbs::new(pi, JointProbs::Dense(dense), false))
}
