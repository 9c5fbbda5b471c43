//! k-nearest-neighbor regression estimators.
//!
//! Three estimators of the regression function at a point `x`:
//!
//! * the population estimator `m̂_N`, averaging `y` over the closed ball
//!   reaching the `k`-th nearest population unit;
//! * the sample Horvitz-Thompson estimator `m̂_n`, a `1/π`-weighted average
//!   over sample units in the ball reaching the `k`-th nearest sample unit;
//! * the hypothetical estimator `m̂*_n`, an unweighted average over *all*
//!   population units in that same sample-derived ball. It needs every `y` in
//!   the population and only exists for simulation studies.
//!
//! All three use the closed-ball form. When several units tie at the boundary
//! distance the ball holds more than `k` units and all of them are averaged;
//! under continuous covariates this happens with probability zero.
//! Sums run over ball members in ascending unit id.

use crate::design::{InclusionProbs, Sample};
use crate::error::{invalid, Result};
use crate::neighbors::{Backend, KnnResult, NeighborIndex};
use crate::population::Population;

/// Population units with a search index.
#[derive(Debug, Clone)]
pub struct PopulationKnn<'a> {
    pop: &'a Population,
    index: NeighborIndex,
}

impl<'a> PopulationKnn<'a> {
    pub fn new(pop: &'a Population, backend: Backend) -> Self {
        PopulationKnn {
            pop,
            index: NeighborIndex::from_population(pop, backend),
        }
    }

    pub fn population(&self) -> &'a Population {
        self.pop
    }

    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    /// Population units whose squared distance to `x` is at most `radius_sq`.
    pub fn ball(&self, x: &[f64], radius_sq: f64) -> Result<Vec<usize>> {
        self.index.within_sq(x, radius_sq)
    }

    /// `m̂_N(x)` with `k` neighbors.
    pub fn estimate(&self, x: &[f64], k: usize) -> Result<f64> {
        let knn = self.index.knn(x, k)?;
        let ball = self.index.within_sq(x, knn.radius_sq)?;
        Ok(mean_of(self.pop, &ball))
    }
}

fn mean_of(pop: &Population, units: &[usize]) -> f64 {
    units.iter().map(|&i| pop.y(i)).sum::<f64>() / units.len() as f64
}

/// Sample units with a search index and their inclusion probabilities.
#[derive(Debug, Clone)]
pub struct SampleKnn<'a> {
    pop: &'a Population,
    index: NeighborIndex,
    /// `π_i` indexed by population id; only sample entries are meaningful.
    pi: Vec<f64>,
}

impl<'a> SampleKnn<'a> {
    /// `pi` holds the first-order probabilities of all `N` population units.
    pub fn new(pop: &'a Population, sample: &Sample, pi: &[f64], backend: Backend) -> Result<Self> {
        if pi.len() != pop.len() || sample.population_size() != pop.len() {
            return Err(invalid(format!(
                "population has {} units, probabilities {} and sample frame {}",
                pop.len(),
                pi.len(),
                sample.population_size()
            )));
        }
        if sample.is_empty() {
            return Err(invalid("sample is empty"));
        }
        if let Some(&i) = sample.members().iter().find(|&&i| !(pi[i] > 0.0)) {
            return Err(invalid(format!(
                "sampled unit {i} has inclusion probability {}",
                pi[i]
            )));
        }
        Ok(SampleKnn {
            pop,
            index: NeighborIndex::from_units(pop, sample.members(), backend)?,
            pi: pi.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    /// Radius `ρ_{kS}(x)` and the `k` nearest sample ids.
    pub fn knn(&self, x: &[f64], k: usize) -> Result<KnnResult> {
        if k == 0 || k > self.len() {
            return Err(invalid(format!(
                "k = {k} outside 1..={} sample units",
                self.len()
            )));
        }
        self.index.knn(x, k)
    }

    /// Sample units inside `B(x, ρ_{kS}(x))`.
    pub fn ball(&self, x: &[f64], k: usize) -> Result<(KnnResult, Vec<usize>)> {
        let knn = self.knn(x, k)?;
        let ball = self.index.within_sq(x, knn.radius_sq)?;
        Ok((knn, ball))
    }

    /// Horvitz-Thompson weighted `m̂_n(x)`.
    pub fn estimate_ht(&self, x: &[f64], k: usize) -> Result<f64> {
        let (_, ball) = self.ball(x, k)?;
        let (mut num, mut den) = (0.0, 0.0);
        for &i in &ball {
            num += self.pop.y(i) / self.pi[i];
            den += 1.0 / self.pi[i];
        }
        Ok(num / den)
    }

    /// Population units inside `B(x, ρ_{kS}(x))`.
    pub fn population_ball(
        &self,
        pop_knn: &PopulationKnn<'_>,
        x: &[f64],
        k: usize,
    ) -> Result<Vec<usize>> {
        let knn = self.knn(x, k)?;
        pop_knn.ball(x, knn.radius_sq)
    }

    /// Hypothetical `m̂*_n(x)`.
    pub fn estimate_hypothetical(
        &self,
        pop_knn: &PopulationKnn<'_>,
        x: &[f64],
        k: usize,
    ) -> Result<f64> {
        let ball = self.population_ball(pop_knn, x, k)?;
        Ok(mean_of(self.pop, &ball))
    }

    /// Weight vector of `m̂*_n(x)` over all population units.
    pub fn hypothetical_weights(
        &self,
        pop_knn: &PopulationKnn<'_>,
        x: &[f64],
        k: usize,
    ) -> Result<WeightVector> {
        let ball = self.population_ball(pop_knn, x, k)?;
        let w = 1.0 / ball.len() as f64;
        let mut weights = vec![0.0; self.pop.len()];
        for i in ball {
            weights[i] = w;
        }
        Ok(WeightVector { weights })
    }
}

/// Probability weights over population units, constant on the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `m̂_N(x)` over the whole population.
pub fn estimate_population(pop: &Population, x: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > pop.len() {
        return Err(invalid(format!("k = {k} outside 1..={}", pop.len())));
    }
    PopulationKnn::new(pop, Backend::Auto).estimate(x, k)
}

/// Survey-weighted `m̂_n(x)` from the sample and its inclusion probabilities.
pub fn estimate_sample_ht(
    pop: &Population,
    sample: &Sample,
    probs: &InclusionProbs,
    x: &[f64],
    k: usize,
) -> Result<f64> {
    SampleKnn::new(pop, sample, probs.pi(), Backend::Auto)?.estimate_ht(x, k)
}

/// Hypothetical `m̂*_n(x)`; requires the full population responses.
pub fn estimate_hypothetical(
    pop: &Population,
    sample: &Sample,
    x: &[f64],
    k: usize,
) -> Result<f64> {
    let pi = vec![1.0; pop.len()];
    let sample_knn = SampleKnn::new(pop, sample, &pi, Backend::Auto)?;
    sample_knn.estimate_hypothetical(&PopulationKnn::new(pop, Backend::Auto), x, k)
}

/// Per grid point, the ascending ids of the `k` nearest sample units.
///
/// Two samples induce the same partition (as seen from the grid) exactly
/// when their signatures are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionSignature {
    pub cells: Vec<Vec<usize>>,
}

impl PartitionSignature {
    /// Compact encoding: for each grid point where the id set changes, the
    /// grid position followed by the ids. Equal encodings iff equal
    /// signatures.
    pub fn encode(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut prev: Option<&Vec<usize>> = None;
        for (g, cell) in self.cells.iter().enumerate() {
            if prev != Some(cell) {
                out.push(g as u32);
                out.extend(cell.iter().map(|&i| i as u32));
                prev = Some(cell);
            }
        }
        out
    }
}

/// The partition signature of `sample` over `grid`.
pub fn partition_signature(
    sample_points: &NeighborIndex,
    k: usize,
    grid: &[Vec<f64>],
) -> Result<PartitionSignature> {
    if grid.is_empty() {
        return Err(invalid("grid must contain at least one point"));
    }
    let cells = grid
        .iter()
        .map(|x| {
            let mut ids = sample_points.knn(x, k)?.ids;
            ids.sort_unstable();
            Ok(ids)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionSignature { cells })
}
