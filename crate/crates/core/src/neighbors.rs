//! Exact Euclidean neighbor search.
//!
//! Reference points carry external unit ids. Neighbors are ordered by
//! `(squared distance, id)`, so results are fully deterministic even when
//! several points sit at the same distance. Both backends compute squared
//! distances with the same arithmetic and return identical answers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Result};
use crate::population::Population;

/// Reference sets larger than this use the kd-tree under [`Backend::Auto`].
pub const TREE_THRESHOLD: usize = 1000;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    BruteForce,
    KdTree,
    #[default]
    Auto,
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            let d = p - q;
            d * d
        })
        .sum()
}

/// Result of a k-nearest-neighbor query.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    /// Distance to the k-th neighbor.
    pub radius: f64,
    /// Squared distance to the k-th neighbor, as computed by [`sq_dist`].
    pub radius_sq: f64,
    /// The k nearest ids ordered by `(distance, id)`.
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    id: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Points with ids, searchable by k-NN and closed-ball queries.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<usize>,
    tree: Option<KdTree>,
}

impl NeighborIndex {
    /// `coords` is row-major with `ids.len()` rows of `dim` values.
    pub fn new(dim: usize, coords: Vec<f64>, ids: Vec<usize>, backend: Backend) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("neighbor index needs dimension >= 1"));
        }
        if coords.len() != ids.len() * dim {
            return Err(invalid(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                coords.len(),
                ids.len()
            )));
        }
        let use_tree = match backend {
            Backend::BruteForce => false,
            Backend::KdTree => true,
            Backend::Auto => ids.len() > TREE_THRESHOLD,
        };
        let tree = (use_tree && !ids.is_empty()).then(|| KdTree::build(dim, &coords));
        Ok(NeighborIndex {
            dim,
            coords,
            ids,
            tree,
        })
    }

    /// Every population unit, ids `0..N`.
    pub fn from_population(pop: &Population, backend: Backend) -> Self {
        NeighborIndex::new(
            pop.dim(),
            pop.covariates().to_vec(),
            (0..pop.len()).collect(),
            backend,
        )
        .expect("population shape is valid")
    }

    /// The given population units, keeping their population ids.
    pub fn from_units(pop: &Population, units: &[usize], backend: Backend) -> Result<Self> {
        let mut coords = Vec::with_capacity(units.len() * pop.dim());
        for &u in units {
            if u >= pop.len() {
                return Err(invalid(format!(
                    "unit {u} outside population of size {}",
                    pop.len()
                )));
            }
            coords.extend_from_slice(pop.point(u));
        }
        NeighborIndex::new(pop.dim(), coords, units.to_vec(), backend)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn uses_tree(&self) -> bool {
        self.tree.is_some()
    }

    fn point(&self, pos: usize) -> &[f64] {
        &self.coords[pos * self.dim..(pos + 1) * self.dim]
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(invalid(format!(
                "query has dimension {}, index has {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// The `k` nearest points under the `(distance, id)` order.
    pub fn knn(&self, x: &[f64], k: usize) -> Result<KnnResult> {
        self.check_query(x)?;
        if k == 0 || k > self.len() {
            return Err(invalid(format!(
                "k = {k} outside 1..={} reference points",
                self.len()
            )));
        }
        let mut best: Vec<Candidate> = match &self.tree {
            Some(tree) => tree.knn(self, x, k),
            None => {
                let mut all: Vec<Candidate> = (0..self.len())
                    .map(|pos| Candidate {
                        d2: sq_dist(self.point(pos), x),
                        id: self.ids[pos],
                    })
                    .collect();
                if k < all.len() {
                    all.select_nth_unstable(k - 1);
                    all.truncate(k);
                }
                all
            }
        };
        best.sort_unstable();
        let radius_sq = best[k - 1].d2;
        Ok(KnnResult {
            radius: radius_sq.sqrt(),
            radius_sq,
            ids: best.into_iter().map(|c| c.id).collect(),
        })
    }

    /// Ids with squared distance `<= radius_sq`, ascending.
    pub fn within_sq(&self, x: &[f64], radius_sq: f64) -> Result<Vec<usize>> {
        self.check_query(x)?;
        let mut out = Vec::new();
        match &self.tree {
            Some(tree) => tree.within(self, x, radius_sq, &mut out),
            None => out.extend(
                (0..self.len())
                    .filter(|&pos| sq_dist(self.point(pos), x) <= radius_sq)
                    .map(|pos| self.ids[pos]),
            ),
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Ids in the closed ball `B(x, radius)`, ascending.
    pub fn ball_members(&self, x: &[f64], radius: f64) -> Result<Vec<usize>> {
        if !(radius >= 0.0) {
            return Err(invalid(format!("radius must be nonnegative, got {radius}")));
        }
        self.check_query(x)?;
        let mut ids: Vec<usize> = (0..self.len())
            .filter(|&pos| sq_dist(self.point(pos), x).sqrt() <= radius)
            .map(|pos| self.ids[pos])
            .collect();
        ids.sort_unstable();
        Ok(ids)
    }
}

/// Euclidean radius of the k-th nearest reference point and the k ordered ids.
pub fn knn_radius(index: &NeighborIndex, x: &[f64], k: usize) -> Result<KnnResult> {
    index.knn(x, k)
}

/// Indices of all points in the closed ball `B(x, radius)`.
pub fn ball_members(index: &NeighborIndex, x: &[f64], radius: f64) -> Result<Vec<usize>> {
    index.ball_members(x, radius)
}

#[derive(Debug, Clone)]
struct Node {
    /// `[lo_0..lo_d, hi_0..hi_d]`
    bbox: Vec<f64>,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct KdTree {
    dim: usize,
    /// Point positions, permuted so every node owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    fn build(dim: usize, coords: &[f64]) -> KdTree {
        let n = coords.len() / dim;
        let mut tree = KdTree {
            dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(coords, 0, n);
        tree
    }

    fn build_node(&mut self, coords: &[f64], start: usize, end: usize) -> usize {
        let dim = self.dim;
        let mut bbox = vec![f64::INFINITY; dim];
        bbox.extend(std::iter::repeat_n(f64::NEG_INFINITY, dim));
        for &pos in &self.order[start..end] {
            for j in 0..dim {
                let v = coords[pos * dim + j];
                bbox[j] = bbox[j].min(v);
                bbox[dim + j] = bbox[dim + j].max(v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            bbox,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let bbox = &self.nodes[id].bbox;
        let split_dim = (0..dim)
            .max_by(|&a, &b| (bbox[dim + a] - bbox[a]).total_cmp(&(bbox[dim + b] - bbox[b])))
            .unwrap();
        if bbox[dim + split_dim] - bbox[split_dim] <= 0.0 {
            // All points coincide.
            return id;
        }
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * dim + split_dim].total_cmp(&coords[b * dim + split_dim])
        });
        let left = self.build_node(coords, start, mid);
        let right = self.build_node(coords, mid, end);
        self.nodes[id].kind = NodeKind::Split { left, right };
        id
    }

    fn box_dist_sq(&self, node: usize, x: &[f64]) -> f64 {
        let bbox = &self.nodes[node].bbox;
        let dim = self.dim;
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let lo = bbox[j];
                let hi = bbox[dim + j];
                let d = if v < lo {
                    lo - v
                } else if v > hi {
                    v - hi
                } else {
                    0.0
                };
                d * d
            })
            .sum()
    }

    fn knn(&self, index: &NeighborIndex, x: &[f64], k: usize) -> Vec<Candidate> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_node(index, 0, x, k, &mut heap);
        heap.into_vec()
    }

    fn knn_node(
        &self,
        index: &NeighborIndex,
        node: usize,
        x: &[f64],
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if heap.len() == k && self.box_dist_sq(node, x) > heap.peek().unwrap().d2 {
            return;
        }
        match self.nodes[node].kind {
            NodeKind::Leaf { start, end } => {
                for &pos in &self.order[start..end] {
                    let c = Candidate {
                        d2: sq_dist(index.point(pos), x),
                        id: index.ids[pos],
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            NodeKind::Split { left, right } => {
                let (first, second) = if self.box_dist_sq(left, x) <= self.box_dist_sq(right, x) {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_node(index, first, x, k, heap);
                self.knn_node(index, second, x, k, heap);
            }
        }
    }

    fn within(&self, index: &NeighborIndex, x: &[f64], radius_sq: f64, out: &mut Vec<usize>) {
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if self.box_dist_sq(node, x) > radius_sq {
                continue;
            }
            match self.nodes[node].kind {
                NodeKind::Leaf { start, end } => out.extend(
                    self.order[start..end]
                        .iter()
                        .filter(|&&pos| sq_dist(index.point(pos), x) <= radius_sq)
                        .map(|&pos| index.ids[pos]),
                ),
                NodeKind::Split { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
    }
}

/// Column-wise z-score transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Fit on the population covariates. Constant columns get unit scale.
    pub fn fit(pop: &Population) -> Standardizer {
        let n = pop.len() as f64;
        let (mut mean, mut sd) = (Vec::new(), Vec::new());
        for j in 0..pop.dim() {
            let col = pop.column(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0).max(1.0);
            mean.push(m);
            sd.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer { mean, sd }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_population(&self, pop: &Population) -> Result<Population> {
        let x: Vec<f64> = pop
            .covariates()
            .chunks_exact(pop.dim())
            .flat_map(|row| self.apply(row))
            .collect();
        Population::new(
            pop.dim(),
            x,
            pop.responses().to_vec(),
            pop.size_variable().map(<[f64]>::to_vec),
        )
    }
}
