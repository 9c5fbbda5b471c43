//! Design-weighted k-nearest-neighbor regression for finite populations
//! sampled under complex survey designs.
//!
//! The crate covers population generation with nested-prefix growth, the
//! common single-stage designs with their inclusion probabilities, the
//! population, Horvitz–Thompson and hypothetical kNN estimators, condition
//! diagnostics, rate bounds, and a seeded Monte Carlo harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod harness;
pub mod io;
pub mod neighbors;
pub mod population;
pub mod rng;

pub use design::{DesignKind, DesignSpec, InclusionProbs, JointProbs, Sample, Stratum};
pub use error::{Error, Result};
pub use estimators::{PopulationKnn, SampleKnn};
pub use neighbors::{Backend, NeighborIndex};
pub use population::{Population, RegressionFamily, SuperpopSpec};
