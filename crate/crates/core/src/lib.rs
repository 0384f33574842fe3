//! Generation of structurally diverse graph sets.
//!
//! The crate builds fixed-size sets of simple undirected graphs that
//! maximize a configurable diversity objective: a graph distance (NetLSD
//! heat/wave, graphlet correlation distance, or portrait divergence)
//! aggregated over all pairs by a set-diversity measure (energy of equally
//! charged particles by default). Three optimizers are provided — greedy
//! selection from a generator pool, a genetic algorithm, and local
//! edge-toggle search — all generic over the element space, so the same
//! engine also runs the Euclidean-point toy experiments.
//!
//! Numeric kernels are generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix `f64`, which is what the CLI uses.

pub mod analysis;
pub mod budget;
pub mod descriptors;
pub mod diversity;
pub mod generators;
pub mod graph;
pub mod optimize;
pub mod scalar;
pub mod space;

pub use budget::BudgetLedger;
pub use descriptors::DescriptorKind;
pub use diversity::Measure;
pub use generators::Seed;
pub use graph::Graph;
pub use optimize::{StageKind, StagePlan};
pub use scalar::Scalar;

/// Default scalar type for the CLI and the experiment suite.
pub type Real = f64;

/// Graph space over `f64` distances.
pub type GraphSpace64 = space::GraphSpace<Real>;
/// Euclidean point space over `f64`.
pub type PointSpace64 = space::PointSpace<Real>;
/// Measure configuration over `f64`.
pub type MeasureConfig64 = diversity::MeasureConfig<Real>;
/// Kind-tagged descriptor over `f64`.
pub type Descriptor64 = descriptors::Descriptor<Real>;
/// Pairwise distance matrix over `f64`.
pub type PairwiseDistances64 = diversity::PairwiseDistances<Real>;
