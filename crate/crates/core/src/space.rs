//! Metric element spaces the optimizers run over.
//!
//! [`DiversitySpace`] is the behavioral contract shared by graph sets and the
//! Euclidean-point toy space: describe an element (one budget unit), measure
//! distances between descriptors, and produce mutated or crossed-over
//! elements. Optimizers are generic over this trait.

use std::marker::PhantomData;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::budget::{BudgetExhausted, BudgetLedger};
use crate::descriptors::{self, Descriptor, DescriptorError, DescriptorKind};
use crate::generators::{self, GeneratorError, GeneratorSpec, Seed};
use crate::graph::{Graph, GraphError};
use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// A metric space of elements the optimizers can diversify.
pub trait DiversitySpace: Send + Sync {
    type Scalar: Scalar;
    type Elem: Clone + Send + Sync;
    type Desc: Clone + Send + Sync;

    /// Compute a descriptor without budget accounting. Callers that manage
    /// budgets in bulk (pool ingestion) reserve units first and then use
    /// this directly.
    fn describe_free(&self, elem: &Self::Elem) -> Result<Self::Desc, SpaceError>;

    /// Compute a descriptor, charging exactly one unit.
    fn describe(&self, elem: &Self::Elem, ledger: &BudgetLedger) -> Result<Self::Desc, SpaceError> {
        ledger.charge()?;
        self.describe_free(elem)
    }

    /// Distance between two descriptors: nonnegative, symmetric, zero on
    /// identical descriptors.
    fn distance(&self, a: &Self::Desc, b: &Self::Desc) -> Self::Scalar;

    /// Small local-search move (single edge toggle; Gaussian nudge).
    fn mutate(&self, elem: &Self::Elem, rng: &mut ChaCha8Rng) -> Self::Elem;

    /// Heavy mutation used by the genetic operator (node rewiring for
    /// graphs). Defaults to the local move.
    fn rewire(&self, elem: &Self::Elem, rng: &mut ChaCha8Rng) -> Self::Elem {
        self.mutate(elem, rng)
    }

    /// Recombine two parents; `None` for spaces without a crossover.
    fn crossover(
        &self,
        _a: &Self::Elem,
        _b: &Self::Elem,
        _rng: &mut ChaCha8Rng,
    ) -> Option<Self::Elem> {
        None
    }
}

/// Graphs on a fixed node count under one descriptor kind.
#[derive(Clone, Debug)]
pub struct GraphSpace<S> {
    n: usize,
    kind: DescriptorKind,
    _scalar: PhantomData<S>,
}

impl<S> GraphSpace<S> {
    pub fn new(n: usize, kind: DescriptorKind) -> Self {
        GraphSpace {
            n,
            kind,
            _scalar: PhantomData,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }
}

impl<S: Scalar> DiversitySpace for GraphSpace<S> {
    type Scalar = S;
    type Elem = Graph;
    type Desc = Descriptor<S>;

    fn describe_free(&self, elem: &Self::Elem) -> Result<Self::Desc, SpaceError> {
        Ok(descriptors::compute(self.kind, elem)?)
    }

    fn distance(&self, a: &Self::Desc, b: &Self::Desc) -> S {
        a.distance(b)
            .expect("descriptors within one space share a kind")
    }

    /// Toggle one uniformly chosen node pair.
    fn mutate(&self, elem: &Self::Elem, rng: &mut ChaCha8Rng) -> Self::Elem {
        let u = rng.gen_range(0..self.n);
        let mut v = rng.gen_range(0..self.n - 1);
        if v >= u {
            v += 1;
        }
        elem.toggle_edge(u, v).expect("u != v and both in range")
    }

    /// Node rewiring: pick a node, drop all its edges, reattach it to
    /// k ~ U{1..n-1} distinct random nodes.
    fn rewire(&self, elem: &Self::Elem, rng: &mut ChaCha8Rng) -> Self::Elem {
        let n = self.n;
        let u = rng.gen_range(0..n);
        let kept: Vec<(usize, usize)> = elem
            .edges()
            .iter()
            .map(|&(a, b)| (a as usize, b as usize))
            .filter(|&(a, b)| a != u && b != u)
            .collect();
        let k = rng.gen_range(1..n);
        let mut candidates: Vec<usize> = (0..n).filter(|&w| w != u).collect();
        for i in 0..k {
            let j = rng.gen_range(i..candidates.len());
            candidates.swap(i, j);
        }
        let edges = kept
            .into_iter()
            .chain(candidates[..k].iter().map(|&w| (u, w)));
        Graph::from_edges(n, edges).expect("rewired edges stay valid")
    }

    /// Labeled parent mixing: each node is assigned to one parent with
    /// probability 1/2; an edge between same-side nodes copies the owning
    /// parent, a cross-side edge copies a per-pair uniformly chosen parent.
    fn crossover(
        &self,
        a: &Self::Elem,
        b: &Self::Elem,
        rng: &mut ChaCha8Rng,
    ) -> Option<Self::Elem> {
        let n = self.n;
        let from_first: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let parent = match (from_first[u], from_first[v]) {
                    (true, true) => a,
                    (false, false) => b,
                    _ => {
                        if rng.gen_bool(0.5) {
                            a
                        } else {
                            b
                        }
                    }
                };
                if parent.has_edge(u, v) {
                    edges.push((u, v));
                }
            }
        }
        Some(Graph::from_edges(n, edges).expect("crossover edges stay valid"))
    }
}

/// Points in the unit box `[0,1]^dim` with Euclidean distance.
#[derive(Clone, Debug)]
pub struct PointSpace<S: Scalar> {
    dim: usize,
    sigma: S,
}

impl<S: Scalar> PointSpace<S> {
    pub fn new(dim: usize) -> Self {
        PointSpace {
            dim,
            sigma: real(0.05),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One point drawn uniformly from the unit box.
    pub fn uniform_point(&self, rng: &mut ChaCha8Rng) -> Vec<S> {
        (0..self.dim).map(|_| real(rng.gen::<f64>())).collect()
    }
}

/// Standard normal deviate via Box-Muller; draws two `f64`s from the stream
/// so the sequence is identical for every scalar type.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl<S: Scalar> DiversitySpace for PointSpace<S> {
    type Scalar = S;
    type Elem = Vec<S>;
    type Desc = Vec<S>;

    fn describe_free(&self, elem: &Self::Elem) -> Result<Self::Desc, SpaceError> {
        Ok(elem.clone())
    }

    fn distance(&self, a: &Self::Desc, b: &Self::Desc) -> S {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<S>()
            .sqrt()
    }

    /// Gaussian perturbation clipped to the unit box.
    fn mutate(&self, elem: &Self::Elem, rng: &mut ChaCha8Rng) -> Self::Elem {
        elem.iter()
            .map(|&x| {
                let z: S = real(standard_normal(rng));
                (x + self.sigma * z).max(S::zero()).min(S::one())
            })
            .collect()
    }
}

/// Source of pool elements for greedy selection and initial populations.
pub trait PoolSource<Sp: DiversitySpace>: Send + Sync {
    /// Up to `count` elements, derived deterministically from `seed`. The
    /// stream may end early (e.g. a short pool file).
    fn elements(
        &self,
        seed: Seed,
        count: usize,
    ) -> Box<dyn Iterator<Item = Result<Sp::Elem, SpaceError>> + '_>;

    /// Short description for run reports.
    fn label(&self) -> String;
}

/// Round-robin over the full generator grid.
pub struct GridPool {
    n: usize,
    specs: Vec<GeneratorSpec>,
}

impl GridPool {
    pub fn new(n: usize) -> Self {
        GridPool {
            n,
            specs: generators::ensemble_grid(n),
        }
    }
}

impl<S: Scalar> PoolSource<GraphSpace<S>> for GridPool {
    fn elements(
        &self,
        seed: Seed,
        count: usize,
    ) -> Box<dyn Iterator<Item = Result<Graph, SpaceError>> + '_> {
        Box::new(generators::sample_pool(&self.specs, count, self.n, seed).map(|r| Ok(r?)))
    }

    fn label(&self) -> String {
        format!("ensemble-grid(n={})", self.n)
    }
}

/// Fresh ER-mix graphs.
pub struct ErMixPool {
    pub n: usize,
    pub grid_p: bool,
}

impl<S: Scalar> PoolSource<GraphSpace<S>> for ErMixPool {
    fn elements(
        &self,
        seed: Seed,
        count: usize,
    ) -> Box<dyn Iterator<Item = Result<Graph, SpaceError>> + '_> {
        let spec = GeneratorSpec::ErMix {
            grid_p: self.grid_p,
        };
        Box::new(
            (0..count).map(move |i| Ok(generators::sample(&spec, self.n, seed.child(i as u64))?)),
        )
    }

    fn label(&self) -> String {
        if self.grid_p {
            format!("er-mix-grid(n={})", self.n)
        } else {
            format!("er-mix(n={})", self.n)
        }
    }
}

/// Externally supplied graphs (already loaded from a graph set file).
pub struct ExternalPool {
    graphs: Vec<Graph>,
    label: String,
}

impl ExternalPool {
    pub fn new(graphs: Vec<Graph>, label: String) -> Self {
        ExternalPool { graphs, label }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

impl<S: Scalar> PoolSource<GraphSpace<S>> for ExternalPool {
    fn elements(
        &self,
        _seed: Seed,
        count: usize,
    ) -> Box<dyn Iterator<Item = Result<Graph, SpaceError>> + '_> {
        Box::new(self.graphs.iter().take(count).cloned().map(Ok))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Uniform random points in the unit box.
pub struct UniformPointPool {
    pub dim: usize,
}

impl<S: Scalar> PoolSource<PointSpace<S>> for UniformPointPool {
    fn elements(
        &self,
        seed: Seed,
        count: usize,
    ) -> Box<dyn Iterator<Item = Result<Vec<S>, SpaceError>> + '_> {
        let dim = self.dim;
        let mut rng = seed.rng();
        Box::new((0..count).map(move |_| {
            Ok((0..dim)
                .map(|_| real::<S>(rng.gen::<f64>()))
                .collect::<Vec<S>>())
        }))
    }

    fn label(&self) -> String {
        format!("uniform-points(dim={})", self.dim)
    }
}
