//! Set-diversity functionals over pairwise distances, per-element fitness,
//! the Vendi Score, and incrementally maintained population state.
//!
//! Sign conventions: `energy_signed` is the diversity value (negative,
//! larger = more diverse); `energy_penalty` is the positive quantity the
//! experiment tables report (lower = more diverse). Fitness is uniformly
//! oriented so that HIGHER fitness means the element contributes more
//! diversity, for every measure.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::budget::BudgetLedger;
use crate::descriptors::symmetric_eigenvalues;
use crate::scalar::{count, real, Scalar};
use crate::space::{DiversitySpace, SpaceError};

/// Largest set size for which the exact #Circles clique search is allowed.
pub const NUM_CIRCLES_MAX: usize = 25;

#[derive(Debug, Error)]
pub enum DiversityError {
    #[error("diversity needs at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("num-circles supports at most {NUM_CIRCLES_MAX} elements, got {0}")]
    UnsupportedSize(usize),
    #[error("invalid similarity matrix: {0}")]
    InvalidSimilarity(String),
    #[error("unknown measure {0:?}; valid measures: {}", Measure::VALID_NAMES)]
    UnknownMeasure(String),
}

/// Diversity measure tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Energy,
    Average,
    SumAverage,
    Diameter,
    SumDiameter,
    Bottleneck,
    SumBottleneck,
    NumCircles,
}

impl Measure {
    pub const ALL: [Measure; 8] = [
        Measure::Energy,
        Measure::Average,
        Measure::SumAverage,
        Measure::Diameter,
        Measure::SumDiameter,
        Measure::Bottleneck,
        Measure::SumBottleneck,
        Measure::NumCircles,
    ];

    pub const VALID_NAMES: &'static str =
        "energy, average, sum-average, diameter, sum-diameter, bottleneck, sum-bottleneck, num-circles";

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Energy => "energy",
            Measure::Average => "average",
            Measure::SumAverage => "sum-average",
            Measure::Diameter => "diameter",
            Measure::SumDiameter => "sum-diameter",
            Measure::Bottleneck => "bottleneck",
            Measure::SumBottleneck => "sum-bottleneck",
            Measure::NumCircles => "num-circles",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = DiversityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| DiversityError::UnknownMeasure(s.to_string()))
    }
}

/// A measure plus its parameters. `gamma` only matters for Energy,
/// `threshold` only for #Circles; `epsilon` stabilizes every reciprocal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureConfig<S> {
    pub measure: Measure,
    pub gamma: S,
    pub epsilon: S,
    pub threshold: S,
}

impl<S: Scalar> MeasureConfig<S> {
    pub fn new(measure: Measure) -> Self {
        MeasureConfig {
            measure,
            gamma: S::one(),
            epsilon: real(1e-5),
            threshold: S::zero(),
        }
    }

    pub fn energy() -> Self {
        MeasureConfig::new(Measure::Energy)
    }

    pub fn with_gamma(mut self, gamma: S) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_epsilon(mut self, epsilon: S) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_threshold(mut self, threshold: S) -> Self {
        self.threshold = threshold;
        self
    }
}

#[inline]
fn recip_pow<S: Scalar>(d: S, gamma: S, epsilon: S) -> S {
    let base = d + epsilon;
    if gamma == S::one() {
        base.recip()
    } else {
        base.powf(gamma).recip()
    }
}

/// Symmetric pairwise distance matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseDistances<S> {
    n: usize,
    d: Vec<S>,
}

impl<S: Scalar> PairwiseDistances<S> {
    pub fn zeros(n: usize) -> Self {
        PairwiseDistances {
            n,
            d: vec![S::zero(); n * n],
        }
    }

    /// Build from a distance function evaluated once per unordered pair.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = PairwiseDistances::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Distances induced by points on the real line.
    pub fn from_line_points(points: &[S]) -> Self {
        PairwiseDistances::from_fn(points.len(), |i, j| (points[i] - points[j]).abs())
    }

    /// Euclidean distances between points of equal dimension.
    pub fn from_points(points: &[Vec<S>]) -> Self {
        PairwiseDistances::from_fn(points.len(), |i, j| {
            points[i]
                .iter()
                .zip(&points[j])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<S>()
                .sqrt()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.d[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.d[i * self.n + j] = value;
        self.d[j * self.n + i] = value;
    }

    /// Row `i` (distances from element `i`, zero at position `i`).
    pub fn row(&self, i: usize) -> &[S] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    /// Overwrite row/column `i`; `row[i]` is forced to zero.
    pub fn set_row(&mut self, i: usize, row: &[S]) {
        debug_assert_eq!(row.len(), self.n);
        for (j, &v) in row.iter().enumerate() {
            let v = if j == i { S::zero() } else { v };
            self.d[i * self.n + j] = v;
            self.d[j * self.n + i] = v;
        }
    }

    fn require_pairs(&self) -> Result<(), DiversityError> {
        if self.n < 2 {
            Err(DiversityError::TooFewElements(self.n))
        } else {
            Ok(())
        }
    }

    fn over_unordered_pairs(&self, mut f: impl FnMut(S)) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                f(self.get(i, j));
            }
        }
    }

    /// Energy diversity: `-(1/(N(N-1))) * sum_{i != j} 1/(D_ij + eps)^gamma`
    /// over ordered pairs. Strictly negative; larger means more diverse.
    pub fn energy_signed(&self, gamma: S, epsilon: S) -> Result<S, DiversityError> {
        self.require_pairs()?;
        let mut sum = S::zero();
        self.over_unordered_pairs(|d| sum += recip_pow(d, gamma, epsilon));
        let pairs = count::<S>(self.n) * count::<S>(self.n - 1);
        Ok(-(sum + sum) / pairs)
    }

    /// The positive quantity reported in the experiment tables; equals
    /// `-energy_signed` at `gamma = 1`.
    pub fn energy_penalty(&self, epsilon: S) -> Result<S, DiversityError> {
        Ok(-self.energy_signed(S::one(), epsilon)?)
    }

    /// Mean pairwise distance.
    pub fn average(&self) -> Result<S, DiversityError> {
        self.require_pairs()?;
        let mut sum = S::zero();
        self.over_unordered_pairs(|d| sum += d);
        let pairs = count::<S>(self.n) * count::<S>(self.n - 1);
        Ok((sum + sum) / pairs)
    }

    /// Pairwise distance sum scaled by `1/N`.
    pub fn sum_average(&self) -> Result<S, DiversityError> {
        self.require_pairs()?;
        let mut sum = S::zero();
        self.over_unordered_pairs(|d| sum += d);
        Ok(sum / count::<S>(self.n))
    }

    pub fn diameter(&self) -> Result<S, DiversityError> {
        self.require_pairs()?;
        let mut max = S::neg_infinity();
        self.over_unordered_pairs(|d| max = max.max(d));
        Ok(max)
    }

    pub fn bottleneck(&self) -> Result<S, DiversityError> {
        self.require_pairs()?;
        let mut min = S::infinity();
        self.over_unordered_pairs(|d| min = min.min(d));
        Ok(min)
    }

    pub fn sum_diameter(&self) -> Result<S, DiversityError> {
        self.require_pairs()?;
        Ok((0..self.n)
            .map(|i| {
                let row = self.row(i);
                (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| row[j])
                    .fold(S::neg_infinity(), S::max)
            })
            .sum())
    }

    pub fn sum_bottleneck(&self) -> Result<S, DiversityError> {
        self.require_pairs()?;
        Ok((0..self.n)
            .map(|i| {
                let row = self.row(i);
                (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| row[j])
                    .fold(S::infinity(), S::min)
            })
            .sum())
    }

    /// Size of the largest subset whose pairwise distances all strictly
    /// exceed `t` (exact max clique on the threshold graph).
    pub fn num_circles(&self, t: S) -> Result<usize, DiversityError> {
        self.require_pairs()?;
        if self.n > NUM_CIRCLES_MAX {
            return Err(DiversityError::UnsupportedSize(self.n));
        }
        let mut adj = vec![0u32; self.n];
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) > t {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        let mut best = 0usize;
        let all = if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        };
        clique_expand(&adj, all, 0, &mut best);
        Ok(best)
    }

    /// Dispatch to the configured measure; #Circles is returned as a count
    /// cast to the scalar type.
    pub fn measure_value(&self, cfg: &MeasureConfig<S>) -> Result<S, DiversityError> {
        match cfg.measure {
            Measure::Energy => self.energy_signed(cfg.gamma, cfg.epsilon),
            Measure::Average => self.average(),
            Measure::SumAverage => self.sum_average(),
            Measure::Diameter => self.diameter(),
            Measure::SumDiameter => self.sum_diameter(),
            Measure::Bottleneck => self.bottleneck(),
            Measure::SumBottleneck => self.sum_bottleneck(),
            Measure::NumCircles => Ok(count(self.num_circles(cfg.threshold)?)),
        }
    }
}

/// Branch-and-bound clique search in increasing-index order.
fn clique_expand(adj: &[u32], candidates: u32, size: usize, best: &mut usize) {
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    let mut rest = candidates;
    while rest != 0 {
        if size + rest.count_ones() as usize <= *best {
            return;
        }
        let v = rest.trailing_zeros();
        rest &= !(1 << v);
        clique_expand(adj, rest & adj[v as usize], size + 1, best);
        *best = (*best).max(size + 1);
    }
}

/// Vendi Score of a similarity matrix: exponential of the Shannon entropy of
/// the eigenvalues of `K / N`.
pub fn vendi_score<S: Scalar>(k: &[Vec<S>]) -> Result<S, DiversityError> {
    let n = k.len();
    if n == 0 {
        return Err(DiversityError::TooFewElements(0));
    }
    let tol = real::<S>(1e-9).max(S::epsilon() * real::<S>(64.0));
    for (i, row) in k.iter().enumerate() {
        if row.len() != n {
            return Err(DiversityError::InvalidSimilarity(format!(
                "row {i} has length {}, expected {n}",
                row.len()
            )));
        }
        if (row[i] - S::one()).abs() > tol {
            return Err(DiversityError::InvalidSimilarity(format!(
                "diagonal entry ({i},{i}) = {} is not 1",
                row[i]
            )));
        }
        for j in 0..n {
            if (row[j] - k[j][i]).abs() > tol {
                return Err(DiversityError::InvalidSimilarity(format!(
                    "asymmetric at ({i},{j})"
                )));
            }
        }
    }
    let n_s = count::<S>(n);
    let scaled: Vec<Vec<S>> = k
        .iter()
        .map(|row| row.iter().map(|&v| v / n_s).collect())
        .collect();
    let eigenvalues = symmetric_eigenvalues(scaled)
        .map_err(|e| DiversityError::InvalidSimilarity(e.to_string()))?;
    let mut entropy = S::zero();
    for &lambda in &eigenvalues {
        if lambda < -tol {
            return Err(DiversityError::InvalidSimilarity(format!(
                "negative eigenvalue {lambda}"
            )));
        }
        if lambda > S::zero() {
            entropy -= lambda * lambda.ln();
        }
    }
    Ok(entropy.exp())
}

/// Per-pair fitness contributions of a candidate's distance row.
fn fitness_terms<S: Scalar>(cfg: &MeasureConfig<S>, row: &[S]) -> Vec<S> {
    match cfg.measure {
        Measure::Energy => row
            .iter()
            .map(|&d| recip_pow(d, cfg.gamma, cfg.epsilon))
            .collect(),
        _ => row.to_vec(),
    }
}

fn fitness_from_terms<S: Scalar>(cfg: &MeasureConfig<S>, terms: &[S], exclude: usize) -> S {
    let n_rest = count::<S>(terms.len() - 1);
    let others = || {
        terms
            .iter()
            .enumerate()
            .filter(move |&(j, _)| j != exclude)
            .map(|(_, &t)| t)
    };
    match cfg.measure {
        Measure::Energy => {
            let mut sum = S::zero();
            for t in others() {
                sum += t;
            }
            -sum / n_rest
        }
        Measure::Average => {
            let mut sum = S::zero();
            for t in others() {
                sum += t;
            }
            sum / n_rest
        }
        Measure::SumAverage => {
            let mut sum = S::zero();
            for t in others() {
                sum += t;
            }
            sum
        }
        Measure::Diameter | Measure::SumDiameter => others().fold(S::neg_infinity(), S::max),
        Measure::Bottleneck | Measure::SumBottleneck | Measure::NumCircles => {
            others().fold(S::infinity(), S::min)
        }
    }
}

/// Fitness of a candidate (its distance row to the population) with respect
/// to the population minus element `exclude`. Higher = more diversity.
pub fn candidate_fitness<S: Scalar>(cfg: &MeasureConfig<S>, row: &[S], exclude: usize) -> S {
    fitness_from_terms(cfg, &fitness_terms(cfg, row), exclude)
}

/// Candidate fitness against `S \ {i}` for every `i` at once.
pub fn candidate_fitness_all<S: Scalar>(cfg: &MeasureConfig<S>, row: &[S]) -> Vec<S> {
    let terms = fitness_terms(cfg, row);
    (0..row.len())
        .map(|i| fitness_from_terms(cfg, &terms, i))
        .collect()
}

/// Fitness of population element `i` w.r.t. the rest of the population.
pub fn fitness_under<S: Scalar>(
    cfg: &MeasureConfig<S>,
    dist: &PairwiseDistances<S>,
    i: usize,
) -> S {
    candidate_fitness(cfg, dist.row(i), i)
}

/// N elements with cached descriptors, pairwise distances, and fitness.
///
/// Single-writer contract: one optimizer loop mutates the state; the
/// within-step distance evaluations may run in parallel but land in fixed
/// slots, so results never depend on scheduling.
pub struct PopulationState<Sp: DiversitySpace> {
    space: Sp,
    cfg: MeasureConfig<Sp::Scalar>,
    elements: Vec<Sp::Elem>,
    descriptors: Vec<Sp::Desc>,
    dist: PairwiseDistances<Sp::Scalar>,
    fitness: Vec<Sp::Scalar>,
}

impl<Sp: DiversitySpace> PopulationState<Sp> {
    /// Build from elements whose descriptors are already computed (pool
    /// selection reuses cached descriptors).
    pub fn from_parts(
        space: Sp,
        cfg: MeasureConfig<Sp::Scalar>,
        elements: Vec<Sp::Elem>,
        descriptors: Vec<Sp::Desc>,
    ) -> Self {
        assert_eq!(elements.len(), descriptors.len());
        let n = elements.len();
        let dist =
            PairwiseDistances::from_fn(n, |i, j| space.distance(&descriptors[i], &descriptors[j]));
        let mut state = PopulationState {
            space,
            cfg,
            elements,
            descriptors,
            dist,
            fitness: vec![Sp::Scalar::zero(); n],
        };
        state.recompute_fitness();
        state
    }

    /// Build from raw elements, charging one descriptor per element.
    pub fn new(
        space: Sp,
        cfg: MeasureConfig<Sp::Scalar>,
        elements: Vec<Sp::Elem>,
        ledger: &BudgetLedger,
    ) -> Result<Self, SpaceError> {
        let descriptors = elements
            .iter()
            .map(|e| space.describe(e, ledger))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PopulationState::from_parts(
            space,
            cfg,
            elements,
            descriptors,
        ))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn space(&self) -> &Sp {
        &self.space
    }

    pub fn config(&self) -> &MeasureConfig<Sp::Scalar> {
        &self.cfg
    }

    pub fn elements(&self) -> &[Sp::Elem] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Sp::Elem {
        &self.elements[i]
    }

    pub fn descriptor(&self, i: usize) -> &Sp::Desc {
        &self.descriptors[i]
    }

    pub fn distances(&self) -> &PairwiseDistances<Sp::Scalar> {
        &self.dist
    }

    pub fn fitness(&self, i: usize) -> Sp::Scalar {
        self.fitness[i]
    }

    pub fn fitness_values(&self) -> &[Sp::Scalar] {
        &self.fitness
    }

    /// Distance row from an outside descriptor to every population element
    /// (parallel map into fixed slots).
    pub fn distance_row_to(&self, desc: &Sp::Desc) -> Vec<Sp::Scalar> {
        self.descriptors
            .par_iter()
            .map(|d| self.space.distance(desc, d))
            .collect()
    }

    /// Replace element `i`, charging one descriptor computation.
    pub fn replace(
        &mut self,
        i: usize,
        elem: Sp::Elem,
        ledger: &BudgetLedger,
    ) -> Result<(), SpaceError> {
        let desc = self.space.describe(&elem, ledger)?;
        let row = self.distance_row_to(&desc);
        self.apply_replace(i, elem, desc, row);
        Ok(())
    }

    /// Replace element `i` with a candidate whose descriptor and distance
    /// row are already computed.
    pub fn apply_replace(
        &mut self,
        i: usize,
        elem: Sp::Elem,
        desc: Sp::Desc,
        row: Vec<Sp::Scalar>,
    ) {
        self.elements[i] = elem;
        self.descriptors[i] = desc;
        self.dist.set_row(i, &row);
        self.recompute_fitness();
    }

    fn recompute_fitness(&mut self) {
        if self.len() < 2 {
            self.fitness
                .iter_mut()
                .for_each(|f| *f = Sp::Scalar::zero());
            return;
        }
        for i in 0..self.len() {
            self.fitness[i] = fitness_under(&self.cfg, &self.dist, i);
        }
    }

    /// Energy penalty of the current population at the configured epsilon.
    pub fn energy_penalty(&self) -> Result<Sp::Scalar, DiversityError> {
        self.dist.energy_penalty(self.cfg.epsilon)
    }

    /// Diversity under the configured measure.
    pub fn diversity(&self) -> Result<Sp::Scalar, DiversityError> {
        self.dist.measure_value(&self.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> PairwiseDistances<f64> {
        PairwiseDistances::from_line_points(points)
    }

    const CORPUS_TOL: f64 = 1e-12;

    #[test]
    fn energy_hand_sum() {
        let d = line(&[0.0, 10.0, 11.0, 12.0]);
        let expected = -(0.1 + 1.0 / 11.0 + 1.0 / 12.0 + 1.0 + 0.5 + 1.0) / 6.0;
        assert!((d.energy_signed(1.0, 0.0).unwrap() - expected).abs() < CORPUS_TOL);
        assert!((d.energy_penalty(0.0).unwrap() + expected).abs() < CORPUS_TOL);
    }

    #[test]
    fn energy_penalty_is_negated_energy() {
        let d = line(&[0.0, 0.3, 0.9, 2.0]);
        assert_eq!(
            d.energy_penalty(1e-5).unwrap(),
            -d.energy_signed(1.0, 1e-5).unwrap()
        );
    }

    #[test]
    fn duplicate_dominates_energy() {
        let d = line(&[0.0, 0.0, 11.0, 12.0]);
        let e = d.energy_signed(1.0, 1e-5).unwrap();
        assert!(e <= -(2.0 / (4.0 * 3.0)) * 1e5 * 0.5);
    }

    #[test]
    fn scaling_distances_up_raises_energy() {
        let a = line(&[0.0, 1.0, 3.0, 7.0]);
        let b = line(&[0.0, 2.0, 6.0, 14.0]);
        assert!(b.energy_signed(1.0, 0.0).unwrap() > a.energy_signed(1.0, 0.0).unwrap());
    }

    #[test]
    fn average_counterexample_corpus() {
        let d = line(&[0.0, 10.0, 11.0, 12.0]);
        assert!((d.average().unwrap() - 37.0 / 6.0).abs() < CORPUS_TOL);
        let d2 = line(&[0.0, 0.0, 11.0, 12.0]);
        assert!((d2.average().unwrap() - 47.0 / 6.0).abs() < CORPUS_TOL);
        // SumAverage: the same pairwise sums scaled by 1/N.
        assert!((d.sum_average().unwrap() - 37.0 / 4.0).abs() < CORPUS_TOL);
        assert!((d2.sum_average().unwrap() - 47.0 / 4.0).abs() < CORPUS_TOL);
    }

    #[test]
    fn bottleneck_monotonicity_violation_witness() {
        assert_eq!(line(&[0.0, 1.0, 5.0]).bottleneck().unwrap(), 1.0);
        assert_eq!(line(&[0.0, 1.0, 6.0]).bottleneck().unwrap(), 1.0);
    }

    #[test]
    fn sum_diameter_triangle_witness() {
        // Pairwise distances {10, 7, 4}: SumDiameter = 10 + 10 + 7 = 27.
        let mut d = PairwiseDistances::zeros(3);
        d.set(0, 1, 10.0);
        d.set(0, 2, 7.0);
        d.set(1, 2, 4.0);
        assert_eq!(d.sum_diameter().unwrap(), 27.0);
        assert_eq!(d.diameter().unwrap(), 10.0);
    }

    #[test]
    fn sum_bottleneck_witnesses() {
        assert_eq!(line(&[0.0, 1.0, 5.0, 6.0]).sum_bottleneck().unwrap(), 4.0);
        assert_eq!(line(&[0.0, 9.0, 9.0, 10.0]).sum_bottleneck().unwrap(), 10.0);
    }

    #[test]
    fn num_circles_witnesses() {
        // The comparison is strictly greater-than. The uniqueness witness
        // {0, t/2, t} has its extreme pair at distance exactly t, so its
        // stated count of 2 is checked just inside the boundary, where both
        // it and the duplicate variant agree.
        let t = 4.0;
        let inside = t - 1e-9;
        assert_eq!(line(&[0.0, t / 2.0, t]).num_circles(inside).unwrap(), 2);
        assert_eq!(line(&[0.0, 0.0, t]).num_circles(inside).unwrap(), 2);
        assert_eq!(
            line(&[0.0, t / 2.0, t]).num_circles(t).unwrap(),
            line(&[0.0, 0.0, t]).num_circles(t).unwrap(),
        );
        let d = line(&[0.0, 10.0, 20.0, 30.0]);
        assert_eq!(d.num_circles(9.0).unwrap(), 4);
        let big = PairwiseDistances::<f64>::zeros(26);
        assert!(matches!(
            big.num_circles(0.5),
            Err(DiversityError::UnsupportedSize(26))
        ));
    }

    #[test]
    fn num_circles_threshold_bands() {
        // Distances {10, 7, 4} vs {10, 8, 4}: identical counts in each band.
        let mut a = PairwiseDistances::zeros(3);
        a.set(0, 1, 10.0);
        a.set(0, 2, 7.0);
        a.set(1, 2, 4.0);
        let mut b = a.clone();
        b.set(0, 2, 8.0);
        for (t, expected) in [(3.9, 3), (4.0, 2), (9.9, 2), (10.0, 1)] {
            assert_eq!(a.num_circles(t).unwrap(), expected, "t={t}");
            assert_eq!(b.num_circles(t).unwrap(), expected, "t={t}");
        }
    }

    #[test]
    fn vendi_score_paper_matrices() {
        let k1: Vec<Vec<f64>> = vec![
            vec![1.0, 0.1, 0.8],
            vec![0.1, 1.0, 0.4],
            vec![0.8, 0.4, 1.0],
        ];
        let k2: Vec<Vec<f64>> = vec![
            vec![1.0, 0.2, 0.8],
            vec![0.2, 1.0, 0.4],
            vec![0.8, 0.4, 1.0],
        ];
        assert!((vendi_score(&k1).unwrap() - 2.203).abs() < 1e-3);
        assert!((vendi_score(&k2).unwrap() - 2.212).abs() < 1e-3);
        let k3: Vec<Vec<f64>> = vec![
            vec![1.0, 0.6, 0.2],
            vec![0.6, 1.0, 0.9],
            vec![0.2, 0.9, 1.0],
        ];
        let k4: Vec<Vec<f64>> = vec![
            vec![1.0, 1.0, 0.2],
            vec![1.0, 1.0, 0.2],
            vec![0.2, 0.2, 1.0],
        ];
        assert!((vendi_score(&k3).unwrap() - 1.81).abs() < 1e-2);
        assert!((vendi_score(&k4).unwrap() - 1.86).abs() < 1e-2);
    }

    #[test]
    fn vendi_score_identity_and_validation() {
        let id: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!((vendi_score(&id).unwrap() - 3.0).abs() < 1e-9);
        let asym: Vec<Vec<f64>> = vec![
            vec![1.0, 0.5, 0.0],
            vec![0.4, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(vendi_score(&asym).is_err());
        let bad_diag: Vec<Vec<f64>> = vec![vec![0.9, 0.0], vec![0.0, 1.0]];
        assert!(vendi_score(&bad_diag).is_err());
    }

    #[test]
    fn fitness_examples() {
        let cfg = MeasureConfig::<f64>::new(Measure::Bottleneck);
        let d = line(&[0.0, 1.0, 5.0]);
        assert_eq!(fitness_under(&cfg, &d, 2), 4.0);

        // A duplicated element's energy fitness is dominated by the 1/eps
        // term.
        let cfg_energy = MeasureConfig::<f64>::energy();
        let dup = line(&[0.0, 0.0, 5.0]);
        assert!(fitness_under(&cfg_energy, &dup, 0) <= -1e5 / 2.0);

        let cfg_avg = MeasureConfig::<f64>::new(Measure::Average);
        let d = line(&[0.0, 2.0, 5.0, 9.0]);
        let mean_fitness: f64 = (0..4).map(|i| fitness_under(&cfg_avg, &d, i)).sum::<f64>() / 4.0;
        assert!((mean_fitness - d.average().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn candidate_fitness_all_matches_single() {
        let cfg = MeasureConfig::<f64>::energy();
        let row = vec![0.4, 1.7, 0.0, 2.2, 0.9];
        let all = candidate_fitness_all(&cfg, &row);
        for i in 0..row.len() {
            assert_eq!(all[i], candidate_fitness(&cfg, &row, i));
        }
    }

    #[test]
    fn measures_work_in_f32() {
        let points: Vec<f32> = vec![0.0, 0.25, 0.75, 1.0];
        let d = PairwiseDistances::from_line_points(&points);
        assert!(d.energy_signed(1.0f32, 1e-4).unwrap() < 0.0);
        assert!((d.average().unwrap() - 0.5833333).abs() < 1e-5);
        assert_eq!(d.bottleneck().unwrap(), 0.25);
    }

    #[test]
    fn too_few_elements_rejected() {
        let single = PairwiseDistances::<f64>::zeros(1);
        assert!(matches!(
            single.average(),
            Err(DiversityError::TooFewElements(1))
        ));
        assert!(single.energy_signed(1.0, 0.0).is_err());
    }
}
