//! Diversity optimizers: greedy pool selection, genetic evolution, and local
//! mutation search, plus stage chaining with budget accounting.
//!
//! All three optimizers are generic over a [`DiversitySpace`] and share two
//! conventions: fitness is higher-is-better for every measure, and ties are
//! always broken toward the lowest index so runs are reproducible.

use std::fmt;
use std::str::FromStr;

use num_traits::{Float, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::budget::BudgetLedger;
use crate::diversity::{
    candidate_fitness, candidate_fitness_all, DiversityError, Measure, MeasureConfig,
    PairwiseDistances, PopulationState,
};
use crate::generators::Seed;
use crate::scalar::{count, real, Scalar};
use crate::space::{DiversitySpace, PoolSource, SpaceError};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("stage plan is empty")]
    EmptyPlan,
    #[error("invalid stage plan: {0}")]
    InvalidPlan(String),
    #[error("population needs at least 2 elements, got {0}")]
    PopulationTooSmall(usize),
    #[error("pool yielded {have} elements, need at least {need}")]
    InsufficientPool { have: usize, need: usize },
    #[error("stage budget {budget} cannot cover the {need} initial descriptors")]
    StageBudgetTooSmall { budget: u64, need: u64 },
    #[error("this element space has no crossover; genetic stages are unavailable")]
    MissingCrossover,
    #[error("greedy bound verification is degenerate: {0}")]
    DegenerateBound(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Diversity(#[from] DiversityError),
    #[error("stage {index} ({kind}): {source}")]
    Stage {
        index: usize,
        kind: StageKind,
        source: Box<OptimizeError>,
    },
}

impl OptimizeError {
    fn at_stage(index: usize, kind: StageKind, source: OptimizeError) -> Self {
        OptimizeError::Stage {
            index,
            kind,
            source: Box::new(source),
        }
    }
}

// ---------------------------------------------------------------------------
// Stage plans
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    Greedy,
    Genetic,
    LocalOpt,
}

impl StageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StageKind::Greedy => "greedy",
            StageKind::Genetic => "genetic",
            StageKind::LocalOpt => "local_opt",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One optimizer stage with its budget (descriptor computations) and
/// parameters. `k_escape: None` disables the forced-accept escape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub budget: u64,
    pub k_escape: Option<u64>,
    pub alpha_mut: f64,
}

pub const DEFAULT_K_ESCAPE: u64 = 1000;
pub const DEFAULT_ALPHA_MUT: f64 = 0.1;

impl Stage {
    pub fn new(kind: StageKind, budget: u64) -> Self {
        Stage {
            kind,
            budget,
            k_escape: Some(DEFAULT_K_ESCAPE),
            alpha_mut: DEFAULT_ALPHA_MUT,
        }
    }

    pub fn with_k_escape(mut self, k: Option<u64>) -> Self {
        self.k_escape = k;
        self
    }

    pub fn with_alpha_mut(mut self, alpha: f64) -> Self {
        self.alpha_mut = alpha;
        self
    }
}

/// Ordered optimizer stages, e.g.
/// `greedy[100000]->genetic[100000,K=1000,alpha=0.1]->local_opt[100000,K=1000]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
}

impl StagePlan {
    pub fn total_budget(&self) -> u64 {
        self.stages.iter().map(|s| s.budget).sum()
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.stages.is_empty() {
            return Err(OptimizeError::EmptyPlan);
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if stage.budget == 0 {
                return Err(OptimizeError::InvalidPlan(format!(
                    "stage {i} ({}) has zero budget",
                    stage.kind
                )));
            }
            if stage.kind == StageKind::Greedy && i != 0 {
                return Err(OptimizeError::InvalidPlan(
                    "greedy re-selects from a pool and must be the first stage".into(),
                ));
            }
            if stage.kind == StageKind::LocalOpt && i == 0 {
                return Err(OptimizeError::InvalidPlan(
                    "local_opt refines an existing population and cannot run first".into(),
                ));
            }
        }
        Ok(())
    }
}

impl FromStr for StagePlan {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| OptimizeError::InvalidPlan(msg);
        let mut stages = Vec::new();
        for part in s.split("->") {
            let part = part.trim();
            let open = part
                .find('[')
                .ok_or_else(|| bad(format!("stage {part:?} is missing its [budget]")))?;
            if !part.ends_with(']') {
                return Err(bad(format!("stage {part:?} is missing the closing ]")));
            }
            let kind = match &part[..open] {
                "greedy" => StageKind::Greedy,
                "genetic" => StageKind::Genetic,
                "local_opt" => StageKind::LocalOpt,
                other => {
                    return Err(bad(format!(
                        "unknown stage {other:?}; valid stages: greedy, genetic, local_opt"
                    )))
                }
            };
            let inner = &part[open + 1..part.len() - 1];
            let mut fields = inner.split(',');
            let budget_tok = fields
                .next()
                .filter(|t| !t.trim().is_empty())
                .ok_or_else(|| bad(format!("stage {part:?} is missing its budget")))?;
            let budget: u64 = budget_tok
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad budget {budget_tok:?}: {e}")))?;
            let mut stage = Stage::new(kind, budget);
            for field in fields {
                let field = field.trim();
                if let Some(v) = field.strip_prefix("K=") {
                    stage.k_escape = if v == "inf" {
                        None
                    } else {
                        Some(
                            v.parse::<u64>()
                                .map_err(|e| bad(format!("bad K {v:?}: {e}")))?,
                        )
                    };
                } else if let Some(v) = field.strip_prefix("alpha=") {
                    let alpha: f64 = v
                        .parse()
                        .map_err(|e| bad(format!("bad alpha {v:?}: {e}")))?;
                    if !(0.0..=1.0).contains(&alpha) {
                        return Err(bad(format!("alpha must lie in [0,1], got {alpha}")));
                    }
                    stage = stage.with_alpha_mut(alpha);
                } else {
                    return Err(bad(format!(
                        "unknown stage parameter {field:?}; expected K=<n|inf> or alpha=<x>"
                    )));
                }
            }
            stages.push(stage);
        }
        let plan = StagePlan { stages };
        plan.validate()?;
        Ok(plan)
    }
}

impl fmt::Display for StagePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for stage in &self.stages {
            if !first {
                write!(f, "->")?;
            }
            first = false;
            write!(f, "{}[{}", stage.kind, stage.budget)?;
            if stage.kind != StageKind::Greedy {
                match stage.k_escape {
                    Some(k) => write!(f, ",K={k}")?,
                    None => write!(f, ",K=inf")?,
                }
            }
            if stage.kind == StageKind::Genetic {
                write!(f, ",alpha={}", stage.alpha_mut)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Rank-based selection weights
// ---------------------------------------------------------------------------

/// Indices sorted by (fitness ascending, index ascending).
fn fitness_order<S: Scalar>(fitness: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| {
        fitness[a]
            .partial_cmp(&fitness[b])
            .expect("fitness values are comparable")
            .then(a.cmp(&b))
    });
    order
}

/// Parent selection weights: rank from worst (1..N), so the fittest element
/// carries the largest weight.
fn parent_weights<S: Scalar>(fitness: &[S]) -> Vec<f64> {
    let order = fitness_order(fitness);
    let mut weights = vec![0.0; fitness.len()];
    for (pos, &idx) in order.iter().enumerate() {
        weights[idx] = (pos + 1) as f64;
    }
    weights
}

/// Local-opt target weights: rank from best (1..N), so the least fit element
/// carries the largest weight.
fn target_weights<S: Scalar>(fitness: &[S]) -> Vec<f64> {
    let order = fitness_order(fitness);
    let n = fitness.len();
    let mut weights = vec![0.0; n];
    for (pos, &idx) in order.iter().enumerate() {
        weights[idx] = (n - pos) as f64;
    }
    weights
}

fn weighted_pick(weights: &[f64], exclude: Option<usize>, rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(_, &w)| w)
        .sum();
    let mut t = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        last = i;
        t -= w;
        if t < 0.0 {
            return i;
        }
    }
    last
}

// ---------------------------------------------------------------------------
// Greedy selection
// ---------------------------------------------------------------------------

/// Running fitness aggregate of one pool candidate w.r.t. the selected set.
#[derive(Clone, Copy)]
enum Aggregate<S> {
    Sum(S),
    Min(S),
    Max(S),
}

impl<S: Scalar> Aggregate<S> {
    fn initial(measure: Measure) -> Self {
        match measure {
            Measure::Energy | Measure::Average | Measure::SumAverage => Aggregate::Sum(S::zero()),
            Measure::Bottleneck | Measure::SumBottleneck | Measure::NumCircles => {
                Aggregate::Min(S::infinity())
            }
            Measure::Diameter | Measure::SumDiameter => Aggregate::Max(S::neg_infinity()),
        }
    }

    fn update(&mut self, cfg: &MeasureConfig<S>, d: S) {
        match self {
            Aggregate::Sum(acc) => {
                let term = match cfg.measure {
                    Measure::Energy => {
                        let base = d + cfg.epsilon;
                        if cfg.gamma == S::one() {
                            base.recip()
                        } else {
                            base.powf(cfg.gamma).recip()
                        }
                    }
                    _ => d,
                };
                *acc += term;
            }
            Aggregate::Min(acc) => *acc = acc.min(d),
            Aggregate::Max(acc) => *acc = acc.max(d),
        }
    }

    /// Fitness up to a positive scale shared by all candidates at one step.
    fn fitness(&self, measure: Measure) -> S {
        match (self, measure) {
            (Aggregate::Sum(acc), Measure::Energy) => -*acc,
            (Aggregate::Sum(acc), _) => *acc,
            (Aggregate::Min(acc), _) => *acc,
            (Aggregate::Max(acc), _) => *acc,
        }
    }
}

/// Iteratively select `n_select` elements from a pool, adding at each step
/// the pool element with the maximal fitness w.r.t. the selected set.
///
/// The first element is uniformly random. Candidates are the whole pool at
/// every step (multiset semantics); per-candidate fitness is maintained
/// incrementally with one new distance per candidate per step. The pool is
/// truncated at the stage budget; every pooled element costs one descriptor.
pub fn greedy_select<Sp: DiversitySpace + Clone>(
    space: Sp,
    cfg: MeasureConfig<Sp::Scalar>,
    pool: &dyn PoolSource<Sp>,
    n_select: usize,
    pool_budget: u64,
    seed: Seed,
    ledger: &BudgetLedger,
) -> Result<PopulationState<Sp>, OptimizeError> {
    let granted = ledger.reserve(pool_budget);
    let elements: Vec<Sp::Elem> = pool
        .elements(seed.child(0), granted as usize)
        .collect::<Result<_, _>>()?;
    if (elements.len() as u64) < granted {
        ledger.refund(granted - elements.len() as u64);
    }
    let m = elements.len();
    if m < n_select {
        return Err(OptimizeError::InsufficientPool {
            have: m,
            need: n_select,
        });
    }
    let descriptors: Vec<Sp::Desc> = elements
        .par_iter()
        .map(|e| space.describe_free(e))
        .collect::<Result<_, _>>()?;

    let mut rng = seed.child(1).rng();
    let mut selected = Vec::with_capacity(n_select);
    selected.push(rng.gen_range(0..m));
    let mut aggregates = vec![Aggregate::<Sp::Scalar>::initial(cfg.measure); m];
    while selected.len() < n_select {
        let last = *selected.last().expect("selection is nonempty");
        let new_distances: Vec<Sp::Scalar> = descriptors
            .par_iter()
            .map(|d| space.distance(d, &descriptors[last]))
            .collect();
        let mut best = 0usize;
        let mut best_fitness = Sp::Scalar::neg_infinity();
        for c in 0..m {
            aggregates[c].update(&cfg, new_distances[c]);
            let f = aggregates[c].fitness(cfg.measure);
            if f > best_fitness {
                best_fitness = f;
                best = c;
            }
        }
        selected.push(best);
    }

    let chosen_elements: Vec<Sp::Elem> = selected.iter().map(|&i| elements[i].clone()).collect();
    let chosen_descriptors: Vec<Sp::Desc> =
        selected.iter().map(|&i| descriptors[i].clone()).collect();
    Ok(PopulationState::from_parts(
        space,
        cfg,
        chosen_elements,
        chosen_descriptors,
    ))
}

// ---------------------------------------------------------------------------
// Genetic and local-optimization steps
// ---------------------------------------------------------------------------

/// Outcome of one update attempt.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepOutcome {
    pub accepted: bool,
    pub forced: bool,
}

struct RejectedCandidate<Sp: DiversitySpace> {
    elem: Sp::Elem,
    desc: Sp::Desc,
    row: Vec<Sp::Scalar>,
    margin: Sp::Scalar,
    target: usize,
}

/// Tracks consecutive rejections; after `k` of them the best rejected
/// candidate (maximal margin) is force-accepted. Rejected snapshots stay
/// valid because the population is unchanged between accepts.
pub struct EscapeState<Sp: DiversitySpace> {
    k: Option<u64>,
    failures: u64,
    buffer: Vec<RejectedCandidate<Sp>>,
}

impl<Sp: DiversitySpace> EscapeState<Sp> {
    pub fn new(k: Option<u64>) -> Self {
        EscapeState {
            k,
            failures: 0,
            buffer: Vec::new(),
        }
    }

    fn on_accept(&mut self) {
        self.failures = 0;
        self.buffer.clear();
    }

    /// Record a rejection; returns the candidate to force-accept when the
    /// failure threshold fires.
    fn record(&mut self, candidate: RejectedCandidate<Sp>) -> Option<RejectedCandidate<Sp>> {
        let Some(k) = self.k else {
            return None;
        };
        self.buffer.push(candidate);
        self.failures += 1;
        if self.failures < k {
            return None;
        }
        let mut best = 0usize;
        for (i, c) in self.buffer.iter().enumerate() {
            if c.margin > self.buffer[best].margin {
                best = i;
            }
        }
        let chosen = self.buffer.swap_remove(best);
        self.on_accept();
        Some(chosen)
    }
}

/// One genetic update attempt: sample two distinct parents (weights by
/// fitness rank), crossover, mutate with probability `alpha_mut`, then
/// replace the population element with the best positive margin.
pub fn genetic_step<Sp: DiversitySpace>(
    state: &mut PopulationState<Sp>,
    alpha_mut: f64,
    escape: &mut EscapeState<Sp>,
    rng: &mut ChaCha8Rng,
    ledger: &BudgetLedger,
) -> Result<StepOutcome, OptimizeError> {
    let n = state.len();
    if n < 2 {
        return Err(OptimizeError::PopulationTooSmall(n));
    }
    let weights = parent_weights(state.fitness_values());
    let p1 = weighted_pick(&weights, None, rng);
    let p2 = weighted_pick(&weights, Some(p1), rng);
    let mut child = state
        .space()
        .crossover(state.element(p1), state.element(p2), rng)
        .ok_or(OptimizeError::MissingCrossover)?;
    if rng.gen_bool(alpha_mut) {
        child = state.space().rewire(&child, rng);
    }
    let desc = state.space().describe(&child, ledger)?;
    let row = state.distance_row_to(&desc);
    let candidate_values = candidate_fitness_all(state.config(), &row);
    let mut target = 0usize;
    let mut margin = Sp::Scalar::neg_infinity();
    for i in 0..n {
        let m = candidate_values[i] - state.fitness(i);
        if m > margin {
            margin = m;
            target = i;
        }
    }
    if margin > Sp::Scalar::zero() {
        state.apply_replace(target, child, desc, row);
        escape.on_accept();
        return Ok(StepOutcome {
            accepted: true,
            forced: false,
        });
    }
    if let Some(c) = escape.record(RejectedCandidate {
        elem: child,
        desc,
        row,
        margin,
        target,
    }) {
        state.apply_replace(c.target, c.elem, c.desc, c.row);
        return Ok(StepOutcome {
            accepted: true,
            forced: true,
        });
    }
    Ok(StepOutcome::default())
}

/// One local-optimization attempt: pick an element with weights favoring low
/// fitness, apply the small mutation, accept if its fitness improves.
pub fn local_opt_step<Sp: DiversitySpace>(
    state: &mut PopulationState<Sp>,
    escape: &mut EscapeState<Sp>,
    rng: &mut ChaCha8Rng,
    ledger: &BudgetLedger,
) -> Result<StepOutcome, OptimizeError> {
    let n = state.len();
    if n < 2 {
        return Err(OptimizeError::PopulationTooSmall(n));
    }
    let weights = target_weights(state.fitness_values());
    let target = weighted_pick(&weights, None, rng);
    let candidate = state.space().mutate(state.element(target), rng);
    let desc = state.space().describe(&candidate, ledger)?;
    let row = state.distance_row_to(&desc);
    let new_fitness = candidate_fitness(state.config(), &row, target);
    let margin = new_fitness - state.fitness(target);
    if margin > Sp::Scalar::zero() {
        state.apply_replace(target, candidate, desc, row);
        escape.on_accept();
        return Ok(StepOutcome {
            accepted: true,
            forced: false,
        });
    }
    if let Some(c) = escape.record(RejectedCandidate {
        elem: candidate,
        desc,
        row,
        margin,
        target,
    }) {
        state.apply_replace(c.target, c.elem, c.desc, c.row);
        return Ok(StepOutcome {
            accepted: true,
            forced: true,
        });
    }
    Ok(StepOutcome::default())
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StageReport<S> {
    pub kind: StageKind,
    pub budget: u64,
    pub used: u64,
    pub attempts: u64,
    pub accepted: u64,
    pub forced: u64,
    pub penalty_before: Option<S>,
    pub penalty_after: S,
}

#[derive(Clone, Debug)]
pub struct RunReport<S> {
    pub pool_label: String,
    pub stages: Vec<StageReport<S>>,
    pub total_budget: u64,
    pub total_used: u64,
    pub final_penalty: S,
}

impl<S: Scalar> fmt::Display for RunReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pool: {}", self.pool_label)?;
        writeln!(
            f,
            "{:<10} {:>10} {:>10} {:>10} {:>9} {:>7} {:>14} {:>14}",
            "stage",
            "budget",
            "used",
            "attempts",
            "accepted",
            "forced",
            "penalty-in",
            "penalty-out"
        )?;
        for s in &self.stages {
            let before = match s.penalty_before {
                Some(p) => format!("{:.6}", p.to_f64().unwrap_or(f64::NAN)),
                None => "-".to_string(),
            };
            writeln!(
                f,
                "{:<10} {:>10} {:>10} {:>10} {:>9} {:>7} {:>14} {:>14.6}",
                s.kind.as_str(),
                s.budget,
                s.used,
                s.attempts,
                s.accepted,
                s.forced,
                before,
                s.penalty_after.to_f64().unwrap_or(f64::NAN),
            )?;
        }
        writeln!(
            f,
            "total: budget {} used {} final energy penalty {:.6}",
            self.total_budget,
            self.total_used,
            self.final_penalty.to_f64().unwrap_or(f64::NAN)
        )
    }
}

impl<S: Scalar> RunReport<S> {
    /// Machine-readable one-object summary.
    pub fn summary_json(&self) -> String {
        let stages: Vec<serde_json::Value> = self
            .stages
            .iter()
            .map(|s| {
                serde_json::json!({
                    "stage": s.kind.as_str(),
                    "budget": s.budget,
                    "used": s.used,
                    "attempts": s.attempts,
                    "accepted": s.accepted,
                    "forced": s.forced,
                    "penalty_before": s.penalty_before.map(|p| p.to_f64().unwrap_or(f64::NAN)),
                    "penalty_after": s.penalty_after.to_f64().unwrap_or(f64::NAN),
                })
            })
            .collect();
        serde_json::json!({
            "pool": self.pool_label,
            "total_budget": self.total_budget,
            "total_used": self.total_used,
            "final_energy_penalty": self.final_penalty.to_f64().unwrap_or(f64::NAN),
            "stages": stages,
        })
        .to_string()
    }
}

/// Execute the stages in order. Greedy consumes its budget ingesting pool
/// elements; genetic and local-opt consume one unit per attempt. A plan
/// starting with genetic draws its initial population from the pool source
/// (charged against that stage's budget). Fully deterministic given the
/// seed.
pub fn run_pipeline<Sp: DiversitySpace + Clone>(
    plan: &StagePlan,
    space: Sp,
    cfg: MeasureConfig<Sp::Scalar>,
    n_select: usize,
    seed: Seed,
    pool: &dyn PoolSource<Sp>,
) -> Result<(PopulationState<Sp>, RunReport<Sp::Scalar>), OptimizeError> {
    plan.validate()?;
    if n_select < 2 {
        return Err(OptimizeError::PopulationTooSmall(n_select));
    }
    let ledger = BudgetLedger::new(plan.total_budget());
    let mut state: Option<PopulationState<Sp>> = None;
    let mut reports: Vec<StageReport<Sp::Scalar>> = Vec::new();

    for (index, stage) in plan.stages.iter().enumerate() {
        let fail = |e: OptimizeError| OptimizeError::at_stage(index, stage.kind, e);
        let stage_seed = seed.child(index as u64);
        let used_before = ledger.used();
        let penalty_before = match &state {
            Some(s) => Some(s.energy_penalty().map_err(|e| fail(e.into()))?),
            None => None,
        };
        let mut attempts = 0u64;
        let mut accepted = 0u64;
        let mut forced = 0u64;

        match stage.kind {
            StageKind::Greedy => {
                let st = greedy_select(
                    space.clone(),
                    cfg,
                    pool,
                    n_select,
                    stage.budget,
                    stage_seed,
                    &ledger,
                )
                .map_err(fail)?;
                state = Some(st);
            }
            StageKind::Genetic | StageKind::LocalOpt => {
                if state.is_none() {
                    // Initial population straight from the pool source.
                    let need = n_select as u64;
                    if stage.budget < need {
                        return Err(fail(OptimizeError::StageBudgetTooSmall {
                            budget: stage.budget,
                            need,
                        }));
                    }
                    let granted = ledger.reserve(need);
                    if granted < need {
                        ledger.refund(granted);
                        return Err(fail(OptimizeError::StageBudgetTooSmall {
                            budget: ledger.limit(),
                            need,
                        }));
                    }
                    let elements: Vec<Sp::Elem> = pool
                        .elements(stage_seed.child(0), n_select)
                        .collect::<Result<_, _>>()
                        .map_err(|e: SpaceError| fail(e.into()))?;
                    if elements.len() < n_select {
                        ledger.refund(need - elements.len() as u64);
                        return Err(fail(OptimizeError::InsufficientPool {
                            have: elements.len(),
                            need: n_select,
                        }));
                    }
                    let descriptors: Vec<Sp::Desc> = elements
                        .par_iter()
                        .map(|e| space.describe_free(e))
                        .collect::<Result<_, _>>()
                        .map_err(|e: SpaceError| fail(e.into()))?;
                    state = Some(PopulationState::from_parts(
                        space.clone(),
                        cfg,
                        elements,
                        descriptors,
                    ));
                }
                let st = state.as_mut().expect("population exists");
                let mut rng = stage_seed.child(1).rng();
                let mut escape = EscapeState::new(stage.k_escape);
                let init_used = ledger.used() - used_before;
                let attempt_budget = stage.budget - init_used;
                for _ in 0..attempt_budget {
                    let outcome = match stage.kind {
                        StageKind::Genetic => {
                            genetic_step(st, stage.alpha_mut, &mut escape, &mut rng, &ledger)
                        }
                        StageKind::LocalOpt => local_opt_step(st, &mut escape, &mut rng, &ledger),
                        StageKind::Greedy => unreachable!(),
                    }
                    .map_err(fail)?;
                    attempts += 1;
                    if outcome.accepted {
                        accepted += 1;
                    }
                    if outcome.forced {
                        forced += 1;
                    }
                }
            }
        }

        let st = state.as_ref().expect("population exists after a stage");
        let penalty_after = st.energy_penalty().map_err(|e| fail(e.into()))?;
        reports.push(StageReport {
            kind: stage.kind,
            budget: stage.budget,
            used: ledger.used() - used_before,
            attempts,
            accepted,
            forced,
            penalty_before,
            penalty_after,
        });
    }

    let state = state.expect("plan is nonempty");
    let final_penalty = state.energy_penalty()?;
    let report = RunReport {
        pool_label: pool.label(),
        stages: reports,
        total_budget: plan.total_budget(),
        total_used: ledger.used(),
        final_penalty,
    };
    Ok((state, report))
}

// ---------------------------------------------------------------------------
// Greedy bound verification (exhaustive oracle)
// ---------------------------------------------------------------------------

/// Measures covered by the greedy approximation bound.
#[derive(Clone, Copy, Debug)]
pub enum BoundMeasure<S> {
    Average,
    Bottleneck,
    /// Energy with the given gamma, evaluated at epsilon = 0.
    Energy {
        gamma: S,
    },
}

#[derive(Clone, Debug)]
pub struct BoundReport<S> {
    /// True optimum over all C(M, N) subsets.
    pub optimum: S,
    /// Greedy diversity for every possible first pick.
    pub greedy_values: Vec<S>,
    /// The guaranteed factor (1/2, or 2^gamma for Energy).
    pub factor: S,
    pub holds: bool,
}

const MAX_BOUND_POOL: usize = 12;

fn subset_diversity<S: Scalar>(
    dist: &PairwiseDistances<S>,
    subset: &[usize],
    measure: &BoundMeasure<S>,
) -> Option<S> {
    let pairs = || {
        subset
            .iter()
            .enumerate()
            .flat_map(|(a, &i)| subset[a + 1..].iter().map(move |&j| dist.get(i, j)))
    };
    match *measure {
        BoundMeasure::Average => {
            let n = count::<S>(subset.len());
            Some(pairs().sum::<S>() * (S::one() + S::one()) / (n * (n - S::one())))
        }
        BoundMeasure::Bottleneck => Some(pairs().fold(S::infinity(), S::min)),
        BoundMeasure::Energy { gamma } => {
            let mut sum = S::zero();
            for d in pairs() {
                if d == S::zero() {
                    return None; // undefined at epsilon = 0
                }
                sum += d.powf(gamma).recip();
            }
            let n = count::<S>(subset.len());
            Some(-(sum + sum) / (n * (n - S::one())))
        }
    }
}

/// Run greedy over the pool distance matrix starting from `first`, with
/// whole-pool candidates at every step, and return the selected indices.
fn greedy_on_matrix<S: Scalar>(
    dist: &PairwiseDistances<S>,
    n_select: usize,
    first: usize,
    measure: &BoundMeasure<S>,
) -> Vec<usize> {
    let m = dist.n();
    let mut selected = vec![first];
    let mut aggregates: Vec<S> = match measure {
        BoundMeasure::Average => vec![S::zero(); m],
        BoundMeasure::Bottleneck => vec![S::infinity(); m],
        BoundMeasure::Energy { .. } => vec![S::zero(); m],
    };
    while selected.len() < n_select {
        let last = *selected.last().expect("nonempty");
        let mut best = 0usize;
        let mut best_fitness = S::neg_infinity();
        for c in 0..m {
            let d = dist.get(c, last);
            let fitness = match *measure {
                BoundMeasure::Average => {
                    aggregates[c] += d;
                    aggregates[c]
                }
                BoundMeasure::Bottleneck => {
                    aggregates[c] = aggregates[c].min(d);
                    aggregates[c]
                }
                BoundMeasure::Energy { gamma } => {
                    aggregates[c] += d.powf(gamma).recip();
                    -aggregates[c]
                }
            };
            if fitness > best_fitness {
                best_fitness = fitness;
                best = c;
            }
        }
        selected.push(best);
    }
    selected
}

/// Compare greedy (over every possible first pick) against the exhaustive
/// optimum and check the approximation bound: factor 1/2 for Average and
/// Bottleneck, factor 2^gamma for Energy (both sides negative).
pub fn verify_greedy_bound<S: Scalar>(
    dist: &PairwiseDistances<S>,
    n_select: usize,
    measure: &BoundMeasure<S>,
) -> Result<BoundReport<S>, OptimizeError> {
    let m = dist.n();
    if m > MAX_BOUND_POOL {
        return Err(OptimizeError::DegenerateBound(format!(
            "pool size {m} exceeds the exhaustive limit {MAX_BOUND_POOL}"
        )));
    }
    if n_select < 2 || n_select > m {
        return Err(OptimizeError::DegenerateBound(format!(
            "bound verification needs 2 <= N <= M, got N={n_select}, M={m}"
        )));
    }

    let mut optimum: Option<S> = None;
    let mut subset = Vec::with_capacity(n_select);
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n_select {
            continue;
        }
        subset.clear();
        subset.extend((0..m).filter(|&i| mask >> i & 1 == 1));
        if let Some(v) = subset_diversity(dist, &subset, measure) {
            optimum = Some(match optimum {
                Some(cur) => cur.max(v),
                None => v,
            });
        }
    }
    let optimum = optimum.ok_or_else(|| {
        OptimizeError::DegenerateBound("every subset has a zero pairwise distance".into())
    })?;

    let factor = match *measure {
        BoundMeasure::Average | BoundMeasure::Bottleneck => real::<S>(0.5),
        BoundMeasure::Energy { gamma } => real::<S>(2.0).powf(gamma),
    };
    let bound = optimum * factor;
    let slack = real::<S>(1e-12) * (S::one() + bound.abs());

    let mut greedy_values = Vec::with_capacity(m);
    let mut holds = true;
    for first in 0..m {
        let selected = greedy_on_matrix(dist, n_select, first, measure);
        let value = subset_diversity(dist, &selected, measure).unwrap_or(S::neg_infinity());
        holds &= value >= bound - slack;
        greedy_values.push(value);
    }

    Ok(BoundReport {
        optimum,
        greedy_values,
        factor,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::DescriptorKind;
    use crate::space::{ErMixPool, GraphSpace, GridPool, PointSpace, UniformPointPool};

    #[test]
    fn plan_parsing_round_trip() {
        let text = "greedy[100000]->genetic[100000,K=1000,alpha=0.1]->local_opt[100000,K=1000]";
        let plan: StagePlan = text.parse().unwrap();
        assert_eq!(plan.stages.len(), 3);
        assert_eq!(plan.stages[0].kind, StageKind::Greedy);
        assert_eq!(plan.stages[1].alpha_mut, 0.1);
        assert_eq!(plan.total_budget(), 300000);
        assert_eq!(plan.to_string(), text);

        let inf: StagePlan = "genetic[50,K=inf]".parse().unwrap();
        assert_eq!(inf.stages[0].k_escape, None);
    }

    #[test]
    fn plan_validation_errors() {
        assert!("".parse::<StagePlan>().is_err());
        assert!("greedy[0]".parse::<StagePlan>().is_err());
        assert!("warp[10]".parse::<StagePlan>().is_err());
        assert!("greedy[10]->greedy[10]".parse::<StagePlan>().is_err());
        assert!("local_opt[10]".parse::<StagePlan>().is_err());
        assert!("genetic[10,beta=2]".parse::<StagePlan>().is_err());
    }

    #[test]
    fn greedy_bottleneck_hand_simulation() {
        // Pool {0,1,5,6,10}, N=3, first pick forced to 0 -> {0,10,5}.
        let dist = PairwiseDistances::from_line_points(&[0.0f64, 1.0, 5.0, 6.0, 10.0]);
        let selected = greedy_on_matrix(&dist, 3, 0, &BoundMeasure::Bottleneck);
        assert_eq!(selected, vec![0, 4, 2]);
        let sub = subset_diversity(&dist, &selected, &BoundMeasure::Bottleneck).unwrap();
        assert_eq!(sub, 5.0);
    }

    #[test]
    fn greedy_equals_optimum_when_pool_is_population() {
        let dist = PairwiseDistances::from_line_points(&[0.0f64, 1.0, 3.0, 7.0]);
        let report = verify_greedy_bound(&dist, 4, &BoundMeasure::Bottleneck).unwrap();
        for v in &report.greedy_values {
            assert_eq!(*v, report.optimum);
        }
        assert!(report.holds);
    }

    #[test]
    fn greedy_select_identical_pool_duplicates() {
        use crate::space::ExternalPool;
        let g = crate::graph::Graph::complete(5).unwrap();
        let pool = ExternalPool::new(vec![g.clone(); 4], "dup".into());
        let space: GraphSpace<f64> = GraphSpace::new(5, DescriptorKind::Gcd);
        let cfg = MeasureConfig::energy();
        let ledger = BudgetLedger::new(100);
        let state = greedy_select(space, cfg, &pool, 3, 10, Seed(1), &ledger).unwrap();
        assert_eq!(state.len(), 3);
        let penalty = state.energy_penalty().unwrap();
        assert!((penalty - 1e5).abs() < 1.0, "penalty {penalty}");
        assert_eq!(ledger.used(), 4);
    }

    #[test]
    fn greedy_insufficient_pool_refunds_reservation() {
        use crate::space::ExternalPool;
        let g = crate::graph::Graph::complete(4).unwrap();
        let pool = ExternalPool::new(vec![g], "one".into());
        let space: GraphSpace<f64> = GraphSpace::new(4, DescriptorKind::Gcd);
        let ledger = BudgetLedger::new(100);
        let err = greedy_select(
            space,
            MeasureConfig::energy(),
            &pool,
            2,
            10,
            Seed(1),
            &ledger,
        );
        assert!(matches!(
            err,
            Err(OptimizeError::InsufficientPool { have: 1, need: 2 })
        ));
        // Only the single ingested element stays charged.
        assert_eq!(ledger.used(), 1);
    }

    #[test]
    fn greedy_truncates_pool_at_the_remaining_budget() {
        let space: GraphSpace<f64> = GraphSpace::new(6, DescriptorKind::Gcd);
        let pool = ErMixPool {
            n: 6,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        // The ledger allows 7 units even though the stage asks for 50; the
        // pool is truncated and selection still proceeds.
        let ledger = BudgetLedger::new(7);
        let state = greedy_select(space, cfg, &pool, 5, 50, Seed(3), &ledger).unwrap();
        assert_eq!(state.len(), 5);
        assert_eq!(ledger.used(), 7);

        // With fewer remaining units than N the stage errors out.
        let tiny = BudgetLedger::new(3);
        let space: GraphSpace<f64> = GraphSpace::new(6, DescriptorKind::Gcd);
        let err = greedy_select(space, cfg, &pool, 5, 50, Seed(3), &tiny);
        assert!(matches!(
            err,
            Err(OptimizeError::InsufficientPool { have: 3, need: 5 })
        ));
    }

    #[test]
    fn pipeline_budget_exactness_and_determinism() {
        let plan: StagePlan = "greedy[200]->genetic[150]->local_opt[120]".parse().unwrap();
        let space: GraphSpace<f64> = GraphSpace::new(8, DescriptorKind::Gcd);
        let pool = ErMixPool {
            n: 8,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        let (state, report) = run_pipeline(&plan, space.clone(), cfg, 10, Seed(7), &pool).unwrap();
        assert_eq!(state.len(), 10);
        assert_eq!(report.total_used, 200 + 150 + 120);
        assert_eq!(report.stages[0].used, 200);
        assert_eq!(report.stages[1].attempts, 150);
        assert_eq!(report.stages[2].attempts, 120);

        let (state2, report2) = run_pipeline(&plan, space, cfg, 10, Seed(7), &pool).unwrap();
        let bytes1 = crate::graph::encode_graph_set(state.elements());
        let bytes2 = crate::graph::encode_graph_set(state2.elements());
        assert_eq!(bytes1, bytes2);
        assert_eq!(report.final_penalty, report2.final_penalty);
    }

    #[test]
    fn pipeline_runs_from_the_ensemble_grid() {
        let plan: StagePlan = "greedy[90]".parse().unwrap();
        let space: GraphSpace<f64> = GraphSpace::new(12, DescriptorKind::Gcd);
        let pool = GridPool::new(12);
        let (state, report) =
            run_pipeline(&plan, space, MeasureConfig::energy(), 6, Seed(2), &pool).unwrap();
        assert_eq!(state.len(), 6);
        assert_eq!(report.stages[0].used, 90);
    }

    #[test]
    fn pipeline_rejects_empty_and_misordered_plans() {
        let space: GraphSpace<f64> = GraphSpace::new(6, DescriptorKind::Gcd);
        let pool = ErMixPool {
            n: 6,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        let empty = StagePlan { stages: vec![] };
        assert!(matches!(
            run_pipeline(&empty, space.clone(), cfg, 5, Seed(1), &pool),
            Err(OptimizeError::EmptyPlan)
        ));
        let misordered = StagePlan {
            stages: vec![
                Stage::new(StageKind::Genetic, 50),
                Stage::new(StageKind::Greedy, 50),
            ],
        };
        assert!(run_pipeline(&misordered, space, cfg, 5, Seed(1), &pool).is_err());
    }

    #[test]
    fn genetic_without_crossover_fails() {
        let plan: StagePlan = "genetic[40]".parse().unwrap();
        let space: PointSpace<f64> = PointSpace::new(2);
        let pool = UniformPointPool { dim: 2 };
        let err = run_pipeline(&plan, space, MeasureConfig::energy(), 10, Seed(3), &pool);
        assert!(matches!(
            err,
            Err(OptimizeError::Stage { source, .. }) if matches!(*source, OptimizeError::MissingCrossover)
        ));
    }

    #[test]
    fn monotone_diversity_with_escape_disabled() {
        // Diversity never decreases across accepted genetic/local steps when
        // the K escape is off.
        let space: GraphSpace<f64> = GraphSpace::new(8, DescriptorKind::Gcd);
        let pool = ErMixPool {
            n: 8,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        let ledger = BudgetLedger::new(10_000);
        let mut state = greedy_select(space, cfg, &pool, 8, 60, Seed(11), &ledger).unwrap();
        let mut rng = Seed(12).rng();
        let mut escape = EscapeState::new(None);
        let mut div = state.diversity().unwrap();
        for step in 0..120 {
            let outcome = if step % 2 == 0 {
                genetic_step(&mut state, 0.1, &mut escape, &mut rng, &ledger).unwrap()
            } else {
                local_opt_step(&mut state, &mut escape, &mut rng, &ledger).unwrap()
            };
            if outcome.accepted {
                let now = state.diversity().unwrap();
                assert!(
                    now >= div - 1e-9 * div.abs(),
                    "diversity dropped: {div} -> {now}"
                );
                div = now;
            }
        }
    }

    #[test]
    fn forced_accept_fires_after_k_failures() {
        // A population of two identical complete graphs cannot improve by
        // local moves in one step always... but with K=3 the escape must
        // fire within 3 consecutive rejections whenever rejections happen.
        let space: GraphSpace<f64> = GraphSpace::new(5, DescriptorKind::NetlsdHeat);
        let pool = ErMixPool {
            n: 5,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        let ledger = BudgetLedger::new(10_000);
        let mut state = greedy_select(space, cfg, &pool, 6, 40, Seed(21), &ledger).unwrap();
        let mut rng = Seed(22).rng();
        let mut escape = EscapeState::new(Some(3));
        let mut consecutive_rejects = 0;
        for _ in 0..200 {
            let outcome = local_opt_step(&mut state, &mut escape, &mut rng, &ledger).unwrap();
            if outcome.accepted {
                consecutive_rejects = 0;
            } else {
                consecutive_rejects += 1;
            }
            assert!(consecutive_rejects < 3, "escape failed to fire");
        }
    }

    #[test]
    fn replace_back_restores_state_bitwise() {
        let space: GraphSpace<f64> = GraphSpace::new(6, DescriptorKind::Gcd);
        let pool = ErMixPool {
            n: 6,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        let ledger = BudgetLedger::new(1000);
        let mut state = greedy_select(space, cfg, &pool, 5, 30, Seed(31), &ledger).unwrap();
        let original_elem = state.element(2).clone();
        let original_dist = state.distances().clone();
        let original_fitness = state.fitness_values().to_vec();
        let replacement = crate::graph::Graph::complete(6).unwrap();
        state.replace(2, replacement, &ledger).unwrap();
        state.replace(2, original_elem, &ledger).unwrap();
        assert_eq!(state.distances(), &original_dist);
        assert_eq!(state.fitness_values(), original_fitness.as_slice());
    }

    #[test]
    fn incremental_replace_matches_full_rebuild() {
        use rand::Rng;
        let space: GraphSpace<f64> = GraphSpace::new(7, DescriptorKind::PortraitDiv);
        let pool = ErMixPool {
            n: 7,
            grid_p: false,
        };
        let cfg = MeasureConfig::energy();
        let ledger = BudgetLedger::new(100_000);
        let mut state = greedy_select(space.clone(), cfg, &pool, 6, 40, Seed(41), &ledger).unwrap();
        let mut rng = Seed(42).rng();
        for _ in 0..100 {
            let i = rng.gen_range(0..state.len());
            let candidate = state.space().mutate(state.element(i), &mut rng);
            state.replace(i, candidate, &ledger).unwrap();
            let rebuilt = PopulationState::from_parts(
                space.clone(),
                cfg,
                state.elements().to_vec(),
                (0..state.len())
                    .map(|j| state.descriptor(j).clone())
                    .collect(),
            );
            assert_eq!(state.distances(), rebuilt.distances());
            assert_eq!(state.fitness_values(), rebuilt.fitness_values());
        }
    }
}
