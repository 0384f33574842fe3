//! Subcommand implementations. Everything here is a pure function of its
//! inputs and the master seed: rerunning with the same arguments reproduces
//! all artifacts byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use divgraph::analysis;
use divgraph::budget::BudgetLedger;
use divgraph::descriptors::{self, DescriptorKind};
use divgraph::diversity::{Measure, PopulationState};
use divgraph::generators::{self, GeneratorSpec, Seed};
use divgraph::graph::{encode_graph_set, read_graph_set, Graph};
use divgraph::optimize::{local_opt_step, run_pipeline, EscapeState, RunReport, StageKind};
use divgraph::space::{ErMixPool, ExternalPool, GridPool, PoolSource, UniformPointPool};
use divgraph::{GraphSpace64, MeasureConfig64, PointSpace64, Real};

use crate::config::RunConfig;
use crate::CliError;

fn runtime(err: impl std::fmt::Display) -> CliError {
    CliError::Runtime(err.to_string())
}

fn config(err: impl std::fmt::Display) -> CliError {
    CliError::Config(err.to_string())
}

/// Refuses to overwrite existing artifacts unless forced.
fn write_artifact(path: &Path, contents: &str, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Config(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_graphs(path: &Path) -> Result<Vec<Graph>, CliError> {
    read_graph_set(path).map_err(config)
}

/// Artifact file names inside the output directory.
pub const GRAPHS_FILE: &str = "graphs.jsonl";
pub const CHARACTERISTICS_FILE: &str = "characteristics.csv";
pub const DIVERSITY_FILE: &str = "diversity.txt";
pub const RUN_REPORT_FILE: &str = "run_report.txt";
pub const RUN_SUMMARY_FILE: &str = "run_summary.json";

/// Execute a full pipeline run and write all artifacts.
///
/// Pool selection: an external pool file wins when configured; otherwise
/// greedy-first plans draw from the generator ensemble grid and plans that
/// start by evolving a population (ER-mix -> genetic) draw the initial
/// population from ER-mix.
pub fn run(cfg: &RunConfig) -> Result<RunReport<Real>, CliError> {
    let space = GraphSpace64::new(cfg.n, cfg.kind);
    let pool: Box<dyn PoolSource<GraphSpace64>> = match &cfg.pool {
        Some(path) => {
            let graphs = load_graphs(path)?;
            for (i, g) in graphs.iter().enumerate() {
                if g.node_count() != cfg.n {
                    return Err(CliError::Config(format!(
                        "pool graph {i} has {} nodes, run is configured for n={}",
                        g.node_count(),
                        cfg.n
                    )));
                }
            }
            Box::new(ExternalPool::new(
                graphs,
                format!("file:{}", path.display()),
            ))
        }
        None => match cfg.plan.stages[0].kind {
            StageKind::Greedy => Box::new(GridPool::new(cfg.n)),
            _ => Box::new(ErMixPool {
                n: cfg.n,
                grid_p: cfg.er_mix_grid,
            }),
        },
    };

    let (state, report) = run_pipeline(
        &cfg.plan,
        space,
        cfg.measure,
        cfg.set_size,
        Seed(cfg.seed),
        pool.as_ref(),
    )
    .map_err(runtime)?;

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let graphs = state.elements();
    write_artifact(
        &cfg.out_dir.join(GRAPHS_FILE),
        &encode_graph_set(graphs),
        cfg.force,
    )?;
    write_artifact(
        &cfg.out_dir.join(CHARACTERISTICS_FILE),
        &analysis::export_table(graphs),
        cfg.force,
    )?;
    let diversity =
        analysis::report_diversity(graphs, &DescriptorKind::ALL, &cfg.measure).map_err(runtime)?;
    write_artifact(
        &cfg.out_dir.join(DIVERSITY_FILE),
        &diversity.to_string(),
        cfg.force,
    )?;
    write_artifact(
        &cfg.out_dir.join(RUN_REPORT_FILE),
        &report.to_string(),
        cfg.force,
    )?;
    let mut summary = report.summary_json();
    summary.push('\n');
    write_artifact(&cfg.out_dir.join(RUN_SUMMARY_FILE), &summary, cfg.force)?;
    Ok(report)
}

/// Sources for `pool generate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolModel {
    Grid,
    ErMix,
    ErMixGrid,
}

impl std::str::FromStr for PoolModel {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(PoolModel::Grid),
            "er-mix" => Ok(PoolModel::ErMix),
            "er-mix-grid" => Ok(PoolModel::ErMixGrid),
            other => Err(CliError::Config(format!(
                "unknown pool source {other:?}; valid sources: grid, er-mix, er-mix-grid"
            ))),
        }
    }
}

/// Generate a pool file: `count` graphs, one record per line.
pub fn pool_generate(
    model: PoolModel,
    n: usize,
    count: usize,
    seed: u64,
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    let graphs: Vec<Graph> = match model {
        PoolModel::Grid => {
            let specs = generators::ensemble_grid(n);
            generators::sample_pool(&specs, count, n, Seed(seed))
                .collect::<Result<_, _>>()
                .map_err(runtime)?
        }
        PoolModel::ErMix | PoolModel::ErMixGrid => {
            let spec = GeneratorSpec::ErMix {
                grid_p: model == PoolModel::ErMixGrid,
            };
            (0..count)
                .map(|i| generators::sample(&spec, n, Seed(seed).child(i as u64)))
                .collect::<Result<_, _>>()
                .map_err(runtime)?
        }
    };
    write_artifact(out, &encode_graph_set(&graphs), force)
}

/// Compute descriptor records for every graph in a set file.
pub fn describe(
    input: &Path,
    kind: DescriptorKind,
    out: Option<&Path>,
    force: bool,
) -> Result<String, CliError> {
    let graphs = load_graphs(input)?;
    let ledger = BudgetLedger::unlimited();
    let mut text = String::new();
    for (id, g) in graphs.iter().enumerate() {
        let d = descriptors::descriptor::<Real>(kind, g, &ledger).map_err(runtime)?;
        text.push_str(&descriptors::encode_record(id, &d));
        text.push('\n');
    }
    if let Some(path) = out {
        write_artifact(path, &text, force)?;
    }
    Ok(text)
}

/// Diversity table (energy penalty, average distance, bottleneck) of a graph
/// set under the given kinds.
pub fn measure(
    input: &Path,
    kinds: &[DescriptorKind],
    cfg: &MeasureConfig64,
) -> Result<String, CliError> {
    let graphs = load_graphs(input)?;
    if graphs.len() < 2 {
        return Err(CliError::Config(format!(
            "measure needs at least 2 graphs, {} has {}",
            input.display(),
            graphs.len()
        )));
    }
    let report = analysis::report_diversity(&graphs, kinds, cfg).map_err(runtime)?;
    Ok(report.to_string())
}

/// Characteristics CSV plus diversity report for a graph set.
pub fn report(
    input: &Path,
    kinds: &[DescriptorKind],
    cfg: &MeasureConfig64,
    csv_out: Option<&Path>,
    force: bool,
) -> Result<String, CliError> {
    let graphs = load_graphs(input)?;
    let csv = analysis::export_table(&graphs);
    if let Some(path) = csv_out {
        write_artifact(path, &csv, force)?;
    }
    if graphs.len() < 2 {
        return Ok(csv);
    }
    let diversity = analysis::report_diversity(&graphs, kinds, cfg).map_err(runtime)?;
    Ok(format!("{csv}\n{diversity}"))
}

/// Parameters of the Euclidean-point toy optimization.
#[derive(Clone, Debug)]
pub struct ToyPointsParams {
    pub objective: Measure,
    pub gamma: f64,
    pub dim: usize,
    pub n_points: usize,
    pub budget: u64,
    pub seed: u64,
    pub k_escape: Option<u64>,
}

impl Default for ToyPointsParams {
    fn default() -> Self {
        ToyPointsParams {
            objective: Measure::Energy,
            gamma: 1.0,
            dim: 2,
            n_points: 50,
            budget: 50_000,
            seed: 0,
            k_escape: None,
        }
    }
}

/// Run local optimization on uniformly initialized points in the unit box.
///
/// The initial points cost one descriptor each; the remaining budget is
/// spent on local-opt attempts.
pub fn run_toy_points(params: &ToyPointsParams) -> Result<PopulationState<PointSpace64>, CliError> {
    if params.n_points < 2 {
        return Err(config("toy-points needs at least 2 points"));
    }
    if params.dim == 0 {
        return Err(config("toy-points dimension must be positive"));
    }
    if params.budget < params.n_points as u64 {
        return Err(config(format!(
            "budget {} cannot cover the {} initial points",
            params.budget, params.n_points
        )));
    }
    let cfg = MeasureConfig64::new(params.objective).with_gamma(params.gamma);
    let space = PointSpace64::new(params.dim);
    let ledger = BudgetLedger::new(params.budget);
    let seed = Seed(params.seed);
    let granted = ledger.reserve(params.n_points as u64);
    debug_assert_eq!(granted, params.n_points as u64);
    let pool = UniformPointPool { dim: params.dim };
    let points: Vec<Vec<Real>> = pool
        .elements(seed.child(0), params.n_points)
        .collect::<Result<_, _>>()
        .map_err(runtime)?;
    let descriptors = points.clone();
    let mut state = PopulationState::from_parts(space, cfg, points, descriptors);
    let mut escape = EscapeState::new(params.k_escape);
    let mut rng = seed.child(1).rng();
    for _ in 0..params.budget - params.n_points as u64 {
        local_opt_step(&mut state, &mut escape, &mut rng, &ledger).map_err(runtime)?;
    }
    Ok(state)
}

/// CSV of point coordinates: `id,x0[,x1,...]`.
pub fn points_csv(points: &[Vec<Real>]) -> String {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = String::from("id");
    for d in 0..dim {
        let _ = write!(out, ",x{d}");
    }
    out.push('\n');
    for (id, p) in points.iter().enumerate() {
        let _ = write!(out, "{id}");
        for v in p {
            let _ = write!(out, ",{v:.9}");
        }
        out.push('\n');
    }
    out
}

/// `toy-points` command: run and optionally write the coordinate CSV.
pub fn toy_points(
    params: &ToyPointsParams,
    out: Option<&PathBuf>,
    force: bool,
) -> Result<String, CliError> {
    if !matches!(params.objective, Measure::Energy | Measure::Average) {
        return Err(config(format!(
            "toy-points supports objectives energy and average, got {}",
            params.objective
        )));
    }
    let state = run_toy_points(params)?;
    let csv = points_csv(state.elements());
    if let Some(path) = out {
        write_artifact(path, &csv, force)?;
    }
    let value = state.diversity().map_err(runtime)?;
    let min_gap = state.distances().bottleneck().map_err(runtime)?;
    Ok(format!(
        "{csv}# objective {} = {value:.6}, min pairwise gap = {min_gap:.6}\n",
        params.objective
    ))
}
