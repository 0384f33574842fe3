use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use divgraph::descriptors::DescriptorKind;
use divgraph::diversity::Measure;
use divgraph::MeasureConfig64;
use divgraph_cli::commands::{self, PoolModel, ToyPointsParams};
use divgraph_cli::config::{parse_config, Overrides};
use divgraph_cli::CliError;

/// Generate fixed-size sets of structurally diverse graphs.
#[derive(Parser)]
#[command(name = "divgraph", version, about)]
struct Cli {
    /// Worker threads for within-step candidate evaluation (default: all
    /// cores). Results are identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimization pipeline and write its artifacts.
    Optimize(OptimizeArgs),
    /// Pool file utilities.
    Pool {
        #[command(subcommand)]
        command: PoolCommand,
    },
    /// Write cached descriptor records for a graph set file.
    Describe(DescribeArgs),
    /// Print the diversity table of a graph set file.
    Measure(MeasureArgs),
    /// Export the characteristics CSV and diversity report of a graph set.
    Report(ReportArgs),
    /// Local optimization of points in the unit box (toy space).
    ToyPoints(ToyPointsArgs),
}

#[derive(Args)]
struct OptimizeArgs {
    /// Config file (flat key = value lines); flags override file keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nodes per graph.
    #[arg(long)]
    n: Option<usize>,
    /// Number of graphs in the final set.
    #[arg(long)]
    set_size: Option<usize>,
    /// Descriptor kind: gcd, portrait-div, netlsd-heat, netlsd-wave.
    #[arg(long)]
    kind: Option<String>,
    /// Diversity measure (default energy).
    #[arg(long)]
    measure: Option<String>,
    /// Energy exponent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Reciprocal stabilizer.
    #[arg(long)]
    epsilon: Option<f64>,
    /// num-circles threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Stage plan, e.g. greedy[100000]->genetic[100000,K=1000,alpha=0.1].
    #[arg(long)]
    plan: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default $DIVGRAPH_OUT or ./divgraph-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// External pool file for greedy ingestion / initial populations.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Draw ER-mix edge probabilities from the 7-value grid instead of
    /// Uniform(0,1).
    #[arg(long)]
    er_mix_grid: bool,
    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum PoolCommand {
    /// Sample a pool of graphs into a graph set file.
    Generate(PoolGenerateArgs),
}

#[derive(Args)]
struct PoolGenerateArgs {
    /// Nodes per graph.
    #[arg(long)]
    n: usize,
    /// Number of graphs.
    #[arg(long)]
    count: usize,
    /// Pool source: grid, er-mix, er-mix-grid.
    #[arg(long, default_value = "grid")]
    source: String,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite an existing file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct DescribeArgs {
    /// Graph set file.
    #[arg(long)]
    input: PathBuf,
    /// Descriptor kind.
    #[arg(long)]
    kind: String,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct MeasureArgs {
    /// Graph set file.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated descriptor kinds (default: all four).
    #[arg(long)]
    kinds: Option<String>,
    /// Reciprocal stabilizer.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Graph set file.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated descriptor kinds (default: all four).
    #[arg(long)]
    kinds: Option<String>,
    /// Write the characteristics CSV here as well.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Reciprocal stabilizer.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Overwrite an existing CSV.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ToyPointsArgs {
    /// Objective: energy or average.
    #[arg(long, default_value = "energy")]
    objective: String,
    /// Energy exponent.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Point dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Number of points.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Total budget in descriptor units (initial points included).
    #[arg(long, default_value_t = 50_000)]
    budget: u64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure threshold for the forced-accept escape (default: disabled).
    #[arg(long)]
    k_escape: Option<u64>,
    /// Write the coordinate CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing file.
    #[arg(long)]
    force: bool,
}

fn parse_kinds(text: Option<&str>) -> Result<Vec<DescriptorKind>, CliError> {
    match text {
        None => Ok(DescriptorKind::ALL.to_vec()),
        Some(list) => list
            .split(',')
            .map(|k| {
                k.trim()
                    .parse::<DescriptorKind>()
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect(),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize(args) => {
            let overrides = Overrides {
                n: args.n,
                set_size: args.set_size,
                kind: args.kind,
                measure: args.measure,
                gamma: args.gamma,
                epsilon: args.epsilon,
                threshold: args.threshold,
                plan: args.plan,
                seed: args.seed,
                out_dir: args.out,
                pool: args.pool,
                er_mix_grid: args.er_mix_grid.then_some(true),
                force: args.force,
            };
            let cfg = parse_config(args.config.as_deref(), &overrides)?;
            let report = commands::run(&cfg)?;
            print!("{report}");
            println!("artifacts written to {}", cfg.out_dir.display());
            Ok(())
        }
        Command::Pool {
            command: PoolCommand::Generate(args),
        } => {
            let model: PoolModel = args.source.parse()?;
            commands::pool_generate(model, args.n, args.count, args.seed, &args.out, args.force)
        }
        Command::Describe(args) => {
            let kind: DescriptorKind =
                args.kind
                    .parse()
                    .map_err(|e: divgraph::descriptors::DescriptorError| {
                        CliError::Config(e.to_string())
                    })?;
            let text = commands::describe(&args.input, kind, args.out.as_deref(), args.force)?;
            if args.out.is_none() {
                print!("{text}");
            }
            Ok(())
        }
        Command::Measure(args) => {
            let kinds = parse_kinds(args.kinds.as_deref())?;
            let cfg = MeasureConfig64::new(Measure::Energy).with_epsilon(args.epsilon);
            if cfg.epsilon <= 0.0 {
                return Err(CliError::Config("epsilon must be positive".into()));
            }
            let table = commands::measure(&args.input, &kinds, &cfg)?;
            print!("{table}");
            Ok(())
        }
        Command::Report(args) => {
            let kinds = parse_kinds(args.kinds.as_deref())?;
            let cfg = MeasureConfig64::new(Measure::Energy).with_epsilon(args.epsilon);
            if cfg.epsilon <= 0.0 {
                return Err(CliError::Config("epsilon must be positive".into()));
            }
            let text =
                commands::report(&args.input, &kinds, &cfg, args.csv.as_deref(), args.force)?;
            print!("{text}");
            Ok(())
        }
        Command::ToyPoints(args) => {
            let objective: Measure =
                args.objective
                    .parse()
                    .map_err(|e: divgraph::diversity::DiversityError| {
                        CliError::Config(e.to_string())
                    })?;
            let params = ToyPointsParams {
                objective,
                gamma: args.gamma,
                dim: args.dim,
                n_points: args.n,
                budget: args.budget,
                seed: args.seed,
                k_escape: args.k_escape,
            };
            let text = commands::toy_points(&params, args.out.as_ref(), args.force)?;
            if args.out.is_none() {
                print!("{text}");
            } else if let Some(summary) = text.lines().last() {
                println!("{summary}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
