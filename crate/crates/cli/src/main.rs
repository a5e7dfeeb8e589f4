use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use ccbs_cli::batch::BatchSolver;
use ccbs_cli::input::grid_tasks;
use ccbs_cli::{parse_list, parse_seeds, run_batch, summarize, write_records, write_solution, BatchJob, Format, Record, Source};
use ccbs_core::cbs::cbs_solve;
use ccbs_core::map_graph::{build_graph, DEFAULT_AGENT_RADIUS};
use ccbs_core::{solve, validate, ConflictHeuristic, Plan, Solution, SolveStatus, SolverConfig, Stats};

const EXIT_TIMEOUT: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;

#[derive(Parser)]
#[command(name = "ccbs", version, about = "Optimal multi-agent path finding in continuous time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the plans.
    Solve(SolveArgs),
    /// Run a grid of configurations and seeds; write one record per run.
    Batch(BatchArgs),
}

#[derive(Args)]
struct InputArgs {
    /// movingai .map file.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Roadmap file with `v`, `e` and optional `a` lines.
    #[arg(long)]
    roadmap: Option<PathBuf>,
    /// Obstacle-free grid of the given size, e.g. 10x10.
    #[arg(long, value_name = "WxH")]
    open: Option<String>,
    /// movingai .scen file giving start/goal pairs.
    #[arg(long)]
    scen: Option<PathBuf>,
    /// Agent radius.
    #[arg(long, default_value_t = DEFAULT_AGENT_RADIUS)]
    radius: f64,
    /// Resolution of the sweep that bounds unsafe intervals.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Per-instance time limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

impl InputArgs {
    fn source(&self) -> Result<Source> {
        Source::load(self.map.as_deref(), self.roadmap.as_deref(), self.open.as_deref(), self.scen.as_deref())
    }

    fn timeout(&self) -> Result<Duration> {
        Duration::try_from_secs_f64(self.timeout).context("--timeout must be a non-negative number of seconds")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Ccbs,
    /// Discrete CBS on the 4-connected grid.
    Cbs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Neighborhood level: 2^k move directions on grids.
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Number of agents (defaults to all agents the input defines).
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "vanilla")]
    heuristic: ConflictHeuristic,
    #[arg(long, value_enum, default_value_t = SolverKind::Ccbs)]
    solver: SolverKind,
    /// Write the solution here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the stats record here.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write one JSON line per expanded search node here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Neighborhood levels, comma-separated.
    #[arg(long, default_value = "2")]
    k: String,
    /// Agent counts, comma-separated.
    #[arg(long)]
    agents: String,
    /// Heuristics, comma-separated; `cbs` runs the discrete baseline.
    #[arg(long, default_value = "vanilla")]
    heuristic: String,
    /// Seeds, e.g. `0..25` or `1,4,9`.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write records here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Minimum success rate for a configuration to count in the SOC means.
    #[arg(long, default_value_t = 0.4)]
    threshold: f64,
    /// Leave the runtime column empty so repeated runs are byte-identical.
    #[arg(long)]
    no_runtime: bool,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn run_solve(args: SolveArgs) -> Result<u8> {
    let source = args.input.source()?;
    let timeout = args.input.timeout()?;
    let radius = args.input.radius;
    let k = if args.solver == SolverKind::Cbs { 2 } else { args.k };
    let graph = source.graph(k, radius)?;
    let instance = source.instance(graph.clone(), args.agents, args.seed, radius)?;

    let (status, solution, stats, trace) = match args.solver {
        SolverKind::Ccbs => {
            let config = SolverConfig {
                heuristic: args.heuristic,
                timeout,
                sweep_resolution: args.input.delta,
                record_trace: args.trace.is_some(),
                ..SolverConfig::default()
            };
            let out = solve(&instance, &config)?;
            (out.status, out.solution, out.stats, out.trace)
        }
        SolverKind::Cbs => {
            let grid = source.grid().context("--solver cbs needs a grid map")?;
            let tasks = grid_tasks(&instance)?;
            let (plans, stats) = cbs_solve(grid, &tasks, timeout);
            let status = if plans.is_some() {
                SolveStatus::Solved
            } else if stats.runtime >= timeout.as_secs_f64() {
                SolveStatus::Timeout
            } else {
                SolveStatus::Infeasible
            };
            let grid4 = build_graph(grid, 2, radius)?;
            let solution = plans
                .map(|ps| ps.iter().map(|p| p.to_plan(&grid4)).collect::<ccbs_core::Result<Vec<Plan>>>())
                .transpose()?
                .map(Solution::from_plans);
            (status, solution, stats, Vec::new())
        }
    };

    if let Some(path) = &args.trace {
        let mut w = create(path)?;
        for event in &trace {
            serde_json::to_writer(&mut w, event)?;
            writeln!(w)?;
        }
        w.flush()?;
    }

    let heuristic = match args.solver {
        SolverKind::Ccbs => args.heuristic.name(),
        SolverKind::Cbs => "cbs",
    };
    let record = Record::new(source.name(), k, instance.len(), heuristic, args.seed, &stats, true);
    if let Some(path) = &args.stats {
        let mut w = create(path)?;
        write_records(std::slice::from_ref(&record), args.format, &mut w)?;
        w.flush()?;
    }

    match (&status, &solution) {
        (SolveStatus::Solved, Some(solution)) => {
            let report = validate(&instance, &solution.plans, 1e-3, 1e-6);
            if !report.is_valid() {
                tracing::error!("solution failed validation:\n{report}");
            }
            match &args.output {
                Some(path) => {
                    let mut w = create(path)?;
                    write_solution(&graph, solution, &mut w)?;
                    w.flush()?;
                }
                None => write_solution(&graph, solution, &mut io::stdout().lock())?,
            }
            eprintln!("{}", summary_line("solved", &stats));
            Ok(0)
        }
        (SolveStatus::Timeout, _) => {
            eprintln!("{}", summary_line("timeout", &stats));
            Ok(EXIT_TIMEOUT)
        }
        _ => {
            eprintln!("{}", summary_line("no solution", &stats));
            Ok(EXIT_NO_SOLUTION)
        }
    }
}

fn summary_line(status: &str, stats: &Stats) -> String {
    format!(
        "{status}: soc {:.4} makespan {:.4} expanded {} low-level calls {} runtime {:.3}s",
        stats.soc, stats.makespan, stats.hl_expanded, stats.ll_calls, stats.runtime
    )
}

fn run_batch_cmd(args: BatchArgs) -> Result<u8> {
    let source = args.input.source()?;
    let solvers = args
        .heuristic
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "cbs" => Ok(BatchSolver::Cbs),
            h => h.parse().map(BatchSolver::Ccbs).map_err(anyhow::Error::from),
        })
        .collect::<Result<Vec<_>>>()?;
    if !(0.0..=1.0).contains(&args.threshold) {
        bail!("--threshold must lie in [0, 1]");
    }
    let job = BatchJob {
        agents: parse_list(&args.agents)?,
        ks: parse_list(&args.k)?,
        solvers,
        seeds: parse_seeds(&args.seeds)?,
        timeout: args.input.timeout()?,
        delta: args.input.delta,
        radius: args.input.radius,
        with_runtime: !args.no_runtime,
    };

    let records = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run_batch(&source, &job))?,
        None => run_batch(&source, &job)?,
    };

    match &args.output {
        Some(path) => {
            let mut w = create(path)?;
            write_records(&records, args.format, &mut w)?;
            w.flush()?;
        }
        None => write_records(&records, args.format, &mut io::stdout().lock())?,
    }

    let mut err = io::stderr().lock();
    writeln!(err, "{:>7} {:>3} {:>10} {:>5} {:>8} {:>10} {:>12} {:>7}", "agents", "k", "heuristic", "runs", "success", "mean soc", "mean expand", "common")?;
    for s in summarize(&records, args.threshold) {
        let opt = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.p$}"));
        writeln!(
            err,
            "{:>7} {:>3} {:>10} {:>5} {:>8.2} {:>10} {:>12} {:>7}",
            s.agents,
            s.k,
            s.heuristic,
            s.runs,
            s.success_rate,
            opt(s.mean_soc, 2),
            opt(s.mean_hl_expanded, 1),
            s.common
        )?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Batch(args) => run_batch_cmd(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
