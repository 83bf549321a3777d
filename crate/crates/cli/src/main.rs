use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use feesim::agent::{AgentKind, HeuristicParams};
use feesim::game::{
    build_trajectory, solve_fee, GameSpec, NetworkCount, Price, TrajectoryKind, DEFAULT_PRICE_OFFSET,
    DESIGNED_TARGETS,
};
use feesim::metrics::{
    build_deviation_rows, cell_metrics, format_metrics_table, read_rows_csv, write_metrics_csv, write_rows_csv,
    DeviationRow, Pooling,
};
use feesim::orchestrator::{read_logs, replay_log, run_factorial, write_logs, ExperimentConfig, RunLog};
use feesim::plot::{plot_points, write_plot_csv};
use feesim::stats::{format_model_table, run_models, write_model_csv, ModelId, ModelOptions, Normalization, ResponseTransform};
use feesim::Execution;

#[derive(Parser)]
#[command(name = "feesim", version, about = "Network-effect participation game: equilibria, experiments and analysis")]
struct Cli {
    /// Disable data parallelism.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed points and the selected equilibrium at one price.
    Solve(SolveArgs),
    /// Designed price sequence for a trajectory kind.
    Prices(PricesArgs),
    /// Run an experiment factorial and write JSONL run logs.
    Run(RunArgs),
    /// Re-run logs from their recorded decisions.
    Replay(ReplayArgs),
    /// Deviation rows and per-cell RMSE from run logs.
    Metrics(MetricsArgs),
    /// Fit the regression models on a deviation dataset.
    Regress(RegressArgs),
    /// Box-plot series (quantiles, means, benchmark) per price.
    ExportPlot(ExportPlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CountArg {
    Total,
    Others,
}

impl From<CountArg> for NetworkCount {
    fn from(c: CountArg) -> Self {
        match c {
            CountArg::Total => NetworkCount::Total,
            CountArg::Others => NetworkCount::Others,
        }
    }
}

#[derive(Args)]
struct PopulationArgs {
    /// Standalone values: `a..b` (inclusive integers) or a comma list.
    #[arg(long, conflicts_with = "types_file")]
    types: Option<String>,
    /// File of whitespace- or comma-separated standalone values.
    #[arg(long)]
    types_file: Option<PathBuf>,
    /// Population size of the default grid {0, ..., K-1}.
    #[arg(long, default_value_t = 50)]
    population: usize,
    /// Whether the network term counts the agent itself.
    #[arg(long, value_enum, default_value = "total")]
    count: CountArg,
}

impl PopulationArgs {
    fn spec(&self, beta: f64) -> Result<GameSpec> {
        let types = match (&self.types, &self.types_file) {
            (Some(t), _) => parse_types(t)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_list(&text.replace(char::is_whitespace, ","))?
            }
            (None, None) => (0..self.population).map(|t| t as f64).collect(),
        };
        Ok(GameSpec::new(types, beta)?.with_network_count(self.count.into()))
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("invalid number {s:?}")))
        .collect()
}

fn parse_types(text: &str) -> Result<Vec<f64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: i64 = a.trim().parse().with_context(|| format!("invalid range start in {text:?}"))?;
        let b: i64 = b.trim().trim_start_matches('=').parse().with_context(|| format!("invalid range end in {text:?}"))?;
        if b < a {
            bail!("empty range {text:?}");
        }
        return Ok((a..=b).map(|v| v as f64).collect());
    }
    parse_list(text)
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    price: f64,
    #[command(flatten)]
    population: PopulationArgs,
}

#[derive(Args)]
struct PricesArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    kind: TrajectoryKind,
    /// Comma-separated target participation counts.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_PRICE_OFFSET)]
    offset: f64,
    #[command(flatten)]
    population: PopulationArgs,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file or a built-in profile (`paper.profile`, `extended.profile`).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured agent: `rational`, `heuristic` or `replay=<log.jsonl>`.
    #[arg(long)]
    agent: Option<String>,
    /// JSONL log output (defaults to the config's `output.logs`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the deviation dataset as CSV.
    #[arg(long)]
    rows: Option<PathBuf>,
    /// Also write per-cell metrics as CSV.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolArg {
    PerCell,
    ByDirection,
}

#[derive(Args)]
struct MetricsArgs {
    /// JSONL run logs.
    #[arg(long, num_args = 1.., required = true)]
    logs: Vec<PathBuf>,
    /// Write the deviation dataset as CSV.
    #[arg(long)]
    rows: Option<PathBuf>,
    /// Write per-cell metrics as CSV (a table is printed either way).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "per-cell")]
    pool: PoolArg,
}

#[derive(Args)]
struct RegressArgs {
    /// Deviation dataset CSV.
    #[arg(long)]
    rows: PathBuf,
    /// 1-4 or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    /// `fit`, `none`, or a fixed Yeo-Johnson parameter.
    #[arg(long, default_value = "fit")]
    lambda: String,
    /// Use raw Price and theta instead of min-max scaling.
    #[arg(long)]
    raw: bool,
    /// Fixed-effect baseline path.
    #[arg(long, default_value = "static")]
    baseline: TrajectoryKind,
    /// Write coefficients as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportPlotArgs {
    /// Deviation dataset CSV.
    #[arg(long, alias = "cells")]
    rows: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_logs(paths: &[PathBuf]) -> Result<Vec<RunLog>> {
    let mut logs = Vec::new();
    for p in paths {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        logs.extend(read_logs(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(logs)
}

fn load_rows(path: &Path) -> Result<Vec<DeviationRow>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_rows_csv(BufReader::new(f))?)
}

fn solve(args: SolveArgs) -> Result<()> {
    let spec = args.population.spec(args.beta)?;
    let sol = solve_fee(&spec, Price::new(args.price)?)?;
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
    println!("price         {}", sol.price);
    println!("beta          {}", spec.beta());
    println!("population    {}", spec.population());
    println!("fixed points  {}", join(&mut sol.fixed_points.iter().map(|n| n.to_string())));
    println!("selected      {}", sol.selected);
    println!(
        "attendees     {}",
        join(&mut sol.attendees(&spec).into_iter().map(|i| spec.types()[i].to_string()))
    );
    Ok(())
}

fn prices(args: PricesArgs) -> Result<()> {
    let spec = args.population.spec(args.beta)?;
    let targets = args.targets.unwrap_or_else(|| DESIGNED_TARGETS.to_vec());
    let seq = build_trajectory(&spec, args.kind, &targets, args.offset)?;
    let prices: Vec<String> = seq.prices().iter().map(|p| p.to_string()).collect();
    let counts: Vec<String> = seq.target_counts().iter().map(|n| n.to_string()).collect();
    println!("kind     {}", seq.kind().as_str());
    println!("prices   {}", prices.join(" "));
    println!("targets  {}", counts.join(" "));
    Ok(())
}

fn agent_override(text: &str) -> Result<AgentKind> {
    Ok(match text {
        "rational" => AgentKind::Rational,
        "heuristic" => AgentKind::Heuristic(HeuristicParams::default()),
        other => match other.strip_prefix("replay=") {
            Some(source) => AgentKind::Replay {
                source: source.to_string(),
            },
            None => bail!("unknown agent {other:?}; expected rational, heuristic or replay=<path>"),
        },
    })
}

fn run(args: RunArgs, exec: Execution) -> Result<bool> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(a) = &args.agent {
        config.agent = agent_override(a)?;
    }
    let out = args
        .out
        .or_else(|| config.output.logs.clone())
        .context("no log output: pass --out or set output.logs")?;
    let rows_out = args.rows.or_else(|| config.output.rows.clone());
    let metrics_out = args.metrics.or_else(|| config.output.metrics.clone());

    let outcome = run_factorial(&config, exec)?;
    let all: Vec<&RunLog> = outcome.logs.iter().chain(outcome.failures.iter().map(|f| &*f.partial)).collect();
    write_atomic(&out, |w| Ok(write_logs(w, all.iter().copied())?))?;

    let rows = build_deviation_rows(&outcome.logs)?;
    if let Some(path) = rows_out {
        write_atomic(&path, |w| Ok(write_rows_csv(w, &rows)?))?;
    }
    let metrics = cell_metrics(&rows, Pooling::PerCell, exec);
    if let Some(path) = metrics_out {
        write_atomic(&path, |w| Ok(write_metrics_csv(w, &metrics)?))?;
    }
    println!(
        "{} cells completed, {} failed, {} deviation rows; logs in {}",
        outcome.logs.len(),
        outcome.failures.len(),
        rows.len(),
        out.display()
    );
    for f in &outcome.failures {
        eprintln!("cell {} failed: {}", f.key, f.error);
    }
    Ok(outcome.failures.is_empty())
}

fn replay(args: ReplayArgs, exec: Execution) -> Result<bool> {
    let logs = load_logs(std::slice::from_ref(&args.log))?;
    let mut replayed = Vec::with_capacity(logs.len());
    for log in &logs {
        replayed.push(replay_log(log, exec).map_err(|f| anyhow::anyhow!("cell {} failed on replay: {}", f.key, f.error))?);
    }
    write_atomic(&args.out, |w| Ok(write_logs(w, &replayed)?))?;
    let identical = build_deviation_rows(&logs)? == build_deviation_rows(&replayed)?;
    println!(
        "{} logs replayed into {}; deviation dataset identical: {}",
        replayed.len(),
        args.out.display(),
        if identical { "yes" } else { "no" }
    );
    Ok(identical)
}

fn metrics(args: MetricsArgs, exec: Execution) -> Result<()> {
    let logs = load_logs(&args.logs)?;
    let rows = build_deviation_rows(&logs)?;
    if let Some(path) = &args.rows {
        write_atomic(path, |w| Ok(write_rows_csv(w, &rows)?))?;
    }
    let pooling = match args.pool {
        PoolArg::PerCell => Pooling::PerCell,
        PoolArg::ByDirection => Pooling::ByDirectionPair,
    };
    let metrics = cell_metrics(&rows, pooling, exec);
    if let Some(path) = &args.out {
        write_atomic(path, |w| Ok(write_metrics_csv(w, &metrics)?))?;
    }
    print!("{}", format_metrics_table(&metrics));
    Ok(())
}

fn regress(args: RegressArgs, exec: Execution) -> Result<()> {
    let rows = load_rows(&args.rows)?;
    let models: Vec<ModelId> = if args.model.eq_ignore_ascii_case("all") {
        ModelId::ALL.to_vec()
    } else {
        vec![args.model.parse::<ModelId>().map_err(anyhow::Error::msg)?]
    };
    let transform = match args.lambda.as_str() {
        "fit" => ResponseTransform::YeoJohnsonFit,
        "none" => ResponseTransform::None,
        v => ResponseTransform::YeoJohnson(v.parse().with_context(|| format!("invalid lambda {v:?}"))?),
    };
    let options = ModelOptions {
        transform,
        normalization: if args.raw { Normalization::Raw } else { Normalization::MinMax },
        baseline: args.baseline,
    };
    let cmp = run_models(&rows, &models, options, exec)?;
    if cmp.zero_variance {
        println!("zero-variance response: every deviation equals {}; slopes are 0 and R^2 is undefined", rows[0].y);
    }
    print!("{}", format_model_table(&cmp));
    if let Some(path) = &args.out {
        write_atomic(path, |w| Ok(write_model_csv(w, &cmp)?))?;
    }
    Ok(())
}

fn export_plot(args: ExportPlotArgs) -> Result<()> {
    let rows = load_rows(&args.rows)?;
    let points = plot_points(&rows);
    write_atomic(&args.out, |w| Ok(write_plot_csv(w, &points)?))?;
    println!("{} plot points written to {}", points.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let result = match cli.command {
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Prices(a) => prices(a).map(|_| true),
        Command::Run(a) => run(a, exec),
        Command::Replay(a) => replay(a, exec),
        Command::Metrics(a) => metrics(a, exec).map(|_| true),
        Command::Regress(a) => regress(a, exec).map(|_| true),
        Command::ExportPlot(a) => export_plot(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
