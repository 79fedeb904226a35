use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jdp_pack::bench::{self, BenchReport};
use jdp_pack::config::{ExperimentConfig, Thresholds};
use jdp_pack::io::{load_instance, save_instance, write_trace};
use jdp_pack::summarize::{read_rows, summarize, write_summary};
use jdp_pack_core::audit::{
    check_divergence_lemma, check_noise_grid, negative_control, noise_grid, thresholds, valid_divergence_grid,
    DivergenceOutcome,
};
use jdp_pack_core::baseline::nonprivate_mwu_run;
use jdp_pack_core::{fixed_step_mwu, generate, solve, CounterMode, GeneratorKind, PrivacyParams, SolverConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "jdp-pack", version, about = "Packing LPs under joint differential privacy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance as JSON.
    Gen(GenArgs),
    /// Solve one instance and print a JSON summary.
    Solve(SolveArgs),
    /// Run an experiment grid and write results.csv.
    Bench(BenchArgs),
    /// Numeric checks of the noise law and the divergence bound.
    Audit(AuditArgs),
    /// Aggregate one or more results files.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_generator)]
    generator: GeneratorKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum CounterArg {
    Exact,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Private,
    Nonprivate,
    FixedStep,
}

/// Solver switches shared by `solve` and `bench`.
#[derive(Args)]
struct SolverFlags {
    /// Run even when the supply condition fails.
    #[arg(long)]
    override_supply_check: bool,
    #[arg(long, value_enum)]
    counter_mode: Option<CounterArg>,
    /// `off` replaces every noise draw by its mean (testing only).
    #[arg(long, value_enum)]
    noise: Option<Switch>,
}

impl SolverFlags {
    fn apply(&self, config: &mut SolverConfig) {
        if self.override_supply_check {
            config.override_supply_check = true;
        }
        if let Some(mode) = self.counter_mode {
            config.counter_mode = match mode {
                CounterArg::Exact => CounterMode::Exact,
                CounterArg::Tree => CounterMode::Tree,
            };
        }
        if let Some(noise) = self.noise {
            config.noise = matches!(noise, Switch::On);
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "private")]
    algorithm: AlgorithmArg,
    /// Write the per-round trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the full result (including x̄ and the trace) as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write one trace file per job under <output_dir>/traces.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum AuditWhat {
    Divergence,
    Noise,
    All,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum, default_value = "all")]
    what: AuditWhat,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Parameter tuples for the divergence check.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Values of α the divergence tuples draw from.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    grid_points: usize,
    #[arg(long, default_value_t = thresholds::DIVERGENCE_TOL)]
    tolerance: f64,
    /// (μ, σ, α) triples for the noise check.
    #[arg(long, default_value_t = 100)]
    noise_points: usize,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Experiment config whose thresholds to count violations against.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_generator(s: &str) -> Result<GeneratorKind, String> {
    s.parse()
        .map_err(|e: jdp_pack_core::instance::InstanceError| e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but some check failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen(args) => gen(args).map(|_| true),
        Command::Solve(args) => solve_one(args).map(|_| true),
        Command::Bench(args) => run_bench(args),
        Command::Audit(args) => audit(args),
        Command::Summarize(args) => summarize_files(args).map(|_| true),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let inst = generate(args.generator, args.n, args.m, args.b, args.seed)?;
    match args.output {
        Some(path) => save_instance(&path, &inst)?,
        None => println!("{}", jdp_pack::io::instance_to_json(&inst)?),
    }
    Ok(())
}

fn solve_one(args: SolveArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let params = PrivacyParams::new(args.epsilon, args.delta, args.alpha)?;
    let mut config = SolverConfig::default();
    args.flags.apply(&mut config);
    let result = match args.algorithm {
        AlgorithmArg::Private => solve(&inst, &params, &config, args.seed)?,
        AlgorithmArg::Nonprivate => nonprivate_mwu_run(&inst, args.alpha, config.rounds_constant, false)?,
        AlgorithmArg::FixedStep => fixed_step_mwu(&inst, &params, &config, args.seed)?,
    };
    if let Some(path) = &args.trace {
        write_trace(path, &result.trace)?;
    }
    if let Some(path) = &args.output {
        write_json(path, &result)?;
    }
    let summary = json!({
        "n": inst.n(),
        "m": inst.m(),
        "b": inst.b(),
        "objective": result.objective,
        "objective_bar": result.objective_bar,
        "overflow_s": result.overflow_s,
        "rounds": result.rounds,
        "t_max": result.constants.t_max,
        "guard_hit": result.guard_hit,
        "epsilon_spent": finite_or_null(result.epsilon_spent),
        "budget_bound": result.budget_bound,
        "regime_violations": result.regime_violations,
        "x_feasible": result.x_feasible,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    serde_json::to_writer(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<bool> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    args.flags.apply(&mut config.solver);
    eprintln!(
        "{} instances x {} grid points x {} seeds x {} algorithms = {} runs",
        config.instances.len(),
        config.grid.points().len(),
        config.seeds.len(),
        config.algorithms.len(),
        config.grid_size()
    );
    let report = bench::run(&config, args.trace)?;
    let path = config.output_dir.join("results.csv");
    bench::write_csv_file(&path, &report.rows)?;
    report_bench(&report, &path);
    Ok(report.all_ok())
}

fn report_bench(report: &BenchReport, path: &Path) {
    let failed = report.rows.iter().filter(|r| !r.is_ok()).count();
    eprintln!(
        "wrote {} rows to {} ({failed} failed)",
        report.rows.len(),
        path.display()
    );
    for a in &report.audits {
        let verdict = if a.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "audit {:<12} {verdict} ({} of {} runs out of bound)",
            a.audit.name(),
            a.failures,
            a.checked
        );
    }
}

fn audit(args: AuditArgs) -> Result<bool> {
    if args.alphas.is_empty() {
        bail!("--alphas needs at least one value");
    }
    let mut report = serde_json::Map::new();
    let mut ok = true;
    if matches!(args.what, AuditWhat::Divergence | AuditWhat::All) {
        let grid = valid_divergence_grid(args.points, args.seed, &args.alphas);
        let outcomes = check_divergence_lemma(&grid, args.grid_points, args.tolerance);
        let checked: Vec<_> = outcomes
            .iter()
            .filter_map(|o| match o {
                DivergenceOutcome::Checked(r) => Some(r),
                DivergenceOutcome::Skipped { .. } => None,
            })
            .collect();
        let violations = checked.iter().filter(|r| r.violated).count();
        let max_excess = checked
            .iter()
            .map(|r| r.max_excess - r.params.delta)
            .fold(f64::NEG_INFINITY, f64::max);
        let control = check_divergence_lemma(&[negative_control(&grid[0])], args.grid_points, args.tolerance);
        let control_flagged = match &control[0] {
            DivergenceOutcome::Checked(r) => r.violated,
            DivergenceOutcome::Skipped { .. } => true,
        };
        ok &= violations == 0 && control_flagged;
        report.insert(
            "divergence".into(),
            json!({
                "points": checked.len(),
                "violations": violations,
                "max_excess_over_delta": max_excess,
                "negative_control_flagged": control_flagged,
                "negative_control": control[0],
            }),
        );
    }
    if matches!(args.what, AuditWhat::Noise | AuditWhat::All) {
        let checks = check_noise_grid(&noise_grid(args.noise_points, args.seed), args.samples, args.seed);
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
        ok &= failed.is_empty();
        report.insert("noise".into(), json!({ "points": checks.len(), "failed": failed }));
    }
    report.insert("passed".into(), json!(ok));
    let text = serde_json::to_string_pretty(&report)?;
    match &args.output {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(ok)
}

fn summarize_files(args: SummarizeArgs) -> Result<()> {
    let thresholds = match &args.config {
        Some(path) => ExperimentConfig::load(path)?.thresholds,
        None => Thresholds::default(),
    };
    let mut rows = Vec::new();
    for path in &args.files {
        let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        rows.extend(read_rows(file).with_context(|| format!("reading {}", path.display()))?);
    }
    let summary = summarize(&rows, &thresholds);
    write_summary(std::io::stdout().lock(), &summary)?;
    Ok(())
}
