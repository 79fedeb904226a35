//! Batch runner: every (instance, grid point, seed, algorithm) job on a worker
//! pool, one CSV row per job in a fixed order.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use jdp_pack_core::audit::{check_privacy, measure_regret, measure_rounds, Comparator};
use jdp_pack_core::baseline::nonprivate_mwu_run;
use jdp_pack_core::{
    fixed_step_mwu, knapsack_oracle, nonprivate_mwu, solve, PackingInstance, PrivacyParams, SolveResult,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, AuditKind, ConfigError, ExperimentConfig, GridPoint, Reference, Thresholds};
use crate::io::{write_trace, IoError};

/// First line of every results file.
pub const CSV_VERSION_LINE: &str = "# jdp-pack results v1";
pub const THREADS_ENV: &str = "JDP_PACK_THREADS";

/// Column order of the results file.
pub const COLUMNS: [&str; 19] = [
    "instance",
    "n",
    "m",
    "b",
    "epsilon",
    "delta",
    "alpha",
    "seed",
    "algorithm",
    "objective",
    "opt_reference",
    "gap_over_alpha_n",
    "overflow_s_over_alpha_b",
    "rounds_T",
    "rounds_bound_ratio",
    "wall_clock_ms",
    "epsilon_spent",
    "audit_pass",
    "status",
];

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("cannot write results to {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub b: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub algorithm: String,
    pub objective: f64,
    pub opt_reference: f64,
    pub gap_over_alpha_n: f64,
    pub overflow_s_over_alpha_b: f64,
    #[serde(rename = "rounds_T")]
    pub rounds_t: usize,
    /// `T / (m ln(m+1) / α²)`
    pub rounds_bound_ratio: f64,
    pub wall_clock_ms: f64,
    pub epsilon_spent: f64,
    /// `pass`, `na`, or `fail:` followed by the failed audits joined by `+`.
    pub audit_pass: String,
    /// `ok` or `error: <message>`.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Aggregate verdict of one audit over all rows it was applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditSummary {
    pub audit: AuditKind,
    pub checked: usize,
    pub failures: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ResultRow>,
    pub audits: Vec<AuditSummary>,
}

impl BenchReport {
    /// Every row completed and every enabled audit met its threshold.
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(ResultRow::is_ok) && self.audits.iter().all(|a| a.passed)
    }
}

struct Job {
    instance: usize,
    variant: usize,
    point_index: usize,
    point: GridPoint,
    seed: u64,
    algorithm: Algorithm,
}

struct Check {
    audit: AuditKind,
    passed: bool,
    /// A failure no violation rate can excuse.
    hard: bool,
}

struct Outcome {
    row: ResultRow,
    checks: Vec<Check>,
}

/// Worker count from `JDP_PACK_THREADS`, if set to a positive integer.
pub fn worker_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs every job; traces go to `output_dir/traces/` when `trace` is set.
pub fn run(config: &ExperimentConfig, trace: bool) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_threads() {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;

    let base: Vec<PackingInstance> = config.instances.iter().map(|s| s.load()).collect::<Result<_, _>>()?;
    let names: Vec<String> = config.instances.iter().map(|s| s.name()).collect();
    let points = config.grid.points();
    let multipliers = &config.grid.b_multipliers;

    // one instance variant per (instance, b multiplier)
    let variants: Vec<Vec<PackingInstance>> = base
        .iter()
        .map(|inst| {
            multipliers
                .iter()
                .map(|&k| {
                    inst.with_supply(inst.b() * k)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))
                })
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;

    let trace_dir = config.output_dir.join("traces");
    if trace {
        std::fs::create_dir_all(&trace_dir).map_err(|source| BenchError::Output {
            path: trace_dir.clone(),
            source,
        })?;
    }

    let mut jobs = Vec::with_capacity(config.grid_size());
    for instance in 0..base.len() {
        for (point_index, point) in points.iter().enumerate() {
            let variant = multipliers.iter().position(|&k| k == point.b_multiplier).unwrap_or(0);
            for &seed in &config.seeds {
                for &algorithm in &config.algorithms {
                    jobs.push(Job {
                        instance,
                        variant,
                        point_index,
                        point: *point,
                        seed,
                        algorithm,
                    });
                }
            }
        }
    }

    let outcomes: Vec<Outcome> = pool.install(|| {
        let references: Vec<Vec<f64>> = variants
            .par_iter()
            .map(|vs| {
                vs.iter()
                    .map(|inst| reference_value(inst, config.reference, &config.thresholds))
                    .collect()
            })
            .collect();
        jobs.par_iter()
            .map(|job| {
                let inst = &variants[job.instance][job.variant];
                let opt = references[job.instance][job.variant];
                let trace_path = trace.then(|| {
                    trace_dir.join(format!(
                        "{}__p{}__s{}__{}.jsonl",
                        names[job.instance], job.point_index, job.seed, job.algorithm
                    ))
                });
                run_job(config, job, &names[job.instance], inst, opt, trace_path.as_deref())
            })
            .collect()
    });

    let audits = config
        .audits
        .iter()
        .map(|&audit| {
            let checks: Vec<&Check> = outcomes
                .iter()
                .flat_map(|o| &o.checks)
                .filter(|c| c.audit == audit)
                .collect();
            let failures = checks.iter().filter(|c| !c.passed).count();
            let hard = checks.iter().any(|c| !c.passed && c.hard);
            let passed = !hard
                && if audit.is_statistical() {
                    failures as f64 <= config.thresholds.max_violation_rate * checks.len() as f64
                } else {
                    failures == 0
                };
            AuditSummary {
                audit,
                checked: checks.len(),
                failures,
                passed,
            }
        })
        .collect();
    Ok(BenchReport {
        rows: outcomes.into_iter().map(|o| o.row).collect(),
        audits,
    })
}

fn reference_value(instance: &PackingInstance, reference: Reference, t: &Thresholds) -> f64 {
    let knapsack = || knapsack_oracle(instance).map(|r| r.opt_value).unwrap_or(f64::NAN);
    let mwu = || {
        nonprivate_mwu(instance, t.reference_alpha)
            .map(|r| r.opt_value)
            .unwrap_or(f64::NAN)
    };
    match reference {
        Reference::Auto if instance.m() == 1 => knapsack(),
        Reference::Auto | Reference::Mwu => mwu(),
        Reference::Knapsack => knapsack(),
        Reference::None => f64::NAN,
    }
}

fn run_job(
    config: &ExperimentConfig,
    job: &Job,
    name: &str,
    inst: &PackingInstance,
    opt: f64,
    trace_path: Option<&Path>,
) -> Outcome {
    let p = job.point;
    let mut row = ResultRow {
        instance: name.to_string(),
        n: inst.n(),
        m: inst.m(),
        b: inst.b(),
        epsilon: p.epsilon,
        delta: p.delta,
        alpha: p.alpha,
        seed: job.seed,
        algorithm: job.algorithm.name().to_string(),
        objective: f64::NAN,
        opt_reference: opt,
        gap_over_alpha_n: f64::NAN,
        overflow_s_over_alpha_b: f64::NAN,
        rounds_t: 0,
        rounds_bound_ratio: f64::NAN,
        wall_clock_ms: 0.0,
        epsilon_spent: f64::NAN,
        audit_pass: "na".into(),
        status: "ok".into(),
    };

    let params = match PrivacyParams::new(p.epsilon, p.delta, p.alpha) {
        Ok(params) => params,
        Err(e) => {
            row.status = format!("error: {e}");
            return Outcome {
                row,
                checks: Vec::new(),
            };
        }
    };
    let start = Instant::now();
    let result: Result<SolveResult, String> = match job.algorithm {
        Algorithm::Private => solve(inst, &params, &config.solver, job.seed).map_err(|e| e.to_string()),
        Algorithm::Nonprivate => {
            nonprivate_mwu_run(inst, p.alpha, config.solver.rounds_constant, false).map_err(|e| e.to_string())
        }
        Algorithm::FixedStep => fixed_step_mwu(inst, &params, &config.solver, job.seed).map_err(|e| e.to_string()),
    };
    row.wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            row.status = format!("error: {e}");
            return Outcome {
                row,
                checks: Vec::new(),
            };
        }
    };

    let (n, m, b, alpha) = (inst.n() as f64, inst.m(), inst.b(), p.alpha);
    row.objective = result.objective;
    row.gap_over_alpha_n = (opt - result.objective) / (alpha * n);
    row.overflow_s_over_alpha_b = result.overflow_s / (alpha * b);
    row.rounds_t = result.rounds;
    row.rounds_bound_ratio = result.rounds as f64 / (m as f64 * ((m + 1) as f64).ln() / (alpha * alpha));
    row.epsilon_spent = result.epsilon_spent;

    if let Some(path) = trace_path {
        if let Err(e) = write_trace(path, &result.trace) {
            row.status = format!("error: {e}");
        }
    }

    let checks = if job.algorithm == Algorithm::Private {
        audit_row(config, inst, &params, &result, opt)
    } else {
        Vec::new()
    };
    if !checks.is_empty() {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.audit.name()).collect();
        row.audit_pass = if failed.is_empty() {
            "pass".into()
        } else {
            format!("fail:{}", failed.join("+"))
        };
    }
    Outcome { row, checks }
}

fn audit_row(
    config: &ExperimentConfig,
    inst: &PackingInstance,
    params: &PrivacyParams,
    result: &SolveResult,
    opt: f64,
) -> Vec<Check> {
    let t = &config.thresholds;
    let (n, b, alpha) = (inst.n() as f64, inst.b(), params.alpha);
    let mut checks = Vec::new();
    for &audit in &config.audits {
        let mut hard = !audit.is_statistical();
        let passed = match audit {
            AuditKind::Gap if opt.is_nan() => continue,
            AuditKind::Gap => opt - result.objective <= t.c_gap * alpha * n,
            AuditKind::Feasibility => {
                // scaling must always succeed; the pre-scaling bound is statistical
                if inst.max_overflow(result.x_feasible.as_slice()) > 0.0 {
                    hard = true;
                    false
                } else {
                    result.overflow_s <= t.c_feas * alpha * b
                }
            }
            AuditKind::Regret => [Comparator::Dummy, Comparator::MostOverdemanded].iter().all(|c| {
                let p = c.prices(inst, &result.x_bar, result.constants.p_max);
                measure_regret(result, inst.n(), alpha, &p, t.c_reg).is_ok_and(|r| r.slack >= 0.0)
            }),
            AuditKind::Rounds => {
                let r = measure_rounds(&result.trace, inst.m(), alpha, b);
                r.within_bounds && r.kinds_consistent && !result.guard_hit
            }
            AuditKind::Privacy if !config.solver.noise => continue,
            AuditKind::Privacy => {
                let eps = config.solver.price_epsilon(params.epsilon);
                check_privacy(result, params, eps, t.c_priv).passed()
            }
        };
        checks.push(Check { audit, passed, hard });
    }
    checks
}

/// Writes the version line, a header and one record per row.
pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), BenchError> {
    let mut out = out;
    writeln!(out, "{CSV_VERSION_LINE}").map_err(|source| BenchError::Output {
        path: PathBuf::new(),
        source,
    })?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(COLUMNS)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|source| BenchError::Output {
        path: PathBuf::new(),
        source,
    })?;
    Ok(())
}

pub fn write_csv_file(path: &Path, rows: &[ResultRow]) -> Result<(), BenchError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Output {
            path: dir.into(),
            source,
        })?;
    }
    let file = std::fs::File::create(path).map_err(|source| BenchError::Output {
        path: path.into(),
        source,
    })?;
    write_csv(std::io::BufWriter::new(file), rows)
}
