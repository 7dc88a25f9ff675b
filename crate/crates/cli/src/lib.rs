//! Experiment drivers: `sample`, `trace`, `sweep`, `rates`, `check` and
//! `lyapunov`, configured by a TOML file and writing schema-tagged CSV/JSON.

pub mod config;
mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use coupled_hmc::analysis::{lyapunov_drift_check, rate_report, ConditionKind, RateRegime};
use coupled_hmc::coupling::{
    coupling_time, sweep_mean_coupling_time, CouplingConfig, CouplingOutcome, SweepConfig,
};
use coupled_hmc::kernel::{run_chain, KernelConfig, KernelMode};
use coupled_hmc::rng::SUBSTREAM_INIT;
use coupled_hmc::targets::{suite, SmoothnessConstants, Target};
use coupled_hmc::{HmcError, RandomStream};
use serde_json::json;

use config::{ExperimentConfig, RegimeName};
use output::{fmt, CsvOut};

pub const SCHEMA_CHAIN: &str = "coupled-hmc/chain/1";
pub const SCHEMA_TRACE: &str = "coupled-hmc/trace/1";
pub const SCHEMA_CONTOUR: &str = "coupled-hmc/contour/1";
pub const SCHEMA_SWEEP: &str = "coupled-hmc/sweep/1";
pub const SCHEMA_DRIFT: &str = "coupled-hmc/drift/1";

/// Position columns are written to traces only up to this dimension.
pub const TRACE_MAX_COORDS: usize = 3;
const CONTOUR_POINTS: usize = 101;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

impl From<HmcError> for CliError {
    fn from(e: HmcError) -> Self {
        match e {
            HmcError::NumericalDomain { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "coupled-hmc",
    version,
    about = "Coupled Hamiltonian Monte Carlo experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Full-size sweeps: 100 durations × 10⁵ replicas.
    #[arg(long, global = true)]
    pub paper_scale: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run a single chain and write its trace and summary.
    Sample,
    /// Run one coupled pair until it meets and write the distance trace.
    Trace,
    /// Mean coupling time over a grid of durations.
    Sweep,
    /// Contraction rate and mixing-time bound as JSON.
    Rates,
    /// Evaluate a contraction condition; exits with 4 when violated.
    Check,
    /// Monte-Carlo drift check; exits with 4 when a point fails.
    Lyapunov,
}

struct Context {
    cfg: ExperimentConfig,
    target: Box<dyn Target<f64>>,
    out: PathBuf,
    seed_override: Option<u64>,
    paper_scale: bool,
}

impl Context {
    fn kernel_seed(&self) -> u64 {
        self.seed_override
            .or(self.cfg.kernel.seed)
            .unwrap_or(self.cfg.run.seed)
    }

    fn run_seed(&self) -> u64 {
        self.seed_override.unwrap_or(self.cfg.run.seed)
    }

    fn kernel(&self) -> Result<KernelConfig<f64>, CliError> {
        let k = &self.cfg.kernel;
        Ok(KernelConfig::new(k.mode, k.duration, self.cfg.step())?
            .with_reject_on_divergence(k.reject_on_divergence))
    }

    fn point(&self, v: &Option<Vec<f64>>, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match v {
            Some(p) if p.len() != self.target.dim() => Err(CliError::Config(format!(
                "{key} has dimension {} but target {} has dimension {}",
                p.len(),
                self.target.name(),
                self.target.dim()
            ))),
            other => Ok(other.clone()),
        }
    }

    fn constants(&self) -> Result<SmoothnessConstants<f64>, CliError> {
        match self.cfg.constants {
            Some(c) => Ok(SmoothnessConstants::new(
                c.lipschitz_grad,
                c.convexity,
                c.convexity_radius,
            )?),
            None => self.target.constants().ok_or_else(|| {
                CliError::Config(format!(
                    "target {} declares no constants; add a [constants] section with L, K, R",
                    self.target.name()
                ))
            }),
        }
    }

    fn regime(&self) -> Result<RateRegime, CliError> {
        Ok(match self.cfg.analysis.regime {
            RegimeName::ConvexExact => RateRegime::ConvexExact,
            RegimeName::ConvexNumerical => RateRegime::ConvexNumerical,
            RegimeName::General => RateRegime::General,
            RegimeName::Lyapunov => RateRegime::Lyapunov {
                lambda: self.cfg.analysis.lambda.ok_or_else(|| {
                    CliError::Config("analysis.lambda is required for the lyapunov regime".into())
                })?,
            },
        })
    }

    fn h1(&self) -> f64 {
        self.cfg.analysis.h1.unwrap_or_else(|| self.cfg.step())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Runs one subcommand, printing its main result to stdout.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let target = suite::build::<f64>(&cfg.target.name, &cfg.target.params())?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let workers = cli.workers.or(cfg.run.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let ctx = Context {
        cfg,
        target,
        out,
        seed_override: cli.seed,
        paper_scale: cli.paper_scale,
    };
    pool.install(|| match cli.command {
        Command::Sample => cmd_sample(&ctx),
        Command::Trace => cmd_trace(&ctx),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Rates => cmd_rates(&ctx),
        Command::Check => cmd_check(&ctx),
        Command::Lyapunov => cmd_lyapunov(&ctx),
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<String, CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, &text)?;
    Ok(text)
}

fn coord_headers(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}_{i}")).collect()
}

fn cmd_sample(ctx: &Context) -> Result<(), CliError> {
    let kcfg = ctx.kernel()?;
    let d = ctx.target.dim();
    let x0 = ctx
        .point(&ctx.cfg.kernel.x0, "kernel.x0")?
        .unwrap_or(vec![0.0; d]);
    let seed = ctx.kernel_seed();
    let mut rng = RandomStream::new(seed, 0);
    let n = ctx.cfg.kernel.n_steps;
    let record = ctx.cfg.kernel.record_trace;
    let summary = run_chain(ctx.target.as_ref(), &kcfg, &x0, n, record, &mut rng)?;
    if let Some(trace) = &summary.trace {
        let mut header = vec![
            "step".to_string(),
            "accepted".into(),
            "energy_change".into(),
        ];
        header.extend(coord_headers("x", d));
        let mut w = CsvOut::create(&ctx.path("chain.csv"), SCHEMA_CHAIN, &header)?;
        for (i, rec) in trace.iter().enumerate() {
            let mut row = vec![
                (i + 1).to_string(),
                rec.accepted.to_string(),
                fmt(rec.energy_change),
            ];
            row.extend(rec.position.iter().map(|&v| fmt(v)));
            w.row(&row)?;
        }
        w.finish()?;
    }
    let value = json!({
        "target": ctx.cfg.target.name,
        "mode": kcfg.mode,
        "T": kcfg.duration,
        "h": kcfg.step,
        "n_steps": n,
        "seed": seed,
        "x0": x0,
        "acceptance_rate": summary.acceptance_rate,
        "mean": summary.mean,
        "covariance": summary.covariance,
        "final_position": summary.final_position,
    });
    print!("{}", write_json(&ctx.path("summary.json"), &value)?);
    Ok(())
}

fn initial_pair(ctx: &Context, seed: u64) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let c = &ctx.cfg.coupling;
    let x0 = ctx.point(&c.x0, "coupling.x0")?;
    let y0 = ctx.point(&c.y0, "coupling.y0")?;
    let lo = ctx.cfg.run.init_lower.unwrap_or(0.0);
    let hi = ctx.cfg.run.init_upper.unwrap_or(10.0);
    let mut rng = RandomStream::with_substream(seed, 0, SUBSTREAM_INIT);
    let mut draw = || -> Vec<f64> {
        (0..ctx.target.dim())
            .map(|_| lo + (hi - lo) * rng.uniform::<f64>())
            .collect()
    };
    let x = x0.unwrap_or_else(&mut draw);
    let y = y0.unwrap_or_else(&mut draw);
    Ok((x, y))
}

fn cmd_trace(ctx: &Context) -> Result<(), CliError> {
    let kcfg = ctx.kernel()?;
    let c = &ctx.cfg.coupling;
    let gamma = c
        .gamma
        .unwrap_or_else(|| c.gamma_policy.gamma(kcfg.duration));
    let ccfg = CouplingConfig::new(
        gamma,
        c.switch_radius.unwrap_or(f64::INFINITY),
        c.merge_threshold,
        c.max_steps,
    )?;
    let seed = ctx.kernel_seed();
    let (x0, y0) = initial_pair(ctx, seed)?;
    let mut rng = RandomStream::new(seed, 0);
    let run = coupling_time(ctx.target.as_ref(), &kcfg, &ccfg, &x0, &y0, true, &mut rng)?;
    let d = ctx.target.dim();
    let coords = d <= TRACE_MAX_COORDS;
    let mut header: Vec<String> = ["step", "dist", "regime", "shifted", "acc_x", "acc_y"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if coords {
        header.extend(coord_headers("x", d));
        header.extend(coord_headers("y", d));
    }
    let mut w = CsvOut::create(&ctx.path("trace.csv"), SCHEMA_TRACE, &header)?;
    let initial_regime = if run.outcome == CouplingOutcome::Met(0) {
        "merged"
    } else {
        "initial"
    };
    let mut row = vec![
        "0".to_string(),
        fmt(run.initial_distance),
        initial_regime.into(),
        "false".into(),
        "false".into(),
        "false".into(),
    ];
    if coords {
        row.extend(x0.iter().chain(&y0).map(|&v| fmt(v)));
    }
    w.row(&row)?;
    let trace = run.trace.as_deref().unwrap_or_default();
    for r in trace {
        let diag = r.diagnostics;
        let mut row = vec![
            r.step.to_string(),
            fmt(r.distance),
            diag.regime.as_str().into(),
            diag.shifted.to_string(),
            diag.accepted_x.to_string(),
            diag.accepted_y.to_string(),
        ];
        if coords {
            row.extend(r.x.iter().chain(&r.y).map(|&v| fmt(v)));
        }
        w.row(&row)?;
    }
    if let CouplingOutcome::Timeout(n) = run.outcome {
        let last = trace.last().map_or(run.initial_distance, |r| r.distance);
        let mut row = vec![
            n.to_string(),
            fmt(last),
            "timeout".into(),
            "false".into(),
            "false".into(),
            "false".into(),
        ];
        if coords {
            row.extend(std::iter::repeat_n(String::new(), 2 * d));
        }
        w.row(&row)?;
    }
    w.finish()?;
    if d == 2 {
        write_contour(ctx, &x0, &y0, trace)?;
    }
    let (outcome, steps) = match run.outcome {
        CouplingOutcome::Met(n) => ("met", n),
        CouplingOutcome::Timeout(n) => ("timeout", n),
    };
    let value = json!({
        "target": ctx.cfg.target.name,
        "mode": kcfg.mode,
        "T": kcfg.duration,
        "h": kcfg.step,
        "gamma": gamma,
        "merge_threshold": c.merge_threshold,
        "seed": seed,
        "outcome": outcome,
        "steps": steps,
        "initial_distance": run.initial_distance,
    });
    print!("{}", write_json(&ctx.path("trace_summary.json"), &value)?);
    Ok(())
}

fn write_contour(
    ctx: &Context,
    x0: &[f64],
    y0: &[f64],
    trace: &[coupled_hmc::coupling::TraceRow<f64>],
) -> Result<(), CliError> {
    let points = std::iter::once(x0)
        .chain(std::iter::once(y0))
        .chain(trace.iter().flat_map(|r| [r.x.as_slice(), r.y.as_slice()]));
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        let pad = 0.1 * (hi[k] - lo[k]).max(1.0);
        lo[k] -= pad;
        hi[k] += pad;
    }
    let header = ["x".to_string(), "y".into(), "U".into()];
    let mut w = CsvOut::create(&ctx.path("contour.csv"), SCHEMA_CONTOUR, &header)?;
    let gx = config::linspace(lo[0], hi[0], CONTOUR_POINTS);
    let gy = config::linspace(lo[1], hi[1], CONTOUR_POINTS);
    for &b in &gy {
        for &a in &gx {
            w.row(&[fmt(a), fmt(b), fmt(ctx.target.potential(&[a, b]))])?;
        }
    }
    w.finish()
}

fn cmd_sweep(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.cfg.coupling;
    let r = &ctx.cfg.run;
    let durations = ctx.cfg.duration_grid(ctx.paper_scale);
    let policies = r.policies.clone().unwrap_or_else(|| {
        vec![
            coupled_hmc::coupling::GammaPolicy::Zero,
            coupled_hmc::coupling::GammaPolicy::InverseT,
        ]
    });
    if ctx.cfg.kernel.mode == KernelMode::Exact {
        return Err(CliError::Config(
            "sweep needs a Verlet kernel (mode = adjusted or unadjusted)".into(),
        ));
    }
    let header: Vec<String> = [
        "T",
        "gamma_policy",
        "replicas",
        "mean_steps",
        "mean_duration",
        "stderr",
        "timeouts",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut w = CsvOut::create(&ctx.path("sweep.csv"), SCHEMA_SWEEP, &header)?;
    let mut total_timeouts = 0;
    for policy in policies {
        let mut sc = SweepConfig::new(
            durations.clone(),
            policy,
            ctx.cfg.replicas(ctx.paper_scale),
            ctx.run_seed(),
        );
        sc.mode = ctx.cfg.kernel.mode;
        sc.reject_on_divergence = ctx.cfg.kernel.reject_on_divergence;
        sc.steps_per_trajectory = r.steps_per_trajectory.unwrap_or(sc.steps_per_trajectory);
        sc.switch_radius = c.switch_radius.unwrap_or(f64::INFINITY);
        sc.merge_threshold = c.merge_threshold;
        sc.max_steps = c.max_steps;
        sc.init_lower = r.init_lower.unwrap_or(sc.init_lower);
        sc.init_upper = r.init_upper.unwrap_or(sc.init_upper);
        for row in sweep_mean_coupling_time(ctx.target.as_ref(), &sc)? {
            total_timeouts += row.timeouts;
            w.row(&[
                fmt(row.duration),
                row.gamma_policy.as_str().into(),
                row.replicas.to_string(),
                fmt(row.mean_steps),
                fmt(row.mean_duration),
                fmt(row.stderr),
                row.timeouts.to_string(),
            ])?;
        }
    }
    w.finish()?;
    println!(
        "wrote {} ({} durations, {} timeouts)",
        ctx.path("sweep.csv").display(),
        durations.len(),
        total_timeouts
    );
    Ok(())
}

fn cmd_rates(ctx: &Context) -> Result<(), CliError> {
    let constants = ctx.constants()?;
    let a = &ctx.cfg.analysis;
    let report = rate_report(
        &ctx.cfg.target.name,
        &constants,
        ctx.cfg.kernel.duration,
        ctx.h1(),
        ctx.regime()?,
        a.alpha,
        a.delta0,
        a.eps,
    )?;
    let mut value = serde_json::to_value(&report)?;
    value["condition_satisfied"] = json!(report.condition.satisfied);
    print!("{}", write_json(&ctx.path("rates.json"), &value)?);
    Ok(())
}

fn cmd_check(ctx: &Context) -> Result<(), CliError> {
    let constants = ctx.constants()?;
    let h1 = ctx.h1();
    let kind: ConditionKind = match ctx.cfg.analysis.condition {
        Some(k) => k,
        None => ctx.regime()?.condition(h1 > 0.0),
    };
    let report =
        coupled_hmc::analysis::check_conditions(&constants, ctx.cfg.kernel.duration, h1, kind);
    let value = serde_json::to_value(&report)?;
    print!("{}", write_json(&ctx.path("check.json"), &value)?);
    match report.violated {
        Some(v) => Err(CliError::CheckFailed(v)),
        None => Ok(()),
    }
}

fn cmd_lyapunov(ctx: &Context) -> Result<(), CliError> {
    let kcfg = ctx.kernel()?;
    let a = &ctx.cfg.analysis;
    let d = ctx.target.dim();
    let grid = match &a.grid {
        Some(g) => g.clone(),
        None => a
            .radii
            .clone()
            .unwrap_or_else(|| vec![0.0, 3.0, 6.0])
            .into_iter()
            .map(|r| {
                let mut p = vec![0.0; d];
                p[0] = r;
                p
            })
            .collect(),
    };
    let points = lyapunov_drift_check(
        ctx.target.as_ref(),
        &kcfg,
        a.lyapunov_kind,
        &grid,
        a.n_mc,
        ctx.run_seed(),
    )?;
    let header: Vec<String> = [
        "point", "function", "norm", "psi_x", "estimate", "bound", "stderr", "pass",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut w = CsvOut::create(&ctx.path("lyapunov.csv"), SCHEMA_DRIFT, &header)?;
    for p in &points {
        w.row(&[
            p.point.to_string(),
            p.function.into(),
            fmt(coupled_hmc::vector::norm(&p.x)),
            fmt(p.psi_x),
            fmt(p.estimate),
            fmt(p.bound),
            fmt(p.stderr),
            p.satisfied.to_string(),
        ])?;
    }
    w.finish()?;
    let failed: Vec<String> = points
        .iter()
        .filter(|p| !p.satisfied)
        .map(|p| {
            format!(
                "point {} ({}): {} > {}",
                p.point, p.function, p.estimate, p.bound
            )
        })
        .collect();
    println!(
        "{} of {} drift checks passed",
        points.len() - failed.len(),
        points.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join("; ")))
    }
}
