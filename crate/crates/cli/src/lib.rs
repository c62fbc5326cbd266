//! Command-line experiment runner for `varexp`.
//!
//! Each subcommand reads a JSON config (every key optional), applies the
//! command-line overrides and writes `<command>.csv` and `<command>.json`
//! into the output directory.
//!
//! Exit codes: 0 on success, 1 when a contract check fails (or, with
//! `--strict`, when an integrability diagnostic is raised), 2 for invalid
//! configuration.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::commands::Context;
use crate::config::{ConfigError, ConstantKind, ExperimentConfig, FactorizeMode, FieldSpec, OneOrMany};
use crate::output::{write_artifacts, Outcome};

#[derive(Debug, Parser)]
#[command(name = "varexp", version, about = "Variable-exponent norm and weight experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Treat integrability diagnostics as failures.
    #[arg(long)]
    pub strict: bool,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub shifts: Option<u32>,
    #[arg(long)]
    pub refinement: Option<i32>,
    #[arg(long)]
    pub nodes_per_finest: Option<u32>,
    #[arg(long)]
    pub rtol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Luxemburg norm of f (times w) on one cube.
    Norm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        w: Option<String>,
        #[arg(long)]
        p: Option<String>,
    },
    /// Weight constant over a dyadic family or a depth scan.
    Constant {
        #[command(flatten)]
        common: Common,
        /// `apq` or `limited`.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        w: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma-separated depths for a depth scan.
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<u32>>,
    },
    /// Weight factorization for one or more theta.
    Factorize {
        #[command(flatten)]
        common: Common,
        /// `full` or `limited`.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
    },
    /// Reverse-Hölder ratio scan.
    ProbeRhi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        r: Option<String>,
        #[arg(long, value_delimiter = ',')]
        s_grid: Option<Vec<f64>>,
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Seeded invariant suite.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// JSON summary of existing CSV artifacts.
    Report {
        #[command(flatten)]
        common: Common,
        /// CSV files; defaults to every CSV in the output directory.
        inputs: Vec<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Norm { .. } => "norm",
            Command::Constant { .. } => "constant",
            Command::Factorize { .. } => "factorize",
            Command::ProbeRhi { .. } => "probe-rhi",
            Command::Verify { .. } => "verify",
            Command::Report { .. } => "report",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Norm { common, .. }
            | Command::Constant { common, .. }
            | Command::Factorize { common, .. }
            | Command::ProbeRhi { common, .. }
            | Command::Verify { common }
            | Command::Report { common, .. } => common,
        }
    }
}

fn parse_kind(s: &str) -> Result<ConstantKind, ConfigError> {
    match s {
        "apq" => Ok(ConstantKind::Apq),
        "limited" => Ok(ConstantKind::Limited),
        _ => Err(ConfigError(format!("unknown constant kind {s:?}"))),
    }
}

fn parse_mode(s: &str) -> Result<FactorizeMode, ConfigError> {
    match s {
        "full" => Ok(FactorizeMode::Full),
        "limited" => Ok(FactorizeMode::Limited),
        _ => Err(ConfigError(format!("unknown factorize mode {s:?}"))),
    }
}

/// Config file plus command-line overrides.
pub fn resolve(command: &Command) -> Result<ExperimentConfig, ConfigError> {
    let common = command.common();
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.dim {
        cfg.domain.dim = v;
    }
    if let Some(v) = common.half_width {
        cfg.domain.half_width = v;
    }
    if let Some(v) = common.depth {
        cfg.family.depth = v;
    }
    if let Some(v) = common.shifts {
        cfg.family.shifts = v;
    }
    if let Some(v) = common.refinement {
        cfg.grid.refinement = v;
    }
    if let Some(v) = common.nodes_per_finest {
        cfg.family.nodes_per_finest = Some(v);
    }
    if let Some(v) = common.rtol {
        cfg.tolerances.rtol = v;
    }
    let expr = |s: &Option<String>| s.as_deref().map(FieldSpec::expr);
    match command {
        Command::Norm { f, w, p, .. } => {
            if let Some(v) = expr(f) {
                cfg.norm.f = v;
            }
            if let Some(v) = expr(w) {
                cfg.norm.w = Some(v);
            }
            if let Some(v) = expr(p) {
                cfg.norm.p = v;
            }
        }
        Command::Constant {
            kind,
            w,
            p,
            q,
            gamma,
            depths,
            ..
        } => {
            if let Some(k) = kind {
                cfg.constant.kind = parse_kind(k)?;
            }
            if let Some(v) = expr(w) {
                cfg.constant.w = v;
            }
            if let Some(v) = expr(p) {
                cfg.constant.p = v;
            }
            if let Some(v) = expr(q) {
                cfg.constant.q = v;
            }
            if let Some(v) = gamma {
                cfg.constant.gamma = *v;
            }
            if let Some(v) = depths {
                cfg.family.depths = Some(v.clone());
            }
        }
        Command::Factorize { mode, theta, .. } => {
            if let Some(m) = mode {
                cfg.factorize.mode = parse_mode(m)?;
            }
            if let Some(t) = theta {
                cfg.factorize.theta = OneOrMany::Many(t.clone());
            }
        }
        Command::ProbeRhi { u, r, s_grid, cap, .. } => {
            if let Some(v) = expr(u) {
                cfg.rhi.u = v;
            }
            if let Some(v) = expr(r) {
                cfg.rhi.r = v;
            }
            if let Some(v) = s_grid {
                cfg.rhi.s_grid = v.clone();
            }
            if let Some(v) = cap {
                cfg.rhi.cap = *v;
            }
        }
        Command::Verify { .. } | Command::Report { .. } => {}
    }
    Ok(cfg)
}

fn execute(command: &Command, ctx: &Context) -> Result<Outcome, ConfigError> {
    match command {
        Command::Norm { .. } => commands::norm(ctx),
        Command::Constant { .. } => commands::constant(ctx),
        Command::Factorize { .. } => commands::factorize(ctx),
        Command::ProbeRhi { .. } => commands::probe_rhi(ctx),
        Command::Verify { .. } => {
            let rows = verify::run(ctx.cfg.seed, &ctx.cfg.verify, ctx.cfg.tolerances.rtol);
            let failures: Vec<String> = rows
                .iter()
                .filter(|r| !r.passed)
                .map(|r| format!("{}/{} [{}]: {} > {}", r.module, r.invariant, r.case, r.value, r.tolerance))
                .collect();
            let mut modules: Vec<&str> = rows.iter().map(|r| r.module).collect();
            modules.dedup();
            Ok(Outcome {
                table: Some(verify::table(&rows, &ctx.hash)),
                summary: json!({
                    "rows": rows.len(),
                    "passed": rows.iter().filter(|r| r.passed).count(),
                    "modules": modules,
                }),
                failures,
                warnings: Vec::new(),
            })
        }
        Command::Report { common, inputs } => commands::report(ctx, &common.out, inputs),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command = &cli.command;
    let common = command.common();
    let ctx = match resolve(command).and_then(Context::new) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("thread pool: {e}");
            return 2;
        }
    };
    let outcome = match pool.install(|| execute(command, &ctx)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let code = outcome.exit_code(common.strict);
    if let Err(e) = write_artifacts(&common.out, command.name(), &ctx.hash, ctx.cfg.seed, &outcome, code) {
        eprintln!("writing artifacts to {}: {e}", common.out.display());
        return 1;
    }
    for f in &outcome.failures {
        eprintln!("FAIL {f}");
    }
    for w in &outcome.warnings {
        eprintln!("WARN {w}");
    }
    println!(
        "{}: {} failures, {} warnings -> {}",
        command.name(),
        outcome.failures.len(),
        outcome.warnings.len(),
        common.out.display()
    );
    code
}
