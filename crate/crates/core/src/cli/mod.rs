//! Command-line front end.

pub mod config;
pub mod emit;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::diagnose;
use crate::error::{Error, Result};
use crate::experiments::{cauchy_in_eps, cauchy_in_h};
use crate::model::{validate, warnings};
use crate::stepper::{kappa, run, Trajectory};

pub use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Run,
    Diagnose,
    CauchyH,
    CauchyEps,
}

#[derive(Debug, Parser)]
#[command(name = "phasefield", version, about = "Nonlocal phase-field solver with estimate diagnostics")]
pub struct Args {
    /// TOML configuration; the built-in default is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Command::Run)]
    pub command: Command,
    /// Recorded in the manifest; runs themselves are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of levels in a study (overrides the config).
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_path: Option<String>,
    pub digest: String,
    pub command: Command,
    pub out_dir: String,
    pub seed: u64,
    pub version: &'static str,
}

/// Hex SHA-256 of the canonical form of `cfg`.
pub fn config_digest(cfg: &Config) -> String {
    Sha256::digest(cfg.canonical().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Violations of the problem hypotheses plus run-level preconditions.
pub fn config_violations(cfg: &Config) -> Result<Vec<String>> {
    let pd = cfg.problem()?;
    let mut out: Vec<String> = validate(&pd)
        .iter()
        .map(|v| format!("{}: {v}", v.subject))
        .collect();
    if cfg.time.steps == 0 {
        out.push("steps: [Time] at least one step is required".into());
    } else if pd.final_time > 0.0 {
        let h = pd.final_time / cfg.time.steps as f64;
        let k = kappa(pd.epsilon, h, pd.ell, pd.nonlin.pi_lip());
        let denom = 1.0 + h - pd.nonlin.pi_lip() * h * h;
        if !(denom > 0.0 && k < 1.0) {
            out.push(format!(
                "steps: [Time] step {h:e} gives contraction factor {k:e}, must be below 1"
            ));
        }
    }
    Ok(out)
}

fn write_manifest(args: &Args, cfg: &Config) -> Result<()> {
    let manifest = RunManifest {
        config_path: args.config.as_ref().map(|p| p.display().to_string()),
        digest: config_digest(cfg),
        command: args.command,
        out_dir: args.out.display().to_string(),
        seed: args.seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    emit::write_json(&args.out, "manifest.json", &manifest)
}

fn emit_trajectory(dir: &Path, traj: &Trajectory<f64>) -> Result<()> {
    emit::write_file(dir, "trajectory.csv", &emit::trajectory_csv(traj))?;
    emit::write_file(dir, "steps.ndjson", &emit::steps_ndjson(traj))
}

fn trajectory_summary(traj: &Trajectory<f64>) -> String {
    let min_theta = traj.states.iter().map(|s| s.theta.min()).fold(f64::INFINITY, f64::min);
    let iters = traj.reports.iter().map(|r| r.fixed_point_iters).max().unwrap_or(0);
    let ratio = traj
        .reports
        .iter()
        .map(|r| r.contraction_ratio_measured)
        .fold(0.0, f64::max);
    format!(
        "steps {}  h {:.6e}  kappa {:.6e}\nmin theta {:.6e}\nmax fixed-point iterations {}\nmax measured contraction ratio {:.6e}\n",
        traj.steps(),
        traj.h,
        traj.reports.first().map_or(0.0, |r| r.kappa_theory),
        min_theta,
        iters,
        ratio
    )
}

fn execute(args: &Args) -> Result<i32> {
    let cfg = match &args.config {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    let violations = config_violations(&cfg)?;
    for v in &violations {
        println!("violation: {v}");
    }
    if args.command == Command::Validate {
        let pd = cfg.problem()?;
        if cfg.time.steps > 0 {
            for w in warnings(&pd, pd.final_time / cfg.time.steps as f64) {
                println!("warning: {w}");
            }
        }
        println!("{} violations", violations.len());
        return Ok(if violations.is_empty() { EXIT_OK } else { EXIT_INVALID });
    }
    if !violations.is_empty() {
        println!("{} violations", violations.len());
        return Ok(EXIT_INVALID);
    }
    let pd = cfg.problem()?;
    let step_cfg = cfg.step_config();
    let dir = &args.out;
    match args.command {
        Command::Validate => unreachable!(),
        Command::Run => {
            let traj = run(&pd, cfg.time.steps, &step_cfg)?;
            emit_trajectory(dir, &traj)?;
            let summary = trajectory_summary(&traj);
            emit::write_file(dir, "summary.txt", &summary)?;
            print!("{summary}");
        }
        Command::Diagnose => {
            let traj = run(&pd, cfg.time.steps, &step_cfg)?;
            emit_trajectory(dir, &traj)?;
            let rep = diagnose(&traj)?;
            emit::write_file(dir, "diagnostics.csv", &emit::diagnostics_csv(&rep))?;
            emit::write_json(dir, "diagnostics.json", &rep)?;
            let summary = format!(
                "{}entropy min {:.6e}\nenergy bound {}\nidentity defect {:.6e}\ninterpolant identities max rel {:.3e}\nestimates {}\n",
                trajectory_summary(&traj),
                rep.entropy_min,
                emit::verdict(rep.energy.holds),
                rep.max_identity_defect,
                rep.identities.max_rel(),
                emit::verdict(rep.passes())
            );
            emit::write_file(dir, "summary.txt", &summary)?;
            print!("{summary}");
        }
        Command::CauchyH => {
            let levels = args.levels.unwrap_or(cfg.study.levels);
            let study = cauchy_in_h(&pd, &cfg.study_steps(levels), &step_cfg)?;
            emit::write_file(dir, "study.csv", &emit::pairs_csv(&study.pairs))?;
            emit::write_json(dir, "study.json", &study)?;
            let summary = emit::step_study_summary(&study);
            emit::write_file(dir, "summary.txt", &summary)?;
            print!("{summary}");
        }
        Command::CauchyEps => {
            let mut eps = cfg.study.epsilons.clone();
            if let Some(k) = args.levels {
                eps.truncate(k);
            }
            let study = cauchy_in_eps(&pd, &eps, &cfg.step_rule(), cfg.study.delta, &step_cfg)?;
            emit::write_file(dir, "study.csv", &emit::pairs_csv(&study.pairs))?;
            emit::write_file(dir, "bounds.csv", &emit::bounds_csv(&study.epsilons, &study.bounds))?;
            emit::write_json(dir, "study.json", &study)?;
            let summary = emit::eps_study_summary(&study);
            emit::write_file(dir, "summary.txt", &summary)?;
            print!("{summary}");
        }
    }
    write_manifest(args, &cfg)?;
    Ok(EXIT_OK)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&args) {
        Ok(code) => code,
        Err(e) if e.is_no_convergence() => {
            match e.step_index() {
                Some(n) => eprintln!("no convergence at step {n}: {e}"),
                None => eprintln!("no convergence: {e}"),
            }
            EXIT_NO_CONVERGENCE
        }
        Err(e @ Error::InvalidInput(_)) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
