use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ddreach::experiment::{
    fmt_float, run_audit_nmz, run_bounds, run_reach, simulate, ExperimentConfig, TrajectoryFile,
};
use ddreach::reach::Method;

/// Data-driven reachability experiments with MZ, CMZ and NMZ model sets.
#[derive(Parser)]
#[command(name = "ddreach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate trajectories of the configured system and write them as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trajectory file to write [default: <out>/trajectories.json]
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Identify model sets and propagate them; writes hulls.csv,
    /// timings.json and containment.json.
    Reach {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: DataArg,
        /// Comma-separated subset of mz, cmz, nmz
        #[arg(long, default_value = "mz,cmz,nmz", value_delimiter = ',')]
        methods: Vec<Method>,
    },
    /// Subspace perturbation bounds over the configured data scales;
    /// writes bounds.csv.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: DataArg,
    },
    /// Nullity check and coefficient-space data of the NMZ; writes audit.json.
    AuditNmz {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: DataArg,
        /// Coefficient samples drawn from the constrained coefficient set
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: outputs.directory of the config]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides data.seed of the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DataArg {
    /// Trajectory file; simulated from the config when absent
    #[arg(long)]
    data: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.data.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.outputs.directory.clone());
        Ok((cfg, out))
    }
}

fn trajectories(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<TrajectoryFile> {
    match data {
        Some(p) => {
            let file = TrajectoryFile::load(p).with_context(|| format!("loading trajectories {}", p.display()))?;
            file.validate()?;
            let n = cfg.system.n;
            let m = cfg.system.m;
            for (i, t) in file.trajectories.iter().enumerate() {
                if t.states.iter().any(|x| x.len() != n) || t.inputs.iter().any(|u| u.len() != m) {
                    bail!("trajectory {i} does not match the config dimensions n = {n}, m = {m}");
                }
            }
            Ok(file)
        }
        None => Ok(simulate(cfg)?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, data } => {
            let (cfg, out) = common.load()?;
            let file = simulate(&cfg)?;
            let path = data.unwrap_or_else(|| out.join("trajectories.json"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            file.save(&path)?;
            let samples: usize = file.trajectories.iter().map(|t| t.inputs.len()).sum();
            println!("wrote {} trajectories ({samples} samples) to {}", file.trajectories.len(), path.display());
        }
        Command::Reach { common, input, methods } => {
            let (cfg, out) = common.load()?;
            if methods.is_empty() {
                bail!("--methods must name at least one of mz, cmz, nmz");
            }
            let file = trajectories(&cfg, input.data.as_deref())?;
            let outcome = run_reach(&cfg, &file, &methods, Some(&out))?;
            println!("method  propagation_s  setup_s  final_hull_volume");
            for (t, r) in outcome.timings.iter().zip(&outcome.results) {
                let vol = match r.sets.last() {
                    Some(s) => s.interval_hull()?.volume(),
                    None => 0.0,
                };
                println!("{:<6}  {:>13.4e}  {:>7.3}  {}", t.method.as_str(), t.total_seconds, t.setup_seconds, fmt_float(vol));
            }
            if let Some(audit) = &outcome.audit {
                // sampled trajectories only; no exact reachable set is computed
                println!("Monte-Carlo audit over {} trajectories:", audit.num_trajectories);
                for m in &audit.methods {
                    let worst = m.steps.iter().map(|s| s.fraction).fold(1.0, f64::min);
                    println!("  {:<4} minimum containment fraction {worst}", m.method.as_str());
                }
            }
            println!("artifacts in {}", out.display());
        }
        Command::Bounds { common, input } => {
            let (cfg, out) = common.load()?;
            let file = trajectories(&cfg, input.data.as_deref())?;
            let rows = run_bounds(&cfg, &file, Some(&out))?;
            println!("scale  mz_bound  cmz_bound  nmz_bound");
            for r in &rows {
                println!("{:<5}  {:.6}  {:.6}  {:.6}", r.scale, r.mz_bound, r.cmz_bound, r.nmz_bound);
            }
            println!("wrote {}", out.join("bounds.csv").display());
        }
        Command::AuditNmz { common, input, samples } => {
            let (cfg, out) = common.load()?;
            let file = trajectories(&cfg, input.data.as_deref())?;
            let r = run_audit_nmz(&cfg, &file, samples, Some(&out))?;
            let s = &r.structure;
            println!("nullity: numeric {} predicted {}", s.numeric_nullity, s.predicted_nullity);
            println!("rank:    numeric {} predicted {}", s.numeric_rank, s.predicted_rank);
            println!("generators: CMZ {} NMZ {}", r.cmz_generators, r.nmz_generators);
            println!("samples in coefficient zonotope: {}/{}", r.samples_in_coefficient_zonotope, r.samples_checked);
            println!("wrote {}", out.join("audit.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
