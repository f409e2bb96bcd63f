use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use remote_entangle::harness::{self, RunConfig};
use remote_entangle::sme::Model;
use remote_entangle::{Error, Result};

#[derive(Parser)]
#[command(name = "rement", version, about = "Remote entanglement by joint heterodyne measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: dissimilar, ideal, realistic, zero_drive.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model: reduced or full.
    #[arg(long)]
    model: Option<Model>,
}

#[derive(Subcommand)]
enum Command {
    /// Amplifier gain spectrum.
    Gain(Common),
    /// Cavity amplitudes and the balanced drive.
    Cavity(Common),
    /// One conditioned trajectory with its filter.
    Trajectory {
        #[command(flatten)]
        common: Common,
        /// Trajectory index within the seeded ensemble.
        #[arg(long, default_value_t = 0)]
        traj: u64,
    },
    /// Ensemble statistics.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Number of trajectories (overrides the configuration).
        #[arg(long)]
        traj: Option<usize>,
    },
    /// Heralded concurrence along the configured sweep axis.
    Sweep(Common),
    /// Filter a recorded `t_us,dI_r,dQ_r` file.
    Filter {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        record: PathBuf,
    },
    /// Most probable record to the entangled state with a given Q_m.
    Mostprobable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        q_target: f64,
    },
    /// Unconditioned full qubit-cavity model against the reduced model.
    Fullsme(Common),
}

fn load(c: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(p), _) => RunConfig::from_path(p)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => return Err(Error::config("--config", "give --config FILE or --preset NAME")),
    };
    if let Some(s) = c.seed {
        cfg.ensemble.base_seed = s;
    }
    if let Some(m) = c.model {
        cfg.simulation.model = m;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    Ok((cfg, out))
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gain(c) => {
            let (cfg, out) = load(&c)?;
            println!("{}", harness::run_gain(&cfg, &out)?.display());
        }
        Command::Cavity(c) => {
            let (cfg, out) = load(&c)?;
            println!("{}", harness::run_cavity(&cfg, &out)?.display());
        }
        Command::Trajectory { common, traj } => {
            let (cfg, out) = load(&common)?;
            print_json(&harness::run_trajectory(&cfg, traj, &out)?)?;
        }
        Command::Ensemble { common, traj } => {
            let (cfg, out) = load(&common)?;
            print_json(&harness::run_ensemble(&cfg, traj, &out)?)?;
        }
        Command::Sweep(c) => {
            let (cfg, out) = load(&c)?;
            let pts = harness::run_sweep(&cfg, &out)?;
            println!("{} points written to {}", pts.len(), out.join("sweep.csv").display());
        }
        Command::Filter { common, record } => {
            let (cfg, out) = load(&common)?;
            print_json(&harness::run_filter(&cfg, &record, &out)?)?;
        }
        Command::Mostprobable { common, q_target } => {
            let (cfg, out) = load(&common)?;
            print_json(&harness::run_mostprobable(&cfg, q_target, &out)?)?;
        }
        Command::Fullsme(c) => {
            let (mut cfg, out) = load(&c)?;
            cfg.simulation.model = Model::Full;
            print_json(&harness::run_fullsme(&cfg, &out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
