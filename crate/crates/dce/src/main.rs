use clap::{Parser, Subcommand};
use dce::cli::{run_compare, run_evolve, run_spectrum, run_sweep, RunArtifacts};
use dce::config::{ExperimentConfig, InitMode, OmegaSpec};
use dce::error::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

/// Photon creation in a SQUID-terminated superconducting cavity.
#[derive(Parser)]
#[command(name = "dce", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Mode cutoff override.
    #[arg(long, global = true)]
    modes: Option<usize>,

    /// Drive strength override.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Drive frequency override, numeric or symbolic (e.g. 2k1, k2-k1).
    #[arg(long, global = true)]
    omega: Option<String>,

    /// Drive window end override.
    #[arg(long, global = true)]
    tf: Option<f64>,

    /// Integration end override.
    #[arg(long, global = true)]
    tmax: Option<f64>,

    /// Integrator step override.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Initial condition: columns | superposition.
    #[arg(long, global = true)]
    init: Option<String>,

    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the static spectrum and write eigenfrequency/gap tables.
    Spectrum,
    /// Integrate the driven modes and write trajectory, particle and fit tables.
    Evolve,
    /// Scan the drive frequency and tabulate created particles.
    Sweep,
    /// Put numeric growth next to the slow-flow prediction.
    Compare,
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = cli.modes {
        cfg.n_modes = m;
    }
    if let Some(a) = cli.alpha {
        cfg.alpha = a;
        cfg.flux = None; // an explicit alpha override wins over a flux triple
    }
    if let Some(o) = &cli.omega {
        cfg.omega = OmegaSpec::parse(o)?;
    }
    if let Some(t) = cli.tf {
        cfg.t_f = t;
    }
    if let Some(t) = cli.tmax {
        cfg.t_max = t;
    }
    if let Some(dt) = cli.dt {
        cfg.dt = Some(dt);
    }
    if let Some(init) = &cli.init {
        cfg.init = init.parse::<InitMode>()?;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<RunArtifacts> {
    let cfg = resolve_config(cli)?;
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        // ignore the error if a pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match cli.command {
        Command::Spectrum => run_spectrum(&cfg, &cli.out),
        Command::Evolve => run_evolve(&cfg, &cli.out),
        Command::Sweep => run_sweep(&cfg, &cli.out),
        Command::Compare => run_compare(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(art) => {
            print!("{}", art.summary);
            for f in &art.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
