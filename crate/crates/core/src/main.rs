use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use qhbound::config::parse_config;
use qhbound::output::config_hash;
use qhbound::pipeline::{run, Command, Overrides};
use qhbound::selftest::run_selftest;
use qhbound::Error;

#[derive(Parser)]
#[command(name = "qhbound", version, about = "Multichannel Rydberg spectra, their metric, and wavepacket dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Energies, null vectors and channel amplitudes
    Spectrum(RunArgs),
    /// Gram matrix of the eigenstates and its factorization summary
    Metric(RunArgs),
    /// Largest off-diagonal metric entries, sorted
    Fig1(RunArgs),
    /// Autocorrelation and norm of a Gaussian wavepacket, with and without the metric
    Evolve(RunArgs),
    /// Checks against the hydrogen and hard-wall spectra
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Number of largest off-diagonal entries averaged into kappa
    #[arg(long)]
    kappa_n: Option<usize>,
    #[arg(long)]
    max_states: Option<usize>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("QHBOUND_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("QHBOUND_THREADS must be a positive integer, got {value:?}"))?;
    if threads == 0 {
        return Err("QHBOUND_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(command: Command, args: &RunArgs) -> Result<(), Error> {
    let bytes = std::fs::read(&args.config).map_err(|source| Error::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let mut hashed = bytes.clone();
    // overrides change the outputs, so they are part of the provenance
    if let Some(n) = args.kappa_n {
        hashed.extend_from_slice(format!("\n--kappa-n={n}").as_bytes());
    }
    if let Some(n) = args.max_states {
        hashed.extend_from_slice(format!("\n--max-states={n}").as_bytes());
    }
    let cfg = parse_config(&args.config)?;
    let overrides = Overrides {
        kappa_n: args.kappa_n,
        max_states: args.max_states,
    };
    let out = run(command, &cfg, overrides, &config_hash(&hashed))?;
    out.write(&args.out_dir)?;
    for (name, _) in &out.files {
        println!("{}", args.out_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let (command, args) = match &cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Metric(a) => (Command::Metric, a),
        Cmd::Fig1(a) => (Command::Fig1, a),
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{c}");
            }
            return if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            };
        }
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
