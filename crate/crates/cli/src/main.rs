//! Batch front end for chain analysis, ergodicity certification, and
//! MCMC simulation.
//!
//! Every run prints one machine-readable report (JSON, or CSV for time
//! series) whose `config_echo` block reproduces the effective
//! parameters; `replay --config` re-runs it. Output depends only on the
//! command line, never on the worker-thread count: `MCMCLAB_THREADS`
//! caps the rayon pool (0 or unset picks the automatic size) without
//! entering any report.
//!
//! Exit codes: 0 success, 2 bad input or parameters, 3 certificate
//! refused by verification, 4 empty minorization, 5 numerical failure.

mod commands;
mod io;
mod presets;

use clap::error::ErrorKind;
use clap::Parser;
use mcmclab_core::Error;

#[derive(Parser)]
#[command(name = "mcmclab", version, about = "Markov chain analysis, certification, and sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Structural and spectral analysis of a finite chain
    Analyze(commands::AnalyzeArgs),
    /// Geometric-ergodicity certificate with explicit constants
    Certify(commands::CertifyArgs),
    /// Ising circle simulation: Glauber, Metropolis, or Kawasaki
    Ising(commands::IsingArgs),
    /// Ehrenfest urn simulation against its binomial invariant law
    Ehrenfest(commands::EhrenfestArgs),
    /// AR(1) closed forms, contraction constants, simulation, and grid
    Ar1(commands::Ar1Args),
    /// Hit-or-miss volume estimation in the unit cube
    McVolume(commands::McVolumeArgs),
    /// Bigram text chain: fit a corpus, generate symbols
    Textgen(commands::TextgenArgs),
    /// Re-run a command from an echoed config
    Replay(commands::ReplayArgs),
}

fn init_threads() {
    if let Ok(raw) = std::env::var("MCMCLAB_THREADS") {
        if let Ok(k) = raw.trim().parse::<usize>() {
            if k > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CertificateInvalid(_) | Error::NoValidDrift { .. } => 3,
        Error::AlphaZero => 4,
        Error::EigensolverFailure
        | Error::NonDiagonalizable { .. }
        | Error::SingularSystem
        | Error::SeriesDiverges { .. } => 5,
        _ => 2,
    }
}

fn emit_error(err: &Error) {
    let mut doc = serde_json::Map::new();
    doc.insert("error".into(), serde_json::Value::String(err.to_string()));
    if matches!(err, Error::AlphaZero) {
        doc.insert("hint".into(), serde_json::Value::String("increase --T".into()));
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
        .expect("error document serializes");
    println!("{text}");
}

fn run(command: &Command) -> mcmclab_core::Result<()> {
    match command {
        Command::Analyze(args) => commands::analyze(args),
        Command::Certify(args) => commands::certify(args),
        Command::Ising(args) => commands::ising(args),
        Command::Ehrenfest(args) => commands::ehrenfest(args),
        Command::Ar1(args) => commands::ar1(args),
        Command::McVolume(args) => commands::mc_volume_cmd(args),
        Command::Textgen(args) => commands::textgen(args),
        Command::Replay(args) => commands::replay(args),
    }
}

fn main() {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            emit_error(&Error::ParameterOutOfRange(e.to_string()));
            std::process::exit(2);
        }
    };
    if let Err(err) = run(&cli.command) {
        emit_error(&err);
        std::process::exit(exit_code(&err));
    }
}
