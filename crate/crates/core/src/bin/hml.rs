use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hml::atoms::{verify_atom, Atom};
use hml::experiments::{describe, list, run, summary, ExperimentConfig};

/// Morrey, Hardy-Morrey and local Hardy-Morrey experiments.
///
/// HML_THREADS caps the worker threads.
#[derive(Parser)]
#[command(name = "hml", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiments.
    List,
    /// Show an experiment's claim, options, tolerances and default config.
    Describe { name: String },
    /// Check a saved atom (JSON) for support, size and moment conditions.
    VerifyAtom { file: PathBuf },
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HML_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("HML_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("HML_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

// a closed pipe (e.g. `hml list | head`) is not an error
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::List => {
            emit(&list());
            ExitCode::SUCCESS
        }
        Command::Describe { name } => match describe(&name) {
            Ok(text) => {
                emit(&text);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, out } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let cfg = match out {
                Some(dir) => cfg.with_output(dir),
                None => cfg,
            };
            match run(&cfg) {
                Ok(bundle) => {
                    emit(&summary(&bundle));
                    emit(&format!("results in {}\n", cfg.output.dir.display()));
                    if bundle.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::VerifyAtom { file } => {
            let atom = match Atom::load(&file) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let cert = verify_atom(&atom);
            match serde_json::to_string_pretty(&cert) {
                Ok(s) => emit(&format!("{s}\n")),
                Err(e) => eprintln!("error: {e}"),
            }
            if cert.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
