//! Runs a catalog experiment with a couple of overrides and prints its summary.
//!
//! `cargo run --release --example run_experiment -- hardy-inequality`

use hml::experiments::{run, summary, ExperimentConfig};

fn main() -> hml::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "morrey-scaling".into());
    let out = std::env::temp_dir().join(format!("hml-{name}"));
    let mut cfg = ExperimentConfig::default_for(&name)?.with_output(&out);
    cfg.seed += 1;
    let bundle = run(&cfg)?;
    print!("{}", summary(&bundle));
    println!("{} cases written to {}", bundle.cases.len(), out.display());
    Ok(())
}
