//! Drive a full coupled run from a config file and print its report.
//!
//! `cargo run --release --example coupled_run -- configs/shear.toml`

use fene::diagnostics::{build_report, run_scenario, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1);
    let mut cfg = match &path {
        Some(p) => RunConfig::load(std::path::Path::new(p))?,
        None => RunConfig::default(),
    };
    if path.is_none() {
        cfg.time.horizon_t = 0.1;
        cfg.run.output = std::env::temp_dir().join("fene-coupled-run");
    }
    let summary = run_scenario(&cfg, None)?;
    if let Some(e) = &summary.error {
        eprintln!("run stopped: {e}");
    }
    println!("{}", build_report(&summary.output)?);
    Ok(())
}
