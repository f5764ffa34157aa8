//! Runs a TOML scenario through the library runner.
//!
//! cargo run --example run_config -- configs/pet.toml

use std::path::PathBuf;

fn main() -> ergolab::error::Result<()> {
    let path: PathBuf = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/seminorm.toml").into()).into();
    let cfg = ergolab::runner::validate(&path)?;
    let out = std::env::temp_dir().join("ergolab-example").join(&cfg.run.name);
    let report = ergolab::runner::run(&cfg, &out)?;
    for c in &report.checks {
        println!("{} {} (value {:e}, tolerance {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("exit code {}, artifacts in {}", report.exit_code(), out.display());
    Ok(())
}
