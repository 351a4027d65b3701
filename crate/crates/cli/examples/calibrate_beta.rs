//! Calibrates `c_beta` for the tabular preset on the benchmark and writes
//! `calibration/beta.toml`.
//!
//! cargo run --release -p etc-cli --example calibrate_beta

use etc_cli::bench::{calibrate, calibration_path, write_calibration, CALIBRATION_SEEDS, ITERATIONS};
use etc_core::learner::BetaPreset;

fn main() -> anyhow::Result<()> {
    let seeds: Vec<u64> = CALIBRATION_SEEDS.collect();
    let cal = calibrate(BetaPreset::Tabular, ITERATIONS, &seeds, 6)?;
    let path = calibration_path();
    write_calibration(&path, &cal)?;
    println!(
        "c_beta = {} after {} passes over {} seeds; wrote {}",
        cal.c_beta,
        cal.passes,
        seeds.len(),
        path.display()
    );
    Ok(())
}
