//! Run a configured experiment from a TOML string and print its report.
//!
//! `cargo run --release --example run_experiment`

use gfflab::experiment::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
experiment = "boundary"
seed = 7
samples = 2000
mesh = 0.03125
"#;

fn main() -> gfflab::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?.resolve()?;
    let out = run_experiment(&cfg)?;
    print!("{}", out.report.to_json()?);
    print!("{}", out.data.to_csv());
    Ok(())
}
