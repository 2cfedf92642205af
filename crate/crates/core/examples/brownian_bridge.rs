//! Sample bridges, map them to Brownian motion and back, and run a small harness suite.
//!
//! `cargo run --release --example brownian_bridge`

use gfflab::bridge1d::{
    bb_transform, markov_1d_decompose, run_bridge_suite, sample_bridge, uniform_grid, w_transform, BrownianBridge,
    PoissonJitteredBridge, SuiteConfig,
};

fn main() -> gfflab::Result<()> {
    let grid = uniform_grid(0.0, 1.0, 1024);
    let x = sample_bridge([0.0, 1.0], &grid, 1.0, 9)?;
    let w = w_transform(&x)?;
    println!("W on [0, {:.0}] with {} points, QV(T) = {:.3}", w.horizon(), w.grid.len(), w.quadratic_variation().last().unwrap());
    let back = bb_transform(&w)?;
    let err = back.values.iter().zip(&x.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("round trip error {err:.1e}");
    let (_, residual) = markov_1d_decompose(&x, [0.25, 0.75])?;
    println!("Markov residual on [1/4, 3/4] at 1/2: {:.4}", residual.at(0.5)?);

    let cfg = SuiteConfig { n_paths: 10_000, scaling_samples: 10_000, ..SuiteConfig::default() };
    for rep in [run_bridge_suite(&BrownianBridge { sigma: 1.0 }, &cfg)?, run_bridge_suite(&PoissonJitteredBridge::default(), &cfg)?] {
        println!("{}: sigma^2 = {:.4}", rep.process, rep.sigma2_hat);
        for c in &rep.checks {
            println!("  {} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(())
}
