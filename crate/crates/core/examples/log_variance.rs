//! Exact circle-average variance at the disk centre against log(1/eps).
//!
//! `cargo run --release --example log_variance`

use std::sync::Arc;

use gfflab::sampler::circle_average_functional;
use gfflab::{stats, DirichletOperator, LatticeDomain, Point};

fn main() -> gfflab::Result<()> {
    let op = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 64.0)?)?;
    let dom = Arc::clone(op.domain());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 2..=5 {
        let eps = 2f64.powi(-k);
        let v = circle_average_functional(&dom, Point::new(0.0, 0.0), eps)?.variance(&op)?;
        println!("eps = 1/{:<3} Var = {v:.5}", 1 << k);
        xs.push(-eps.ln());
        ys.push(v);
    }
    let (slope, intercept) = stats::linear_fit(&xs, &ys);
    println!("Var ≈ {slope:.5}·log(1/eps) + {intercept:.5}  (1/2pi = {:.5})", 0.5 / std::f64::consts::PI);
    Ok(())
}
