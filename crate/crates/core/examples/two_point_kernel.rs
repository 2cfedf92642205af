//! Estimate the two-point kernel of circle averages and fit it to the Green's function.
//!
//! `cargo run --release --example two_point_kernel`

use std::sync::Arc;

use gfflab::kernels::{estimate_k2, fit_coupling, greens_for};
use gfflab::{DirichletOperator, GffSampler, LatticeDomain, Point, PointSet};

fn main() -> gfflab::Result<()> {
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0)?)?);
    let points = [(0.0, 0.0), (0.15, 0.0), (-0.2, 0.25), (0.6, -0.45), (-0.7, -0.3)].map(|(x, y)| Point::new(x, y));
    let pts = PointSet::new(op.domain(), &points)?;
    let mut sampler = GffSampler::new(Arc::clone(&op), 3);
    let est = estimate_k2(&mut sampler, &pts, 1.0 / 16.0, 10_000)?;
    let greens = greens_for(&op, &est)?;
    for ((t, m), g) in est.tuples.iter().zip(&est.mean).zip(&greens) {
        println!("K2({}, {}) = {m:.4}   G = {g:.4}", points[t[0]], points[t[1]]);
    }
    let fit = fit_coupling(&est, &greens)?;
    println!("a = {:.4} ± {:.4}, r2 = {:.4}", fit.a_hat, fit.a_se, fit.r2);
    Ok(())
}
