//! Check the two-point kernel against a Möbius automorphism of the disk.
//!
//! `cargo run --release --example conformal_invariance`

use std::sync::Arc;

use gfflab::conformal::{invariance_experiment, ConformalMap};
use gfflab::{DirichletOperator, GffSampler, LatticeDomain, Point};

fn main() -> gfflab::Result<()> {
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0)?)?);
    let m = ConformalMap::mobius(Point::new(0.3, 0.0), 0.5)?;
    println!("map: {}", serde_json::to_string(&m)?);
    println!("f(0.3) = {}, f'(0) = {}", m.apply(Point::new(0.3, 0.0))?, m.derivative(Point::new(0.0, 0.0))?);

    let pairs = [
        (Point::new(0.0, 0.0), Point::new(0.5, 0.0)),
        (Point::new(-0.35, 0.0), Point::new(0.05, -0.3)),
    ];
    let mut source = GffSampler::new(Arc::clone(&op), 1);
    let mut target = GffSampler::new(op, 2);
    let rep = invariance_experiment(&mut source, &mut target, &m, &pairs, 0.125, 10_000)?;
    for r in &rep.rows {
        println!("K2({}, {}) = {:.4}   K2({:.3}, {:.3}) = {:.4}   z = {:+.2}", r.z, r.w, r.source, r.fz, r.fw, r.target, r.z_score);
    }
    Ok(())
}
