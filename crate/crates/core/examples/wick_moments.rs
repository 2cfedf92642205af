//! Compare fourth moments of circle averages with the pairing sum of second moments.
//!
//! `cargo run --release --example wick_moments`

use std::sync::Arc;

use gfflab::kernels::{l4_bound, wick_check};
use gfflab::{DirichletOperator, GffSampler, LatticeDomain, Point, PointSet};

fn main() -> gfflab::Result<()> {
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0)?)?);
    let mut sampler = GffSampler::new(Arc::clone(&op), 11);
    let configs = [
        [(0.3, 0.0), (-0.3, 0.0), (0.0, 0.3), (0.0, -0.3)],
        [(-0.5, 0.0), (-0.2, 0.0), (0.2, 0.0), (0.5, 0.0)],
    ];
    for c in configs {
        let pts = PointSet::new(op.domain(), &c.map(|(x, y)| Point::new(x, y)))?;
        let w = wick_check(&mut sampler, &pts, 1.0 / 16.0, 20_000)?;
        println!(
            "K4 = {:.5} ± {:.5}, pairings = {:.5}, z = {:+.2}, l4 = {:.3}",
            w.k4,
            w.k4_se,
            w.predicted,
            w.z(),
            l4_bound(&op, &pts)?.value
        );
    }
    Ok(())
}
