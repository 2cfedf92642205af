//! Variance of annular averages shrinking towards the boundary circle.
//!
//! `cargo run --release --example dirichlet_boundary`

use std::sync::Arc;

use gfflab::{DirichletOperator, LatticeDomain, LinearFunctional, TestFunction};

fn main() -> gfflab::Result<()> {
    let op = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 64.0)?)?;
    let dom = Arc::clone(op.domain());
    for (a, b) in [(0.5, 0.7), (0.7, 0.85), (0.85, 0.93), (0.93, 0.97)] {
        let f = LinearFunctional::pairing(&TestFunction::annulus(&dom, a, b)?);
        println!("annulus [{a}, {b}]: Var = {:.5}", f.variance(&op)?);
    }
    Ok(())
}
