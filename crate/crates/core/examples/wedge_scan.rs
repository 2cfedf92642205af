//! Fourth moment of the harmonic wedge average as the point approaches the boundary.
//!
//! `cargo run --release --example wedge_scan`

use std::sync::Arc;

use gfflab::kernels::wedge_moment_scan;
use gfflab::{DirichletOperator, GffSampler, LatticeDomain};

fn main() -> gfflab::Result<()> {
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 64.0)?)?);
    let mut sampler = GffSampler::new(op, 5);
    let angles = [std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4];
    let scan = wedge_moment_scan(&mut sampler, &[0.125, 0.0625, 0.03125], &angles, 5_000)?;
    for r in &scan.rows {
        println!("a = {:.4} eps = {:.4}: E[X^4] = {:.3e} ± {:.1e}", r.half_angle, r.eps, r.fourth_moment, r.se);
    }
    for f in &scan.fits {
        println!("a = {:.4}: eps-exponent {:.3} (Gaussian {:.3})", f.half_angle, f.exponent, f.gaussian_exponent);
    }
    Ok(())
}
