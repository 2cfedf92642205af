//! Green's function, harmonic extension and conformal radius on a disk.
//!
//! `cargo run --release --example green_function`

use gfflab::{BoundaryData, DirichletOperator, GridPoint, LatticeDomain};

fn main() -> gfflab::Result<()> {
    let op = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0)?)?;
    let o = GridPoint::new(0, 0);
    println!("G(0,0) = {:.6}", op.green(o, o)?);
    for k in [4, 8, 16, 24] {
        println!("G(0, {:.3}) = {:.6}", k as f64 / 32.0, op.green(o, GridPoint::new(k, 0))?);
    }
    println!("conformal radius at 0: {:.4}", op.conformal_radius(o)?);
    println!("conformal radius at 0.5: {:.4}", op.conformal_radius(GridPoint::new(16, 0))?);

    let bd = BoundaryData::from_fn(op.domain(), |z| z.re * z.re - z.im * z.im)?;
    let u = op.harmonic_extension(&bd)?;
    println!("harmonic extension of x^2 - y^2: mean-value residual {:.2e}", op.mean_value_residual(&u, &bd));
    println!("u(0.25, 0.25) = {:.6}", u.at(GridPoint::new(8, 8)));

    let row = op.harmonic_measure_row(o)?;
    println!("harmonic measure from 0 sums to {:.12}", row.values().iter().sum::<f64>());
    Ok(())
}
