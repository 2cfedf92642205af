//! Draw exact field samples, save one to disk and read it back.
//!
//! `cargo run --release --example sample_field`

use std::sync::Arc;

use gfflab::io::{load_field, save_field};
use gfflab::sampler::circle_average;
use gfflab::stats;
use gfflab::{DirichletOperator, GffSampler, GridPoint, LatticeDomain, LinearFunctional, Point};

fn main() -> gfflab::Result<()> {
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0)?)?);
    let mut sampler = GffSampler::new(Arc::clone(&op), 42);

    let h = sampler.sample();
    println!("h(0) = {:.4}, max |h| = {:.4}", h.at(GridPoint::new(0, 0)), h.max_abs());
    println!("circle average at 0, radius 1/4: {:.4}", circle_average(&h, Point::new(0.0, 0.0), 0.25)?);

    let dir = std::env::temp_dir().join("gfflab_sample_field");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("h.bin");
    save_field(&path, &h, Some(sampler.seed()), Some(0))?;
    let (header, back) = load_field(&path, op.domain())?;
    println!("reloaded {} values, seed {:?}, identical {}", header.length, header.seed, back.values() == h.values());

    // projected functionals skip forming the full field
    let f = LinearFunctional::point(op.domain(), GridPoint::new(0, 0))?;
    let col = &sampler.functionals(&[f], 20_000)?[0];
    let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
    let (m, se) = stats::mean_se(&sq, stats::BLOCK)?;
    println!("Var h(0): {m:.5} ± {se:.5}, exact {:.5}", op.green(GridPoint::new(0, 0), GridPoint::new(0, 0))?);
    Ok(())
}
