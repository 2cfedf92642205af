//! Split a field sample into its zero-boundary and harmonic parts on a ball.
//!
//! `cargo run --release --example markov_decomposition`

use std::sync::Arc;

use gfflab::markov::MarkovDecomposer;
use gfflab::{DirichletOperator, GffSampler, LatticeDomain, Point};

fn main() -> gfflab::Result<()> {
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0)?)?);
    let sub = op.domain().subdomain_ball(Point::new(0.1, -0.1), 0.5)?;
    let dec = MarkovDecomposer::new(op.domain(), &sub)?;
    let sampler = GffSampler::new(op, 7);
    for k in 0..3 {
        let h = sampler.sample_at(k);
        let d = dec.decompose(&h)?;
        println!(
            "sample {k}: reassembly {:.1e}, harmonic residual {:.1e}, leakage {:.1e}, uniqueness gap {:.1e}",
            d.reassembly_error(&h),
            dec.harmonic_residual(&d, &h)?,
            d.leakage(),
            dec.uniqueness_discrepancy(&h)?
        );
    }
    Ok(())
}
