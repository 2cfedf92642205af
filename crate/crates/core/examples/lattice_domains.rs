//! Build lattice domains and inspect their vertex sets.
//!
//! `cargo run --example lattice_domains`

use gfflab::{LatticeDomain, Point};

fn main() -> gfflab::Result<()> {
    let disk = LatticeDomain::disk(1.0, 1.0 / 16.0)?;
    println!("unit disk, mesh 1/16: {} interior, {} boundary", disk.n_interior(), disk.n_boundary());
    println!("  hash {}", disk.hash());
    println!("  connected {}, simply connected {}", disk.is_connected(), disk.is_simply_connected());

    let square = LatticeDomain::square(1.0, 1.0 / 16.0)?;
    println!("unit square: {} interior vertices", square.n_interior());

    let wedge = LatticeDomain::wedge(std::f64::consts::FRAC_PI_4, 1.0 / 32.0)?;
    println!("wedge of half-angle pi/4: {} interior vertices", wedge.n_interior());

    let ball = disk.subdomain_ball(Point::new(0.25, 0.0), 0.5)?;
    println!("ball of radius 0.5 at 0.25: {} vertices, inside the disk: {}", ball.n_interior(), ball.is_subdomain_of(&disk));

    let spec = disk.spec().to_json()?;
    println!("spec {spec}");
    let again = gfflab::DomainSpec::from_json(&spec)?.build()?;
    assert_eq!(again.hash(), disk.hash());
    Ok(())
}
