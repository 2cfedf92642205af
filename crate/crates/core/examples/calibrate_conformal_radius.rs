//! Refit the constants that turn the lattice Green's function diagonal into a
//! conformal radius, and rewrite `calibration/conformal_radius.toml`.
//!
//! Run with `cargo run --release --example calibrate_conformal_radius`.

use gfflab::laplace::{radius_benchmark, RadiusCalibration};

const RESOLUTIONS: [u32; 4] = [16, 32, 64, 128];

fn main() -> gfflab::Result<()> {
    let bench = radius_benchmark(&RESOLUTIONS)?;
    for (r, g) in &bench {
        println!("radius/mesh = {r:>4}   G(0,0) = {g:.12}");
    }
    let cal = RadiusCalibration::fit(&bench);
    println!("scale = {:.17e}\noffset = {:.17e}", cal.scale, cal.offset);

    let text = format!(
        "# Maps the lattice Green's function diagonal to a conformal radius:\n\
         #   R(z, D) = mesh_delta * exp(G(z, z) / scale - offset)\n\
         # Fitted on centred unit disks with radius/mesh in {{16, 32, 64, 128}}.\n\
         # Regenerate with: cargo run --release --example calibrate_conformal_radius\n\
         \n\
         [conformal_radius]\n\
         scale = {:?}\n\
         offset = {:?}\n",
        cal.scale, cal.offset
    );
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/calibration/conformal_radius.toml");
    std::fs::write(path, text)?;
    println!("wrote {path}");
    Ok(())
}
