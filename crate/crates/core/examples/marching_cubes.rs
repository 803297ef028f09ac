//! Contours analytic signed distance fields with marching cubes and compares
//! the enclosed volume with the exact one as the lattice is refined.
//!
//! cargo run --release --example marching_cubes

use std::f64::consts::PI;

use shapeopt::geometry::{marching_cubes, mesh_volume, shapes, validate_watertight, ScalarGrid, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let half = Vec3::new(0.5, 0.4, 0.3);
    let fields: [(&str, Box<dyn Fn(&Vec3) -> f64>, f64); 3] = [
        ("sphere", Box::new(|p| shapes::sphere_sdf(p, 0.6)), 4.0 / 3.0 * PI * 0.216),
        ("box", Box::new(move |p| shapes::box_sdf(p, &half)), 8.0 * 0.5 * 0.4 * 0.3),
        ("torus", Box::new(|p| shapes::torus_sdf(p, 0.5, 0.2)), 2.0 * PI * PI * 0.5 * 0.04),
    ];
    println!("{:8} {:>5} {:>8} {:>10} {:>9}", "field", "res", "faces", "watertight", "vol err");
    for (name, sdf, exact) in &fields {
        for resolution in [8, 16, 32, 64, 128] {
            let grid = ScalarGrid::sample_unit_domain(resolution, sdf)?;
            let mesh = marching_cubes(&grid, 0.0)?;
            let err = (mesh_volume(&mesh) - exact) / exact;
            println!(
                "{name:8} {resolution:>5} {:>8} {:>10} {:>8.3}%",
                mesh.faces().len(),
                validate_watertight(&mesh).is_watertight,
                100.0 * err
            );
        }
    }
    Ok(())
}
