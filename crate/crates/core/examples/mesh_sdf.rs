//! Builds primitive meshes, checks they are watertight, queries signed
//! distances, and draws the near-surface training samples for one of them.
//!
//! cargo run --release --example mesh_sdf

use shapeopt::geometry::{
    center_and_normalize, export_mesh, mesh_volume, sample_sdf, shapes, signed_distance, validate_watertight,
    SdfSampling, Vec3,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("shapeopt-examples");
    std::fs::create_dir_all(&out)?;

    let meshes = [
        ("sphere", shapes::icosphere(0.7, 3)),
        ("box", shapes::box_mesh(Vec3::new(0.6, 0.4, 0.3))),
        ("torus", shapes::torus(0.5, 0.2, 48, 24)),
        ("capsule", shapes::capsule(0.3, 0.4, 32, 8)),
    ];
    for (name, mesh) in &meshes {
        let report = validate_watertight(mesh);
        let unit = center_and_normalize(mesh, 0.9)?;
        println!(
            "{name:8} {:5} faces  watertight {}  volume {:.4}  (normalized {:.4})",
            mesh.faces().len(),
            report.is_watertight,
            mesh_volume(mesh),
            mesh_volume(&unit)
        );
        export_mesh(&unit, out.join(format!("{name}.obj")))?;
    }

    let sphere = &meshes[0].1;
    for p in [Vec3::zeros(), Vec3::new(0.7, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)] {
        println!("sphere sdf at {:?} = {:+.4}", p.as_slice(), signed_distance(sphere, &p)?);
    }

    let samples = sample_sdf(sphere, "sphere", 15_000, &SdfSampling::default(), 7)?;
    let inside = samples.distances.iter().filter(|d| **d < 0.0).count();
    let near = samples.distances.iter().filter(|d| d.abs() < 0.05).count();
    println!(
        "{} samples: {inside} inside, {near} within 0.05 of the surface; meshes written to {}",
        samples.len(),
        out.display()
    );
    Ok(())
}
