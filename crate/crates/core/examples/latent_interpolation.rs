//! Walks the straight line between two trained codes and extracts a mesh at
//! each of 11 evenly spaced points.
//!
//! Reads the checkpoint written by the `train_autodecoder` example, or the
//! path given as the first argument.
//!
//! cargo run --release --example latent_interpolation [checkpoint.json]

use std::path::PathBuf;

use shapeopt::geometry::{export_mesh, mesh_volume, validate_watertight};
use shapeopt::latent::interpolate;
use shapeopt::metrics::{chamfer_distance, sample_surface};
use shapeopt::training::{load_checkpoint, reconstruct};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("shapeopt-examples");
    let path = std::env::args().nth(1).map_or_else(|| out.join("decoder.json"), PathBuf::from);
    let checkpoint = load_checkpoint(&path).map_err(|e| format!("{e} (run the train_autodecoder example first)"))?;
    let params = checkpoint.decoder()?;
    let bank = checkpoint.latent_bank()?;
    let (a, b) = (&bank.codes()[0], &bank.codes()[1]);
    println!("interpolating {} -> {}", bank.ids()[0], bank.ids()[1]);

    let mut previous = None;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let z = interpolate(a, b, t)?;
        let mesh = reconstruct(&params, &z, 64)?;
        let cloud = sample_surface(&mesh, 5000, i, "step")?;
        let step = previous.as_ref().map_or(0.0, |p| chamfer_distance(p, &cloud));
        println!(
            "t = {t:.1}  volume {:.4}  watertight {}  chamfer to previous {step:.2}",
            mesh_volume(&mesh),
            validate_watertight(&mesh).is_watertight
        );
        export_mesh(&mesh, out.join(format!("interpolant_{i:02}.obj")))?;
        previous = Some(cloud);
    }
    Ok(())
}
