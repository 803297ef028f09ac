//! Trains the auto-decoder on a sphere and a box with one latent dimension,
//! saves a checkpoint, and measures how well each code reconstructs its shape.
//!
//! cargo run --release --example train_autodecoder [epochs]

use shapeopt::geometry::{export_mesh, sample_sdf, SdfSampling};
use shapeopt::metrics::{chamfer_distance, coverage, sample_surface};
use shapeopt::neural::{Architecture, EncodingConfig};
use shapeopt::pipeline::{generate_procedural_dataset, ProceduralSpec, ShapeFamily};
use shapeopt::training::{reconstruct, save_checkpoint, TrainConfig, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map_or(Ok(2000), |a| a.parse())?;
    let out = std::env::temp_dir().join("shapeopt-examples");
    std::fs::create_dir_all(&out)?;

    let meshes = generate_procedural_dataset(
        &[ProceduralSpec::new(ShapeFamily::Sphere, 1), ProceduralSpec::new(ShapeFamily::Box, 1)],
        0,
    )?;
    let sets = meshes
        .iter()
        .enumerate()
        .map(|(i, m)| sample_sdf(&m.mesh, &m.id, 15_000, &SdfSampling::default(), i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let arch = Architecture {
        hidden: vec![64; 4],
        encoding: EncodingConfig {
            levels: 5,
            include_input: true,
        },
        latent_dim: 1,
    };
    let cfg = TrainConfig {
        epochs,
        batch_size: 1024,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(sets, &arch, cfg)?;
    while trainer.epoch() < epochs {
        let loss = trainer.step()?;
        if trainer.epoch() % 250 == 0 || trainer.epoch() == epochs {
            println!(
                "epoch {:5}  clip {:.5}  latent {:.2e}  total {:.5}",
                trainer.epoch(),
                loss.clip,
                loss.latent,
                loss.total
            );
        }
    }
    let checkpoint = trainer.checkpoint();
    let path = out.join("decoder.json");
    save_checkpoint(&checkpoint, &path)?;
    println!("checkpoint written to {}", path.display());

    let outcome = trainer.finish();
    let mut generated = Vec::new();
    let mut reference = Vec::new();
    for (i, (id, code)) in outcome.bank.iter().enumerate() {
        let mesh = reconstruct(&outcome.params, code, 64)?;
        export_mesh(&mesh, out.join(format!("{id}_reconstructed.obj")))?;
        generated.push(sample_surface(&mesh, 20_000, 10 + i as u64, id)?);
        reference.push(sample_surface(&meshes[i].mesh, 20_000, 20 + i as u64, id)?);
        println!(
            "{id}: code {code:?}  chamfer {:.2}",
            chamfer_distance(&generated[i], &reference[i])
        );
    }
    println!("coverage {}", coverage(&generated, &reference)?);
    Ok(())
}
