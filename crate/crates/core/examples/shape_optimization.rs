//! Runs every pipeline stage from a config file: procedural shapes, training,
//! reconstruction report, NSGA-II over the latent space, and mesh export.
//!
//! The default config trains two shapes for 2000 epochs and evolves 8
//! designs for 20 generations, which takes several minutes on one core.
//!
//! cargo run --release --example shape_optimization [config.toml]

use std::path::PathBuf;

use shapeopt::pipeline::{run_all, Overrides, RunConfig, RunLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map_or_else(
        || PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/desk.toml"),
        PathBuf::from,
    );
    let out = std::env::temp_dir().join("shapeopt-examples").join("run");
    let overrides = Overrides {
        out: Some(out.clone()),
        ..Overrides::default()
    };
    let cfg = RunConfig::load(&path)?.resolve(&overrides)?;
    let summary = run_all(&cfg, false)?;

    println!("{} generations, {} evaluations", summary.generations, summary.evaluations);
    println!("training shapes:");
    for (id, values) in &summary.training_points {
        match values {
            Some(v) => println!("  {id}: {v:?}"),
            None => println!("  {id}: infeasible"),
        }
    }
    println!("pareto front over all evaluated designs ({}):", summary.objective_names.join(", "));
    for (i, design) in summary.front.iter().enumerate() {
        println!("  design {i}: genome {:?} -> {:?}", design.genome, design.objectives);
    }
    println!("artifacts in {}", RunLayout::new(&out).root().display());
    Ok(())
}
