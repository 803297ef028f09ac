//! Runs NSGA-II on the ZDT1 benchmark and prints the hypervolume of the
//! first front per generation and the final front.
//!
//! cargo run --release --example nsga2_zdt1 [seed]

use shapeopt::evolution::{run_nsga2, GaConfig, Zdt1};
use shapeopt::latent::SearchBounds;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |a| a.parse())?;
    let cfg = GaConfig {
        population_size: 10,
        generations: 20,
        seed,
        ..GaConfig::default()
    };
    let archive = run_nsga2(Zdt1 { n: 5 }, &SearchBounds::unit(5), &[], &cfg)?;
    for (g, hv) in archive.hypervolume_trace([1.1, 1.1]).iter().enumerate() {
        println!("generation {g:2}  hypervolume {hv:.4}");
    }
    println!("final front ({} evaluations):", archive.evaluations);
    let mut front = archive.final_front();
    front.sort_by(|a, b| a.objectives[0].total_cmp(&b.objectives[0]));
    for ind in front {
        println!("  f1 {:.4}  f2 {:.4}", ind.objectives[0], ind.objectives[1]);
    }
    Ok(())
}
