//! Chamfer distance, minimum matching distance and coverage between a set of
//! reference shapes and a "generated" set containing one perturbed copy and
//! one duplicate.
//!
//! cargo run --release --example generative_metrics

use shapeopt::geometry::shapes;
use shapeopt::metrics::{distance_matrix, MetricsSummary, sample_surface};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sphere = shapes::icosphere(0.6, 3);
    let torus = shapes::torus(0.5, 0.2, 48, 24);
    let capsule = shapes::capsule(0.3, 0.4, 32, 8);
    let fat_sphere = shapes::icosphere(0.65, 3);

    let reference = vec![
        sample_surface(&sphere, 2000, 1, "sphere")?,
        sample_surface(&torus, 2000, 2, "torus")?,
        sample_surface(&capsule, 2000, 3, "capsule")?,
    ];
    // the capsule mode is missing; the torus appears twice
    let generated = vec![
        sample_surface(&fat_sphere, 2000, 4, "fat sphere")?,
        sample_surface(&torus, 2000, 5, "torus a")?,
        sample_surface(&torus, 2000, 6, "torus b")?,
    ];
    let d = distance_matrix(&generated, &reference)?;
    for (g, row) in generated.iter().zip(&d) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:9.2}")).collect();
        println!("{:>10} {}", g.source_id(), cells.join(" "));
    }
    let own: Vec<f64> = (0..3).map(|i| d[i][i]).collect();
    let summary = MetricsSummary::new(&own, &d)?;
    print!("{}", summary.to_csv());
    Ok(())
}
