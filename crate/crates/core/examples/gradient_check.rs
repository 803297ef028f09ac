//! Compares the decoder's analytic gradients with central finite
//! differences on a small random network.
//!
//! cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapeopt::geometry::Vec3;
use shapeopt::neural::{Architecture, DecoderParams, EncodingConfig, LossConfig, SampleBatch};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arch = Architecture {
        hidden: vec![12, 12],
        encoding: EncodingConfig {
            levels: 3,
            include_input: true,
        },
        latent_dim: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = DecoderParams::new(&arch, 0.1, &mut rng)?;
    let codes: Vec<Vec<f64>> = (0..2).map(|_| vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]).collect();
    let mut batch = SampleBatch::default();
    for i in 0..16 {
        let p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        batch.push(p, rng.random_range(-0.15..0.15), i % 2);
    }
    let cfg = LossConfig {
        delta: 0.1,
        lipschitz_weight: 1e-3,
    };
    let (loss, grads) = params.backward(&batch, &codes, &cfg)?;
    println!("loss {:.6} over {} parameters", loss.total, params.parameter_count());

    let h = 1e-5;
    let total = |p: &DecoderParams, c: &[Vec<f64>]| p.batch_loss(&batch, c, &cfg).map(|l| l.total);
    for (l, layer) in params.layers.iter().enumerate() {
        let mut worst = 0.0f64;
        for ((r, c), &g) in grads.weights[l].indexed_iter() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.layers[l].weights[[r, c]] += h;
            minus.layers[l].weights[[r, c]] -= h;
            let fd = (total(&plus, &codes)? - total(&minus, &codes)?) / (2.0 * h);
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-7));
        }
        println!("layer {l} ({}x{}): worst weight relative error {worst:.2e}", layer.outputs(), layer.inputs());
    }
    for (s, code) in codes.iter().enumerate() {
        for j in 0..code.len() {
            let mut plus = codes.clone();
            let mut minus = codes.clone();
            plus[s][j] += h;
            minus[s][j] -= h;
            let fd = (total(&params, &plus)? - total(&params, &minus)?) / (2.0 * h);
            println!("code {s}[{j}]: analytic {:+.6e}  numeric {fd:+.6e}", grads.latents[s][j]);
        }
    }
    Ok(())
}
