use super::layer::softplus;
use super::LipschitzLayer;

/// L1 error clamped to the band `[-delta, delta]`.
///
/// Targets beyond the band only penalize predictions that fall short of it on
/// the correct side; `|d_gt| == delta` is treated as in-band, where both
/// formulas agree.
pub fn truncated_l1(d_pred: f64, d_gt: f64, delta: f64) -> f64 {
    if d_gt < -delta {
        d_pred.max(-delta) + delta
    } else if d_gt > delta {
        delta - d_pred.min(delta)
    } else {
        (d_pred - d_gt).abs()
    }
}

/// Derivative of [`truncated_l1`] with respect to `d_pred` (zero on kinks'
/// flat side, the one-sided slope elsewhere).
pub fn truncated_l1_grad(d_pred: f64, d_gt: f64, delta: f64) -> f64 {
    if d_gt < -delta {
        if d_pred > -delta {
            1.0
        } else {
            0.0
        }
    } else if d_gt > delta {
        if d_pred < delta {
            -1.0
        } else {
            0.0
        }
    } else if d_pred > d_gt {
        1.0
    } else if d_pred < d_gt {
        -1.0
    } else {
        0.0
    }
}

fn ln_softplus(k: f64) -> f64 {
    if k < -30.0 {
        // softplus(k) = e^k (1 - e^k / 2 + ...)
        k
    } else {
        softplus(k).ln()
    }
}

/// Product of the per-layer bounds `softplus(k_i)`, accumulated in the log
/// domain.
pub fn lipschitz_loss(layers: &[LipschitzLayer]) -> f64 {
    layers.iter().map(|l| ln_softplus(l.k)).sum::<f64>().exp()
}

/// `d lipschitz_loss / d k_i` for every layer.
pub fn lipschitz_loss_grad(layers: &[LipschitzLayer]) -> Vec<f64> {
    let total = lipschitz_loss(layers);
    layers
        .iter()
        .map(|l| {
            // d/dk softplus(k) / softplus(k) = sigmoid(k) / softplus(k)
            let ratio = if l.k < -30.0 { 1.0 } else { super::layer::sigmoid(l.k) / softplus(l.k) };
            total * ratio
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    fn layer(k: f64) -> LipschitzLayer {
        LipschitzLayer {
            weights: Array2::zeros((1, 1)),
            bias: Array1::zeros(1),
            k,
        }
    }

    #[test]
    fn clip_hand_cases() {
        assert!((truncated_l1(0.05, 0.02, 0.1) - 0.03).abs() < 1e-15);
        assert_eq!(truncated_l1(0.2, 0.5, 0.1), 0.0);
        assert_eq!(truncated_l1(-0.3, -0.5, 0.1), 0.0);
        assert!((truncated_l1(0.05, -0.5, 0.1) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn band_edges_use_the_middle_branch() {
        for d in [-0.3, -0.1, 0.0, 0.07, 0.1, 0.4] {
            assert_eq!(truncated_l1(d, 0.1, 0.1), (d - 0.1f64).abs());
            assert_eq!(truncated_l1(d, -0.1, 0.1), (d + 0.1f64).abs());
        }
    }

    #[test]
    fn lipschitz_products() {
        assert!((lipschitz_loss(&[layer(0.0)]) - 0.693_147_180_559_945_3).abs() < 1e-12);
        assert!((lipschitz_loss(&[layer(0.0), layer(0.0)]) - 0.480_453_013_918_201_4).abs() < 1e-12);
        assert!(lipschitz_loss(&[layer(-50.0), layer(-60.0)]) > 0.0);
        let big = lipschitz_loss(&[layer(300.0), layer(300.0)]);
        assert!((big - 90_000.0).abs() < 1e-6);
    }

    #[test]
    fn lipschitz_grad_matches_differences() {
        let layers = [layer(0.3), layer(-1.2), layer(2.5)];
        let g = lipschitz_loss_grad(&layers);
        let h = 1e-6;
        for i in 0..3 {
            let mut p = layers.clone();
            let mut m = layers.clone();
            p[i].k += h;
            m[i].k -= h;
            let fd = (lipschitz_loss(&p) - lipschitz_loss(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "{fd} vs {}", g[i]);
        }
    }
}
