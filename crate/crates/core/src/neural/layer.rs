use ndarray::{Array1, Array2, Axis as NdAxis};
use rand::Rng;

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for positive `y`.
pub fn softplus_inverse(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

/// Fully connected layer whose weight rows are rescaled so that each row's
/// absolute sum stays under a learned bound `softplus(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzLayer {
    /// `out x in`, row-major.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Unconstrained bound parameter.
    pub k: f64,
}

/// The normalized weight matrix together with the per-row quantities the
/// backward pass needs.
#[derive(Debug, Clone)]
pub struct NormalizedWeights {
    pub matrix: Array2<f64>,
    /// Absolute row sums of the raw weights.
    pub row_sums: Array1<f64>,
    /// Whether each row was rescaled.
    pub active: Vec<bool>,
    pub bound: f64,
}

impl LipschitzLayer {
    /// Fan-in scaled uniform weights, zero bias, and a bound set to twice the
    /// largest initial row sum so normalization starts out inactive.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((outputs, inputs), || rng.random_range(-limit..limit));
        let max_row = weights
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|w| w.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            weights,
            bias: Array1::zeros(outputs),
            k: softplus_inverse((2.0 * max_row).max(1e-3)),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn bound(&self) -> f64 {
        softplus(self.k)
    }

    pub fn normalize(&self) -> NormalizedWeights {
        let bound = self.bound();
        let row_sums = self.weights.map_axis(NdAxis(1), |r| r.iter().map(|w| w.abs()).sum::<f64>());
        let mut matrix = self.weights.clone();
        let mut active = vec![false; self.outputs()];
        for (i, mut row) in matrix.rows_mut().into_iter().enumerate() {
            let s = row_sums[i];
            if s > bound {
                row *= bound / s;
                active[i] = true;
            }
        }
        NormalizedWeights {
            matrix,
            row_sums,
            active,
            bound,
        }
    }

    /// Maps a gradient with respect to the normalized weights back onto the
    /// raw weights and the bound parameter `k`.
    pub(crate) fn normalization_backward(&self, norm: &NormalizedWeights, grad_hat: &Array2<f64>) -> (Array2<f64>, f64) {
        let mut grad_w = grad_hat.clone();
        let mut grad_k = 0.0;
        let dbound_dk = sigmoid(self.k);
        for i in 0..self.outputs() {
            if !norm.active[i] {
                continue;
            }
            let s = norm.row_sums[i];
            let w = self.weights.row(i);
            let g = grad_hat.row(i);
            let gw: f64 = g.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let scale = norm.bound / s;
            let coupling = norm.bound * gw / (s * s);
            for (j, out) in grad_w.row_mut(i).iter_mut().enumerate() {
                *out = scale * g[j] - coupling * sign(w[j]);
            }
            grad_k += dbound_dk * gw / s;
        }
        (grad_w, grad_k)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Effective weight matrix of a layer.
pub fn lipschitz_normalize(layer: &LipschitzLayer) -> Array2<f64> {
    layer.normalize().matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn layer_with_bound(weights: Array2<f64>, bound: f64) -> LipschitzLayer {
        let n = weights.nrows();
        LipschitzLayer {
            weights,
            bias: Array1::zeros(n),
            k: softplus_inverse(bound),
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        for y in [1e-3, 0.5, 3.5, 14.0, 80.0] {
            assert!((softplus(softplus_inverse(y)) - y).abs() < 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn rows_under_the_bound_pass_through() {
        let l = layer_with_bound(array![[3.0, 4.0]], 14.0);
        assert_eq!(lipschitz_normalize(&l), array![[3.0, 4.0]]);
    }

    #[test]
    fn rows_over_the_bound_are_scaled() {
        let l = layer_with_bound(array![[3.0, 4.0]], 3.5);
        let w = lipschitz_normalize(&l);
        assert!((w[[0, 0]] - 1.5).abs() < 1e-12 && (w[[0, 1]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_left_alone() {
        let l = layer_with_bound(array![[0.0, 0.0], [1.0, -1.0]], 0.5);
        let w = lipschitz_normalize(&l);
        assert_eq!(w.row(0).to_vec(), vec![0.0, 0.0]);
        assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn initialized_rows_respect_their_bound() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let l = LipschitzLayer::init(30, 16, &mut rng);
        let norm = l.normalize();
        assert!(norm.active.iter().all(|a| !a));
        for r in norm.matrix.rows() {
            assert!(r.iter().map(|w| w.abs()).sum::<f64>() <= l.bound() + 1e-9);
        }
    }
}
