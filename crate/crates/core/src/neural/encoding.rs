use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

/// Frequency octaves of the sinusoidal coordinate encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingConfig {
    pub levels: usize,
    pub include_input: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            levels: 6,
            include_input: true,
        }
    }
}

impl EncodingConfig {
    pub fn dim(&self) -> usize {
        3 * (2 * self.levels + usize::from(self.include_input))
    }

    /// Writes the encoding of `p` into `out` (length [`Self::dim`]).
    ///
    /// Layout: the raw coordinates first when `include_input`, then for each
    /// coordinate in turn `sin(2^j pi c), cos(2^j pi c)` for `j = 0..levels`.
    pub fn encode_into(&self, p: &Vec3, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let mut i = 0;
        if self.include_input {
            out[..3].copy_from_slice(p.as_slice());
            i = 3;
        }
        for c in p.iter() {
            let mut freq = PI;
            for _ in 0..self.levels {
                let (s, co) = (freq * c).sin_cos();
                out[i] = s;
                out[i + 1] = co;
                i += 2;
                freq *= 2.0;
            }
        }
    }

    pub fn encode(&self, p: &Vec3) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.encode_into(p, &mut out);
        out
    }
}

/// Free-function form of [`EncodingConfig::encode`].
pub fn positional_encoding(p: &Vec3, cfg: &EncodingConfig) -> Vec<f64> {
    cfg.encode(p)
}
