//! Per-shape latent codes, interpolation, and the search box handed to the
//! genetic optimizer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatentError {
    #[error("latent dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("latent bank is empty")]
    EmptyBank,
    #[error("unknown shape id {0:?}")]
    UnknownShape(String),
    #[error("duplicate shape id {0:?}")]
    DuplicateShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Trained codes in insertion order, one per shape id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentBank {
    dim: usize,
    ids: Vec<String>,
    codes: Vec<Vec<f64>>,
}

impl LatentBank {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            codes: Vec::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, code: Vec<f64>) -> Result<(), LatentError> {
        let id = id.into();
        if code.len() != self.dim {
            return Err(LatentError::DimensionMismatch {
                expected: self.dim,
                actual: code.len(),
            });
        }
        if self.ids.contains(&id) {
            return Err(LatentError::DuplicateShape(id));
        }
        self.ids.push(id);
        self.codes.push(code);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn codes(&self) -> &[Vec<f64>] {
        &self.codes
    }

    pub(crate) fn codes_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.codes
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|i| i == id).map(|i| self.codes[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.codes.iter().map(Vec::as_slice))
    }

    /// Comma-separated table `shape_id,z0,z1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shape_id");
        for j in 0..self.dim {
            out.push_str(&format!(",z{j}"));
        }
        out.push('\n');
        for (id, code) in self.iter() {
            out.push_str(id);
            for v in code {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `(1 - t) a + t b`.
pub fn interpolate(a: &[f64], b: &[f64], t: f64) -> Result<Vec<f64>, LatentError> {
    if a.len() != b.len() {
        return Err(LatentError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect())
}

/// Axis-aligned box of admissible genomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, LatentError> {
        if lower.len() != upper.len() {
            return Err(LatentError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() || lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(LatentError::InvalidArgument(format!("bounds {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(j, v)| self.lower[j] <= *v && *v <= self.upper[j])
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }
}

/// Hull of the training codes widened by `margin` times each dimension's
/// range. Dimensions whose codes (nearly) coincide are widened by `margin`
/// times the mean range of the other dimensions instead.
pub fn derive_bounds(bank: &LatentBank, margin: f64) -> Result<SearchBounds, LatentError> {
    if bank.is_empty() {
        return Err(LatentError::EmptyBank);
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(LatentError::InvalidArgument(format!("margin {margin}")));
    }
    let dim = bank.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for code in bank.codes() {
        for j in 0..dim {
            lo[j] = lo[j].min(code[j]);
            hi[j] = hi[j].max(code[j]);
        }
    }
    let ranges: Vec<f64> = (0..dim).map(|j| hi[j] - lo[j]).collect();
    let live: Vec<f64> = ranges.iter().copied().filter(|&r| r >= 1e-9).collect();
    let mean_range = if live.is_empty() {
        1.0
    } else {
        live.iter().sum::<f64>() / live.len() as f64
    };
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    for j in 0..dim {
        let pad = if ranges[j] < 1e-9 {
            // keep the box open even with zero margin
            (margin * mean_range).max(1e-6)
        } else {
            margin * ranges[j]
        };
        lower.push(lo[j] - pad);
        upper.push(hi[j] + pad);
    }
    SearchBounds::new(lower, upper)
}
