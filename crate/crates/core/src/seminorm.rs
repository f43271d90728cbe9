//! p-norms of the observed block of a path vector.
//!
//! Path vectors are stored oldest first: `(x_{-m}, ..., x_0, x_1, ..., x_h)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiNorm {
    observed: usize,
    future: usize,
    p: f64,
}

impl SemiNorm {
    /// Semi-norm on R^{m+h+1} looking at the first m+1 coordinates.
    pub fn new(m: usize, h: usize, p: f64) -> Result<Self> {
        if h < 1 {
            return Err(invalid("h", "horizon must be at least 1"));
        }
        Self::with_dims(m + 1, h, p)
    }

    /// Same construction with explicit block sizes; `future` may be zero.
    pub fn with_dims(observed: usize, future: usize, p: f64) -> Result<Self> {
        if observed == 0 {
            return Err(invalid("m", "need at least one observed coordinate"));
        }
        if !(p >= 1.0) {
            return Err(invalid("p", format!("{p} not in [1, inf]")));
        }
        Ok(Self {
            observed,
            future,
            p,
        })
    }

    pub fn m(&self) -> usize {
        self.observed - 1
    }

    pub fn h(&self) -> usize {
        self.future
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn observed_dim(&self) -> usize {
        self.observed
    }

    pub fn dim(&self) -> usize {
        self.observed + self.future
    }

    /// p-norm of a slice; no dimension check.
    pub fn p_norm(&self, x: &[f64]) -> f64 {
        p_norm(x, self.p)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.observed_norm(x))
    }

    /// Norm of the first `observed` coordinates of `x`.
    pub fn observed_norm(&self, x: &[f64]) -> f64 {
        p_norm(&x[..self.observed], self.p)
    }

    pub fn project_to_cylinder(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.evaluate(x)?;
        if n == 0.0 {
            return Err(Error::KernelVector);
        }
        Ok(x.iter().map(|v| v / n).collect())
    }

    /// Smallest c with ‖x‖ ≤ c ‖x‖_e.
    pub fn euclid_constant(&self) -> f64 {
        if self.p >= 2.0 {
            1.0
        } else {
            (self.observed as f64).powf(1.0 / self.p - 0.5)
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

pub fn p_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    } else if p == 2.0 {
        euclid(x)
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        let s = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            return 0.0;
        }
        s * x.iter().map(|v| (v.abs() / s).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Overflow-safe Euclidean norm.
pub fn euclid(x: &[f64]) -> f64 {
    let s = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if s == 0.0 {
        return 0.0;
    }
    s * x.iter().map(|v| (v / s) * (v / s)).sum::<f64>().sqrt()
}
