use std::sync::Arc;

use serde::Serialize;

use super::{check_component, lag_window, CoefficientKernel, TruncationPolicy};
use crate::error::{invalid, Result};

/// One latent moving average π_j X_{j,t} driven by S(α, β_j, 1, 0) noise.
#[derive(Debug, Clone)]
pub struct Component {
    pub pi: f64,
    pub beta: f64,
    pub kernel: Arc<dyn CoefficientKernel>,
}

impl Component {
    pub fn new(pi: f64, beta: f64, kernel: Arc<dyn CoefficientKernel>) -> Self {
        Self { pi, beta, kernel }
    }
}

/// X_t = Σ_j π_j X_{j,t} with independent components sharing α.
#[derive(Debug, Clone)]
pub struct Aggregate {
    alpha: f64,
    components: Vec<Component>,
}

/// d_{j,k} = (d_{k+m}, ..., d_k, d_{k-1}, ..., d_{k-h}).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathKernel {
    pub j: usize,
    pub k: i64,
    pub vector: Vec<f64>,
}

impl PathKernel {
    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|v| *v == 0.0)
    }
}

impl Aggregate {
    pub fn new(alpha: f64, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "need at least one component"));
        }
        for c in &components {
            check_component(alpha, c.pi, c.beta)?;
            c.kernel.check_alpha(alpha)?;
        }
        Ok(Self { alpha, components })
    }

    /// A single moving average (π = 1).
    pub fn single(alpha: f64, kernel: Arc<dyn CoefficientKernel>, beta: f64) -> Result<Self> {
        Self::new(alpha, vec![Component::new(1.0, beta, kernel)])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.components.iter().all(|c| c.beta == 0.0)
    }

    pub fn path_kernel(&self, j: usize, k: i64, m: usize, h: usize) -> PathKernel {
        let c = self.components[j].kernel.coeffs(k - h as i64, k + m as i64);
        PathKernel {
            j,
            k,
            vector: c.into_iter().rev().collect(),
        }
    }

    /// Lag window of component `j` with discarded α-mass below `tol`.
    pub fn window(&self, j: usize, tol: f64, max_lag: i64) -> Result<(i64, i64)> {
        lag_window(self.components[j].kernel.as_ref(), self.alpha, tol, max_lag)
    }

    /// σ_X^α = Σ_j π_j^α Σ_k |d_{j,k}|^α, truncated per `trunc`.
    pub fn scale_alpha(&self, trunc: &TruncationPolicy) -> Result<f64> {
        let mut s = 0.0;
        for (j, c) in self.components.iter().enumerate() {
            let (lo, hi) = self.window(j, trunc.tol, trunc.max_lag)?;
            let mass: f64 = c
                .kernel
                .coeffs(lo, hi)
                .iter()
                .map(|d| d.abs().powf(self.alpha))
                .sum();
            s += c.pi.powf(self.alpha) * mass;
        }
        Ok(s)
    }
}
