use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CoefficientKernel, M0};
use crate::error::{invalid, Result};

/// A root given as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Root {
    Real(f64),
    Complex([f64; 2]),
}

impl Root {
    pub fn value(&self) -> Complex64 {
        match *self {
            Root::Real(x) => Complex64::new(x, 0.0),
            Root::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar2Params {
    pub lambda1: Root,
    pub lambda2: Root,
}

/// Anticipative AR(2): (1 - λ₁F)(1 - λ₂F) X_t = ε_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar2 {
    params: Ar2Params,
    sum: f64,
    prod: f64,
    r: f64,
}

impl Ar2 {
    pub fn new(lambda1: Root, lambda2: Root) -> Result<Self> {
        let (l1, l2) = (lambda1.value(), lambda2.value());
        for l in [l1, l2] {
            if !(l.norm() > 0.0 && l.norm() < 1.0) {
                return Err(invalid("lambda", format!("{l}: need 0 < |lambda| < 1")));
            }
        }
        let real1 = l1.im == 0.0;
        let real2 = l2.im == 0.0;
        if real1 != real2 || (!real1 && (l1 - l2.conj()).norm() > 1e-14) {
            return Err(invalid("lambda", "complex roots must form a conjugate pair"));
        }
        let s = l1 + l2;
        if s.norm() < 1e-14 {
            return Err(invalid("lambda", "lambda1 + lambda2 must be nonzero"));
        }
        Ok(Self {
            params: Ar2Params { lambda1, lambda2 },
            sum: s.re,
            prod: (l1 * l2).re,
            r: l1.norm().max(l2.norm()),
        })
    }

    pub fn real(l1: f64, l2: f64) -> Result<Self> {
        Self::new(Root::Real(l1), Root::Real(l2))
    }

    pub fn from_params(p: Ar2Params) -> Result<Self> {
        Self::new(p.lambda1, p.lambda2)
    }

    /// Closed form (λ₁^{k+1} - λ₂^{k+1}) / (λ₁ - λ₂), or (k+1)λ^k.
    pub fn closed_form(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        let (l1, l2) = (self.params.lambda1.value(), self.params.lambda2.value());
        if l1 == l2 {
            return (k + 1) as f64 * l1.re.powi(k as i32);
        }
        let n = (k + 1) as i32;
        ((l1.powi(n) - l2.powi(n)) / (l1 - l2)).re
    }
}

impl CoefficientKernel for Ar2 {
    fn kind(&self) -> &'static str {
        "ar2"
    }

    fn params(&self) -> Value {
        serde_json::to_value(self.params).unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        *self.coeffs(k, k).last().unwrap()
    }

    // d_k = (λ₁+λ₂) d_{k-1} - λ₁λ₂ d_{k-2}, d_0 = 1, d_{-1} = 0
    fn coeffs(&self, lo: i64, hi: i64) -> Vec<f64> {
        let mut out = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        let (mut prev, mut cur) = (0.0, 1.0);
        let mut k = 0i64;
        for target in lo..=hi {
            if target < 0 {
                out.push(0.0);
                continue;
            }
            while k < target {
                let next = self.sum * cur - self.prod * prev;
                prev = cur;
                cur = next;
                k += 1;
            }
            out.push(cur);
        }
        out
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        (Some(0), None)
    }

    // |d_k| ≤ (k+1) r^k
    fn tail_bound(&self, alpha: f64, _lo: i64, hi: i64) -> f64 {
        let n = hi.max(0) as f64;
        let q = ((n + 3.0) / (n + 2.0)).powf(alpha) * self.r.powf(alpha);
        if q >= 1.0 {
            return f64::INFINITY;
        }
        ((n + 2.0) * self.r.powf(n + 1.0)).powf(alpha) / (1.0 - q)
    }

    fn m0(&self, search_bound: usize) -> M0 {
        let l1 = self.params.lambda1.value();
        if l1.im == 0.0 {
            return M0::Finite(0);
        }
        // d_k = r^k sin((k+1)θ) / sin θ; zeros are isolated
        let theta = l1.arg();
        let hit = (0..search_bound.min(1_000_000))
            .any(|k| (((k + 1) as f64) * theta).sin().abs() < 1e-10);
        M0::Finite(usize::from(hit))
    }
}
