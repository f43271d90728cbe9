use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{geometric_tail, CoefficientKernel, M0};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Params {
    pub rho: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() > 0.0 && rho.abs() < 1.0) {
        return Err(invalid("rho", format!("{rho}: need 0 < |rho| < 1")));
    }
    Ok(())
}

/// Anticipative AR(1): X_t = ρ X_{t+1} + ε_t, d_k = ρ^k 1{k ≥ 0}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1 {
    rho: f64,
}

impl Ar1 {
    pub fn new(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho })
    }

    pub fn from_params(p: Ar1Params) -> Result<Self> {
        Self::new(p.rho)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl CoefficientKernel for Ar1 {
    fn kind(&self) -> &'static str {
        "ar1"
    }

    fn params(&self) -> Value {
        serde_json::to_value(Ar1Params { rho: self.rho }).unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.rho.powi(k as i32)
        }
    }

    fn coeffs(&self, lo: i64, hi: i64) -> Vec<f64> {
        let mut out = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        let mut p = if lo > 0 { self.coeff(lo) } else { 1.0 };
        for k in lo..=hi {
            if k < 0 {
                out.push(0.0);
            } else {
                out.push(p);
                p *= self.rho;
            }
        }
        out
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        (Some(0), None)
    }

    fn tail_bound(&self, alpha: f64, _lo: i64, hi: i64) -> f64 {
        geometric_tail(self.rho.abs(), alpha, hi)
    }

    fn m0(&self, _search_bound: usize) -> M0 {
        M0::Finite(0)
    }
}

/// Non-anticipative AR(1): Y_t = ρ Y_{t-1} + ε_t, d_k = ρ^{-k} 1{k ≤ 0}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Backward {
    rho: f64,
}

impl Ar1Backward {
    pub fn new(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho })
    }

    pub fn from_params(p: Ar1Params) -> Result<Self> {
        Self::new(p.rho)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl CoefficientKernel for Ar1Backward {
    fn kind(&self) -> &'static str {
        "ar1_backward"
    }

    fn params(&self) -> Value {
        serde_json::to_value(Ar1Params { rho: self.rho }).unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        if k > 0 {
            0.0
        } else {
            self.rho.powi((-k) as i32)
        }
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        (None, Some(0))
    }

    fn tail_bound(&self, alpha: f64, lo: i64, _hi: i64) -> f64 {
        geometric_tail(self.rho.abs(), alpha, -lo)
    }

    fn m0(&self, _search_bound: usize) -> M0 {
        M0::Infinite
    }
}
