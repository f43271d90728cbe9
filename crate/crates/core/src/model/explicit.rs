use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{scan_zero_runs, CoefficientKernel, M0};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    /// `[k, d_k]` pairs; unlisted lags are zero.
    pub coeffs: Vec<(i64, f64)>,
    /// Continue geometrically past the largest listed lag: d_k = d_K ρ^{k-K}.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_rho: Option<f64>,
}

/// Explicitly listed coefficients with an optional geometric forward tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Explicit {
    d: BTreeMap<i64, f64>,
    tail_rho: Option<f64>,
    kmin: i64,
    kmax: i64,
}

impl Explicit {
    pub fn new(coeffs: &[(i64, f64)], tail_rho: Option<f64>) -> Result<Self> {
        let mut d = BTreeMap::new();
        for &(k, v) in coeffs {
            if !v.is_finite() {
                return Err(invalid("coeffs", format!("d_{k} is not finite")));
            }
            if d.insert(k, v).is_some() {
                return Err(invalid("coeffs", format!("lag {k} listed twice")));
            }
        }
        d.retain(|_, v| *v != 0.0);
        if d.is_empty() {
            return Err(invalid("coeffs", "need at least one nonzero coefficient"));
        }
        if let Some(r) = tail_rho {
            if !(r.abs() > 0.0 && r.abs() < 1.0) {
                return Err(invalid("tail_rho", "need 0 < |tail_rho| < 1"));
            }
        }
        let kmin = *d.keys().next().unwrap();
        let kmax = *d.keys().next_back().unwrap();
        Ok(Self {
            d,
            tail_rho,
            kmin,
            kmax,
        })
    }

    pub fn from_params(p: ExplicitParams) -> Result<Self> {
        Self::new(&p.coeffs, p.tail_rho)
    }
}

impl CoefficientKernel for Explicit {
    fn kind(&self) -> &'static str {
        "explicit"
    }

    fn params(&self) -> Value {
        serde_json::to_value(ExplicitParams {
            coeffs: self.d.iter().map(|(k, v)| (*k, *v)).collect(),
            tail_rho: self.tail_rho,
        })
        .unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        match self.tail_rho {
            Some(r) if k > self.kmax => self.d[&self.kmax] * r.powi((k - self.kmax) as i32),
            _ => self.d.get(&k).copied().unwrap_or(0.0),
        }
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        let hi = if self.tail_rho.is_some() {
            None
        } else {
            Some(self.kmax)
        };
        (Some(self.kmin), hi)
    }

    fn tail_bound(&self, alpha: f64, _lo: i64, hi: i64) -> f64 {
        match self.tail_rho {
            None => 0.0,
            Some(r) => {
                let q = r.abs().powf(alpha);
                let from = (hi - self.kmax + 1).max(1) as f64;
                let mut s = self.d[&self.kmax].abs().powf(alpha) * q.powf(from) / (1.0 - q);
                if hi < self.kmax {
                    s += self.d.range(hi + 1..).map(|(_, v)| v.abs().powf(alpha)).sum::<f64>();
                }
                s
            }
        }
    }

    fn m0(&self, search_bound: usize) -> M0 {
        if self.tail_rho.is_none() {
            // the forward tail is eventually zero
            return M0::Infinite;
        }
        let lo = self.kmin.max(self.kmax - search_bound as i64);
        let d = self.coeffs(lo, self.kmax);
        M0::Finite(scan_zero_runs(&d, |i| d[i] == 0.0))
    }
}
