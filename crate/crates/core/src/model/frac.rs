use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::gamma::gamma;

use super::{CoefficientKernel, M0};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracParams {
    pub d: f64,
}

/// Anticipative fractionally integrated noise: (1 - F)^d X_t = ε_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracInt {
    d: f64,
}

impl FracInt {
    pub fn new(d: f64) -> Result<Self> {
        if !(d < 1.0) || !d.is_finite() {
            return Err(invalid("d", format!("{d}: need d < 1")));
        }
        if d <= 0.0 && d.fract() == 0.0 {
            return Err(invalid("d", "non-positive integers give finite support"));
        }
        Ok(Self { d })
    }

    pub fn from_params(p: FracParams) -> Result<Self> {
        Self::new(p.d)
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

impl CoefficientKernel for FracInt {
    fn kind(&self) -> &'static str {
        "frac_int"
    }

    fn params(&self) -> Value {
        serde_json::to_value(FracParams { d: self.d }).unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        *self.coeffs(k, k).last().unwrap()
    }

    // d_k = d_{k-1} (k - 1 + d) / k
    fn coeffs(&self, lo: i64, hi: i64) -> Vec<f64> {
        let mut out = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        let mut cur = 1.0;
        let mut k = 0i64;
        for target in lo..=hi {
            if target < 0 {
                out.push(0.0);
                continue;
            }
            while k < target {
                k += 1;
                cur *= (k as f64 - 1.0 + self.d) / k as f64;
            }
            out.push(cur);
        }
        out
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        (Some(0), None)
    }

    fn tail_bound(&self, alpha: f64, _lo: i64, hi: i64) -> f64 {
        let e = alpha * (1.0 - self.d) - 1.0;
        if e <= 0.0 {
            return f64::INFINITY;
        }
        let d = self.d;
        if d > 0.0 {
            // Gautschi: Γ(k+d)/Γ(k+1) < k^{d-1}
            if hi < 1 {
                return f64::INFINITY;
            }
            let n = hi as f64;
            n.powf(-e) / (gamma(d).powf(alpha) * e)
        } else {
            // |d_k / d_{k-1}| ≤ ((k-1)/k)^{1-d} once k > 1 - d
            let k0 = (1.0 - d).ceil() as i64 + 1;
            if hi + 1 < k0 {
                return f64::INFINITY;
            }
            let n1 = (hi + 1) as f64;
            self.coeff(hi + 1).abs().powf(alpha) * (1.0 + n1 / e)
        }
    }

    fn m0(&self, _search_bound: usize) -> M0 {
        M0::Finite(0)
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(alpha * (self.d - 1.0) < -1.0) {
            return Err(invalid(
                "d",
                format!("alpha (d - 1) = {} must be < -1", alpha * (self.d - 1.0)),
            ));
        }
        Ok(())
    }
}
