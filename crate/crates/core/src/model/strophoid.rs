
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CoefficientKernel, M0};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrophoidParams {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub seed: u64,
}

/// d_k is a real root of Π_k(y) = y³ - a(b+3)y² + (k² + a²(2b+3))y - a³(b+1),
/// picked uniformly with a stream keyed by (seed, k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strophoid {
    p: StrophoidParams,
}

/// Real roots of y³ + c2 y² + c1 y + c0, ascending, Newton-polished.
pub fn real_cubic_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = q * q / 4.0 + p.powi(3) / 27.0;
    let first = if disc < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = (3.0 * q / (p * r)).clamp(-1.0, 1.0).acos() / 3.0;
        r * phi.cos() - shift
    } else {
        let s = disc.sqrt();
        (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - shift
    };
    let f = |y: f64| ((y + c2) * y + c1) * y + c0;
    let df = |y: f64| (3.0 * y + 2.0 * c2) * y + c1;
    let polish = |mut y: f64| {
        for _ in 0..60 {
            let g = df(y);
            if g == 0.0 {
                break;
            }
            let step = f(y) / g;
            y -= step;
            if step.abs() <= 1e-16 * y.abs() {
                break;
            }
        }
        y
    };
    let r0 = polish(first);
    // Deflate to y^2 + b1 y + b0.
    let b1 = c2 + r0;
    let b0 = if r0 != 0.0 { -c0 / r0 } else { c1 + b1 * r0 };
    let d = b1 * b1 - 4.0 * b0;
    let mut roots = vec![r0];
    if d >= -1e-10 * (b1 * b1).max(b0.abs()) {
        let sq = d.max(0.0).sqrt();
        let big = -0.5 * (b1 + b1.signum() * sq);
        roots.push(polish(big));
        if big != 0.0 {
            roots.push(polish(b0 / big));
        }
    }
    roots.retain(|&y| {
        let scale = y.abs().powi(3) + c2.abs() * y * y + c1.abs() * y.abs() + c0.abs();
        f(y).abs() <= 1e-8 * scale
    });
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * y.abs().max(1.0));
    roots
}

fn zigzag(k: i64) -> u64 {
    ((k << 1) ^ (k >> 63)) as u64
}

/// One coefficient of the strophoid sequence.
pub fn strophoid_coeff(a: f64, b: f64, seed: u64, k: i64) -> f64 {
    let x = k as f64;
    let roots = real_cubic_roots(-a * (b + 3.0), x * x + a * a * (2.0 * b + 3.0), -a.powi(3) * (b + 1.0));
    if roots.len() == 1 {
        return roots[0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(zigzag(k));
    roots[rng.random_range(0..roots.len())]
}

impl Strophoid {
    pub fn new(a: f64, b: f64, seed: u64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", "must be positive"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", "must be positive"));
        }
        Ok(Self {
            p: StrophoidParams { a, b, seed },
        })
    }

    pub fn from_params(p: StrophoidParams) -> Result<Self> {
        Self::new(p.a, p.b, p.seed)
    }

    /// Cubic Π_k evaluated at y.
    pub fn residual(&self, k: i64, y: f64) -> f64 {
        let StrophoidParams { a, b, .. } = self.p;
        let x = k as f64;
        y.powi(3) - a * (b + 3.0) * y * y + (x * x + a * a * (2.0 * b + 3.0)) * y
            - a.powi(3) * (b + 1.0)
    }
}

impl CoefficientKernel for Strophoid {
    fn kind(&self) -> &'static str {
        "strophoid"
    }

    fn params(&self) -> Value {
        serde_json::to_value(self.p).unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        strophoid_coeff(self.p.a, self.p.b, self.p.seed, k)
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        (None, None)
    }

    // once only the small root is real, y ≤ a³(b+1) / (k² - a²(b-3)(b+1)/4)
    fn tail_bound(&self, alpha: f64, lo: i64, hi: i64) -> f64 {
        let StrophoidParams { a, b, .. } = self.p;
        if alpha <= 0.5 {
            return f64::INFINITY;
        }
        let c = a.powi(3) * (b + 1.0);
        let c0 = (a * a * (b - 3.0) * (b + 1.0) / 4.0).max(0.0);
        let n_min = a * (b + 3.0);
        let side = |n: f64| {
            if n < n_min || n * n <= 2.0 * c0 {
                return f64::INFINITY;
            }
            (c / (1.0 - c0 / (n * n))).powf(alpha) * n.powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0)
        };
        side((-lo) as f64) + side(hi as f64)
    }

    fn m0(&self, _search_bound: usize) -> M0 {
        M0::Finite(0)
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if alpha <= 0.5 {
            return Err(invalid("alpha", "strophoid coefficients need alpha > 1/2"));
        }
        Ok(())
    }
}
