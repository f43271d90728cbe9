//! Univariate stable laws in the 1-parameterization.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Parameters (α, β, σ, μ) of S(α, β, σ, μ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub mu: f64,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} not in (0,2)")));
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(invalid("beta", format!("{beta} not in [-1,1]")));
    }
    Ok(())
}

/// Treats α within 1e-12 of one as the Cauchy-type branch.
pub fn is_alpha_one(alpha: f64) -> bool {
    (alpha - 1.0).abs() < 1e-12
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64, mu: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_beta(beta)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("{sigma} must be positive")));
        }
        if !mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        Ok(Self {
            alpha,
            beta,
            sigma,
            mu,
        })
    }

    /// S(α, β, 1, 0).
    pub fn standard(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, 0.0)
    }
}

/// E exp(iuX) for X ~ S(α, β, σ, μ).
pub fn char_fn(p: &StableParams, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let su = p.sigma * u;
    let a = su.abs().powf(p.alpha);
    // u ln|u| is taken as 0 at u = 0 (handled above).
    let w = if is_alpha_one(p.alpha) {
        -FRAC_2_PI * u.abs().ln()
    } else {
        (PI * p.alpha / 2.0).tan()
    };
    let re = -a;
    let im = a * p.beta * u.signum() * w + u * p.mu;
    Complex64::new(re, im).exp()
}

/// Tail constant C_α with x^α P(X > x) → C_α (1+β)/2 σ^α.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(FRAC_2_PI);
    }
    let delta = 1.0 - alpha;
    // cos(πα/2) = sin(π(1-α)/2) keeps the ratio accurate near α = 1.
    Ok(delta / (statrs::function::gamma::gamma(2.0 - alpha) * (FRAC_PI_2 * delta).sin()))
}

/// Chambers–Mallows–Stuck transform of one (V, W) pair.
#[derive(Debug, Clone, Copy)]
pub struct CmsSampler {
    params: StableParams,
    b: f64,
    s: f64,
    one: bool,
}

impl CmsSampler {
    pub fn new(params: StableParams) -> Self {
        let one = is_alpha_one(params.alpha);
        let (b, s) = if one {
            (0.0, 1.0)
        } else {
            let t = params.beta * (PI * params.alpha / 2.0).tan();
            (
                t.atan() / params.alpha,
                (1.0 + t * t).powf(1.0 / (2.0 * params.alpha)),
            )
        };
        Self { params, b, s, one }
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    /// `v` uniform on (-π/2, π/2), `w` standard exponential.
    pub fn transform(&self, v: f64, w: f64) -> f64 {
        let StableParams {
            alpha,
            beta,
            sigma,
            mu,
        } = self.params;
        if self.one {
            let hp = FRAC_PI_2 + beta * v;
            let x = FRAC_2_PI * (hp * v.tan() - beta * ((FRAC_PI_2 * w * v.cos()) / hp).ln());
            sigma * x + FRAC_2_PI * beta * sigma * sigma.ln() + mu
        } else {
            let av = alpha * (v + self.b);
            let x = self.s * av.sin() / v.cos().powf(1.0 / alpha)
                * ((v - av).cos() / w).powf((1.0 - alpha) / alpha);
            sigma * x + mu
        }
    }
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

fn open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * TWO_POW_M53
}

/// Random-access stable noise: draw `index` of stream `stream` only depends
/// on (seed, stream, index).
#[derive(Debug, Clone)]
pub struct NoiseStream {
    sampler: CmsSampler,
    seed: u64,
    stream: u64,
}

const CHUNK: usize = 1 << 15;

impl NoiseStream {
    pub fn new(params: StableParams, seed: u64, stream: u64) -> Self {
        Self {
            sampler: CmsSampler::new(params),
            seed,
            stream,
        }
    }

    fn fill_serial(&self, start: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(start as u128 * 4);
        for x in out.iter_mut() {
            let v = PI * (open_unit(rng.next_u64()) - 0.5);
            let w = -open_unit(rng.next_u64()).ln();
            *x = self.sampler.transform(v, w);
        }
    }

    /// Writes draws `start .. start + out.len()` into `out`.
    pub fn fill(&self, start: u64, out: &mut [f64]) {
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| self.fill_serial(start + (c * CHUNK) as u64, chunk));
    }
}

/// `n` i.i.d. draws from `params`, deterministic in `seed`.
pub fn sample_stable(params: &StableParams, n: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    NoiseStream::new(*params, seed, 0).fill(0, &mut out);
    out
}
