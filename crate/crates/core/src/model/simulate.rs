//! Truncated convolution of kernels with stable noise.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Aggregate, TruncationPolicy};
use crate::error::Result;
use crate::stable::{NoiseStream, StableParams};

/// Noise time s lives at stream position s + NOISE_ORIGIN.
pub const NOISE_ORIGIN: i64 = 1 << 40;

/// Kernels longer than this go through FFT overlap-save.
const FFT_THRESHOLD: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// X_t for t = 0..T.
    pub total: Vec<f64>,
    /// Unweighted X_{j,t}; X_t = Σ_j π_j X_{j,t}.
    pub components: Vec<Vec<f64>>,
}

/// Draws ε_s for s in `from .. from + len` of one noise stream.
pub fn noise_segment(stream: &NoiseStream, from: i64, len: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    stream.fill((from + NOISE_ORIGIN) as u64, &mut e);
    e
}

/// y[t] = Σ_i c[i] e[t + i] for t < e.len() - c.len() + 1.
pub fn correlate(c: &[f64], e: &[f64]) -> Vec<f64> {
    let l = c.len();
    assert!(l >= 1 && e.len() >= l);
    let n_out = e.len() - l + 1;
    if l <= FFT_THRESHOLD {
        let mut y = vec![0.0; n_out];
        y.par_chunks_mut(1 << 14).enumerate().for_each(|(b, chunk)| {
            let t0 = b << 14;
            for (i, out) in chunk.iter_mut().enumerate() {
                let w = &e[t0 + i..t0 + i + l];
                *out = c.iter().zip(w).map(|(a, b)| a * b).sum();
            }
        });
        return y;
    }
    overlap_save(c, e, n_out)
}

fn overlap_save(c: &[f64], e: &[f64], n_out: usize) -> Vec<f64> {
    let l = c.len();
    let n = (4 * l).max(1 << 12).next_power_of_two();
    let step = n - l + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let mut g: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(if i < l { c[l - 1 - i] } else { 0.0 }, 0.0))
        .collect();
    fwd.process(&mut g);
    let scale = 1.0 / n as f64;
    let mut y = vec![0.0; n_out];
    y.par_chunks_mut(step).enumerate().for_each(|(b, out)| {
        let t0 = b * step;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(e.get(t0 + i).copied().unwrap_or(0.0), 0.0))
            .collect();
        fwd.process(&mut buf);
        for (x, gi) in buf.iter_mut().zip(&g) {
            *x *= gi;
        }
        inv.process(&mut buf);
        for (i, o) in out.iter_mut().enumerate() {
            *o = buf[l - 1 + i].re * scale;
        }
    });
    y
}

/// X_{j,t}, t = 0..T, for one component (without the π_j weight).
pub fn simulate_component(
    agg: &Aggregate,
    j: usize,
    t_len: usize,
    trunc: &TruncationPolicy,
    seed: u64,
) -> Result<Vec<f64>> {
    let comp = &agg.components()[j];
    let (lo, hi) = agg.window(j, trunc.tol, trunc.max_lag)?;
    let c = comp.kernel.coeffs(lo, hi);
    let params = StableParams::standard(agg.alpha(), comp.beta)?;
    let stream = NoiseStream::new(params, seed, j as u64);
    let e = noise_segment(&stream, lo, t_len + c.len() - 1);
    Ok(correlate(&c, &e))
}

/// Only the aggregate series; avoids keeping per-component copies.
pub fn simulate_total(
    agg: &Aggregate,
    t_len: usize,
    trunc: &TruncationPolicy,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut total = vec![0.0; t_len];
    for (j, comp) in agg.components().iter().enumerate() {
        let x = simulate_component(agg, j, t_len, trunc, seed)?;
        total
            .par_iter_mut()
            .zip(x.par_iter())
            .for_each(|(t, v)| *t += comp.pi * v);
    }
    Ok(total)
}

/// Simulates t = 0..T with independent noise stream j for component j.
pub fn simulate(
    agg: &Aggregate,
    t_len: usize,
    trunc: &TruncationPolicy,
    seed: u64,
) -> Result<Simulation> {
    let mut total = vec![0.0; t_len];
    let mut components = Vec::with_capacity(agg.len());
    for (j, comp) in agg.components().iter().enumerate() {
        let x = simulate_component(agg, j, t_len, trunc, seed)?;
        for (t, v) in total.iter_mut().zip(&x) {
            *t += comp.pi * v;
        }
        components.push(x);
    }
    Ok(Simulation { total, components })
}
