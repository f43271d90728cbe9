//! Monte Carlo estimates of tail-conditional probabilities and tail scaling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bivariate::{bivar_seminorm, in_a, in_b, Arc, BivarModel, PSet};
use crate::error::{invalid, Error, Result};
use crate::model::{simulate::simulate_total, Aggregate, TruncationPolicy};
use crate::seminorm::SemiNorm;
use crate::spectral::{Atom, AtomLabel, DiscreteSpectralMeasure, Support};
use crate::stable::{c_alpha, sample_stable, StableParams};
use crate::tailcond::conditional_ratio;

pub const DEFAULT_TUBE_RADIUS: f64 = 0.05;
pub const DEFAULT_BLOCKS: usize = 50;
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_EXCEEDANCES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Empirical quantile of the semi-norms.
    Quantile(f64),
    Absolute(f64),
}

/// Sets of normalized path vectors, evaluated coordinate-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    All,
    /// Within `radius` (sup-distance) of one of `centers`.
    Tube { centers: Vec<Vec<f64>>, radius: f64 },
    /// Observed block within `radius` of `pattern`; future unrestricted.
    ObservedTube { pattern: Vec<f64>, radius: f64 },
    /// Closest of `centers` (sup-distance) is one of `select`.
    Voronoi { centers: Vec<Vec<f64>>, select: Vec<usize> },
    /// Observed direction in `arc` and, if given, (x₃, x₄ - ρ₂x₂) ∈ `p`.
    Bivariate {
        arc: Arc,
        #[serde(default)]
        p: Option<PSet>,
        rho2: f64,
    },
    Not { region: Box<Region> },
    And { regions: Vec<Region> },
    Or { regions: Vec<Region> },
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |d, (x, y)| d.max((x - y).abs()))
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Tube { centers, radius } => centers.iter().any(|c| sup_dist(c, x) <= *radius),
            Region::ObservedTube { pattern, radius } => sup_dist(pattern, &x[..pattern.len()]) <= *radius,
            Region::Voronoi { centers, select } => {
                let best = centers
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i, sup_dist(c, x)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                best.is_some_and(|(i, _)| select.contains(&i))
            }
            Region::Bivariate { arc, p, rho2 } => match p {
                Some(p) => in_a(arc, p, *rho2, x),
                None => in_b(arc, x),
            },
            Region::Not { region } => !region.contains(x),
            Region::And { regions } => regions.iter().all(|r| r.contains(x)),
            Region::Or { regions } => regions.iter().any(|r| r.contains(x)),
        }
    }

    /// Tube of the given radius around a set of atoms.
    pub fn around<'a>(atoms: impl IntoIterator<Item = &'a Atom>, radius: f64) -> Self {
        Region::Tube {
            centers: atoms.into_iter().map(|a| a.point.clone()).collect(),
            radius,
        }
    }
}

/// Half the smallest sup-distance between two atoms; tubes below it are disjoint.
pub fn max_tube_radius(measure: &DiscreteSpectralMeasure) -> f64 {
    let a = &measure.atoms;
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            best = best.min(sup_dist(&a[i].point, &a[j].point));
        }
    }
    best / 2.0
}

/// Γ(A ∩ B) / Γ(B) with regions evaluated at atom points.
pub fn theory_conditional(measure: &DiscreteSpectralMeasure, a: &Region, b: &Region) -> Result<f64> {
    conditional_ratio(measure, |x| a.contains(&x.point), |x| b.contains(&x.point))
}

/// C_α Γ(A): the limit of x^α P(‖X‖ > x, X/‖X‖ ∈ A).
pub fn theory_scaling(measure: &DiscreteSpectralMeasure, a: &Region) -> Result<f64> {
    let mass: f64 = measure
        .atoms
        .iter()
        .filter(|x| a.contains(&x.point))
        .map(|x| x.weight)
        .sum();
    Ok(c_alpha(measure.alpha)? * mass)
}

/// Spectral measure of a single S(α, β, σ, μ) variable on {-1, +1}.
pub fn univariate_measure(p: &StableParams) -> Result<DiscreteSpectralMeasure> {
    let s = p.sigma.powf(p.alpha);
    let atoms = [(1.0, (1.0 + p.beta) / 2.0), (-1.0, (1.0 - p.beta) / 2.0)]
        .into_iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, w)| {
            Atom::new(
                vec![x],
                s * w,
                AtomLabel {
                    theta: x as i8,
                    j: 1,
                    k: 0,
                },
            )
        })
        .collect();
    DiscreteSpectralMeasure::from_atoms(
        p.alpha,
        Support::Cylinder {
            seminorm: SemiNorm::with_dims(1, 0, 2.0)?,
        },
        atoms,
        None,
    )
}

/// What generates the path vectors.
#[derive(Debug, Clone)]
pub enum PathModel {
    Aggregate {
        agg: Aggregate,
        trunc: TruncationPolicy,
    },
    Bivariate(BivarModel),
    /// i.i.d. draws; windows are consecutive draws.
    Univariate(StableParams),
}

impl PathModel {
    pub fn alpha(&self) -> f64 {
        match self {
            PathModel::Aggregate { agg, .. } => agg.alpha(),
            PathModel::Bivariate(b) => b.alpha,
            PathModel::Univariate(p) => p.alpha,
        }
    }
}

/// Simulated series from which `len` overlapping windows are read.
#[derive(Debug, Clone)]
pub struct PathSample {
    series: Series,
    dim: usize,
    len: usize,
}

#[derive(Debug, Clone)]
enum Series {
    Uni(Vec<f64>),
    Bi(Vec<f64>, Vec<f64>),
}

impl PathSample {
    pub fn simulate(model: &PathModel, sn: &SemiNorm, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "sample size must be positive"));
        }
        let dim = sn.dim();
        let series = match model {
            PathModel::Aggregate { agg, trunc } => {
                Series::Uni(simulate_total(agg, n + dim - 1, trunc, seed)?)
            }
            PathModel::Univariate(p) => Series::Uni(sample_stable(p, n + dim - 1, seed)),
            PathModel::Bivariate(b) => {
                if *sn != bivar_seminorm() {
                    return Err(invalid("seminorm", "bivariate paths use sqrt(x1^2 + x2^2) on R^4"));
                }
                let (x1, x2) = b.simulate(n + 1, seed);
                Series::Bi(x1, x2)
            }
        };
        Ok(Self { series, dim, len: n })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Path vector number `t`, oldest first.
    pub fn window(&self, t: usize, out: &mut [f64]) {
        match &self.series {
            Series::Uni(x) => out.copy_from_slice(&x[t..t + self.dim]),
            Series::Bi(x1, x2) => {
                out[0] = x1[t];
                out[1] = x2[t];
                out[2] = x1[t + 1];
                out[3] = x2[t + 1];
            }
        }
    }

    pub fn norms(&self, sn: &SemiNorm) -> Vec<f64> {
        (0..self.len)
            .into_par_iter()
            .map_init(
                || vec![0.0; self.dim],
                |buf, t| {
                    self.window(t, buf);
                    sn.observed_norm(buf)
                },
            )
            .collect()
    }
}

/// Only the largest semi-norm of each run of consecutive exceedances is kept
/// under `RunMax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decluster {
    #[default]
    None,
    RunMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Windows with semi-norm above the threshold.
    pub n_exceedances: usize,
    /// Exceedances that also fall in the conditioning region.
    pub n_conditioning: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionalOptions {
    pub blocks: usize,
    pub resamples: usize,
    pub min_exceedances: usize,
    pub decluster: Decluster,
}

impl Default for ConditionalOptions {
    fn default() -> Self {
        Self {
            blocks: DEFAULT_BLOCKS,
            resamples: DEFAULT_RESAMPLES,
            min_exceedances: MIN_EXCEEDANCES,
            decluster: Decluster::None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TailExperiment {
    pub model: PathModel,
    pub seminorm: SemiNorm,
    pub threshold: Threshold,
    pub a: Region,
    pub b: Region,
    pub n: usize,
    pub options: ConditionalOptions,
}

fn resolve_threshold(norms: &[f64], th: Threshold) -> Result<f64> {
    match th {
        Threshold::Absolute(x) if x > 0.0 && x.is_finite() => Ok(x),
        Threshold::Absolute(x) => Err(invalid("threshold", format!("{x} must be positive"))),
        Threshold::Quantile(q) if q > 0.0 && q < 1.0 => {
            let mut v = norms.to_vec();
            let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
            let (_, x, _) = v.select_nth_unstable_by(idx, f64::total_cmp);
            Ok(*x)
        }
        Threshold::Quantile(q) => Err(invalid("threshold", format!("quantile {q} not in (0,1)"))),
    }
}

fn exceedances(norms: &[f64], x: f64, decluster: Decluster) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < norms.len() {
        if norms[t] <= x {
            t += 1;
            continue;
        }
        match decluster {
            Decluster::None => {
                out.push(t);
                t += 1;
            }
            Decluster::RunMax => {
                let mut best = t;
                while t < norms.len() && norms[t] > x {
                    if norms[t] > norms[best] {
                        best = t;
                    }
                    t += 1;
                }
                out.push(best);
            }
        }
    }
    out
}

/// Ratio estimates Σnum/Σden with a block bootstrap over time blocks.
fn block_bootstrap(num: &[Vec<f64>], den: &[f64], resamples: usize, seed: u64) -> Vec<(f64, f64)> {
    let nb = den.len();
    let total_den: f64 = den.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b007);
    let draws: Vec<Vec<usize>> = (0..resamples)
        .map(|_| (0..nb).map(|_| rng.random_range(0..nb)).collect())
        .collect();
    num.iter()
        .map(|nu| {
            let est = nu.iter().sum::<f64>() / total_den;
            let reps: Vec<f64> = draws
                .iter()
                .filter_map(|d| {
                    let dd: f64 = d.iter().map(|&i| den[i]).sum();
                    (dd > 0.0).then(|| d.iter().map(|&i| nu[i]).sum::<f64>() / dd)
                })
                .collect();
            let n = reps.len() as f64;
            let mean = reps.iter().sum::<f64>() / n;
            let var = reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            (est, var.sqrt())
        })
        .collect()
}

/// Frequencies of each region in `a` among exceedances lying in `b`.
pub fn conditional_frequencies(
    sample: &PathSample,
    sn: &SemiNorm,
    threshold: Threshold,
    a: &[Region],
    b: &Region,
    opts: &ConditionalOptions,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if opts.blocks < 2 {
        return Err(invalid("blocks", "need at least two blocks"));
    }
    let norms = sample.norms(sn);
    let x = resolve_threshold(&norms, threshold)?;
    let exc = exceedances(&norms, x, opts.decluster);
    let blocks = opts.blocks;
    let mut den = vec![0.0; blocks];
    let mut num = vec![vec![0.0; blocks]; a.len()];
    let mut buf = vec![0.0; sample.dim()];
    let mut n_cond = 0;
    for &t in &exc {
        sample.window(t, &mut buf);
        let n = norms[t];
        buf.iter_mut().for_each(|v| *v /= n);
        if !b.contains(&buf) {
            continue;
        }
        n_cond += 1;
        let blk = t * blocks / sample.len();
        den[blk] += 1.0;
        for (i, r) in a.iter().enumerate() {
            if r.contains(&buf) {
                num[i][blk] += 1.0;
            }
        }
    }
    if n_cond < opts.min_exceedances {
        return Err(Error::TooFewExceedances {
            found: n_cond,
            needed: opts.min_exceedances,
        });
    }
    Ok(block_bootstrap(&num, &den, opts.resamples, seed)
        .into_iter()
        .map(|(estimate, std_error)| Estimate {
            estimate,
            std_error,
            n_exceedances: exc.len(),
            n_conditioning: n_cond,
            threshold: x,
        })
        .collect())
}

/// P(X/‖X‖ ∈ A | ‖X‖ > x, X/‖X‖ ∈ B) estimated from one simulated sample.
pub fn empirical_conditional(exp: &TailExperiment, seed: u64) -> Result<Estimate> {
    if exp.n < 10_000 {
        return Err(invalid("n", format!("{} < 10000", exp.n)));
    }
    let sample = PathSample::simulate(&exp.model, &exp.seminorm, exp.n, seed)?;
    let mut r = conditional_frequencies(
        &sample,
        &exp.seminorm,
        exp.threshold,
        std::slice::from_ref(&exp.a),
        &exp.b,
        &exp.options,
        seed,
    )?;
    Ok(r.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub x: f64,
    /// x^α P̂(‖X‖ > x, X/‖X‖ ∈ A).
    pub estimate: f64,
    pub std_error: f64,
    pub n_exceedances: usize,
}

/// x^α P̂(‖X‖ > x, X/‖X‖ ∈ A) along a grid of thresholds.
pub fn empirical_scaling(
    model: &PathModel,
    sn: &SemiNorm,
    a: &Region,
    grid: &[Threshold],
    n: usize,
    seed: u64,
    blocks: usize,
) -> Result<Vec<ScalingPoint>> {
    let sample = PathSample::simulate(model, sn, n, seed)?;
    scaling_on(&sample, model.alpha(), sn, a, grid, blocks, seed)
}

pub fn scaling_on(
    sample: &PathSample,
    alpha: f64,
    sn: &SemiNorm,
    a: &Region,
    grid: &[Threshold],
    blocks: usize,
    seed: u64,
) -> Result<Vec<ScalingPoint>> {
    if blocks < 2 {
        return Err(invalid("blocks", "need at least two blocks"));
    }
    let norms = sample.norms(sn);
    let len = sample.len();
    let size: Vec<f64> = (0..blocks)
        .map(|b| ((b + 1) * len).div_ceil(blocks) as f64 - (b * len).div_ceil(blocks) as f64)
        .collect();
    let mut buf = vec![0.0; sample.dim()];
    grid.iter()
        .map(|&th| {
            let x = resolve_threshold(&norms, th)?;
            let mut hits = vec![0.0; blocks];
            let mut n_exc = 0;
            for t in (0..len).filter(|&t| norms[t] > x) {
                n_exc += 1;
                sample.window(t, &mut buf);
                let n = norms[t];
                buf.iter_mut().for_each(|v| *v /= n);
                if a.contains(&buf) {
                    hits[t * blocks / len] += 1.0;
                }
            }
            if n_exc < MIN_EXCEEDANCES {
                return Err(Error::TooFewExceedances {
                    found: n_exc,
                    needed: MIN_EXCEEDANCES,
                });
            }
            let xa = x.powf(alpha);
            let (est, se) = block_bootstrap(&[hits], &size, DEFAULT_RESAMPLES, seed)[0];
            Ok(ScalingPoint {
                x,
                estimate: xa * est,
                std_error: xa * se,
                n_exceedances: n_exc,
            })
        })
        .collect()
}
