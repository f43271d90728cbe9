//! Anticipative/non-anticipative AR(1) pair with dependent symmetric stable
//! noise, observed through X_t = (X1_t, X2_t) and predicted one step ahead.
//!
//! Path vectors are (X1_t, X2_t, X1_{t+1}, X2_{t+1}) with semi-norm
//! √(x1² + x2²).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seminorm::{euclid, SemiNorm};
use crate::spectral::{Atom, AtomLabel, DiscreteSpectralMeasure, Support, KERNEL_TOL};
use crate::stable::{check_alpha, NoiseStream, StableParams};

/// Slack for closed-set membership of computed coordinates.
const SET_TOL: f64 = 1e-9;

/// Semi-norm of the bivariate path vector.
pub fn bivar_seminorm() -> SemiNorm {
    SemiNorm::with_dims(2, 2, 2.0).expect("fixed dimensions")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivarModel {
    pub alpha: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Spectral measure of the noise on the unit circle.
    pub gamma2: DiscreteSpectralMeasure,
}

/// One half of a symmetric noise atom pair ±s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseAtom {
    pub s: [f64; 2],
    pub weight: f64,
}

impl BivarModel {
    pub fn new(alpha: f64, rho1: f64, rho2: f64, gamma2: DiscreteSpectralMeasure) -> Result<Self> {
        check_alpha(alpha)?;
        for (name, r) in [("rho1", rho1), ("rho2", rho2)] {
            if !(r != 0.0 && r.abs() < 1.0) {
                return Err(invalid(name, format!("{r} must satisfy 0 < |rho| < 1")));
            }
        }
        if gamma2.dim != 2 || gamma2.support != Support::EuclideanSphere {
            return Err(invalid("gamma2", "expected a measure on the unit circle"));
        }
        if (gamma2.alpha - alpha).abs() > 1e-15 {
            return Err(invalid("gamma2", "alpha differs from the model"));
        }
        if !gamma2.is_symmetric(1e-12) {
            return Err(invalid("gamma2", "noise spectral measure must be symmetric"));
        }
        Ok(Self {
            alpha,
            rho1,
            rho2,
            gamma2,
        })
    }

    /// Builds Γ₂ from half of the atoms: each s also contributes -s with the same weight.
    pub fn from_pairs(alpha: f64, rho1: f64, rho2: f64, pairs: &[NoiseAtom]) -> Result<Self> {
        let mut atoms = Vec::with_capacity(2 * pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            let n = euclid(&p.s);
            if !(n > 0.0) {
                return Err(invalid("gamma2", "zero noise direction"));
            }
            for theta in [1i8, -1] {
                let t = theta as f64;
                atoms.push(Atom::new(
                    vec![t * p.s[0] / n, t * p.s[1] / n],
                    p.weight,
                    AtomLabel { theta, j: i + 1, k: 0 },
                ));
            }
        }
        let g = DiscreteSpectralMeasure::from_atoms(alpha, Support::EuclideanSphere, atoms, None)?;
        Self::new(alpha, rho1, rho2, g)
    }

    /// σ_i^α = ∫ |s_i|^α Γ₂(ds).
    pub fn sigma_alpha(&self, i: usize) -> f64 {
        self.gamma2
            .atoms
            .iter()
            .map(|a| a.weight * a.point[i].abs().powf(self.alpha))
            .sum()
    }

    /// Representable on the cylinder iff Γ₂ does not charge (0, ±1).
    pub fn check_representable(&self) -> Result<()> {
        for a in &self.gamma2.atoms {
            if a.point[0].abs() <= KERNEL_TOL {
                return Err(Error::NotRepresentable {
                    reason: format!(
                        "noise spectral measure charges ({:+}, {:+}) with weight {:e}",
                        a.point[0], a.point[1], a.weight
                    ),
                });
            }
        }
        Ok(())
    }

    /// Weight of each of ±x₁ = ±(1, 0, 1/ρ₁, 0).
    pub fn delta1(&self) -> f64 {
        let q = self.rho1.abs().powf(self.alpha);
        self.sigma_alpha(0) / 2.0 * q * q / (1.0 - q)
    }

    /// Weight of each of ±x₂ = ±(0, 1, 0, ρ₂).
    pub fn delta2(&self) -> f64 {
        let q = self.rho2.abs().powf(self.alpha);
        self.sigma_alpha(1) / 2.0 * q / (1.0 - q)
    }

    /// Draws of ε_t for t in [start, start + out.len()); component i in `out[.][i]`.
    pub fn noise(&self, seed: u64, start: u64, out: &mut [[f64; 2]]) {
        for o in out.iter_mut() {
            *o = [0.0, 0.0];
        }
        let params = StableParams::standard(self.alpha, 0.0).expect("validated alpha");
        let mut z = vec![0.0; out.len()];
        // one stream per ± pair, keyed by the positive representative
        let mut pair = 0u64;
        for a in &self.gamma2.atoms {
            if !is_representative(&a.point) {
                continue;
            }
            NoiseStream::new(params, seed, pair).fill(start, &mut z);
            pair += 1;
            let scale = (2.0 * a.weight).powf(1.0 / self.alpha);
            for (o, zi) in out.iter_mut().zip(&z) {
                o[0] += scale * zi * a.point[0];
                o[1] += scale * zi * a.point[1];
            }
        }
    }

    /// Simulates (X1_t, X2_t) for t = 0..T, with burn-in on both sides.
    pub fn simulate(&self, t_len: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let burn = |r: f64| ((-40.0 / r.abs().log10()).ceil() as usize).max(1);
        let (b1, b2) = (burn(self.rho1), burn(self.rho2));
        let total = b2 + t_len + b1;
        let origin = crate::model::NOISE_ORIGIN;
        let mut eps = vec![[0.0; 2]; total];
        self.noise(seed, (origin - b2 as i64) as u64, &mut eps);
        let mut x1 = vec![0.0; total];
        let mut acc = 0.0;
        for t in (0..total).rev() {
            acc = self.rho1 * acc + eps[t][0];
            x1[t] = acc;
        }
        let mut x2 = vec![0.0; total];
        acc = 0.0;
        for t in 0..total {
            acc = self.rho2 * acc + eps[t][1];
            x2[t] = acc;
        }
        (x1[b2..b2 + t_len].to_vec(), x2[b2..b2 + t_len].to_vec())
    }
}

fn is_representative(p: &[f64]) -> bool {
    p[0] > 0.0 || (p[0] == 0.0 && p[1] > 0.0)
}

/// Spectral measure of the path vector, split into its three parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma4Measure {
    pub alpha: f64,
    /// ±x₁ then ±x₂.
    pub delta: Vec<Atom>,
    pub gamma41: Vec<Atom>,
    pub gamma42: Vec<Atom>,
}

impl Gamma4Measure {
    /// All parts as one cylinder measure, coincident atoms merged.
    pub fn measure(&self) -> Result<DiscreteSpectralMeasure> {
        let atoms = self
            .delta
            .iter()
            .chain(&self.gamma41)
            .chain(&self.gamma42)
            .cloned()
            .collect();
        DiscreteSpectralMeasure::from_atoms(
            self.alpha,
            Support::Cylinder {
                seminorm: bivar_seminorm(),
            },
            atoms,
            None,
        )
    }
}

/// Labels: j = 1 for ±x₁, 2 for ±x₂, 3 for the Γ₄,₁ image of Γ₂ atom k,
/// 4 for the Γ₄,₂ image of Γ₂ atom k.
pub fn gamma4_cylinder(model: &BivarModel) -> Result<Gamma4Measure> {
    model.check_representable()?;
    let (r1, r2, alpha) = (model.rho1, model.rho2, model.alpha);
    let lab = |theta: i8, j: usize, k: i64| AtomLabel { theta, j, k };
    let (d1, d2) = (model.delta1(), model.delta2());
    let mut delta = Vec::new();
    for theta in [1i8, -1] {
        let t = theta as f64;
        delta.push(Atom::new(vec![t, 0.0, t / r1, 0.0], d1, lab(theta, 1, 0)));
    }
    for theta in [1i8, -1] {
        let t = theta as f64;
        delta.push(Atom::new(vec![0.0, t, 0.0, t * r2], d2, lab(theta, 2, 0)));
    }
    delta.retain(|a| a.weight > 0.0);
    let mut gamma41 = Vec::new();
    let mut gamma42 = Vec::new();
    for (i, a) in model.gamma2.atoms.iter().enumerate() {
        let [s1, s2] = [a.point[0], a.point[1]];
        let n = s1.hypot(s2);
        let theta = if s1 > 0.0 || (s1 == 0.0 && s2 > 0.0) { 1 } else { -1 };
        gamma41.push(Atom::new(
            vec![s1 / n, s2 / n, 0.0, r2 * s2 / n],
            a.weight * n.powf(alpha),
            lab(theta, 3, i as i64),
        ));
        let th = (r1 * s1).signum();
        gamma42.push(Atom::new(
            vec![th, 0.0, th / r1, th * s2 / (r1 * s1)],
            a.weight * (r1 * s1).abs().powf(alpha),
            lab(th as i8, 4, i as i64),
        ));
    }
    Ok(Gamma4Measure {
        alpha,
        delta,
        gamma41,
        gamma42,
    })
}

/// The same measure obtained independently: Euclidean-sphere atoms of every
/// lag, truncated at `tol`, pushed to the cylinder.
pub fn gamma4_from_sphere(model: &BivarModel, tol: f64) -> Result<DiscreteSpectralMeasure> {
    model.check_representable()?;
    let (r1, r2, alpha) = (model.rho1, model.rho2, model.alpha);
    let lags = |r: f64| {
        let q = r.abs().powf(alpha);
        ((tol * (1.0 - q)).ln() / q.ln()).ceil().max(2.0) as i64
    };
    let (l1, l2) = (lags(r1), lags(r2));
    let mut atoms = Vec::new();
    for (i, a) in model.gamma2.atoms.iter().enumerate() {
        let [s1, s2] = [a.point[0], a.point[1]];
        for l in -l2..=l1 {
            let v = [
                if l >= 0 { r1.powi(l as i32) * s1 } else { 0.0 },
                if l <= 0 { r2.powi(-l as i32) * s2 } else { 0.0 },
                if l >= 1 { r1.powi(l as i32 - 1) * s1 } else { 0.0 },
                if l <= 1 { r2.powi(1 - l as i32) * s2 } else { 0.0 },
            ];
            let e = euclid(&v);
            if e == 0.0 {
                continue;
            }
            atoms.push(Atom::new(
                v.iter().map(|x| x / e).collect(),
                a.weight * e.powf(alpha),
                AtomLabel { theta: 1, j: i + 1, k: l },
            ));
        }
    }
    let g = DiscreteSpectralMeasure::from_atoms(alpha, Support::EuclideanSphere, atoms, None)?;
    g.to_cylinder(&bivar_seminorm())
}

/// Closed angular interval [θ-η, θ+η] on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub theta: f64,
    pub eta: f64,
}

impl Arc {
    pub fn new(theta: f64, eta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        if !(eta > 0.0 && eta < PI) {
            return Err(invalid("eta", format!("{eta} not in (0, pi)")));
        }
        Ok(Self { theta, eta })
    }

    pub fn contains_angle(&self, u: f64) -> bool {
        let d = (u - self.theta).rem_euclid(2.0 * PI);
        let d = if d > PI { 2.0 * PI - d } else { d };
        d <= self.eta + 1e-12
    }

    /// Direction of a nonzero planar vector.
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        (x1 != 0.0 || x2 != 0.0) && self.contains_angle(x2.atan2(x1))
    }
}

/// Closed interval; `None` ends are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn around(c: f64, r: f64) -> Self {
        Self::new(c - r, c + r)
    }

    pub fn real_line() -> Self {
        Self { lo: None, hi: None }
    }

    pub fn at_least(lo: f64) -> Self {
        Self { lo: Some(lo), hi: None }
    }

    pub fn at_most(hi: f64) -> Self {
        Self { lo: None, hi: Some(hi) }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|l| x >= l - SET_TOL) && self.hi.is_none_or(|h| x <= h + SET_TOL)
    }
}

/// P = P₁ × P₂ with each factor a finite union of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PSet {
    pub p1: Vec<Interval>,
    pub p2: Vec<Interval>,
}

impl PSet {
    pub fn new(p1: Vec<Interval>, p2: Vec<Interval>) -> Self {
        Self { p1, p2 }
    }

    pub fn rect(p1: Interval, p2: Interval) -> Self {
        Self::new(vec![p1], vec![p2])
    }

    pub fn in_p1(&self, x: f64) -> bool {
        self.p1.iter().any(|i| i.contains(x))
    }

    pub fn in_p2(&self, y: f64) -> bool {
        self.p2.iter().any(|i| i.contains(y))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.in_p1(x) && self.in_p2(y)
    }
}

/// B(V₀): observed direction in `v0`.
pub fn in_b(v0: &Arc, x: &[f64]) -> bool {
    v0.contains(x[0], x[1])
}

/// A_{θ,η,P}: observed direction in `v` and (x₃, x₄ - ρ₂x₂) ∈ P.
pub fn in_a(v: &Arc, p: &PSet, rho2: f64, x: &[f64]) -> bool {
    v.contains(x[0], x[1]) && p.contains(x[2], x[3] - rho2 * x[1])
}

/// Which limit formula applies to a conditioning arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BivarCase {
    /// Both components comparable.
    Comparable,
    /// Second component dominates, sign ϑ.
    SecondDominates { theta: i8 },
    /// First component dominates, sign ϑ.
    FirstDominates { theta: i8 },
}

pub fn select_case(v0: &Arc) -> Result<BivarCase> {
    let has = |a: f64, b: f64| v0.contains(a, b);
    let (e1p, e1m, e2p, e2m) = (has(1.0, 0.0), has(-1.0, 0.0), has(0.0, 1.0), has(0.0, -1.0));
    match (e1p, e1m, e2p, e2m) {
        (false, false, false, false) => Ok(BivarCase::Comparable),
        (false, false, true, false) => Ok(BivarCase::SecondDominates { theta: 1 }),
        (false, false, false, true) => Ok(BivarCase::SecondDominates { theta: -1 }),
        (true, false, false, false) => Ok(BivarCase::FirstDominates { theta: 1 }),
        (false, true, false, false) => Ok(BivarCase::FirstDominates { theta: -1 }),
        _ => Err(Error::UnsupportedConditioning {
            reason: format!(
                "arc [{:.6}, {:.6}] contains more than one axis direction",
                v0.theta - v0.eta,
                v0.theta + v0.eta
            ),
        }),
    }
}

/// Limit of P(path ∈ A_{θ,η,P} | ‖X_t‖ > x, X_t/‖X_t‖ ∈ V₀) as x → ∞.
pub fn bivar_tail(model: &BivarModel, v0: &Arc, v: &Arc, p: &PSet) -> Result<f64> {
    model.check_representable()?;
    let case = select_case(v0)?;
    let g2 = |f: &dyn Fn(&[f64]) -> bool| -> f64 {
        model
            .gamma2
            .atoms
            .iter()
            .filter(|a| f(&a.point))
            .map(|a| a.weight)
            .sum()
    };
    let g_v0 = g2(&|s| v0.contains(s[0], s[1]));
    let g_vv0 = g2(&|s| v0.contains(s[0], s[1]) && v.contains(s[0], s[1]));
    let at_origin = if p.contains(0.0, 0.0) { 1.0 } else { 0.0 };
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(Error::ZeroConditioningMass)
        }
    };
    match case {
        BivarCase::Comparable => ratio(g_vv0 * at_origin, g_v0),
        BivarCase::SecondDominates { theta } => {
            let d2 = model.delta2();
            let hit = if v.contains(0.0, theta as f64) { 1.0 } else { 0.0 };
            ratio((d2 * hit + g_vv0) * at_origin, d2 + g_v0)
        }
        BivarCase::FirstDominates { theta } => {
            let (r1, alpha) = (model.rho1, model.alpha);
            let t = theta as f64;
            let q = r1.abs().powf(alpha);
            let s1 = model.sigma_alpha(0);
            // ∫ |s₁|^α over both hemispheres of the lifted set S(P₂)
            let sigma_p2: f64 = 2.0
                * model
                    .gamma2
                    .atoms
                    .iter()
                    .filter(|a| {
                        let [a1, a2] = [a.point[0], a.point[1]];
                        (r1 * a1).signum() == t && p.in_p2(t * a2 / (r1 * a1))
                    })
                    .map(|a| a.weight * a.point[0].abs().powf(alpha))
                    .sum::<f64>();
            let zero_in_p2 = if p.in_p2(0.0) { 1.0 } else { 0.0 };
            let dir = if v.contains(t, 0.0) { 1.0 } else { 0.0 };
            let lead = if p.in_p1(t / r1) { 1.0 } else { 0.0 };
            let branch = (s1 / 2.0 * q * q / (1.0 - q) * zero_in_p2 + q / 2.0 * sigma_p2) * dir * lead;
            ratio(branch + g_vv0 * at_origin, s1 / 2.0 * q / (1.0 - q) + g_v0)
        }
    }
}

/// The same limit as a ratio of Γ₄ masses over the cylinder atoms.
pub fn bivar_tail_generic(
    measure: &DiscreteSpectralMeasure,
    rho2: f64,
    v0: &Arc,
    v: &Arc,
    p: &PSet,
) -> Result<f64> {
    crate::tailcond::conditional_ratio(
        measure,
        |a| in_a(v, p, rho2, &a.point),
        |a| in_b(v0, &a.point),
    )
}
