//! Discrete spectral measures of path vectors on the Euclidean sphere and on
//! semi-norm cylinders, plus past-representability diagnostics.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Aggregate, CoefficientKernel, TruncationPolicy, M0};
use crate::seminorm::{euclid, SemiNorm};
use crate::stable::is_alpha_one;

/// Relative tolerance under which two atom points are the same.
pub const MERGE_TOL: f64 = 1e-12;

/// Atoms whose observed block has norm below this lie in the kernel.
pub const KERNEL_TOL: f64 = 1e-13;

pub const DEFAULT_SEARCH_BOUND: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    EuclideanSphere,
    Cylinder { seminorm: SemiNorm },
}

/// Pattern index (ϑ, j, k). Components are numbered from 1; j = 0 marks
/// atoms shared by several components, such as the pure spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomLabel {
    pub theta: i8,
    pub j: usize,
    pub k: i64,
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}, {}, {})", self.theta, self.j, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
    pub label: AtomLabel,
    /// Number of (ϑ, j, k) terms merged into this atom.
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

impl Atom {
    pub fn new(point: Vec<f64>, weight: f64, label: AtomLabel) -> Self {
        Self {
            point,
            weight,
            label,
            multiplicity: 1,
        }
    }
}

/// Finite atomic measure plus the shift vector of the characteristic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectralMeasure {
    pub alpha: f64,
    pub dim: usize,
    pub support: Support,
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= MERGE_TOL * x.abs().max(y.abs()).max(1.0))
}

fn merge_labels(a: AtomLabel, b: AtomLabel) -> AtomLabel {
    AtomLabel {
        theta: a.theta,
        j: if a.j == b.j { a.j } else { 0 },
        k: a.k.min(b.k),
    }
}

fn orientation(x: &[f64]) -> f64 {
    x.iter()
        .find(|v| v.abs() > MERGE_TOL)
        .map_or(1.0, |v| v.signum())
}

/// Merges coincident atoms and drops zero weights; output sorted by first coordinate.
///
/// Clustering runs on sign-normalized points so that x and -x are grouped
/// the same way even when near-coincident atoms form chains.
pub fn dedup_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.retain(|a| a.weight > 0.0);
    let mut keyed: Vec<(Vec<f64>, f64, Atom)> = atoms
        .into_iter()
        .map(|a| {
            let s = orientation(&a.point);
            (a.point.iter().map(|v| v * s).collect(), s, a)
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.0[0]
            .total_cmp(&b.0[0])
            .then((a.2.label.j, a.2.label.k).cmp(&(b.2.label.j, b.2.label.k)))
            .then(a.1.total_cmp(&b.1))
    });
    let mut out: Vec<(Vec<f64>, f64, Atom)> = Vec::with_capacity(keyed.len());
    for (key, s, a) in keyed {
        let reach = MERGE_TOL * key[0].abs().max(1.0);
        let mut hit = None;
        for q in (0..out.len()).rev() {
            if out[q].0[0] < key[0] - reach {
                break;
            }
            if out[q].1 == s && same_point(&out[q].0, &key) {
                hit = Some(q);
                break;
            }
        }
        match hit {
            Some(q) => {
                let o = &mut out[q].2;
                o.weight += a.weight;
                o.label = merge_labels(o.label, a.label);
                o.multiplicity += a.multiplicity;
            }
            None => out.push((key, s, a)),
        }
    }
    let mut out: Vec<Atom> = out.into_iter().map(|(_, _, a)| a).collect();
    out.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.label.cmp(&b.label)));
    out
}

impl DiscreteSpectralMeasure {
    /// Builds a measure, checking the support invariant and merging coincident atoms.
    pub fn from_atoms(
        alpha: f64,
        support: Support,
        atoms: Vec<Atom>,
        shift: Option<Vec<f64>>,
    ) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|a| a.point.len())
            .ok_or_else(|| invalid("atoms", "measure has no atoms"))?;
        let m = Self {
            alpha,
            dim,
            support,
            atoms: dedup_atoms(atoms),
            shift,
        };
        m.validate()?;
        Ok(m)
    }

    /// Norm defining the support, evaluated at `x`.
    pub fn support_norm(&self, x: &[f64]) -> f64 {
        match &self.support {
            Support::EuclideanSphere => euclid(x),
            Support::Cylinder { seminorm } => seminorm.observed_norm(x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Support::Cylinder { seminorm } = &self.support {
            if seminorm.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: seminorm.dim(),
                    found: self.dim,
                });
            }
        }
        for a in &self.atoms {
            if a.point.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: a.point.len(),
                });
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(invalid("weight", format!("atom {} has weight {}", a.label, a.weight)));
            }
            let n = self.support_norm(&a.point);
            if (n - 1.0).abs() > 1e-12 {
                return Err(invalid("point", format!("atom {} has norm {n}", a.label)));
            }
        }
        if let Some(s) = &self.shift {
            if s.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: s.len(),
                });
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Atoms closed under negation with matching weights.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let mut by_x0: Vec<usize> = (0..self.atoms.len()).collect();
        by_x0.sort_by(|&a, &b| self.atoms[a].point[0].total_cmp(&self.atoms[b].point[0]));
        let keys: Vec<f64> = by_x0.iter().map(|&i| self.atoms[i].point[0]).collect();
        self.atoms.iter().all(|a| {
            let neg: Vec<f64> = a.point.iter().map(|v| -v).collect();
            let reach = MERGE_TOL * neg[0].abs().max(1.0);
            let start = keys.partition_point(|x| *x < neg[0] - reach);
            by_x0[start..]
                .iter()
                .take_while(|&&i| self.atoms[i].point[0] <= neg[0] + reach)
                .any(|&i| {
                    let b = &self.atoms[i];
                    same_point(&b.point, &neg)
                        && (b.weight - a.weight).abs() <= rel_tol * a.weight.max(b.weight)
                })
        })
    }

    /// Ψ(u) with E exp(i⟨u, X⟩) = exp(-Ψ(u)).
    pub fn char_exponent(&self, u: &[f64]) -> Complex64 {
        let alpha = self.alpha;
        let one = is_alpha_one(alpha);
        let tan = (PI * alpha / 2.0).tan();
        let mut psi = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            let x: f64 = u.iter().zip(&a.point).map(|(p, q)| p * q).sum();
            if x == 0.0 {
                continue;
            }
            let ax = x.abs();
            let term = if one {
                Complex64::new(ax, FRAC_2_PI * x * ax.ln())
            } else {
                let r = ax.powf(alpha);
                Complex64::new(r, -x.signum() * r * tan)
            };
            psi += a.weight * term;
        }
        if let Some(mu) = &self.shift {
            let x: f64 = u.iter().zip(mu).map(|(p, q)| p * q).sum();
            psi -= Complex64::new(0.0, x);
        }
        psi
    }

    /// Pushes sphere atoms onto the cylinder of `sn`: s ↦ s/‖s‖, weight w‖s‖^α.
    pub fn to_cylinder(&self, sn: &SemiNorm) -> Result<Self> {
        if self.support != Support::EuclideanSphere {
            return Err(invalid("support", "expected a measure on the Euclidean sphere"));
        }
        if sn.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: sn.dim(),
                found: self.dim,
            });
        }
        let alpha = self.alpha;
        let mut atoms = Vec::with_capacity(self.atoms.len());
        let mut mu_tilde = vec![0.0; self.dim];
        for a in &self.atoms {
            let n = sn.observed_norm(&a.point);
            if n <= KERNEL_TOL {
                return Err(Error::NotRepresentable {
                    reason: format!(
                        "atom {} with weight {:e} lies in the semi-norm kernel",
                        a.label, a.weight
                    ),
                });
            }
            if self.shift.is_some() {
                for (m, s) in mu_tilde.iter_mut().zip(&a.point) {
                    *m -= FRAC_2_PI * a.weight * s * n.ln();
                }
            }
            atoms.push(Atom {
                point: a.point.iter().map(|v| v / n).collect(),
                weight: a.weight * n.powf(alpha),
                label: a.label,
                multiplicity: a.multiplicity,
            });
        }
        let shift = self
            .shift
            .as_ref()
            .map(|mu| mu.iter().zip(&mu_tilde).map(|(a, b)| a + b).collect());
        Ok(Self {
            alpha,
            dim: self.dim,
            support: Support::Cylinder { seminorm: *sn },
            atoms,
            shift,
        })
    }

    /// Inverse of [`to_cylinder`](Self::to_cylinder).
    pub fn to_sphere(&self) -> Result<Self> {
        if self.support == Support::EuclideanSphere {
            return Ok(self.clone());
        }
        let alpha = self.alpha;
        let mut mu_tilde = vec![0.0; self.dim];
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let e = euclid(&a.point);
                if self.shift.is_some() {
                    for (m, s) in mu_tilde.iter_mut().zip(&a.point) {
                        *m += FRAC_2_PI * a.weight * s * e.ln();
                    }
                }
                Atom {
                    point: a.point.iter().map(|v| v / e).collect(),
                    weight: a.weight * e.powf(alpha),
                    label: a.label,
                    multiplicity: a.multiplicity,
                }
            })
            .collect();
        let shift = self
            .shift
            .as_ref()
            .map(|mu| mu.iter().zip(&mu_tilde).map(|(a, b)| a - b).collect());
        Ok(Self {
            alpha,
            dim: self.dim,
            support: Support::EuclideanSphere,
            atoms,
            shift,
        })
    }
}

/// Only the oldest coordinate is nonzero.
pub fn is_spike(x: &[f64]) -> bool {
    x[0] != 0.0 && x[1..].iter().all(|v| *v == 0.0)
}

/// Coefficients d_lo ..= d_hi of one component.
fn coeff_block(kernel: &dyn CoefficientKernel, lo: i64, hi: i64) -> Vec<f64> {
    kernel.coeffs(lo, hi)
}

/// Spectral measure of (X_{t-m}, ..., X_{t+h}) on the Euclidean sphere.
///
/// Lags are truncated so that the omitted mass stays below `trunc.tol`.
pub fn euclidean_spectral_measure(
    agg: &Aggregate,
    m: usize,
    h: usize,
    trunc: &TruncationPolicy,
) -> Result<DiscreteSpectralMeasure> {
    let alpha = agg.alpha();
    let dim = m + h + 1;
    let one = is_alpha_one(alpha);
    let per_lag = trunc.tol / dim as f64;
    let mut atoms = Vec::new();
    let mut shift = vec![0.0; dim];
    for (j, comp) in agg.components().iter().enumerate() {
        let (lo, hi) = agg.window(j, per_lag, trunc.max_lag)?;
        let (klo, khi) = (lo - m as i64, hi + h as i64);
        // coefficients d_{klo-h} ..= d_{khi+m}
        let base = klo - h as i64;
        let c = coeff_block(comp.kernel.as_ref(), base, khi + m as i64);
        let pa = comp.pi.powf(alpha);
        let w = [(1.0 - comp.beta) / 2.0, (1.0 + comp.beta) / 2.0];
        let local: Vec<(Vec<Atom>, Vec<f64>)> = (klo..=khi)
            .into_par_iter()
            .map(|k| {
                // oldest first: d_{k+m}, ..., d_{k-h}
                let off = (k - base) as usize;
                let v: Vec<f64> = (0..dim).map(|i| c[off + m - i]).collect();
                let e = euclid(&v);
                let mut mu = Vec::new();
                let mut out = Vec::new();
                if e == 0.0 {
                    return (out, mu);
                }
                if one && comp.beta != 0.0 {
                    let l = (comp.pi * e).ln();
                    mu = v.iter().map(|x| -FRAC_2_PI * comp.pi * comp.beta * x * l).collect();
                }
                for (ti, theta) in [-1i8, 1].into_iter().enumerate() {
                    let weight = w[ti] * pa * e.powf(alpha);
                    if weight > 0.0 {
                        out.push(Atom::new(
                            v.iter().map(|x| theta as f64 * x / e).collect(),
                            weight,
                            AtomLabel {
                                theta,
                                j: j + 1,
                                k,
                            },
                        ));
                    }
                }
                (out, mu)
            })
            .collect();
        for (a, mu) in local {
            atoms.extend(a);
            for (s, x) in shift.iter_mut().zip(mu) {
                *s += x;
            }
        }
    }
    let shift = (one && !agg.is_symmetric()).then_some(shift);
    let mut g = DiscreteSpectralMeasure::from_atoms(alpha, Support::EuclideanSphere, atoms, shift)?;
    for a in g.atoms.iter_mut() {
        if is_spike(&a.point) {
            a.label.j = 0;
        }
    }
    Ok(g)
}

/// Spectral measure of the path vector on the cylinder of `sn`.
pub fn cylinder_spectral_measure(
    agg: &Aggregate,
    sn: &SemiNorm,
    trunc: &TruncationPolicy,
) -> Result<DiscreteSpectralMeasure> {
    euclidean_spectral_measure(agg, sn.m(), sn.h(), trunc)?.to_cylinder(sn)
}

pub fn compute_m0(kernel: &dyn CoefficientKernel, search_bound: usize) -> M0 {
    kernel.m0(search_bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Representability {
    Yes {
        m0: Vec<M0>,
        /// Σ_k ‖d_k‖_e |ln(‖d_k‖/‖d_k‖_e)| per component, for asymmetric α = 1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_sums: Option<Vec<f64>>,
    },
    No {
        m0: Vec<M0>,
        reason: String,
    },
}

impl Representability {
    pub fn is_yes(&self) -> bool {
        matches!(self, Representability::Yes { .. })
    }
}

fn log_sum(agg: &Aggregate, j: usize, m: usize, h: usize) -> Result<f64> {
    let trunc = TruncationPolicy::default();
    let (lo, hi) = agg.window(j, trunc.tol, trunc.max_lag)?;
    let sn = SemiNorm::with_dims(m + 1, h, 2.0)?;
    let mut s = 0.0;
    for k in lo - m as i64..=hi + h as i64 {
        let v = agg.path_kernel(j, k, m, h).vector;
        let e = euclid(&v);
        if e > 0.0 {
            let n = sn.observed_norm(&v);
            s += e * (n / e).ln().abs();
        }
    }
    Ok(s)
}

/// Decides (m, h)-past-representability of an aggregate.
pub fn is_past_representable(agg: &Aggregate, m: usize, h: usize) -> Representability {
    let m0: Vec<M0> = agg
        .components()
        .iter()
        .map(|c| compute_m0(c.kernel.as_ref(), DEFAULT_SEARCH_BOUND))
        .collect();
    if let Some(j) = m0.iter().position(|x| !x.is_finite()) {
        return Representability::No {
            reason: format!(
                "component {} ({}) has m0 = infinite: its forward coefficients are eventually zero, so it is not past-representable",
                j + 1,
                agg.components()[j].kernel.kind()
            ),
            m0,
        };
    }
    let need = m0.iter().max().copied().unwrap_or(M0::Finite(0));
    if M0::Finite(m) < need {
        return Representability::No {
            reason: format!("not past-representable: m = {m} < m0 = {need}"),
            m0,
        };
    }
    let log_sums = if is_alpha_one(agg.alpha()) && !agg.is_symmetric() {
        // finite for every supported kind once m ≥ m0; reported for inspection
        let sums: Vec<f64> = (0..agg.len())
            .map(|j| log_sum(agg, j, m, h).unwrap_or(f64::NAN))
            .collect();
        if let Some(j) = sums.iter().position(|s| s.is_infinite()) {
            return Representability::No {
                reason: format!("alpha = 1 log condition diverges for component {}", j + 1),
                m0,
            };
        }
        Some(sums)
    } else {
        None
    };
    Representability::Yes { m0, log_sums }
}
