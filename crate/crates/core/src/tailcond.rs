//! Tail-conditional distributions of normalized paths as ratios of spectral mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Aggregate, TruncationPolicy};
use crate::seminorm::SemiNorm;
use crate::spectral::{
    cylinder_spectral_measure, is_past_representable, Atom, AtomLabel, DiscreteSpectralMeasure,
    Representability, Support,
};
use crate::stable::{check_alpha, check_beta};

/// Default sup-distance tolerance for matching an observed pattern.
pub const DEFAULT_MATCH_TOL: f64 = 1e-6;

/// Observed parts closer than this belong to the same class.
const CLASS_TOL: f64 = 1e-9;

/// Γ(A ∩ B) / Γ(B) over the atoms of a measure.
pub fn conditional_ratio(
    measure: &DiscreteSpectralMeasure,
    a: impl Fn(&Atom) -> bool,
    b: impl Fn(&Atom) -> bool,
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for atom in measure.atoms.iter().filter(|x| b(x)) {
        den += atom.weight;
        if a(atom) {
            num += atom.weight;
        }
    }
    if den <= 0.0 {
        return Err(Error::ZeroConditioningMass);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub label: AtomLabel,
    /// Full normalized path ϑ d_{j,k} / ‖d_{j,k}‖.
    pub point: Vec<f64>,
    pub weight: f64,
    pub probability: f64,
}

/// The conditioning set V₀: atoms whose observed block equals `pattern`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// Observation divided by its semi-norm.
    pub observed: Vec<f64>,
    pub pattern: Vec<f64>,
    /// Sup-distance between `observed` and `pattern`.
    pub distance: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDistribution {
    pub entries: Vec<PatternEntry>,
    pub conditioning: Conditioning,
}

impl PatternDistribution {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.entries.len() == 1
    }

    pub fn probability_of(&self, label: AtomLabel) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.probability)
            .sum()
    }

    /// Entry with the largest probability.
    pub fn mode(&self) -> Option<&PatternEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.probability.total_cmp(&b.probability))
    }
}

/// One V₀ class of atoms sharing an observed block.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedClass {
    pub pattern: Vec<f64>,
    pub distance: f64,
    /// Indices into the measure's atoms.
    pub atoms: Vec<usize>,
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |d, (x, y)| d.max((x - y).abs()))
}

fn check_cylinder(measure: &DiscreteSpectralMeasure, sn: &SemiNorm) -> Result<()> {
    match measure.support {
        Support::Cylinder { seminorm } if seminorm == *sn => Ok(()),
        _ => Err(invalid(
            "measure",
            "expected a measure on the cylinder of the given semi-norm",
        )),
    }
}

/// Normalizes `observed` and groups all atoms within `tol` of it into classes,
/// nearest class first.
pub fn match_pattern(
    observed: &[f64],
    measure: &DiscreteSpectralMeasure,
    sn: &SemiNorm,
    tol: f64,
) -> Result<(Vec<f64>, Vec<MatchedClass>)> {
    check_cylinder(measure, sn)?;
    let q = sn.observed_dim();
    if observed.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: observed.len(),
        });
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(invalid("tol", format!("{tol} must be finite and non-negative")));
    }
    let n = sn.p_norm(observed);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::KernelVector);
    }
    let z: Vec<f64> = observed.iter().map(|v| v / n).collect();
    let mut classes: Vec<MatchedClass> = Vec::new();
    for (i, a) in measure.atoms.iter().enumerate() {
        let f = &a.point[..q];
        let d = sup_dist(f, &z);
        if d > tol {
            continue;
        }
        match classes
            .iter_mut()
            .find(|c| sup_dist(&c.pattern, f) <= CLASS_TOL)
        {
            Some(c) => c.atoms.push(i),
            None => classes.push(MatchedClass {
                pattern: f.to_vec(),
                distance: d,
                atoms: vec![i],
            }),
        }
    }
    if classes.is_empty() {
        return Err(Error::NoMatch { tol });
    }
    classes.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok((z, classes))
}

/// Conditional distributions for every matched class, nearest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub classes: Vec<PatternDistribution>,
}

impl Prediction {
    /// Distribution for the nearest class.
    pub fn primary(&self) -> &PatternDistribution {
        &self.classes[0]
    }
}

/// Prediction against an already built cylinder measure.
pub fn predict_on(
    measure: &DiscreteSpectralMeasure,
    sn: &SemiNorm,
    observed: &[f64],
    tol: f64,
) -> Result<Prediction> {
    let (z, classes) = match_pattern(observed, measure, sn, tol)?;
    let classes = classes
        .into_iter()
        .map(|c| {
            let total: f64 = c.atoms.iter().map(|&i| measure.atoms[i].weight).sum();
            if total <= 0.0 {
                return Err(Error::ZeroConditioningMass);
            }
            let mut entries: Vec<PatternEntry> = c
                .atoms
                .iter()
                .map(|&i| {
                    let a = &measure.atoms[i];
                    PatternEntry {
                        label: a.label,
                        point: a.point.clone(),
                        weight: a.weight,
                        probability: a.weight / total,
                    }
                })
                .collect();
            entries.sort_by_key(|a| a.label);
            Ok(PatternDistribution {
                entries,
                conditioning: Conditioning {
                    observed: z.clone(),
                    pattern: c.pattern,
                    distance: c.distance,
                    tol,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prediction { classes })
}

fn representable_measure(
    agg: &Aggregate,
    sn: &SemiNorm,
    trunc: &TruncationPolicy,
) -> Result<DiscreteSpectralMeasure> {
    if let Representability::No { reason, .. } = is_past_representable(agg, sn.m(), sn.h()) {
        return Err(Error::NotRepresentable { reason });
    }
    cylinder_spectral_measure(agg, sn, trunc)
}

/// Limit law of the normalized path given that its observed block is
/// (up to scale) `observed`.
pub fn predict(agg: &Aggregate, sn: &SemiNorm, observed: &[f64], tol: f64) -> Result<Prediction> {
    predict_with(agg, sn, observed, tol, &TruncationPolicy::default())
}

pub fn predict_with(
    agg: &Aggregate,
    sn: &SemiNorm,
    observed: &[f64],
    tol: f64,
    trunc: &TruncationPolicy,
) -> Result<Prediction> {
    let g = representable_measure(agg, sn, trunc)?;
    predict_on(&g, sn, observed, tol)
}

/// Predictions for many observed windows sharing one measure.
pub fn predict_many(
    agg: &Aggregate,
    sn: &SemiNorm,
    observed: &[Vec<f64>],
    tol: f64,
    trunc: &TruncationPolicy,
) -> Result<Vec<Result<Prediction>>> {
    let g = representable_measure(agg, sn, trunc)?;
    Ok(observed
        .par_iter()
        .map(|x| predict_on(&g, sn, x, tol))
        .collect())
}

/// Conditioning pattern (ϑ₀, j₀, k₀) for the aggregated AR(1) closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggAr1Case {
    pub theta0: i8,
    /// Component index, numbered from 1.
    pub j0: usize,
    pub k0: i64,
}

/// d_{j,k} of an AR(1) with coefficient ρ, oldest first.
fn ar1_path(rho: f64, k: i64, m: usize, h: usize) -> Vec<f64> {
    (0..=m + h)
        .map(|i| {
            let l = k + m as i64 - i as i64;
            if l >= 0 {
                rho.powi(l as i32)
            } else {
                0.0
            }
        })
        .collect()
}

/// Exact conditional distribution for a sum of anticipative AR(1) with
/// positive coefficients.
pub fn aggar1_closed_form(
    rhos: &[f64],
    pis: &[f64],
    betas: &[f64],
    alpha: f64,
    sn: &SemiNorm,
    case: AggAr1Case,
) -> Result<PatternDistribution> {
    check_alpha(alpha)?;
    let nj = rhos.len();
    if nj == 0 {
        return Err(invalid("rhos", "at least one component required"));
    }
    if pis.len() != nj || betas.len() != nj {
        return Err(Error::DimensionMismatch {
            expected: nj,
            found: if pis.len() != nj { pis.len() } else { betas.len() },
        });
    }
    for (i, &r) in rhos.iter().enumerate() {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid("rho", format!("{r} not in (0,1); closed form needs positive rho")));
        }
        if rhos[..i].contains(&r) {
            return Err(invalid("rho", format!("{r} repeated")));
        }
    }
    for &p in pis {
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid("pi", format!("{p} must be positive")));
        }
    }
    for &b in betas {
        check_beta(b)?;
    }
    let (m, h) = (sn.m(), sn.h());
    let AggAr1Case { theta0, j0, k0 } = case;
    if theta0 != 1 && theta0 != -1 {
        return Err(invalid("theta0", "must be +1 or -1"));
    }
    if !(1..=nj).contains(&j0) {
        return Err(invalid("j0", format!("{j0} not in 1..={nj}")));
    }
    if k0 < -(m as i64) || k0 > h as i64 {
        return Err(invalid("k0", format!("{k0} not in [-{m}, {h}]")));
    }
    let w = |j: usize| (1.0 + theta0 as f64 * betas[j]) / 2.0;
    let th = theta0 as f64;
    let point = |j: usize, k: i64| -> Result<Vec<f64>> {
        let v = ar1_path(rhos[j], k, m, h);
        let n = sn.evaluate(&v)?;
        Ok(v.iter().map(|x| th * x / n).collect())
    };
    let spike = || -> Vec<f64> {
        let mut p = vec![0.0; m + h + 1];
        p[0] = th;
        p
    };
    let mut raw: Vec<(AtomLabel, Vec<f64>, f64)> = Vec::new();
    let lab = |j: usize, k: i64| AtomLabel { theta: theta0, j, k };
    let j = j0 - 1;
    if m >= 1 && k0 >= 0 {
        if w(j) == 0.0 {
            return Err(Error::ZeroConditioningMass);
        }
        let q = rhos[j].powf(alpha);
        for k in 0..h as i64 {
            raw.push((lab(j0, k), point(j, k)?, q.powi(k as i32) * (1.0 - q)));
        }
        raw.push((lab(j0, h as i64), point(j, h as i64)?, q.powi(h as i32)));
    } else if m >= 1 {
        if k0 == -(m as i64) {
            let mass: f64 = (0..nj).map(|i| pis[i].powf(alpha) * w(i)).sum();
            if mass == 0.0 {
                return Err(Error::ZeroConditioningMass);
            }
            raw.push((lab(0, k0), spike(), 1.0));
        } else {
            if w(j) == 0.0 {
                return Err(Error::ZeroConditioningMass);
            }
            raw.push((lab(j0, k0), point(j, k0)?, 1.0));
        }
    } else {
        let p: Vec<f64> = (0..nj)
            .map(|i| pis[i].powf(alpha) * w(i) / (1.0 - rhos[i].powf(alpha)))
            .collect();
        let sp: f64 = p.iter().sum();
        if sp == 0.0 {
            return Err(Error::ZeroConditioningMass);
        }
        let s0: f64 = (0..nj).map(|i| pis[i].powf(alpha) * w(i)).sum();
        raw.push((lab(0, 0), spike(), s0 / sp));
        for i in 0..nj {
            let q = rhos[i].powf(alpha);
            for k in 1..h as i64 {
                raw.push((lab(i + 1, k), point(i, k)?, p[i] / sp * q.powi(k as i32) * (1.0 - q)));
            }
            raw.push((lab(i + 1, h as i64), point(i, h as i64)?, p[i] / sp * q.powi(h as i32)));
        }
    }
    let mut entries: Vec<PatternEntry> = raw
        .into_iter()
        .filter(|(_, _, pr)| *pr > 0.0)
        .map(|(label, point, probability)| PatternEntry {
            label,
            point,
            weight: probability,
            probability,
        })
        .collect();
    entries.sort_by_key(|a| a.label);
    let pattern = if m == 0 { vec![th] } else { entries[0].point[..m + 1].to_vec() };
    Ok(PatternDistribution {
        entries,
        conditioning: Conditioning {
            observed: pattern.clone(),
            pattern,
            distance: 0.0,
            tol: 0.0,
        },
    })
}
