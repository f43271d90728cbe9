//! Coefficient sequences, aggregates of moving averages and their path kernels.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::stable::{check_alpha, check_beta};

mod aggregate;
mod ar1;
mod ar2;
mod arma;
mod explicit;
mod frac;
pub mod simulate;
mod strophoid;

pub use aggregate::{Aggregate, Component, PathKernel};
pub use ar1::{Ar1, Ar1Backward};
pub use ar2::{Ar2, Root};
pub use arma::{poly_from_roots, poly_roots, Arma, ArmaParams};
pub use explicit::Explicit;
pub use frac::FracInt;
pub use simulate::{simulate, Simulation, NOISE_ORIGIN};
pub use strophoid::{strophoid_coeff, Strophoid};

/// Largest run of zeros preceding a nonzero coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum M0 {
    Finite(usize),
    Infinite,
}

impl M0 {
    pub fn is_finite(&self) -> bool {
        matches!(self, M0::Finite(_))
    }
}

impl From<usize> for M0 {
    fn from(m: usize) -> Self {
        M0::Finite(m)
    }
}

impl fmt::Display for M0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            M0::Finite(m) => write!(f, "{m}"),
            M0::Infinite => write!(f, "infinite"),
        }
    }
}

impl Serialize for M0 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            M0::Finite(m) => s.serialize_u64(*m as u64),
            M0::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for M0 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(M0::Finite(n as usize)),
            Raw::S(s) if s == "infinite" => Ok(M0::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad m0 `{s}`"))),
        }
    }
}

/// A two-sided coefficient sequence (d_k).
pub trait CoefficientKernel: fmt::Debug + Send + Sync {
    /// Registry name.
    fn kind(&self) -> &'static str;

    /// Parameters in the form accepted by the registry constructor.
    fn params(&self) -> Value;

    fn coeff(&self, k: i64) -> f64;

    /// d_lo ..= d_hi.
    fn coeffs(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|k| self.coeff(k)).collect()
    }

    /// Inclusive support bounds; `None` marks an infinite side.
    fn support(&self) -> (Option<i64>, Option<i64>);

    /// Upper bound on Σ_{k<lo} |d_k|^α + Σ_{k>hi} |d_k|^α.
    fn tail_bound(&self, alpha: f64, lo: i64, hi: i64) -> f64;

    fn m0(&self, search_bound: usize) -> M0;

    /// Kind-specific restrictions on α.
    fn check_alpha(&self, _alpha: f64) -> Result<()> {
        Ok(())
    }
}

/// Discarded α-mass tolerance for truncated sums over k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_lag")]
    pub max_lag: i64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_lag() -> i64 {
    1_000_000
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_lag: default_max_lag(),
        }
    }
}

impl TruncationPolicy {
    pub fn new(tol: f64, max_lag: i64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if max_lag < 1 {
            return Err(invalid("max_lag", "must be at least 1"));
        }
        Ok(Self { tol, max_lag })
    }

    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Smallest symmetric-in-spirit window [lo, hi] whose discarded α-mass is below `tol`.
pub fn lag_window(
    kernel: &dyn CoefficientKernel,
    alpha: f64,
    tol: f64,
    max_lag: i64,
) -> Result<(i64, i64)> {
    let (slo, shi) = kernel.support();
    let window = |n: i64| -> (i64, i64) {
        let lo = slo.unwrap_or(-n);
        let hi = shi.unwrap_or(n).max(lo);
        (lo.min(hi), hi)
    };
    if slo.is_some() && shi.is_some() {
        return Ok(window(0));
    }
    let ok = |n: i64| {
        let (lo, hi) = window(n);
        kernel.tail_bound(alpha, lo, hi) < tol
    };
    let mut n = 8i64;
    while !ok(n) {
        if n >= max_lag {
            let (lo, hi) = window(max_lag);
            return Err(Error::TruncationUnreachable {
                tol,
                max_lag,
                bound: kernel.tail_bound(alpha, lo, hi),
            });
        }
        n = (n * 2).min(max_lag);
    }
    let (mut a, mut b) = (n / 2, n);
    while b - a > 1 {
        let c = (a + b) / 2;
        if ok(c) {
            b = c;
        } else {
            a = c;
        }
    }
    Ok(window(b))
}

/// Longest run of zeros sitting directly above a nonzero coefficient in
/// d_lo ..= d_hi (index 0 of `d` is d_lo).
pub(crate) fn scan_zero_runs(d: &[f64], zero: impl Fn(usize) -> bool) -> usize {
    let mut best = 0usize;
    let mut run = 0usize;
    for i in (0..d.len()).rev() {
        if zero(i) {
            run += 1;
        } else {
            best = best.max(run);
            run = 0;
        }
    }
    best
}

/// Builds a kernel from its parameters.
pub type KernelCtor = fn(&Value) -> Result<Arc<dyn CoefficientKernel>>;

/// Name → constructor map used by configuration front ends.
#[derive(Clone)]
pub struct KernelRegistry {
    ctors: BTreeMap<&'static str, KernelCtor>,
}

impl fmt::Debug for KernelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ctors.keys()).finish()
    }
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T> {
    Ok(serde_json::from_value(v.clone())?)
}

impl KernelRegistry {
    pub fn empty() -> Self {
        Self {
            ctors: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("ar1", |v| Ok(Arc::new(Ar1::from_params(parse(v)?)?)));
        r.register("ar1_backward", |v| {
            Ok(Arc::new(Ar1Backward::from_params(parse(v)?)?))
        });
        r.register("ar2", |v| Ok(Arc::new(Ar2::from_params(parse(v)?)?)));
        r.register("frac_int", |v| Ok(Arc::new(FracInt::from_params(parse(v)?)?)));
        r.register("arma", |v| Ok(Arc::new(Arma::from_params(parse(v)?)?)));
        r.register("strophoid", |v| {
            Ok(Arc::new(Strophoid::from_params(parse(v)?)?))
        });
        r.register("explicit", |v| Ok(Arc::new(Explicit::from_params(parse(v)?)?)));
        r
    }

    pub fn register(&mut self, name: &'static str, ctor: KernelCtor) {
        self.ctors.insert(name, ctor);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.ctors.keys().copied()
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<Arc<dyn CoefficientKernel>> {
        let ctor = self
            .ctors
            .get(name)
            .ok_or_else(|| Error::UnknownKind(name.to_string()))?;
        ctor(params)
    }
}

impl Default for KernelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

pub(crate) fn check_component(alpha: f64, pi: f64, beta: f64) -> Result<()> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    if !(pi > 0.0 && pi.is_finite()) {
        return Err(invalid("pi", format!("{pi} must be positive")));
    }
    Ok(())
}

/// Geometric tail Σ_{k>n} r^{αk} with r < 1.
pub(crate) fn geometric_tail(r: f64, alpha: f64, n: i64) -> f64 {
    let q = r.powf(alpha);
    q.powf((n + 1) as f64) / (1.0 - q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn registry_builds_every_kind() {
        let r = KernelRegistry::builtin();
        let cases = [
            ("ar1", json!({"rho": 0.5})),
            ("ar1_backward", json!({"rho": 0.5})),
            ("ar2", json!({"lambda1": 0.5, "lambda2": 0.7})),
            ("frac_int", json!({"d": 0.2})),
            ("arma", json!({"psi": [1.0, -0.5], "phi": [1.0], "theta": [1.0], "h": [1.0]})),
            ("strophoid", json!({"a": 1.0, "b": 5.0, "seed": 3})),
            ("explicit", json!({"coeffs": [[0, 1.0], [-2, 1.0]]})),
        ];
        for (name, p) in cases {
            let k = r.build(name, &p).unwrap();
            assert_eq!(k.kind(), name);
            let again = r.build(name, &k.params()).unwrap();
            assert_eq!(again.coeffs(-5, 5), k.coeffs(-5, 5));
        }
        assert!(matches!(
            r.build("nope", &json!({})),
            Err(Error::UnknownKind(_))
        ));
        assert!(r.build("ar1", &json!({"rho": 0.5, "extra": 1})).is_err());
    }

    #[test]
    fn zero_run_scan() {
        // d_{-2}=1, d_{-1}=0, d_0=1
        let d = [1.0, 0.0, 1.0];
        assert_eq!(scan_zero_runs(&d, |i| d[i] == 0.0), 1);
        let e = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert_eq!(scan_zero_runs(&e, |i| e[i] == 0.0), 3);
    }

    #[test]
    fn m0_serde() {
        assert_eq!(serde_json::to_string(&M0::Infinite).unwrap(), "\"infinite\"");
        let m: M0 = serde_json::from_str("3").unwrap();
        assert_eq!(m, M0::Finite(3));
    }
}
