use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{scan_zero_runs, CoefficientKernel, M0};
use crate::error::{invalid, Result};

/// Polynomials in ascending powers: `[c0, c1, ...]` is c0 + c1 z + ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmaParams {
    pub psi: Vec<f64>,
    #[serde(default = "one")]
    pub phi: Vec<f64>,
    #[serde(default = "one")]
    pub theta: Vec<f64>,
    #[serde(default = "one")]
    pub h: Vec<f64>,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

/// ψ(F) φ(B) X_t = Θ(F) H(B) ε_t with every root outside the unit disk.
#[derive(Debug, Clone)]
pub struct Arma {
    params: ArmaParams,
    /// d_k for k in lo ..= lo + d.len() - 1
    d: Vec<f64>,
    lo: i64,
    rate_fwd: f64,
    rate_bwd: f64,
}

fn trim(name: &'static str, p: &[f64]) -> Result<Vec<f64>> {
    let mut v = p.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    if v.is_empty() || v[0] == 0.0 || v.iter().any(|c| !c.is_finite()) {
        return Err(invalid(name, "need finite coefficients and a nonzero constant term"));
    }
    Ok(v)
}

/// Roots of c0 + c1 z + ... + cp z^p via the companion matrix.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let p = c.len() - 1;
    if p == 0 {
        return Vec::new();
    }
    let lead = c[p];
    let mut m = DMatrix::<f64>::zeros(p, p);
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..p {
        m[(i, p - 1)] = -c[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Real coefficients of Π (1 - z / r_i); complex roots must come in conjugate pairs.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci / r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

/// Power series of num / den up to `n` terms.
fn series(num: &[f64], den: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n];
    for k in 0..n {
        let mut s = num.get(k).copied().unwrap_or(0.0);
        for i in 1..den.len().min(k + 1) {
            s -= den[i] * a[k - i];
        }
        a[k] = s / den[0];
    }
    a
}

const MAX_TERMS: usize = 2_000_000;

fn series_len(den_roots: &[Complex64], num_deg: usize, mult: usize) -> (usize, f64) {
    if den_roots.is_empty() {
        return (num_deg + 1, 0.0);
    }
    let rmin = den_roots.iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min);
    let rate = 1.0 / rmin;
    let n = (-46.0 / rate.ln()).ceil() as usize + 20 * mult + num_deg + 8;
    (n.min(MAX_TERMS), rate)
}

fn check_roots(name: &'static str, roots: &[Complex64]) -> Result<()> {
    if let Some(r) = roots.iter().find(|r| r.norm() <= 1.0 + 1e-9) {
        return Err(invalid(name, format!("root {r} is not outside the unit disk")));
    }
    Ok(())
}

fn check_coprime(name: &'static str, a: &[Complex64], b: &[Complex64]) -> Result<()> {
    for x in a {
        for y in b {
            if (x - y).norm() <= 1e-7 * x.norm().max(1.0) {
                return Err(invalid(name, format!("common root {x}")));
            }
        }
    }
    Ok(())
}

impl Arma {
    pub fn new(params: ArmaParams) -> Result<Self> {
        let psi = trim("psi", &params.psi)?;
        let phi = trim("phi", &params.phi)?;
        let theta = trim("theta", &params.theta)?;
        let h = trim("h", &params.h)?;
        let (rpsi, rphi, rtheta, rh) = (
            poly_roots(&psi),
            poly_roots(&phi),
            poly_roots(&theta),
            poly_roots(&h),
        );
        check_roots("psi", &rpsi)?;
        check_roots("phi", &rphi)?;
        check_roots("theta", &rtheta)?;
        check_roots("h", &rh)?;
        check_coprime("psi/theta", &rpsi, &rtheta)?;
        check_coprime("phi/h", &rphi, &rh)?;

        let (na, rate_fwd) = series_len(&rpsi, theta.len() - 1, psi.len());
        let (nb, rate_bwd) = series_len(&rphi, h.len() - 1, phi.len());
        let a = series(&theta, &psi, na);
        let b = series(&h, &phi, nb);
        // d_n = Σ_{l ≥ max(0,-n)} a_{n+l} b_l
        let lo = -(nb as i64 - 1);
        let hi = na as i64 - 1;
        let d: Vec<f64> = (lo..=hi)
            .map(|n| {
                let l0 = (-n).max(0) as usize;
                let l1 = nb.min((na as i64 - n) as usize);
                (l0..l1).map(|l| a[(n + l as i64) as usize] * b[l]).sum()
            })
            .collect();
        Ok(Self {
            params: ArmaParams {
                psi,
                phi,
                theta,
                h,
            },
            d,
            lo,
            rate_fwd,
            rate_bwd,
        })
    }

    pub fn from_params(p: ArmaParams) -> Result<Self> {
        Self::new(p)
    }

    pub fn arma_params(&self) -> &ArmaParams {
        &self.params
    }

    fn hi(&self) -> i64 {
        self.lo + self.d.len() as i64 - 1
    }
}

impl CoefficientKernel for Arma {
    fn kind(&self) -> &'static str {
        "arma"
    }

    fn params(&self) -> Value {
        serde_json::to_value(&self.params).unwrap()
    }

    fn coeff(&self, k: i64) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.d[(k - self.lo) as usize]
        }
    }

    fn support(&self) -> (Option<i64>, Option<i64>) {
        let lo = if self.params.phi.len() > 1 {
            None
        } else {
            Some(-(self.params.h.len() as i64 - 1))
        };
        let hi = if self.params.psi.len() > 1 {
            None
        } else {
            Some(self.params.theta.len() as i64 - 1)
        };
        (lo, hi)
    }

    fn tail_bound(&self, alpha: f64, lo: i64, hi: i64) -> f64 {
        let pow = |x: f64| x.abs().powf(alpha);
        let mut s = 0.0;
        for k in self.lo..lo.min(self.hi() + 1) {
            s += pow(self.coeff(k));
        }
        for k in (hi + 1).max(self.lo)..=self.hi() {
            s += pow(self.coeff(k));
        }
        // remainder beyond the stored range
        for (edge, rate) in [(self.lo, self.rate_bwd), (self.hi(), self.rate_fwd)] {
            if rate > 0.0 {
                let q = rate.powf(alpha);
                s += pow(self.coeff(edge)) * q / (1.0 - q) * 4.0;
            }
        }
        s
    }

    fn m0(&self, _search_bound: usize) -> M0 {
        if self.params.psi.len() == 1 {
            return M0::Infinite;
        }
        let dmax = self.d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sig = |v: f64| v.abs() > 1e-12 * dmax;
        let top = self.d.iter().rposition(|v| sig(*v)).unwrap_or(0);
        let bottom = self.d.iter().position(|v| sig(*v)).unwrap_or(0);
        let w = self.params.psi.len() + self.params.phi.len() + 2;
        let d = &self.d[bottom..=top];
        scan_zero_runs(d, |i| {
            let (a, b) = (i.saturating_sub(w), (i + w).min(d.len() - 1));
            let local = d[a..=b].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            d[i].abs() <= 1e-10 * local
        })
        .into()
    }
}
