use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use stable_paths::bivariate::{Arc as AngleArc, BivarModel, NoiseAtom, PSet};
use stable_paths::model::{Aggregate, Component, KernelRegistry, TruncationPolicy};
use stable_paths::montecarlo::{Decluster, Region, Threshold};
use stable_paths::SemiNorm;

/// One document drives every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seminorm: Option<SemiNormConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bivariate: Option<BivarConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: f64,
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub truncation: TruncationPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default = "one")]
    pub pi: f64,
    #[serde(default)]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiNormConfig {
    pub m: usize,
    pub h: usize,
    #[serde(default = "two")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivarConfig {
    pub alpha: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Half of Γ₂: every atom s also carries -s with the same weight.
    pub gamma2: Vec<NoiseAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Length of simulated series.
    #[serde(default = "default_t")]
    pub t: usize,
    /// Sup-distance tolerance for pattern matching.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseConfig>,
    /// Monte Carlo size for bivariate cases; zero skips simulation.
    #[serde(default)]
    pub bivariate_n: usize,
    #[serde(default = "default_threshold")]
    pub threshold: Threshold,
}

fn default_t() -> usize {
    10_000
}

fn default_tol() -> f64 {
    stable_paths::tailcond::DEFAULT_MATCH_TOL
}

fn default_threshold() -> Threshold {
    Threshold::Quantile(0.999)
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            t: default_t(),
            tol: default_tol(),
            observed: None,
            verify: None,
            cases: Vec::new(),
            bivariate_n: 0,
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub n: usize,
    /// Conditions on this observed pattern and splits by the matching atoms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Vec<f64>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<Region>,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default)]
    pub decluster: Decluster,
    /// Thresholds for the x^α P(‖X‖ > x) curve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scaling: Vec<Threshold>,
}

fn default_radius() -> f64 {
    stable_paths::montecarlo::DEFAULT_TUBE_RADIUS
}

fn default_blocks() -> usize {
    stable_paths::montecarlo::DEFAULT_BLOCKS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub v0: AngleArc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<AngleArc>,
    pub p: PSet,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(stable_paths::Error::from)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds every configured object once so errors surface at load time.
    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(m) = &self.model {
            m.build().context("model block")?;
        }
        if let Some(s) = &self.seminorm {
            s.build().context("seminorm block")?;
        }
        if let Some(b) = &self.bivariate {
            b.build().context("bivariate block")?;
        }
        if !(self.run.tol >= 0.0 && self.run.tol.is_finite()) {
            return Err(stable_paths::Error::InvalidParameter {
                name: "tol",
                reason: format!("{} must be finite and non-negative", self.run.tol),
            })
            .context("run block");
        }
        Ok(())
    }

    pub fn model(&self) -> anyhow::Result<(Aggregate, TruncationPolicy)> {
        let m = self.model.as_ref().ok_or_else(|| missing("model"))?;
        Ok((m.build()?, m.truncation))
    }

    pub fn seminorm(&self) -> anyhow::Result<SemiNorm> {
        self.seminorm.as_ref().ok_or_else(|| missing("seminorm"))?.build()
    }

    pub fn bivariate(&self) -> anyhow::Result<BivarModel> {
        self.bivariate.as_ref().ok_or_else(|| missing("bivariate"))?.build()
    }
}

fn missing(block: &'static str) -> anyhow::Error {
    stable_paths::Error::InvalidParameter {
        name: block,
        reason: "block missing from config".into(),
    }
    .into()
}

impl ModelConfig {
    pub fn build(&self) -> anyhow::Result<Aggregate> {
        let reg = KernelRegistry::builtin();
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let kernel = reg
                    .build(&c.kind, &c.params)
                    .with_context(|| format!("component {}", i + 1))?;
                Ok(Component::new(c.pi, c.beta, Arc::clone(&kernel)))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Aggregate::new(self.alpha, comps)?)
    }
}

impl SemiNormConfig {
    pub fn build(&self) -> anyhow::Result<SemiNorm> {
        Ok(SemiNorm::new(self.m, self.h, self.p)?)
    }
}

impl BivarConfig {
    pub fn build(&self) -> anyhow::Result<BivarModel> {
        Ok(BivarModel::from_pairs(self.alpha, self.rho1, self.rho2, &self.gamma2)?)
    }
}
