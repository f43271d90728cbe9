use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use stable_paths::bivariate::{
    bivar_seminorm, bivar_tail, bivar_tail_generic, gamma4_cylinder, select_case, Arc as AngleArc,
    BivarCase, PSet,
};
use stable_paths::model::simulate as sim;
use stable_paths::montecarlo::{
    conditional_frequencies, scaling_on, theory_conditional, theory_scaling, ConditionalOptions,
    Estimate, PathModel, PathSample, Region,
};
use stable_paths::spectral::{
    cylinder_spectral_measure, euclidean_spectral_measure, is_past_representable,
    DiscreteSpectralMeasure, Representability,
};
use stable_paths::tailcond::{predict_on, PatternDistribution};
use stable_paths::Error;

use crate::config::Config;

/// Shortest decimal that parses back to the same f64.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let (agg, trunc) = cfg.model()?;
    let sim = sim::simulate(&agg, cfg.run.t, &trunc, cfg.run.seed)?;
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend((1..=agg.len()).map(|j| format!("component_{j}")));
    let rows: Vec<Vec<String>> = (0..cfg.run.t)
        .map(|t| {
            let mut r = vec![t.to_string(), num(sim.total[t])];
            for (c, x) in agg.components().iter().zip(&sim.components) {
                r.push(num(c.pi * x[t]));
            }
            r
        })
        .collect();
    write_csv(&out.join("series.csv"), &header, &rows)
}

fn measure_rows(g: &DiscreteSpectralMeasure) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["theta", "j", "k", "weight", "multiplicity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..g.dim).map(|i| format!("x{i}")));
    let rows = g
        .atoms
        .iter()
        .map(|a| {
            let mut r = vec![
                a.label.theta.to_string(),
                a.label.j.to_string(),
                a.label.k.to_string(),
                num(a.weight),
                a.multiplicity.to_string(),
            ];
            r.extend(a.point.iter().map(|x| num(*x)));
            r
        })
        .collect();
    (header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub representability: Representability,
    pub sphere: DiscreteSpectralMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<DiscreteSpectralMeasure>,
}

pub fn spectral(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let (agg, trunc) = cfg.model()?;
    let sn = cfg.seminorm()?;
    let verdict = is_past_representable(&agg, sn.m(), sn.h());
    let sphere = euclidean_spectral_measure(&agg, sn.m(), sn.h(), &trunc)?;
    let (h, rows) = measure_rows(&sphere);
    write_csv(&out.join("sphere.csv"), &h, &rows)?;
    let cylinder = if verdict.is_yes() {
        let c = sphere.to_cylinder(&sn)?;
        let (h, rows) = measure_rows(&c);
        write_csv(&out.join("cylinder.csv"), &h, &rows)?;
        Some(c)
    } else {
        None
    };
    let report = SpectralReport {
        representability: verdict.clone(),
        sphere,
        cylinder,
    };
    write_json(&out.join("spectral.json"), &report)?;
    match verdict {
        Representability::Yes { .. } => Ok(()),
        Representability::No { reason, .. } => Err(Error::NotRepresentable { reason }.into()),
    }
}

fn read_observed(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::InvalidParameter {
                    name: "observed",
                    reason: format!("row {}: {e}", i + 1),
                }
                .into())
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub window: usize,
    pub observed: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<PatternDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn predict(cfg: &Config, observed: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let (agg, trunc) = cfg.model()?;
    let sn = cfg.seminorm()?;
    let windows = match observed {
        Some(p) => read_observed(p)?,
        None => cfg.run.observed.clone().ok_or_else(|| Error::InvalidParameter {
            name: "observed",
            reason: "pass --observed or set run.observed".into(),
        })?,
    };
    if let Representability::No { reason, .. } = is_past_representable(&agg, sn.m(), sn.h()) {
        return Err(Error::NotRepresentable { reason }.into());
    }
    let g = cylinder_spectral_measure(&agg, &sn, &trunc)?;
    let preds: Vec<WindowPrediction> = windows
        .iter()
        .enumerate()
        .map(|(i, w)| match predict_on(&g, &sn, w, cfg.run.tol) {
            Ok(p) => WindowPrediction {
                window: i,
                observed: w.clone(),
                classes: p.classes,
                error: None,
            },
            Err(e) => WindowPrediction {
                window: i,
                observed: w.clone(),
                classes: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    write_json(&out.join("predictions.json"), &preds)?;
    let mut header: Vec<String> = ["window", "class", "theta", "j", "k", "probability"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=sn.h()).map(|i| format!("future_{i}")));
    let mut rows = Vec::new();
    for p in &preds {
        for (c, d) in p.classes.iter().enumerate() {
            for e in &d.entries {
                let mut r = vec![
                    p.window.to_string(),
                    c.to_string(),
                    e.label.theta.to_string(),
                    e.label.j.to_string(),
                    e.label.k.to_string(),
                    num(e.probability),
                ];
                r.extend(e.point[sn.observed_dim()..].iter().map(|x| num(*x)));
                rows.push(r);
            }
        }
    }
    write_csv(&out.join("predictions.csv"), &header, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub theory: f64,
    pub estimate: Estimate,
    /// (estimate - theory) / std_error.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub seed: u64,
    pub conditioning: Region,
    pub rows: Vec<VerifyRow>,
}

fn z_score(est: f64, se: f64, theory: f64) -> f64 {
    if se > 0.0 {
        (est - theory) / se
    } else if est == theory {
        0.0
    } else {
        f64::INFINITY.copysign(est - theory)
    }
}

pub fn verify(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let (agg, trunc) = cfg.model()?;
    let sn = cfg.seminorm()?;
    let v = cfg.run.verify.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "verify",
        reason: "run.verify block missing".into(),
    })?;
    if let Representability::No { reason, .. } = is_past_representable(&agg, sn.m(), sn.h()) {
        return Err(Error::NotRepresentable { reason }.into());
    }
    let g = cylinder_spectral_measure(&agg, &sn, &trunc)?;
    let (b, targets): (Region, Vec<(Region, Option<String>)>) = match &v.pattern {
        Some(pat) => {
            let p = predict_on(&g, &sn, pat, cfg.run.tol)?;
            let class = p.primary();
            let centers: Vec<Vec<f64>> = class.entries.iter().map(|e| e.point.clone()).collect();
            let targets = class
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    (
                        Region::Voronoi {
                            centers: centers.clone(),
                            select: vec![i],
                        },
                        Some(e.label.to_string()),
                    )
                })
                .collect();
            (
                Region::ObservedTube {
                    pattern: class.conditioning.pattern.clone(),
                    radius: v.radius,
                },
                targets,
            )
        }
        None => (
            v.b.clone().unwrap_or(Region::All),
            v.a.iter().map(|r| (r.clone(), None)).collect(),
        ),
    };
    let model = PathModel::Aggregate { agg, trunc };
    let sample = PathSample::simulate(&model, &sn, v.n, cfg.run.seed)?;
    let opts = ConditionalOptions {
        blocks: v.blocks,
        decluster: v.decluster,
        ..ConditionalOptions::default()
    };
    let regions: Vec<Region> = targets.iter().map(|t| t.0.clone()).collect();
    let est = conditional_frequencies(&sample, &sn, cfg.run.threshold, &regions, &b, &opts, cfg.run.seed)?;
    let rows: Vec<VerifyRow> = targets
        .into_iter()
        .zip(est)
        .map(|((region, label), e)| {
            let theory = theory_conditional(&g, &region, &b)?;
            Ok(VerifyRow {
                z: z_score(e.estimate, e.std_error, theory),
                region,
                label,
                theory,
                estimate: e,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let header: Vec<String> = [
        "row", "label", "estimate", "std_error", "theory", "z", "n_conditioning", "n_exceedances", "threshold",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.label.clone().unwrap_or_default(),
                num(r.estimate.estimate),
                num(r.estimate.std_error),
                num(r.theory),
                num(r.z),
                r.estimate.n_conditioning.to_string(),
                r.estimate.n_exceedances.to_string(),
                num(r.estimate.threshold),
            ]
        })
        .collect();
    write_csv(&out.join("verify.csv"), &header, &csv_rows)?;
    if !v.scaling.is_empty() {
        let pts = scaling_on(&sample, model.alpha(), &sn, &b, &v.scaling, v.blocks, cfg.run.seed)?;
        let theory = theory_scaling(&g, &b)?;
        let header: Vec<String> = ["x", "estimate", "lo", "hi", "theory"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = pts
            .iter()
            .map(|p| {
                vec![
                    num(p.x),
                    num(p.estimate),
                    num(p.estimate - 1.96 * p.std_error),
                    num(p.estimate + 1.96 * p.std_error),
                    num(theory),
                ]
            })
            .collect();
        write_csv(&out.join("scaling.csv"), &header, &rows)?;
    }
    write_json(
        &out.join("verify.json"),
        &VerifyReport {
            n: v.n,
            seed: cfg.run.seed,
            conditioning: b,
            rows,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub v0: AngleArc,
    pub v: AngleArc,
    pub p: PSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<BivarCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivarReport {
    pub sigma1_alpha: f64,
    pub sigma2_alpha: f64,
    pub gamma4: stable_paths::bivariate::Gamma4Measure,
    pub cases: Vec<CaseReport>,
}

pub fn bivariate(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let model = cfg.bivariate()?;
    let g4 = gamma4_cylinder(&model)?;
    let measure = g4.measure()?;
    let (h, rows) = measure_rows(&measure);
    write_csv(&out.join("gamma4.csv"), &h, &rows)?;
    let sn = bivar_seminorm();
    let sample = if cfg.run.bivariate_n > 0 {
        Some(PathSample::simulate(
            &PathModel::Bivariate(model.clone()),
            &sn,
            cfg.run.bivariate_n,
            cfg.run.seed,
        )?)
    } else {
        None
    };
    let cases = cfg
        .run
        .cases
        .iter()
        .map(|c| {
            let v = c.v.unwrap_or(c.v0);
            let mut r = CaseReport {
                v0: c.v0,
                v,
                p: c.p.clone(),
                case: None,
                closed_form: None,
                generic: None,
                monte_carlo: None,
                error: None,
            };
            let res = (|| -> stable_paths::Result<()> {
                r.case = Some(select_case(&c.v0)?);
                r.closed_form = Some(bivar_tail(&model, &c.v0, &v, &c.p)?);
                r.generic = Some(bivar_tail_generic(&measure, model.rho2, &c.v0, &v, &c.p)?);
                if let Some(s) = &sample {
                    let a = Region::Bivariate {
                        arc: v,
                        p: Some(c.p.clone()),
                        rho2: model.rho2,
                    };
                    let b = Region::Bivariate {
                        arc: c.v0,
                        p: None,
                        rho2: model.rho2,
                    };
                    let mut e = conditional_frequencies(
                        s,
                        &sn,
                        cfg.run.threshold,
                        &[a],
                        &b,
                        &ConditionalOptions::default(),
                        cfg.run.seed,
                    )?;
                    r.monte_carlo = Some(e.remove(0));
                }
                Ok(())
            })();
            if let Err(e) = res {
                r.error = Some(e.to_string());
            }
            r
        })
        .collect();
    write_json(
        &out.join("bivariate.json"),
        &BivarReport {
            sigma1_alpha: model.sigma_alpha(0),
            sigma2_alpha: model.sigma_alpha(1),
            gamma4: g4,
            cases,
        },
    )
}
