use std::sync::Arc;

use stable_paths::model::Ar1;
use stable_paths::montecarlo::{conditional_frequencies, ConditionalOptions, PathModel, PathSample, Region, Threshold};
use stable_paths::spectral::cylinder_spectral_measure;
use stable_paths::tailcond::predict_on;
use stable_paths::{Aggregate, SemiNorm, TruncationPolicy};

/// Twenty independent 10^7 replications of the AR(1) survival law: the
/// z-scores should look standard normal. Slow; run with `--ignored`.
#[test]
#[ignore]
fn survival_law_z_scores_are_calibrated() {
    let agg = Aggregate::single(1.5, Arc::new(Ar1::new(0.5).unwrap()), 0.0).unwrap();
    let sn = SemiNorm::new(1, 2, 2.0).unwrap();
    let trunc = TruncationPolicy::default();
    let g = cylinder_spectral_measure(&agg, &sn, &trunc).unwrap();
    let class = predict_on(&g, &sn, &[0.5, 1.0], 1e-9).unwrap().primary().clone();
    let centers: Vec<Vec<f64>> = class.entries.iter().map(|e| e.point.clone()).collect();
    let a: Vec<Region> = (0..centers.len())
        .map(|i| Region::Voronoi { centers: centers.clone(), select: vec![i] })
        .collect();
    let b = Region::ObservedTube { pattern: class.conditioning.pattern.clone(), radius: 0.05 };
    let model = PathModel::Aggregate { agg, trunc };
    let mut z = Vec::new();
    for rep in 0..20u64 {
        let sample = PathSample::simulate(&model, &sn, 10_000_000, 1000 + rep).unwrap();
        let est = conditional_frequencies(
            &sample,
            &sn,
            Threshold::Quantile(0.999),
            &a,
            &b,
            &ConditionalOptions::default(),
            rep,
        )
        .unwrap();
        for (e, t) in est.iter().zip(&class.entries) {
            z.push((e.estimate - t.probability) / e.std_error);
        }
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let within = z.iter().filter(|v| v.abs() <= 3.0).count() as f64 / n;
    eprintln!("mean z {mean:.3}, fraction within 3 s.e. {within:.3}");
    assert!(mean.abs() < 3.0 / n.sqrt() * 2.0);
    assert!(within >= 0.9);
}
