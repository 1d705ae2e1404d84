use std::f64::consts::{PI, TAU};

use conebal::analysis::{self, align_up_to_shift};
use conebal::balancer::Reparametrization;
use conebal::curve::{self, Family, PeriodicVectorCurve};
use conebal::monodromy;
use conebal::verify::random_unimodular;
use conebal::{pipeline, spectral, wilczynski, RunConfig, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const REFERENCE: Family = Family::PerturbedEllipse { eps: 0.05, k: 3 };

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with Richardson correction.
fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[test]
fn cube_root_segment_matches_adaptive_quadrature() {
    let n = 64;
    let beta: Vec<f64> = spectral::nodes(n).into_iter().map(|s| (3.0 * s).sin()).collect();
    let zeros: Vec<f64> = (0..6).map(|j| j as f64 * PI / 3.0).collect();
    let segments = analysis::projective_segment_lengths(&beta, &zeros);
    assert_eq!(segments.len(), 6);
    // By symmetry about π/6, twice the half segment; s = (π/6) x³ removes the s^{1/3} endpoint behaviour.
    let scale = PI / 6.0;
    let half = adaptive(|x| (3.0 * scale * x.powi(3)).sin().cbrt() * 3.0 * scale * x * x, 0.0, 1.0, 1e-15);
    let expected = 2.0 * half;
    for (j, segment) in segments.iter().enumerate() {
        let signed = if j % 2 == 0 { expected } else { -expected };
        assert!((segment.length - signed).abs() <= 1e-10, "segment {j}: {} vs {signed}", segment.length);
    }
}

#[test]
fn alignment_recovers_arbitrary_shifts() {
    let n = 256;
    let profile = |s: f64| (3.0 * s).sin() + 0.4 * (5.0 * s + 0.3).cos() - 0.2 * (7.0 * s).sin();
    let a: Vec<f64> = spectral::nodes(n).into_iter().map(profile).collect();
    for delta in [0.0, 1e-3, 0.37, 2.0, PI, 5.9, TAU - 1e-4] {
        let b: Vec<f64> = spectral::nodes(n).into_iter().map(|s| profile(s - delta)).collect();
        let found = align_up_to_shift(&a, &b);
        let gap = (found.shift - delta).rem_euclid(TAU);
        let gap = gap.min(TAU - gap);
        assert!(gap <= 1e-8, "delta {delta}: found {}", found.shift);
        assert!(found.residual <= 1e-10);
    }
}

#[test]
fn sextactic_count_survives_a_unimodular_map() {
    let config = RunConfig::default();
    let tol = Tolerances::default();
    let g = REFERENCE.sample(512).unwrap();
    let (_, plain) = pipeline::run(&g, &config).unwrap();
    let base = analysis::sextactic_points(&plain.result.beta_balanced, &tol).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2 {
        let (_, mapped) = pipeline::run(&g.transformed(&random_unimodular(&mut rng)), &config).unwrap();
        let report = analysis::sextactic_points(&mapped.result.beta_balanced, &tol).unwrap();
        assert_eq!(report.count, base.count);
        assert!((report.total_length - base.total_length).abs() <= 1e-6);
    }
}

#[test]
fn total_projective_length_ignores_the_parametrization() {
    let n = 1024;
    let tol = Tolerances::default();
    // clockwise, so both parametrizations keep their orientation
    let g = PeriodicVectorCurve::new(spectral::nodes(n).into_iter().map(|t| REFERENCE.eval(-t)).collect()).unwrap();
    let periodic = spectral::nodes(n).into_iter().map(|t| 0.25 * t.sin() + 0.1 * (2.0 * t).cos()).collect();
    let h = curve::resample(&g, &Reparametrization::from_periodic(periodic, &tol).unwrap()).unwrap();
    let lengths: Vec<f64> = [g, h]
        .iter()
        .map(|c| {
            let validated = curve::orient_and_validate(c, tol.degeneracy).unwrap();
            let lift = wilczynski::invariants(&validated, &tol).unwrap().lift;
            // signed lengths cancel by symmetry here, so compare unsigned ones
            let report = analysis::sextactic_points(&lift.beta, &tol).unwrap();
            report.segment_lengths.iter().map(|s| s.length.abs()).sum::<f64>()
        })
        .collect();
    assert!(lengths[0] > 1e-3);
    assert!((lengths[0] - lengths[1]).abs() <= 1e-6, "{lengths:?}");
}

#[test]
fn zeros_of_the_reduced_equation_are_more_than_a_period_apart() {
    let config = RunConfig::default();
    let analysis = pipeline::analyze(&REFERENCE.sample(512).unwrap(), &config).unwrap();
    let scan = monodromy::zero_spacing_scan(&analysis.system, 50, 3);
    assert!(scan.zeros_found > 0);
    assert!(scan.min_spacing > TAU, "{}", scan.min_spacing);
}
