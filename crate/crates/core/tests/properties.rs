use std::f64::consts::TAU;

use conebal::analysis::align_up_to_shift;
use conebal::balancer::{self, Reparametrization};
use conebal::curve::{self, Family, PeriodicVectorCurve};
use conebal::{monodromy, spectral, wilczynski, Tolerances};
use nalgebra::Vector3;
use proptest::prelude::*;

/// Cosine and sine coefficients of a real trigonometric polynomial, from frequency 1 up.
fn trig_poly(max_band: usize) -> impl Strategy<Value = (f64, Vec<(f64, f64)>)> {
    (-1.0..1.0f64, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=max_band))
}

fn eval_poly(mean: f64, coeffs: &[(f64, f64)], t: f64, order: u32) -> f64 {
    let mut value = if order == 0 { mean } else { 0.0 };
    for (j, &(a, b)) in coeffs.iter().enumerate() {
        let m = (j + 1) as f64;
        // d^order/dt^order of a cos(mt) + b sin(mt)
        let phase = m * t + order as f64 * std::f64::consts::FRAC_PI_2;
        value += m.powi(order as i32) * (a * phase.cos() + b * phase.sin());
    }
    value
}

fn ellipse() -> impl Strategy<Value = Family> {
    (0.0..0.05f64, 2..=4u32).prop_map(|(eps, k)| Family::PerturbedEllipse { eps, k })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trig_derivative_is_exact_below_nyquist(
        x in trig_poly(31),
        y in trig_poly(31),
        z in trig_poly(31),
        order in 1..=3u32,
    ) {
        let n = 64;
        let polys = [x, y, z];
        let samples = spectral::nodes(n)
            .into_iter()
            .map(|t| Vector3::from_fn(|i, _| eval_poly(polys[i].0, &polys[i].1, t, 0)))
            .collect();
        let curve = PeriodicVectorCurve::new(samples).unwrap();
        let derivative = curve::trig_derivative(&curve, order);
        for (i, (mean, coeffs)) in polys.iter().enumerate() {
            let exact: Vec<f64> = spectral::nodes(n).into_iter().map(|t| eval_poly(*mean, coeffs, t, order)).collect();
            let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (d, e) in derivative.iter().zip(&exact) {
                prop_assert!((d[i] - e).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn orientation_is_idempotent_and_positive(family in ellipse(), reverse in any::<bool>(), shift in 0..128usize) {
        let tol = Tolerances::default();
        let mut g = family.sample(128).unwrap().rotated(shift);
        if reverse {
            g = g.reversed();
        }
        let once = curve::orient_and_validate(&g, tol.degeneracy).unwrap();
        let twice = curve::orient_and_validate(&once.curve, tol.degeneracy).unwrap();
        prop_assert_eq!(&once.curve, &twice.curve);
        prop_assert!(once.min_determinant > 0.0);
        prop_assert!(once.determinant.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn identity_resample_is_the_identity(family in ellipse(), shift in 0..256usize) {
        let g = family.sample(256).unwrap().rotated(shift);
        let h = curve::resample(&g, &Reparametrization::identity(256)).unwrap();
        for (a, b) in g.samples.iter().zip(&h.samples) {
            prop_assert!((a - b).amax() <= 1e-13);
        }
    }

    #[test]
    fn positive_scaling_leaves_the_coefficients(family in ellipse(), factor in 0.1..10.0f64) {
        let tol = Tolerances::default();
        let g = family.sample(256).unwrap();
        let lift = |c: &PeriodicVectorCurve| {
            let validated = curve::orient_and_validate(c, tol.degeneracy).unwrap();
            wilczynski::invariants(&validated, &tol).unwrap().lift
        };
        let (base, scaled) = (lift(&g), lift(&g.scaled(factor)));
        let scale = base.alpha.iter().chain(&base.beta).fold(1.0f64, |m, v| m.max(v.abs()));
        for k in 0..256 {
            prop_assert!((base.alpha[k] - scaled.alpha[k]).abs() <= 1e-9 * scale);
            prop_assert!((base.beta[k] - scaled.beta[k]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn alignment_finds_the_shift((mean, coeffs) in trig_poly(12), delta in 0.0..TAU) {
        let n = 128;
        let a: Vec<f64> = spectral::nodes(n).into_iter().map(|s| eval_poly(mean, &coeffs, s, 0)).collect();
        let b: Vec<f64> = spectral::nodes(n).into_iter().map(|s| eval_poly(mean, &coeffs, s - delta, 0)).collect();
        // a profile with a symmetry has several best shifts; require a unique one
        let energy: f64 = coeffs.iter().map(|(c, d)| c * c + d * d).sum();
        let found = align_up_to_shift(&a, &b);
        prop_assert!(found.residual <= 1e-9 * energy.sqrt().max(1e-3));
        let gap = (found.shift - delta).rem_euclid(TAU);
        let gap = gap.min(TAU - gap);
        let symmetric = (1..n).any(|j| {
            let shifted: f64 = (0..n).map(|k| (a[k] - a[(k + j) % n]).powi(2)).sum::<f64>();
            shifted <= 1e-20 * (n as f64)
        });
        if !symmetric && energy > 1e-6 {
            prop_assert!(gap <= 1e-8, "delta {} found {}", delta, found.shift);
        }
    }

    #[test]
    fn inversion_is_exact_and_periodic(
        amplitude in 0.0..0.9f64,
        freq in 1..=4u32,
        phase in 0.0..TAU,
        s in -10.0..10.0f64,
    ) {
        let tol = Tolerances::default();
        let m = f64::from(freq);
        let a = amplitude / m;
        let p = move |t: f64| a * (m * t + phase).sin();
        let periodic = spectral::nodes(64).into_iter().map(p).collect();
        let reparam = Reparametrization::from_periodic(periodic, &tol).unwrap();
        let t = balancer::invert_reparametrization(&reparam, &[s, s + TAU], &tol).unwrap();
        prop_assert!((t[0] + p(t[0]) - s).abs() <= 1e-12);
        prop_assert!((t[1] - t[0] - TAU).abs() <= 1e-12);
    }

    #[test]
    fn reduced_fundamental_matrix_stays_unimodular(mean in -1.0..1.0f64, c1 in -0.5..0.5f64, s2 in -0.5..0.5f64) {
        let alpha: Vec<f64> = spectral::nodes(128).into_iter().map(|t| mean + c1 * t.cos() + s2 * (2.0 * t).sin()).collect();
        let system = monodromy::integrate_reduced(&alpha, Tolerances::default().ode_rtol).unwrap();
        prop_assert!(system.wronskian_defect <= 1e-9);
        prop_assert!((system.monodromy.determinant() - 1.0).abs() <= 1e-10);
        for x in &system.path {
            prop_assert!((x.determinant() - 1.0).abs() <= 1e-9);
        }
    }
}
