use conebal::balancer::Reparametrization;
use conebal::curve::{self, Family, PeriodicVectorCurve};
use conebal::verify::random_unimodular;
use conebal::wilczynski::{self, CanonicalLift, FramePath};
use conebal::{pipeline, spectral, RunConfig, Tolerances};
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const REFERENCE: Family = Family::PerturbedEllipse { eps: 0.05, k: 3 };

fn lift_of(g: &PeriodicVectorCurve) -> CanonicalLift {
    let tol = Tolerances::default();
    let validated = curve::orient_and_validate(g, tol.degeneracy).unwrap();
    wilczynski::invariants(&validated, &tol).unwrap().lift
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn normalized_determinant_of_reference_cone() {
    let lift = lift_of(&REFERENCE.sample(512).unwrap());
    let worst = wilczynski::lift_determinant(&lift).iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn positive_scaling_changes_nothing() {
    let g = REFERENCE.sample(512).unwrap();
    let base = lift_of(&g);
    let scaled = lift_of(&g.scaled(3.7));
    let dy = base.y.iter().zip(&scaled.y).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    assert!(dy <= 1e-10, "y moved by {dy:e}");
    assert!(max_diff(&base.alpha, &scaled.alpha) <= 1e-10);
    assert!(max_diff(&base.beta, &scaled.beta) <= 1e-10);
}

#[test]
fn unimodular_maps_move_only_the_lift() {
    let g = REFERENCE.sample(1024).unwrap();
    let base = lift_of(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let a = random_unimodular(&mut rng);
        let mapped = lift_of(&g.transformed(&a));
        assert!(max_diff(&base.alpha, &mapped.alpha) <= 1e-6);
        assert!(max_diff(&base.beta, &mapped.beta) <= 1e-6);
        let scale = base.y.iter().map(|p| (a * p).amax()).fold(0.0, f64::max);
        let dy = base.y.iter().zip(&mapped.y).map(|(p, q)| (a * p - q).amax()).fold(0.0, f64::max);
        assert!(dy <= 1e-10 * scale, "A·y mismatch {dy:e}");
    }
}

fn dual_of_reference() -> (pipeline::Analysis, wilczynski::DualLift) {
    let config = RunConfig::default();
    let analysis = pipeline::analyze(&REFERENCE.sample(1024).unwrap(), &config).unwrap();
    let dual = pipeline::dual(&analysis, &config).unwrap();
    (analysis, dual)
}

#[test]
fn dual_is_orthogonal_to_the_osculating_plane() {
    let (analysis, dual) = dual_of_reference();
    let dy = &analysis.lift.derivatives[0];
    for k in 0..dual.z.len() {
        assert!(analysis.lift.y[k].dot(&dual.z[k]).abs() <= 1e-8);
        assert!(dy[k].dot(&dual.z[k]).abs() <= 1e-8);
    }
    assert!(dual.pairing_defect <= 1e-8);
    assert!(max_diff(&dual.alpha_dual, &analysis.lift.alpha) <= 1e-6);
    let negated: Vec<f64> = analysis.lift.beta.iter().map(|b| -b).collect();
    assert!(max_diff(&dual.beta_dual, &negated) <= 1e-6);
}

#[test]
fn dualizing_twice_returns_the_lift() {
    let (analysis, dual) = dual_of_reference();
    let tol = Tolerances::default();
    let z_lift = dual.as_lift(analysis.lift.orientation_flipped);
    let z_frame = FramePath { frames: dual.frames.clone(), det_defect: 0.0, ode_residual: 0.0, closure_defect: 0.0 };
    let back = wilczynski::dual_lift(&z_lift, &z_frame, &tol).unwrap();
    let worst = back.z.iter().zip(&analysis.lift.y).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    assert!(worst <= 1e-7, "{worst:e}");
}

#[test]
fn circle_dual_is_the_polar_circle() {
    let config = RunConfig::default();
    let analysis = pipeline::analyze(&Family::CircularCone.sample(128).unwrap(), &config).unwrap();
    let dual = pipeline::dual(&analysis, &config).unwrap();
    assert!(analysis.lift.orientation_flipped);
    // the oriented lift is (1, cos t, -sin t), whose dual points along (1, -cos t, sin t)
    for (t, z) in spectral::nodes(128).into_iter().zip(&dual.z) {
        let direction = Vector3::new(1.0, -t.cos(), t.sin());
        assert!(z.cross(&direction).amax() <= 1e-12 * z.norm());
        assert!(z.dot(&direction) > 0.0);
    }
    assert!(dual.beta_dual.iter().all(|b| b.abs() <= 1e-10));
}

#[test]
fn differential_inequality_holds_with_room_for_the_reference_cone() {
    let (analysis, dual) = dual_of_reference();
    let tol = Tolerances::default();
    for base in [0, 100, 517] {
        let report = wilczynski::duality_inequality_check(&analysis.lift, &dual, base, &tol).unwrap();
        assert!(report.mu_at_base.abs() <= 1e-9 && report.nu_at_base.abs() <= 1e-9);
        assert!(report.max_value <= 1e-6, "base {base}: {}", report.max_value);
        assert!(report.min_pairing >= -1e-9);
        // The expression equals -3/16 (ξ - θ)², which touches zero wherever ξ = θ,
        // e.g. opposite a base point on a symmetry axis. Away from the base it must
        // stay nonpositive, and unlike the circle it is not identically zero.
        let n = report.values.len();
        let away: Vec<f64> = (0..n)
            .filter(|&k| {
                let d = (k + n - base) % n;
                d.min(n - d) > n / 16
            })
            .map(|k| report.values[k])
            .collect();
        let worst = away.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = away.iter().sum::<f64>() / away.len() as f64;
        assert!(worst <= 1e-9, "base {base}: {worst:e}");
        assert!(mean < -1e-4, "base {base}: mean {mean:e}");
    }
}

#[test]
fn cubic_form_transforms_as_a_cubic_differential() {
    let n = 1024;
    let tol = Tolerances::default();
    // clockwise, so no orientation flip separates the two parameters
    let g = PeriodicVectorCurve::new(spectral::nodes(n).into_iter().map(|t| REFERENCE.eval(-t)).collect()).unwrap();
    let periodic = spectral::nodes(n).into_iter().map(|t| 0.2 * t.sin()).collect();
    let reparam = Reparametrization::from_periodic(periodic, &tol).unwrap();
    let h = curve::resample(&g, &reparam).unwrap();
    let before = lift_of(&g);
    let after = lift_of(&h);
    assert!(!before.orientation_flipped && !after.orientation_flipped);
    let beta = spectral::TrigInterpolant::new(&before.beta);
    for (k, &t) in reparam.t_of_s().iter().enumerate() {
        let speed = 1.0 + 0.2 * t.cos();
        assert!((after.beta[k] * speed.powi(3) - beta.eval(t)).abs() <= 1e-5, "node {k}");
    }
}

#[test]
fn row_swapped_frames_are_rejected() {
    let tol = Tolerances::default();
    let lift = lift_of(&REFERENCE.sample(512).unwrap());
    let mut sabotaged = lift.clone();
    let swap = Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    sabotaged.y = lift.y.iter().map(|p| swap * p).collect();
    sabotaged.derivatives = lift.derivatives.clone().map(|d| d.iter().map(|p| swap * p).collect());
    assert!(wilczynski::frame_path(&sabotaged, &tol).is_err());
}
