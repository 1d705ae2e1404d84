//! Normalized lift, invariant coefficients, unimodular frame and dual curve.
//!
//! In the gauge `det(y'', y', y) = 1` the lift satisfies
//! `y''' + 2α y' + α' y + β y = 0`. The frame `Y = (y'' + αy, y', y)` then
//! solves `Y' = Y·A(α, -β)` with `A(a, b) = [[0, 1, 0], [-a, 0, 1], [b, -a, 0]]`,
//! and `Z = Y^{-T} Q` is the frame of the dual curve, whose coefficients are
//! `(α, -β)`.

use nalgebra::{Matrix3, Vector3};

use crate::config::Tolerances;
use crate::curve::{det3, ValidatedCurve};
use crate::error::{Error, Result};
use crate::ode::{integrate, Dop853Options};
use crate::jet::{self, VectorJet};
use crate::spectral::{self, TrigInterpolant, VectorInterpolant};

/// `Q = [[0, 0, 1], [0, -1, 0], [1, 0, 0]]`, the pairing between a frame and its dual.
pub fn pairing_matrix() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0)
}

/// `[[0, 1, 0], [-alpha, 0, 1], [beta, -alpha, 0]]`
pub fn generator(alpha: f64, beta: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, -alpha, 0.0, 1.0, beta, -alpha, 0.0)
}

/// Lift normalized to `det(y'', y', y) = 1` together with its coefficients.
#[derive(Debug, Clone)]
pub struct CanonicalLift {
    pub y: Vec<Vector3<f64>>,
    /// `y', y'', y'''` at the nodes.
    pub derivatives: [Vec<Vector3<f64>>; 3],
    /// `y''''` when the lift was built from a curve through the chain rule.
    pub fourth: Option<Vec<Vector3<f64>>>,
    /// Interpolant of the oriented curve the lift was built from.
    pub source: Option<VectorInterpolant>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// max |c2| seen while extracting the coefficients.
    pub c2_residual: f64,
    pub orientation_flipped: bool,
}

impl CanonicalLift {
    /// A lift given only by samples; derivatives are taken spectrally.
    pub fn from_samples(y: Vec<Vector3<f64>>, orientation_flipped: bool) -> Self {
        let derivatives = [1, 2, 3].map(|order| spectral::derivative_vec(&y, order));
        CanonicalLift {
            y,
            derivatives,
            fourth: None,
            source: None,
            alpha: Vec::new(),
            beta: Vec::new(),
            c2_residual: 0.0,
            orientation_flipped,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn has_coefficients(&self) -> bool {
        self.alpha.len() == self.y.len() && self.beta.len() == self.y.len()
    }

    /// `y(t)` between nodes: through the source curve when there is one.
    pub fn eval(&self, t: f64) -> Vector3<f64> {
        match &self.source {
            Some(g) => {
                let [g0, g1, g2] = [0, 1, 2].map(|order| g.eval_derivative(t, order));
                g0 / det3(&g2, &g1, &g0).cbrt()
            }
            None => VectorInterpolant::new(&self.y).eval(t),
        }
    }
}

/// `y, y', ..., y''''` of `y = det(g'', g', g)^{-1/3} g` from `g, g', ..., g^(6)` at one point.
pub fn lift_jet(g_derivs: &[Vector3<f64>; 7]) -> [Vector3<f64>; 5] {
    let g: VectorJet<7> = jet::from_derivatives(g_derivs);
    let g1 = jet::differentiate(&g);
    let g2 = jet::differentiate(&g1);
    let volume = jet::det(&g2, &g1, &g);
    let volume: jet::Jet<5> = std::array::from_fn(|j| volume[j]);
    let g: VectorJet<5> = std::array::from_fn(|j| g[j]);
    let y = jet::scale(&jet::powf(&volume, -1.0 / 3.0), &g);
    jet::to_derivatives(&y)
}

fn max_bandwidth(points: &[Vector3<f64>]) -> usize {
    spectral::split(points).iter().map(|c| spectral::bandwidth(c)).max().unwrap_or(0)
}

/// `y = det(g'', g', g)^{-1/3} g`. Coefficients are left empty.
///
/// When the normalizing factor widens the spectrum (the lift is at least
/// twice as wide as `g`), derivatives of `y` come from the chain rule through
/// `g^(6)`. Otherwise `g` is already about as wide as `y`, its sixth
/// derivative is mostly amplified round-off, and `y` is differentiated
/// spectrally.
pub fn canonical_lift(curve: &ValidatedCurve) -> CanonicalLift {
    let samples = &curve.curve.samples;
    let flipped = curve.curve.orientation_flipped;
    let y: Vec<Vector3<f64>> = samples.iter().zip(&curve.determinant).map(|(g, d)| g / d.cbrt()).collect();
    if 2 * max_bandwidth(samples) > max_bandwidth(&y) {
        return CanonicalLift::from_samples(y, flipped);
    }
    let g: Vec<Vec<Vector3<f64>>> = (0..7).map(|order| spectral::derivative_vec(samples, order)).collect();
    let n = samples.len();
    let mut columns: [Vec<Vector3<f64>>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    for k in 0..n {
        let derivs: [Vector3<f64>; 7] = std::array::from_fn(|j| g[j][k]);
        for (column, value) in columns.iter_mut().zip(lift_jet(&derivs)) {
            column.push(value);
        }
    }
    let [y, d1, d2, d3, d4] = columns;
    CanonicalLift {
        y,
        derivatives: [d1, d2, d3],
        fourth: Some(d4),
        source: Some(VectorInterpolant::denoised(samples)),
        alpha: Vec::new(),
        beta: Vec::new(),
        c2_residual: 0.0,
        orientation_flipped: flipped,
    }
}

/// `max(1, max |v|)`: coefficient-level checks are relative to this once coefficients exceed unit size.
pub fn coefficient_scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0, |m, v| m.max(v.abs()))
}

/// Coefficients of `y''' + c2 y'' + c1 y' + c0 y = 0` read off a sampled lift.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub c2_residual: f64,
}

/// Solves the nodal systems for `(c2, c1, c0)` and forms `α = c1/2`, `β = c0 - α'`.
///
/// `α'` comes from differentiating the nodal systems when `y''''` is known,
/// and spectrally otherwise.
pub fn coefficients_from(
    y: &[Vector3<f64>],
    derivatives: &[Vec<Vector3<f64>>; 3],
    fourth: Option<&[Vector3<f64>]>,
    tol: &Tolerances,
) -> Result<Coefficients> {
    let [d1, d2, d3] = derivatives;
    let n = y.len();
    let mut c2_residual: f64 = 0.0;
    let mut c1 = Vec::with_capacity(n);
    let mut c0 = Vec::with_capacity(n);
    let mut c1_prime = Vec::with_capacity(n);
    for k in 0..n {
        let m = Matrix3::from_columns(&[d2[k], d1[k], y[k]]);
        let inv = m.try_inverse().ok_or(Error::IllConditioned { index: k, condition: f64::INFINITY })?;
        let condition = m.norm() * inv.norm();
        if !(condition <= tol.condition) {
            return Err(Error::IllConditioned { index: k, condition });
        }
        let c = -(inv * d3[k]);
        c2_residual = c2_residual.max(c[0].abs());
        c1.push(c[1]);
        c0.push(c[2]);
        if let Some(d4) = fourth {
            // M c = -y''' differentiated: M' c + M c' = -y''''
            let m_prime = Matrix3::from_columns(&[d3[k], d2[k], d1[k]]);
            c1_prime.push(-(inv * (d4[k] + m_prime * c))[1]);
        }
    }
    let scale = coefficient_scale(&c1).max(coefficient_scale(&c0));
    if !(c2_residual <= tol.gauge * scale) {
        return Err(Error::GaugeViolation { residual: c2_residual });
    }
    let alpha: Vec<f64> = c1.iter().map(|c| 0.5 * c).collect();
    let alpha_prime = match fourth {
        Some(_) => c1_prime.iter().map(|c| 0.5 * c).collect(),
        None => spectral::derivative(&alpha, 1),
    };
    let beta = c0.iter().zip(&alpha_prime).map(|(c, a)| c - a).collect();
    Ok(Coefficients { alpha, beta, c2_residual })
}

/// [`coefficients_from`] with spectral derivatives of the samples.
pub fn coefficients_of(y: &[Vector3<f64>], tol: &Tolerances) -> Result<Coefficients> {
    let derivatives = [1, 2, 3].map(|order| spectral::derivative_vec(y, order));
    coefficients_from(y, &derivatives, None, tol)
}

/// Fills `alpha`, `beta` and `c2_residual` of the lift.
pub fn extract_coefficients(mut lift: CanonicalLift, tol: &Tolerances) -> Result<CanonicalLift> {
    let coeffs = coefficients_from(&lift.y, &lift.derivatives, lift.fourth.as_deref(), tol)?;
    lift.alpha = coeffs.alpha;
    lift.beta = coeffs.beta;
    lift.c2_residual = coeffs.c2_residual;
    Ok(lift)
}

/// `det(y'', y', y)` at the nodes.
pub fn lift_determinant(lift: &CanonicalLift) -> Vec<f64> {
    let [d1, d2, _] = &lift.derivatives;
    (0..lift.len()).map(|k| det3(&d2[k], &d1[k], &lift.y[k])).collect()
}

/// The frame `Y = (y'' + αy, y', y)` along the curve.
#[derive(Debug, Clone)]
pub struct FramePath {
    pub frames: Vec<Matrix3<f64>>,
    /// max |det Y - 1| over the nodes, relative to `max(1, |Y e0| |Y e1| |Y e2|)`.
    pub det_defect: f64,
    /// max entry of |Y' - Y·A| with `Y'` taken spectrally, relative to `max(1, max |Y·A|)`.
    pub ode_residual: f64,
    /// max entry of |Y(2π) - Y(0)| after propagating `Y(0)` once around.
    pub closure_defect: f64,
}

/// Frame matrices without any checks.
pub fn assemble_frames(lift: &CanonicalLift) -> Vec<Matrix3<f64>> {
    let [d1, d2, _] = &lift.derivatives;
    let y = &lift.y;
    (0..y.len()).map(|k| Matrix3::from_columns(&[d2[k] + y[k] * lift.alpha[k], d1[k], y[k]])).collect()
}

fn matrix_channels(frames: &[Matrix3<f64>]) -> Vec<Vec<f64>> {
    (0..9).map(|e| frames.iter().map(|m| m[e]).collect()).collect()
}

/// Propagates `Y(0)` along `Y' = Y·A(α, sign·β)` over one period.
pub fn propagate_frame(start: &Matrix3<f64>, alpha: &[f64], beta: &[f64], beta_sign: f64, rtol: f64) -> Result<Matrix3<f64>> {
    let alpha_i = TrigInterpolant::new(alpha);
    let beta_i = TrigInterpolant::new(beta);
    let rhs = |t: f64, y: &[f64; 9], dy: &mut [f64; 9]| {
        let m = Matrix3::from_column_slice(y);
        let d = m * generator(alpha_i.eval(t), beta_sign * beta_i.eval(t));
        dy.copy_from_slice(d.as_slice());
    };
    let mut y0 = [0.0; 9];
    y0.copy_from_slice(start.as_slice());
    let traj = integrate(rhs, 0.0, y0, 2.0 * std::f64::consts::PI, &Dop853Options::with_tolerance(rtol))?;
    Ok(Matrix3::from_column_slice(&traj.end_state()))
}

/// Builds the frame path and checks unimodularity, the frame equation and closure.
pub fn frame_path(lift: &CanonicalLift, tol: &Tolerances) -> Result<FramePath> {
    let frames = assemble_frames(lift);
    let det_defect = frames
        .iter()
        .map(|m| {
            let volume = m.column(0).norm() * m.column(1).norm() * m.column(2).norm();
            (m.determinant() - 1.0).abs() / volume.max(1.0)
        })
        .fold(0.0, f64::max);
    if !(det_defect <= tol.frame_det) {
        return Err(Error::FrameDefect { quantity: "det", value: det_defect });
    }
    let channels = matrix_channels(&frames);
    let derivs: Vec<Vec<f64>> = channels.iter().map(|c| spectral::derivative(c, 1)).collect();
    let mut ode_residual: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (k, frame) in frames.iter().enumerate() {
        let predicted = frame * generator(lift.alpha[k], -lift.beta[k]);
        scale = scale.max(predicted.amax());
        for e in 0..9 {
            ode_residual = ode_residual.max((derivs[e][k] - predicted[e]).abs());
        }
    }
    let ode_residual = ode_residual / scale;
    if !(ode_residual <= tol.frame_residual) {
        return Err(Error::FrameDefect { quantity: "ode_residual", value: ode_residual });
    }
    let end = propagate_frame(&frames[0], &lift.alpha, &lift.beta, -1.0, tol.ode_rtol)?;
    let closure_defect = (end - frames[0]).amax();
    if !(closure_defect <= tol.closure) {
        return Err(Error::ClosureDefect { defect: closure_defect });
    }
    Ok(FramePath { frames, det_defect, ode_residual, closure_defect })
}

/// Boundary curve of the dual cone with its frame and coefficients.
#[derive(Debug, Clone)]
pub struct DualLift {
    pub z: Vec<Vector3<f64>>,
    pub frames: Vec<Matrix3<f64>>,
    pub alpha_dual: Vec<f64>,
    pub beta_dual: Vec<f64>,
    /// max entry of |Yᵀ Z - Q| against the canonical pairing matrix.
    pub pairing_defect: f64,
    /// max of |<y, z>| and |<y', z>| over the nodes.
    pub orthogonality_defect: f64,
    /// max |alpha_dual - alpha| relative to the scale of alpha.
    pub alpha_defect: f64,
    /// max |beta_dual + beta| relative to the scale of beta.
    pub beta_defect: f64,
}

/// `Z = Y^{-T} Q` with the canonical `Q`.
pub fn dual_lift(lift: &CanonicalLift, frame: &FramePath, tol: &Tolerances) -> Result<DualLift> {
    dual_lift_with(lift, frame, &pairing_matrix(), tol)
}

/// [`dual_lift`] with an explicit `Q`; the contracts are still checked against the canonical one.
pub fn dual_lift_with(lift: &CanonicalLift, frame: &FramePath, q: &Matrix3<f64>, tol: &Tolerances) -> Result<DualLift> {
    let canonical = pairing_matrix();
    let mut frames = Vec::with_capacity(frame.frames.len());
    for (k, y) in frame.frames.iter().enumerate() {
        let inv = y.try_inverse().ok_or(Error::IllConditioned { index: k, condition: f64::INFINITY })?;
        frames.push(inv.transpose() * q);
    }
    let z: Vec<Vector3<f64>> = frames.iter().map(|m| m.column(2).into_owned()).collect();
    let pairing_defect = frame
        .frames
        .iter()
        .zip(&frames)
        .map(|(y, zf)| (y.transpose() * zf - canonical).amax())
        .fold(0.0, f64::max);
    if !(pairing_defect <= tol.orthogonality) {
        return Err(Error::DualityViolation { quantity: "pairing", value: pairing_defect });
    }
    let dy = &lift.derivatives[0];
    let orthogonality_defect = (0..z.len())
        .map(|k| lift.y[k].dot(&z[k]).abs().max(dy[k].dot(&z[k]).abs()))
        .fold(0.0, f64::max);
    let coeffs = coefficients_of(&z, tol)?;
    let alpha_defect = max_deviation(&coeffs.alpha, &lift.alpha, 1.0) / coefficient_scale(&lift.alpha);
    let beta_defect = max_deviation(&coeffs.beta, &lift.beta, -1.0) / coefficient_scale(&lift.beta);
    let dual = DualLift {
        z,
        frames,
        alpha_dual: coeffs.alpha,
        beta_dual: coeffs.beta,
        pairing_defect,
        orthogonality_defect,
        alpha_defect,
        beta_defect,
    };
    dual.check(tol)?;
    Ok(dual)
}

fn max_deviation(a: &[f64], b: &[f64], sign: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - sign * y).abs()).fold(0.0, f64::max)
}

impl DualLift {
    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        let checks = [
            ("pairing", self.pairing_defect, tol.orthogonality),
            ("orthogonality", self.orthogonality_defect, tol.orthogonality),
            ("alpha_dual", self.alpha_defect, tol.dual_coefficients),
            ("beta_dual", self.beta_defect, tol.dual_coefficients),
        ];
        for (quantity, value, bound) in checks {
            if !(value <= bound) {
                return Err(Error::DualityViolation { quantity, value });
            }
        }
        Ok(())
    }

    /// The dual curve as a lift in its own right, for dualizing again.
    pub fn as_lift(&self, orientation_flipped: bool) -> CanonicalLift {
        CanonicalLift {
            alpha: self.alpha_dual.clone(),
            beta: self.beta_dual.clone(),
            ..CanonicalLift::from_samples(self.z.clone(), orientation_flipped)
        }
    }
}

/// Outcome of the Riccati-type inequality along the pairing with a base point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InequalityReport {
    pub base_index: usize,
    /// max of `ψ' + ψ² + α/2` over nodes other than the base point,
    /// relative to `max(1, max |α|)`.
    pub max_value: f64,
    pub argmax: usize,
    /// `ψ' + ψ² + α/2` at every node, NaN at the base point.
    #[serde(skip)]
    pub values: Vec<f64>,
    pub mu_at_base: f64,
    pub nu_at_base: f64,
    pub min_pairing: f64,
}

/// Evaluates `ψ' + ψ² + α/2` with `ψ = (μ'/μ + ν'/ν)/4`, `μ = <y, z(t0)>`, `ν = <y(t0), z>`.
/// `dual.frames` must hold `(z'' + αz, z', z)`.
pub fn duality_inequality_check(
    lift: &CanonicalLift,
    dual: &DualLift,
    base_index: usize,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let n = lift.len();
    let mu: Vec<f64> = lift.y.iter().map(|y| y.dot(&dual.z[base_index])).collect();
    let nu: Vec<f64> = dual.z.iter().map(|z| lift.y[base_index].dot(z)).collect();
    for (k, (&m, &v)) in mu.iter().zip(&nu).enumerate() {
        let worst = m.min(v);
        if worst < -tol.pairing {
            return Err(Error::NegativePairing { index: k, value: worst });
        }
    }
    let min_pairing = mu.iter().chain(&nu).copied().fold(f64::INFINITY, f64::min);
    // Derivatives come from the frames rather than from differentiating μ and ν:
    // both vanish to second order at the base point, where differentiated
    // roundoff would be amplified by 1/h².
    let (z0, y0) = (dual.z[base_index], lift.y[base_index]);
    let [d1, d2, _] = &lift.derivatives;
    let mu1: Vec<f64> = d1.iter().map(|d| d.dot(&z0)).collect();
    let mu2: Vec<f64> = d2.iter().map(|d| d.dot(&z0)).collect();
    let nu1: Vec<f64> = dual.frames.iter().map(|m| y0.dot(&m.column(1))).collect();
    let nu2: Vec<f64> = (0..n).map(|k| y0.dot(&(dual.frames[k].column(0) - dual.z[k] * lift.alpha[k]))).collect();
    let mut max_value = f64::NEG_INFINITY;
    let mut argmax = (base_index + 1) % n;
    let mut values = vec![f64::NAN; n];
    for k in (0..n).filter(|&k| k != base_index) {
        let xi = mu1[k] / mu[k];
        let theta = nu1[k] / nu[k];
        let xi_prime = mu2[k] / mu[k] - xi * xi;
        let theta_prime = nu2[k] / nu[k] - theta * theta;
        let psi = 0.25 * (xi + theta);
        let value = 0.25 * (xi_prime + theta_prime) + psi * psi + 0.5 * lift.alpha[k];
        values[k] = value;
        if value > max_value {
            max_value = value;
            argmax = k;
        }
    }
    Ok(InequalityReport {
        base_index,
        max_value: max_value / coefficient_scale(&lift.alpha),
        argmax,
        values,
        mu_at_base: mu[base_index],
        nu_at_base: nu[base_index],
        min_pairing,
    })
}

/// Normalized lift with coefficients, frame and dual, all checked.
#[derive(Debug, Clone)]
pub struct Invariants {
    pub lift: CanonicalLift,
    pub frame: FramePath,
}

pub fn invariants(curve: &ValidatedCurve, tol: &Tolerances) -> Result<Invariants> {
    let lift = extract_coefficients(canonical_lift(curve), tol)?;
    let frame = frame_path(&lift, tol)?;
    Ok(Invariants { lift, frame })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{orient_and_validate, Family};

    fn lift_of(family: Family, n: usize) -> CanonicalLift {
        let v = orient_and_validate(&family.sample(n).unwrap(), 1e-10).unwrap();
        extract_coefficients(canonical_lift(&v), &Tolerances::default()).unwrap()
    }

    #[test]
    fn circle_coefficients() {
        let lift = lift_of(Family::CircularCone, 256);
        assert!(lift.c2_residual < 1e-12);
        assert!(lift.alpha.iter().all(|a| (a - 0.5).abs() < 1e-12));
        assert!(lift.beta.iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn uniform_scaling_is_absorbed() {
        let family = Family::CircularCone;
        let v = orient_and_validate(&family.sample(128).unwrap().scaled(2.0), 1e-10).unwrap();
        let lift = canonical_lift(&v);
        for (k, t) in spectral::nodes(128).into_iter().enumerate() {
            assert!((lift.y[k] - Vector3::new(1.0, t.cos(), -t.sin())).amax() < 1e-14);
        }
    }

    #[test]
    fn normalized_determinant_is_one() {
        let lift = lift_of(Family::PerturbedEllipse { eps: 0.05, k: 3 }, 512);
        assert!(lift_determinant(&lift).iter().all(|d| (d - 1.0).abs() < 1e-10));
    }

    #[test]
    fn index_shift_commutes_with_extraction() {
        let tol = Tolerances::default();
        let lift = lift_of(Family::PerturbedEllipse { eps: 0.05, k: 3 }, 256);
        let base = coefficients_of(&lift.y, &tol).unwrap();
        let mut y = lift.y.clone();
        y.rotate_left(7);
        let shifted = coefficients_of(&y, &tol).unwrap();
        for k in 0..256 {
            assert!((shifted.beta[k] - base.beta[(k + 7) % 256]).abs() < 1e-8);
        }
    }

    #[test]
    fn chain_rule_and_spectral_routes_agree() {
        let tol = Tolerances::default();
        let lift = lift_of(Family::PerturbedEllipse { eps: 0.05, k: 3 }, 512);
        assert!(lift.fourth.is_some());
        let spectral = coefficients_of(&lift.y, &tol).unwrap();
        let da = max_deviation(&spectral.alpha, &lift.alpha, 1.0);
        let db = max_deviation(&spectral.beta, &lift.beta, 1.0);
        assert!(da < 1e-8 && db < 1e-7, "{da:e} {db:e}");
    }

    #[test]
    fn wide_input_is_differentiated_spectrally() {
        let lift = lift_of(Family::PerturbedEllipse { eps: 0.05, k: 3 }, 512);
        let curve = crate::curve::PeriodicVectorCurve::new(lift.y.clone()).unwrap();
        let v = orient_and_validate(&curve, 1e-10).unwrap();
        assert!(canonical_lift(&v).fourth.is_none());
    }

    #[test]
    fn circle_frame_and_dual() {
        let tol = Tolerances::default();
        let lift = lift_of(Family::CircularCone, 128);
        let frame = frame_path(&lift, &tol).unwrap();
        assert!(frame.det_defect < 1e-12);
        assert!(frame.ode_residual < 1e-10);
        assert!(frame.closure_defect < 1e-9);
        let dual = dual_lift(&lift, &frame, &tol).unwrap();
        for (k, t) in spectral::nodes(128).into_iter().enumerate() {
            assert!((dual.z[k] - Vector3::new(1.0, -t.cos(), t.sin())).amax() < 1e-13);
        }
        assert!(dual.beta_dual.iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn sabotaged_frame_is_rejected() {
        let tol = Tolerances::default();
        let mut lift = lift_of(Family::PerturbedEllipse { eps: 0.05, k: 3 }, 128);
        lift.y.swap(10, 40);
        assert!(frame_path(&lift, &tol).is_err());
    }

    #[test]
    fn wrong_pairing_matrix_breaks_duality() {
        let tol = Tolerances::default();
        let lift = lift_of(Family::PerturbedEllipse { eps: 0.05, k: 3 }, 256);
        let frame = frame_path(&lift, &tol).unwrap();
        let mut q = pairing_matrix();
        q[(1, 1)] = 1.0;
        let err = dual_lift_with(&lift, &frame, &q, &tol).unwrap_err();
        assert!(matches!(err, Error::DualityViolation { quantity: "pairing", .. }), "{err}");
    }

    #[test]
    fn circle_inequality_is_an_equality() {
        let tol = Tolerances::default();
        let lift = lift_of(Family::CircularCone, 256);
        let frame = frame_path(&lift, &tol).unwrap();
        let dual = dual_lift(&lift, &frame, &tol).unwrap();
        let report = duality_inequality_check(&lift, &dual, 0, &tol).unwrap();
        assert!(report.max_value.abs() < 1e-8, "{}", report.max_value);
        assert!(report.mu_at_base.abs() < 1e-9 && report.nu_at_base.abs() < 1e-9);
    }
}
