//! Balanced reparametrizations: the parameter in which `α` is constant.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::monodromy::{CanonicalReducedSolution, MonodromyClass, MonodromyTag};
use crate::spectral::{self, TrigInterpolant};
use crate::warning::Warning;
use crate::wilczynski::{coefficient_scale, coefficients_of, CanonicalLift};

/// Increasing map `s(t) = t + p(t)` with `p` 2π-periodic, sampled at the uniform nodes.
#[derive(Debug, Clone)]
pub struct Reparametrization {
    periodic: Vec<f64>,
    ds_dt: Vec<f64>,
    t_of_s: Vec<f64>,
    /// |s(2π) - s(0) - 2π| as measured by the construction.
    pub periodicity_defect: f64,
}

impl Reparametrization {
    pub fn identity(n: usize) -> Self {
        Self { periodic: vec![0.0; n], ds_dt: vec![1.0; n], t_of_s: spectral::nodes(n), periodicity_defect: 0.0 }
    }

    /// From the periodic part and the derivative; the inverse is computed here.
    pub fn from_parts(periodic: Vec<f64>, ds_dt: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        let n = periodic.len();
        let mut reparam = Self { periodic, ds_dt, t_of_s: Vec::new(), periodicity_defect: 0.0 };
        reparam.check_monotone()?;
        reparam.t_of_s = invert_reparametrization(&reparam, &spectral::nodes(n), tol)?;
        Ok(reparam)
    }

    /// From the periodic part alone, differentiating it spectrally.
    pub fn from_periodic(periodic: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        let ds_dt = spectral::derivative(&periodic, 1).into_iter().map(|d| 1.0 + d).collect();
        Self::from_parts(periodic, ds_dt, tol)
    }

    /// From samples of `s(t_k)`.
    pub fn from_s_samples(s: &[f64], tol: &Tolerances) -> Result<Self> {
        let periodic = s.iter().zip(spectral::nodes(s.len())).map(|(s, t)| s - t).collect();
        Self::from_periodic(periodic, tol)
    }

    pub fn len(&self) -> usize {
        self.periodic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periodic.is_empty()
    }

    pub fn periodic(&self) -> &[f64] {
        &self.periodic
    }

    pub fn ds_dt(&self) -> &[f64] {
        &self.ds_dt
    }

    /// `t(s_j)` at the uniform nodes `s_j`.
    pub fn t_of_s(&self) -> &[f64] {
        &self.t_of_s
    }

    pub fn s_of_t(&self) -> Vec<f64> {
        self.periodic.iter().zip(spectral::nodes(self.len())).map(|(p, t)| t + p).collect()
    }

    pub fn check_monotone(&self) -> Result<()> {
        match self.ds_dt.iter().position(|d| !(*d > 0.0)) {
            Some(index) => Err(Error::NonMonotone { index, value: self.ds_dt[index] }),
            None => Ok(()),
        }
    }
}

/// Solves `t + p(t) = s` for each `s` by safeguarded Newton on the interpolant of `p`.
pub fn invert_reparametrization(reparam: &Reparametrization, s_values: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
    let p = TrigInterpolant::new(&reparam.periodic);
    let p_min = reparam.periodic.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = reparam.periodic.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = 0.1 * (p_max - p_min) + 1e-9;
    s_values.iter().map(|&s| invert_one(&p, s, s - p_max - margin, s - p_min + margin, tol.inversion)).collect()
}

fn invert_one(p: &TrigInterpolant, s: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let f = |t: f64| {
        let (v, d) = p.eval_with_slope(t);
        (t + v - s, 1.0 + d)
    };
    for _ in 0..60 {
        if f(lo).0 <= 0.0 {
            break;
        }
        lo -= hi - lo;
    }
    for _ in 0..60 {
        if f(hi).0 >= 0.0 {
            break;
        }
        hi += hi - lo;
    }
    let mut t = (s - p.eval(s)).clamp(lo, hi);
    for _ in 0..100 {
        let (r, d) = f(t);
        if r.abs() <= tol {
            // Polish past the acceptance bound: leftover error here is white noise downstream.
            return Ok(polish(&f, t, r, d));
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - r / d;
        t = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Ok(t);
        }
    }
    Err(Error::InversionFailure { s })
}

fn polish(f: &impl Fn(f64) -> (f64, f64), mut t: f64, mut r: f64, mut d: f64) -> f64 {
    for _ in 0..4 {
        if r == 0.0 || d <= 0.0 {
            break;
        }
        let next = t - r / d;
        let (rn, dn) = f(next);
        if rn.abs() >= r.abs() {
            break;
        }
        (t, r, d) = (next, rn, dn);
    }
    t
}

fn finish(s: Vec<f64>, ds_dt: Vec<f64>, s_end: f64, tol: &Tolerances) -> Result<Reparametrization> {
    let s0 = s[0];
    let periodic: Vec<f64> = s.iter().zip(spectral::nodes(s.len())).map(|(s, t)| s - s0 - t).collect();
    let mut reparam = Reparametrization::from_parts(periodic, ds_dt, tol)?;
    reparam.periodicity_defect = (s_end - s0 - TAU).abs();
    Ok(reparam)
}

/// `s(t)` from the normalized reduced solution, case by case, with `s(0) = 0`.
pub fn build_reparametrization(
    class: &MonodromyClass,
    sol: &CanonicalReducedSolution,
    tol: &Tolerances,
) -> Result<Reparametrization> {
    let (s, ds_dt, s_end): (Vec<f64>, Vec<f64>, f64) = match class.tag {
        MonodromyTag::Hyperbolic { lambda } => {
            let k = PI / lambda.ln();
            let s = sol.x.iter().map(|x| k * (x[1] / x[0]).ln()).collect();
            let ds = sol.x.iter().map(|x| k / (x[0] * x[1])).collect();
            (s, ds, k * (sol.x_end[1] / sol.x_end[0]).ln())
        }
        MonodromyTag::Parabolic => {
            let s = sol.x.iter().map(|x| x[1] / x[0]).collect();
            let ds = sol.x.iter().map(|x| x[0].powi(-2)).collect();
            (s, ds, sol.x_end[1] / sol.x_end[0])
        }
        MonodromyTag::Elliptic { phi } => {
            let k = TAU / phi;
            let s = sol.phase.iter().map(|a| k * a).collect();
            let ds = sol.x.iter().map(|x| k / x.norm_squared()).collect();
            (s, ds, k * (sol.phase[0] + sol.phase_increment))
        }
        MonodromyTag::Ellipsoidal => {
            return Err(Error::InvalidSpec("ellipsoidal cones are balanced by ellipsoidal_normalization".into()))
        }
    };
    if let Some(index) = ds_dt.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::NonMonotone { index, value: ds_dt[index] });
    }
    finish(s, ds_dt, s_end, tol)
}

/// Linear change of coordinates to the circular cone, with the induced angle parameter.
#[derive(Debug, Clone)]
pub struct EllipsoidalNormalization {
    /// Unimodular map taking the cone to `w0² = w1² + w2²`, `w0 > 0`.
    pub map: Matrix3<f64>,
    pub reparam: Reparametrization,
    /// Ratio of smallest to largest singular value of the quadric fit.
    pub fit_ratio: f64,
    /// max |w0² - w1² - w2²| / |w|² over the mapped samples.
    pub cone_residual: f64,
}

/// Fits the quadric through the lift and uses the angle of the mapped curve as parameter.
pub fn ellipsoidal_normalization(lift: &CanonicalLift, tol: &Tolerances) -> Result<EllipsoidalNormalization> {
    let n = lift.len();
    let y = &lift.y;
    let moments = DMatrix::from_fn(n, 6, |k, j| {
        let (a, b, c) = (y[k][0], y[k][1], y[k][2]);
        [a * a, b * b, c * c, a * b, a * c, b * c][j]
    });
    let svd = moments.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let (imin, smin) = svd.singular_values.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| {
        if s < acc.1 {
            (i, s)
        } else {
            acc
        }
    });
    let smax = svd.singular_values.max();
    let fit_ratio = smin / smax;
    if !(fit_ratio <= tol.quadric) {
        return Err(Error::NotAQuadric { ratio: fit_ratio });
    }
    let q = v_t.row(imin);
    let form = Matrix3::new(
        q[0],
        0.5 * q[3],
        0.5 * q[4],
        0.5 * q[3],
        q[1],
        0.5 * q[5],
        0.5 * q[4],
        0.5 * q[5],
        q[2],
    );
    let eigen = SymmetricEigen::new(form);
    let scale = eigen.eigenvalues.amax();
    let positive = eigen.eigenvalues.iter().filter(|&&l| l > 1e-8 * scale).count();
    let negative = eigen.eigenvalues.iter().filter(|&&l| l < -1e-8 * scale).count();
    let sign = match (positive, negative) {
        (1, 2) => 1.0,
        (2, 1) => -1.0,
        _ => return Err(Error::WrongSignature { positive, negative }),
    };
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| (sign * eigen.eigenvalues[j]).total_cmp(&(sign * eigen.eigenvalues[i])));
    let mut map = Matrix3::zeros();
    for (row, &i) in order.iter().enumerate() {
        let weight = (sign * eigen.eigenvalues[i]).abs().sqrt();
        map.set_row(row, &(eigen.eigenvectors.column(i).transpose() * weight));
    }
    if (map * y[0])[0] < 0.0 {
        let flipped = -map.row(0);
        map.set_row(0, &flipped);
    }
    if map.determinant() < 0.0 {
        let flipped = -map.row(2);
        map.set_row(2, &flipped);
    }
    map /= map.determinant().cbrt();

    let w: Vec<Vector3<f64>> = y.iter().map(|p| map * p).collect();
    let cone_residual = w.iter().map(|p| (p[0] * p[0] - p[1] * p[1] - p[2] * p[2]).abs() / p.norm_squared()).fold(0.0, f64::max);
    if !(cone_residual <= tol.quadric) {
        return Err(Error::NotAQuadric { ratio: cone_residual });
    }
    let dw = spectral::derivative_vec(&w, 1);
    let ds_dt: Vec<f64> =
        w.iter().zip(&dw).map(|(p, d)| (p[2] * d[1] - p[1] * d[2]) / (p[1] * p[1] + p[2] * p[2])).collect();
    if let Some(index) = ds_dt.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::NonMonotone { index, value: ds_dt[index] });
    }
    let mut s = Vec::with_capacity(n);
    let mut prev = (-w[0][2]).atan2(w[0][1]);
    for p in &w {
        let angle = (-p[2]).atan2(p[1]);
        let mut d = angle - prev;
        d -= TAU * (d / TAU).round();
        prev += d;
        s.push(prev);
    }
    let last = s[n - 1];
    let mut closing = s[0] - last;
    closing -= TAU * (closing / TAU).round();
    let s_end = last + closing;
    let reparam = finish(s, ds_dt, s_end, tol)?;
    Ok(EllipsoidalNormalization { map, reparam, fit_ratio, cone_residual })
}

/// Balanced lift with its constant `α` and transformed cubic form.
#[derive(Debug, Clone, Serialize)]
pub struct BalancedResult {
    pub alpha_star: f64,
    pub tag: MonodromyTag,
    /// `β̃(s_j)` at the uniform nodes.
    pub beta_balanced: Vec<f64>,
    #[serde(skip)]
    pub y_balanced: Vec<Vector3<f64>>,
    #[serde(skip)]
    pub reparam: Reparametrization,
    /// max |α̃ - α*| after re-extracting coefficients from the balanced lift,
    /// relative to the scale of the unbalanced `α`.
    pub alpha_deviation: f64,
    /// max |β̃ re-extracted - β̃ transformed| relative to the scale of `β̃`.
    pub beta_deviation: f64,
    /// Re-extracted `α̃` at the uniform `s` nodes.
    #[serde(skip)]
    pub alpha_reextracted: Vec<f64>,
    #[serde(skip)]
    pub beta_reextracted: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// `ỹ(s) = (ds/dt)·y(t(s))` and `β̃(s) = β(t(s))·(ds/dt)^{-3}`, followed by a re-extraction check.
pub fn transform_lift(
    lift: &CanonicalLift,
    reparam: &Reparametrization,
    tag: MonodromyTag,
    tol: &Tolerances,
) -> Result<BalancedResult> {
    let alpha_star = tag.alpha_star();
    let beta_interp = TrigInterpolant::new(&lift.beta);
    let speed = TrigInterpolant::new(reparam.ds_dt());
    let mut y_balanced = Vec::with_capacity(reparam.len());
    let mut beta_balanced = Vec::with_capacity(reparam.len());
    for &t in reparam.t_of_s() {
        let sigma2 = speed.eval(t);
        y_balanced.push(lift.eval(t) * sigma2);
        beta_balanced.push(beta_interp.eval(t) / sigma2.powi(3));
    }
    let coeffs = coefficients_of(&y_balanced, tol)?;
    let alpha_deviation = coeffs.alpha.iter().map(|a| (a - alpha_star).abs()).fold(0.0, f64::max)
        / coefficient_scale(&lift.alpha);
    let beta_deviation = coeffs.beta.iter().zip(&beta_balanced).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        / coefficient_scale(&beta_balanced);
    if !(alpha_deviation <= tol.verification) {
        return Err(Error::VerificationFailure { deviation: alpha_deviation });
    }
    let mut warnings = Vec::new();
    if tag == MonodromyTag::Ellipsoidal {
        warnings.push(Warning::EllipsoidalNonUnique);
    }
    Ok(BalancedResult {
        alpha_star,
        tag,
        beta_balanced,
        y_balanced,
        reparam: reparam.clone(),
        alpha_deviation,
        beta_deviation,
        alpha_reextracted: coeffs.alpha,
        beta_reextracted: coeffs.beta,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_inverse() {
        let r = Reparametrization::identity(64);
        let s = [0.3, 1.7, 6.0];
        let t = invert_reparametrization(&r, &s, &tol()).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn sine_warp_inverse_matches_bisection() {
        let periodic: Vec<f64> = spectral::nodes(64).into_iter().map(|t| 0.3 * t.sin()).collect();
        let r = Reparametrization::from_periodic(periodic, &tol()).unwrap();
        let t = invert_reparametrization(&r, &[PI, PI + TAU], &tol()).unwrap();
        let (mut lo, mut hi) = (0.0, TAU);
        while hi - lo > 1e-14 {
            let mid: f64 = 0.5 * (lo + hi);
            if mid + 0.3 * mid.sin() < PI {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t[0] - lo).abs() < 1e-12);
        assert!((t[1] - t[0] - TAU).abs() < 1e-12);
        let back: Vec<f64> = r.t_of_s().iter().map(|t| t + 0.3 * t.sin()).collect();
        for (b, s) in back.iter().zip(spectral::nodes(64)) {
            assert!((b - s).abs() < 1e-12);
        }
    }

    #[test]
    fn non_monotone_is_rejected() {
        let periodic: Vec<f64> = spectral::nodes(64).into_iter().map(|t| 1.5 * t.sin()).collect();
        assert!(matches!(Reparametrization::from_periodic(periodic, &tol()), Err(Error::NonMonotone { .. })));
    }
}
