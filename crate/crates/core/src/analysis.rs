//! Cubic-form analysis: sextactic points, projective arc length and
//! alignment of balanced outputs up to a parameter shift.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::spectral::{self, TrigInterpolant};
use crate::warning::Warning;

const ZERO_TOL: f64 = 1e-10;

/// Relative size below which a local minimum of |β| counts as touching zero.
const TOUCH_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SextacticReport {
    /// Transversal zeros of the cubic form in `[0, 2π)`, sorted.
    pub zeros: Vec<f64>,
    pub count: usize,
    /// Points where the cubic form touches zero without changing sign.
    pub touch_points: Vec<f64>,
    pub segment_lengths: Vec<Segment>,
    pub total_length: f64,
    pub warnings: Vec<Warning>,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm >= 0.0) == (flo >= 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign changes of the cubic form, refined on its interpolant.
pub fn sextactic_points(beta: &[f64], tol: &Tolerances) -> Result<SextacticReport> {
    let max_abs = beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if !(max_abs > tol.beta_flat) {
        return Err(Error::FlatBeta { max_abs });
    }
    let n = beta.len();
    let h = TAU / n as f64;
    let interp = TrigInterpolant::new(beta);
    let f = |s: f64| interp.eval(s);
    let mut zeros = Vec::new();
    for k in 0..n {
        let (a, b) = (beta[k], beta[(k + 1) % n]);
        if (a >= 0.0) != (b >= 0.0) {
            let s0 = k as f64 * h;
            zeros.push(bisect(f, s0, s0 + h, ZERO_TOL).rem_euclid(TAU));
        }
    }
    zeros.sort_by(f64::total_cmp);

    let mut warnings = Vec::new();
    let mut touch_points = Vec::new();
    // Pairs of sign changes closer than one grid spacing are a touch point seen twice.
    let mut merged = true;
    while merged && zeros.len() >= 2 {
        merged = false;
        let m = zeros.len();
        for i in 0..m {
            let j = (i + 1) % m;
            let gap = (zeros[j] - zeros[i]).rem_euclid(TAU);
            if gap < h {
                let s = (zeros[i] + 0.5 * gap).rem_euclid(TAU);
                touch_points.push(s);
                warnings.push(Warning::MergedZeros { s });
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                zeros.remove(hi);
                zeros.remove(lo);
                merged = true;
                break;
            }
        }
    }
    for k in 0..n {
        let (prev, cur, next) = (beta[(k + n - 1) % n], beta[k], beta[(k + 1) % n]);
        let same_sign = (prev >= 0.0) == (cur >= 0.0) && (cur >= 0.0) == (next >= 0.0);
        if same_sign && cur.abs() <= prev.abs().min(next.abs()) && cur.abs() < TOUCH_RATIO * max_abs {
            let s = k as f64 * h;
            touch_points.push(s);
            warnings.push(Warning::TangentialZero { s });
        }
    }
    touch_points.sort_by(f64::total_cmp);

    let segment_lengths = projective_segment_lengths(beta, &zeros);
    let total_length = segment_lengths.iter().map(|s| s.length).sum();
    Ok(SextacticReport { count: zeros.len(), zeros, touch_points, segment_lengths, total_length, warnings })
}

/// Signed projective lengths `∫ ∛β ds` between consecutive zeros, including the wrap-around segment.
pub fn projective_segment_lengths(beta: &[f64], zeros: &[f64]) -> Vec<Segment> {
    let interp = TrigInterpolant::new(beta);
    if zeros.is_empty() {
        return vec![Segment { start: 0.0, end: TAU, length: projective_length(&interp, 0.0, TAU) }];
    }
    let m = zeros.len();
    (0..m)
        .map(|i| {
            let start = zeros[i];
            let end = if i + 1 < m { zeros[i + 1] } else { zeros[0] + TAU };
            Segment { start, end, length: projective_length(&interp, start, end) }
        })
        .collect()
}

/// `∫_a^b ∛β(s) ds` by tanh-sinh quadrature, which absorbs the cube-root endpoint behaviour.
pub fn projective_length(beta: &TrigInterpolant, a: f64, b: f64) -> f64 {
    tanh_sinh(|s| beta.eval(s).cbrt(), a, b, 1e-12)
}

/// Tanh-sinh quadrature on `[a, b]`, halving the step until two levels agree to `tol`.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    // Node at parameter u, written through the distance to the nearer endpoint to keep it accurate.
    let term = |u: f64| -> f64 {
        let sh = FRAC_PI_2 * u.sinh();
        let ch = u.cosh();
        let e = (-2.0 * sh.abs()).exp();
        let gap = 2.0 * e / (1.0 + e);
        let weight = FRAC_PI_2 * ch * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if weight < 1e-300 || gap == 0.0 {
            return 0.0;
        }
        let x = if sh >= 0.0 { b - half * gap } else { a + half * gap };
        if x <= a || x >= b {
            return 0.0;
        }
        weight * f(x)
    };
    let u_max = 6.5;
    let mut step = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * step <= u_max {
        let u = k as f64 * step;
        sum += term(u) + term(-u);
        k += 1;
    }
    let mut estimate = half * step * sum;
    for _ in 0..10 {
        step *= 0.5;
        let mut u = step;
        while u <= u_max {
            sum += term(u) + term(-u);
            u += 2.0 * step;
        }
        let next = half * step * sum;
        let converged = (next - estimate).abs() <= tol * next.abs().max(1.0);
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Alignment {
    /// Shift `δ ∈ [0, 2π)` minimizing the mismatch of `a(s)` and `b(s + δ)`.
    pub shift: f64,
    /// RMS of `a(s_k) - b(s_k + δ)` over the nodes.
    pub residual: f64,
}

/// Best shift between two periodic sample sets on the same grid.
pub fn align_up_to_shift(a: &[f64], b: &[f64]) -> Alignment {
    let n = a.len();
    assert_eq!(n, b.len(), "alignment needs equal grids");
    let h = TAU / n as f64;
    let fa = spectral::forward(a);
    let fb = spectral::forward(b);
    let cross: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    // corr[m] = Σ_k a_k b_{k+m}, the samples of a trigonometric polynomial in the shift.
    let corr = spectral::inverse_real(cross);
    let best = (0..n).max_by(|&i, &j| corr[i].total_cmp(&corr[j])).unwrap_or(0);
    let poly = TrigInterpolant::new(&corr);
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let mut delta = best as f64 * h;
    for _ in 0..100 {
        let slope = poly.eval_derivative(delta, 1);
        let curvature = poly.eval_derivative(delta, 2);
        if slope > 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let newton = delta - slope / curvature;
        let next = if curvature < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - delta).abs() < 1e-15 || hi - lo < 1e-15;
        delta = next;
        if done {
            break;
        }
    }
    let delta = delta.rem_euclid(TAU);
    let shifted = TrigInterpolant::new(b).shifted_samples(delta);
    let residual = (a.iter().zip(&shifted).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64).sqrt();
    Alignment { shift: delta, residual }
}
