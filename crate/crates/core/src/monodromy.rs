//! The reduced equation `x'' + (α/2) x = 0`, its monodromy and the
//! normalized solution pair used to build balanced parametrizations.
//!
//! The fundamental matrix `X = [[u, u'], [v, v']]` collects the two basis
//! solutions with `X(0) = I`; it satisfies `X(t + 2π) = T X(t)` and the
//! solution pair `x = (u, v) = X e₁` has Wronskian `det(x, x') = 1`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::ode::{integrate_with_stops, Dop853Options, Trajectory};
use crate::spectral::{self, TrigInterpolant};
use crate::warning::Warning;

/// Fundamental solution of the reduced equation over one period.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub alpha: Vec<f64>,
    trajectory: Trajectory<4>,
    /// `X(t_k)` at the uniform nodes.
    pub path: Vec<Matrix2<f64>>,
    pub monodromy: Matrix2<f64>,
    /// max |det X - 1| over the nodes and the period end.
    pub wronskian_defect: f64,
}

fn unflatten(y: [f64; 4]) -> Matrix2<f64> {
    Matrix2::new(y[0], y[1], y[2], y[3])
}

/// Integrates `X' = X·[[0, -α/2], [1, 0]]` from `X(0) = I` over `[0, 2π]`.
pub fn integrate_reduced(alpha: &[f64], rtol: f64) -> Result<ReducedSystem> {
    let interp = TrigInterpolant::new(alpha);
    let rhs = |t: f64, y: &[f64; 4], dy: &mut [f64; 4]| {
        let half = 0.5 * interp.eval(t);
        dy[0] = y[1];
        dy[1] = -half * y[0];
        dy[2] = y[3];
        dy[3] = -half * y[2];
    };
    let nodes = spectral::nodes(alpha.len());
    let (trajectory, at_nodes) =
        integrate_with_stops(rhs, 0.0, [1.0, 0.0, 0.0, 1.0], TAU, &nodes, &Dop853Options::with_tolerance(rtol))?;
    let monodromy = unflatten(trajectory.end_state());
    let path: Vec<Matrix2<f64>> = at_nodes.into_iter().map(unflatten).collect();
    let wronskian_defect = path
        .iter()
        .chain(std::iter::once(&monodromy))
        .map(|m| (m.determinant() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ReducedSystem { alpha: alpha.to_vec(), trajectory, path, monodromy, wronskian_defect })
}

impl ReducedSystem {
    /// `X(t)` for any real `t`, via `X(t + 2πj) = T^j X(t)`.
    pub fn fundamental_at(&self, t: f64) -> Matrix2<f64> {
        let periods = (t / TAU).floor();
        let r = t - periods * TAU;
        let base = unflatten(self.trajectory.eval(r));
        let j = periods as i64;
        let step = if j >= 0 { self.monodromy } else { self.monodromy.try_inverse().unwrap_or(Matrix2::identity()) };
        let mut m = base;
        for _ in 0..j.unsigned_abs() {
            m = step * m;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.monodromy.trace()
    }

    pub fn integration_steps(&self) -> usize {
        self.trajectory.steps()
    }
}

/// Case of the monodromy, with its defining parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tag")]
pub enum MonodromyTag {
    /// Real eigenvalues `λ > 1` and `1/λ`.
    Hyperbolic { lambda: f64 },
    /// Both eigenvalues equal to 1, `T ≠ I`.
    Parabolic,
    /// Eigenvalues `e^{±iφ}` with `φ ∈ (0, π)`.
    Elliptic { phi: f64 },
    /// `T = -I` and a flat cubic form.
    Ellipsoidal,
}

impl MonodromyTag {
    pub fn name(&self) -> &'static str {
        match self {
            MonodromyTag::Hyperbolic { .. } => "Hyperbolic",
            MonodromyTag::Parabolic => "Parabolic",
            MonodromyTag::Elliptic { .. } => "Elliptic",
            MonodromyTag::Ellipsoidal => "Ellipsoidal",
        }
    }

    /// Constant value of `α` in a balanced parametrization.
    pub fn alpha_star(&self) -> f64 {
        match *self {
            MonodromyTag::Hyperbolic { lambda } => -lambda.ln().powi(2) / (2.0 * PI * PI),
            MonodromyTag::Parabolic => 0.0,
            MonodromyTag::Elliptic { phi } => phi * phi / (2.0 * PI * PI),
            MonodromyTag::Ellipsoidal => 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyClass {
    pub tag: MonodromyTag,
    pub trace: f64,
    pub alpha_star: f64,
    /// Unimodular `C` with `C T C⁻¹` in normal form.
    pub conjugator: Matrix2<f64>,
    pub warnings: Vec<Warning>,
}

fn near_boundary(trace: f64, band: f64) -> Option<Warning> {
    let distance = (trace - 2.0).abs().min((trace + 2.0).abs());
    (distance < 10.0 * band).then_some(Warning::NearBoundary { trace, distance })
}

/// Classifies the monodromy of `system` and computes the conjugator to normal form.
pub fn classify_monodromy(system: &ReducedSystem, beta: &[f64], tol: &Tolerances) -> Result<MonodromyClass> {
    let beta_max = beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
    classify_matrix(&system.monodromy, beta_max, tol)
}

/// Classification of a unimodular `T` given max |β|.
pub fn classify_matrix(t: &Matrix2<f64>, beta_max: f64, tol: &Tolerances) -> Result<MonodromyClass> {
    let trace = t.trace();
    let band = tol.class_trace;
    let warnings: Vec<Warning> = near_boundary(trace, band).into_iter().collect();
    let (tag, conjugator) = if trace > 2.0 + band {
        let lambda = 0.5 * (trace + (trace * trace - 4.0).sqrt());
        (MonodromyTag::Hyperbolic { lambda }, hyperbolic_conjugator(t, lambda))
    } else if (trace - 2.0).abs() <= band {
        (MonodromyTag::Parabolic, parabolic_conjugator(t, trace)?)
    } else if (trace + 2.0).abs() <= band && beta_max <= tol.beta_flat {
        (MonodromyTag::Ellipsoidal, Matrix2::identity())
    } else if trace > -2.0 {
        // Includes the band around -2 when the cubic form is not flat: such
        // cones are near-ellipsoidal, not ellipsoidal.
        let phi = (0.5 * trace).clamp(-1.0, 1.0).acos();
        (MonodromyTag::Elliptic { phi }, elliptic_conjugator(t, phi, trace)?)
    } else {
        return Err(Error::TheoremViolation {
            trace,
            reason: if (trace + 2.0).abs() <= band {
                format!("trace -2 with non-flat cubic form (max |beta| = {beta_max:e})")
            } else {
                "eigenvalues are negative reals".into()
            },
        });
    };
    Ok(MonodromyClass { tag, trace, alpha_star: tag.alpha_star(), conjugator, warnings })
}

/// Eigenvector of `t` for the real eigenvalue `mu`.
fn eigenvector(t: &Matrix2<f64>, mu: f64) -> Vector2<f64> {
    let a = Vector2::new(t[(0, 1)], mu - t[(0, 0)]);
    let b = Vector2::new(mu - t[(1, 1)], t[(1, 0)]);
    if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

/// `C` with `C T C⁻¹ = diag(1/λ, λ)` and `C e₁` in the closed positive orthant when possible.
fn hyperbolic_conjugator(t: &Matrix2<f64>, lambda: f64) -> Matrix2<f64> {
    let decaying = eigenvector(t, lambda.recip());
    let growing = eigenvector(t, lambda);
    let mut inverse = Matrix2::from_columns(&[decaying, growing]);
    let det = inverse.determinant();
    if det < 0.0 {
        inverse.set_column(1, &(-growing));
    }
    inverse /= det.abs().sqrt();
    let mut c = inverse.try_inverse().expect("distinct eigenvalues give independent eigenvectors");
    let start = c.column(0).into_owned();
    if start[0] < 0.0 && start[1] < 0.0 {
        c = -c;
    }
    c
}

/// `C` with `C T C⁻¹ = [[1, 0], [2π, 1]]`.
fn parabolic_conjugator(t: &Matrix2<f64>, trace: f64) -> Result<Matrix2<f64>> {
    let nil = t - Matrix2::identity();
    let (col0, col1) = (nil.column(0).into_owned(), nil.column(1).into_owned());
    let u = if col0.norm() >= col1.norm() { col0 } else { col1 };
    if u.norm() == 0.0 {
        return Err(Error::TheoremViolation { trace, reason: "monodromy is the identity".into() });
    }
    // nil = u wᵀ with u the dominant column; w is read off the dominant row of u.
    let r = if u[0].abs() >= u[1].abs() { 0 } else { 1 };
    let w = Vector2::new(nil[(r, 0)], nil[(r, 1)]) / u[r];
    let det_wu = w[0] * u[1] - w[1] * u[0];
    if !(det_wu > 0.0) {
        return Err(Error::TheoremViolation { trace, reason: "parabolic shear has the wrong orientation".into() });
    }
    let a = (TAU * u.norm_squared() / det_wu).sqrt();
    let r1 = w * (a / TAU);
    let r2 = u * (a / u.norm_squared());
    let mut c = Matrix2::new(r1[0], r1[1], r2[0], r2[1]);
    if c[(0, 0)] < 0.0 {
        c = -c;
    }
    Ok(c)
}

/// `C` with `C T C⁻¹ = R(φ)` and `C e₁` on the positive horizontal axis.
fn elliptic_conjugator(t: &Matrix2<f64>, phi: f64, trace: f64) -> Result<Matrix2<f64>> {
    // Eigenvector a + ib for e^{iφ}: (T - cos φ) a = -sin φ b, from the first row of T - e^{iφ}.
    let (s, c) = phi.sin_cos();
    let (re, im) = if t[(0, 1)].abs() >= t[(1, 0)].abs() {
        // (t00 - e^{iφ}) v0 + t01 v1 = 0 with v = (t01, e^{iφ} - t00).
        (Vector2::new(t[(0, 1)], c - t[(0, 0)]), Vector2::new(0.0, s))
    } else {
        // t10 v0 + (t11 - e^{iφ}) v1 = 0 with v = (e^{iφ} - t11, t10).
        (Vector2::new(c - t[(1, 1)], t[(1, 0)]), Vector2::new(s, 0.0))
    };
    let p = Matrix2::from_columns(&[im, re]);
    let det = p.determinant();
    if !(det > 0.0) {
        return Err(Error::TheoremViolation { trace, reason: "monodromy rotates clockwise".into() });
    }
    let inv = (p / det.sqrt()).try_inverse().expect("positive determinant");
    let start = inv.column(0);
    let angle = start[1].atan2(start[0]);
    Ok(rotation(-angle) * inv)
}

pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Normalized solution pair `x = C X e₁` at the uniform nodes.
#[derive(Debug, Clone)]
pub struct CanonicalReducedSolution {
    pub x: Vec<Vector2<f64>>,
    pub dx: Vec<Vector2<f64>>,
    /// Unwrapped polar angle of `x`.
    pub phase: Vec<f64>,
    /// Polar angle gained over one period.
    pub phase_increment: f64,
    /// `x(2π)`, the image of `x(0)` under the normal form.
    pub x_end: Vector2<f64>,
    /// max |det(x, x') - 1|
    pub wronskian_defect: f64,
}

/// `(x, x')` of the normalized pair at an arbitrary parameter.
pub fn normalized_pair_at(class: &MonodromyClass, system: &ReducedSystem, t: f64) -> (Vector2<f64>, Vector2<f64>) {
    let m = class.conjugator * system.fundamental_at(t);
    (m.column(0).into_owned(), m.column(1).into_owned())
}

fn unwrap(prev: f64, angle: f64) -> f64 {
    let mut d = angle - prev.rem_euclid(TAU);
    d -= TAU * (d / TAU).round();
    prev + d
}

/// Applies the conjugator to the fundamental path and checks the case region.
pub fn canonical_reduced_solution(
    class: &MonodromyClass,
    system: &ReducedSystem,
    tol: &Tolerances,
) -> Result<CanonicalReducedSolution> {
    let n = system.path.len();
    let mut x = Vec::with_capacity(n);
    let mut dx = Vec::with_capacity(n);
    for m in &system.path {
        let cm = class.conjugator * m;
        x.push(cm.column(0).into_owned());
        dx.push(cm.column(1).into_owned());
    }
    for (index, p) in x.iter().enumerate() {
        let excess = match class.tag {
            MonodromyTag::Hyperbolic { .. } => (-p[0]).max(-p[1]),
            MonodromyTag::Parabolic => -p[0],
            _ => continue,
        };
        if excess > tol.region {
            return Err(Error::OrthantViolation { index, excess });
        }
    }
    let wronskian_defect =
        x.iter().zip(&dx).map(|(p, d)| (p[0] * d[1] - p[1] * d[0] - 1.0).abs()).fold(0.0, f64::max);
    let mut phase = Vec::with_capacity(n);
    let mut prev = x[0][1].atan2(x[0][0]);
    for p in &x {
        prev = unwrap(prev, p[1].atan2(p[0]));
        phase.push(prev);
    }
    let (end, _) = normalized_pair_at(class, system, TAU);
    let phase_increment = unwrap(phase[n - 1], end[1].atan2(end[0])) - phase[0];
    if let Some(k) = phase.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotone { index: k + 1, value: phase[k + 1] - phase[k] });
    }
    Ok(CanonicalReducedSolution { x, dx, phase, phase_increment, x_end: end, wronskian_defect })
}

/// Result of the zero-spacing scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroSpacing {
    /// Smallest distance between consecutive zeros, `+∞` when no solution has two zeros.
    pub min_spacing: f64,
    pub zeros_found: usize,
    pub trials: usize,
}

/// Minimum distance between consecutive zeros of random solutions over `[0, 6π]`.
pub fn zero_spacing_scan(system: &ReducedSystem, trials: usize, seed: u64) -> ZeroSpacing {
    const PERIODS: usize = 3;
    let n = system.path.len().max(64);
    let horizon = PERIODS as f64 * TAU;
    let coarse: Vec<(f64, Matrix2<f64>)> = (0..=PERIODS * n)
        .map(|k| {
            let t = horizon * k as f64 / (PERIODS * n) as f64;
            (t, system.fundamental_at(t))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_spacing = f64::INFINITY;
    let mut zeros_found = 0;
    for _ in 0..trials {
        let angle = rng.random_range(0.0..TAU);
        let (b, a) = angle.sin_cos();
        let value = |m: &Matrix2<f64>| a * m[(0, 0)] + b * m[(1, 0)];
        let mut zeros = Vec::new();
        for w in coarse.windows(2) {
            let (fa, fb) = (value(&w[0].1), value(&w[1].1));
            if fa == 0.0 {
                zeros.push(w[0].0);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi, mut flo) = (w[0].0, w[1].0, fa);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    let fm = value(&system.fundamental_at(mid));
                    if fm * flo > 0.0 {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                zeros.push(0.5 * (lo + hi));
            }
        }
        zeros_found += zeros.len();
        for w in zeros.windows(2) {
            min_spacing = min_spacing.min(w[1] - w[0]);
        }
    }
    ZeroSpacing { min_spacing, zeros_found, trials }
}
