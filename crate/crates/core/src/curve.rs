//! Sampled 2π-periodic lifts of closed convex projective curves.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::balancer::Reparametrization;
use crate::error::{Error, Result};
use crate::spectral::{self, VectorInterpolant};
use crate::warning::Warning;

pub const DEFAULT_GRID: usize = 512;
pub const MIN_GRID: usize = 64;
pub const MAX_GRID: usize = 65536;

/// Spectral tail ratio above which input is flagged as possibly under-resolved.
pub const TAIL_WARNING: f64 = 1e-10;

/// Samples `g(t_k)` of a periodic lift at the uniform nodes `t_k = 2πk/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicVectorCurve {
    pub samples: Vec<Vector3<f64>>,
    /// Set when the sample order was reversed to make `det(g'', g', g)` positive.
    pub orientation_flipped: bool,
}

impl PeriodicVectorCurve {
    pub fn new(samples: Vec<Vector3<f64>>) -> Result<Self> {
        check_grid(samples.len())?;
        Ok(Self { samples, orientation_flipped: false })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nodes(&self) -> Vec<f64> {
        spectral::nodes(self.len())
    }

    /// Applies a fixed linear map to every sample.
    pub fn transformed(&self, map: &Matrix3<f64>) -> Self {
        Self { samples: self.samples.iter().map(|p| map * p).collect(), ..self.clone() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { samples: self.samples.iter().map(|p| p * factor).collect(), ..self.clone() }
    }

    /// Circular shift: sample `k` of the result is sample `k + shift` of `self`.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.rotate_left(shift % self.len().max(1));
        Self { samples, ..self.clone() }
    }

    /// Reverses the parametrization direction: `h(t) = g(-t)`.
    pub fn reversed(&self) -> Self {
        let n = self.len();
        let samples = (0..n).map(|k| self.samples[(n - k) % n]).collect();
        Self { samples, orientation_flipped: !self.orientation_flipped }
    }
}

pub fn check_grid(n: usize) -> Result<()> {
    if n.is_power_of_two() && (MIN_GRID..=MAX_GRID).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidGridSize(n))
    }
}

/// Curve description as read from JSON.
///
/// `{"family": "perturbed_ellipse", "params": {"eps": 0.05, "k": 3}, "N": 512}`
/// or `{"family": "raw_samples", "data": [[g0, g1, g2], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<[f64; 3]>>,
}

impl CurveSpec {
    pub fn circular_cone(n: usize) -> Self {
        Self { family: "circular_cone".into(), params: BTreeMap::new(), grid: Some(n), data: None }
    }

    pub fn perturbed_ellipse(eps: f64, k: u32, n: usize) -> Self {
        let params = BTreeMap::from([("eps".to_string(), eps), ("k".to_string(), f64::from(k))]);
        Self { family: "perturbed_ellipse".into(), params, grid: Some(n), data: None }
    }

    pub fn raw(data: Vec<[f64; 3]>) -> Self {
        let n = data.len();
        Self { family: "raw_samples".into(), params: BTreeMap::new(), grid: Some(n), data: Some(data) }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid = Some(n);
        self
    }

    fn param(&self, name: &str, default: f64) -> Result<f64> {
        let value = self.params.get(name).copied().unwrap_or(default);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InvalidSpec(format!("parameter `{name}` is not finite")))
        }
    }

    /// The analytic family named by the spec, or `None` for raw samples.
    pub fn family(&self) -> Result<Option<Family>> {
        let family = match self.family.as_str() {
            "circular_cone" => Family::CircularCone,
            "perturbed_ellipse" => {
                let k = self.param("k", 3.0)?;
                if k.fract() != 0.0 || k < 0.0 {
                    return Err(Error::InvalidSpec(format!("harmonic k = {k} must be a nonnegative integer")));
                }
                Family::PerturbedEllipse { eps: self.param("eps", 0.05)?, k: k as u32 }
            }
            "affine_graph" => Family::AffineGraph {
                a: self.param("a", 1.0)?,
                b: self.param("b", 1.0)?,
                c: self.param("c", 0.1)?,
            },
            "raw_samples" => return Ok(None),
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        Ok(Some(family))
    }
}

/// Built-in analytic test families, all with first coordinate 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `(1, cos t, sin t)`.
    CircularCone,
    /// `(1, ρ cos t, ρ sin t)` with `ρ = 1 + eps·cos(k t)`.
    PerturbedEllipse { eps: f64, k: u32 },
    /// `(1, a cos t + c cos 2t, b sin t)`; convex iff `4|c| < a`.
    AffineGraph { a: f64, b: f64, c: f64 },
}

impl Family {
    pub fn eval(&self, t: f64) -> Vector3<f64> {
        match *self {
            Family::CircularCone => Vector3::new(1.0, t.cos(), t.sin()),
            Family::PerturbedEllipse { eps, k } => {
                let rho = 1.0 + eps * (f64::from(k) * t).cos();
                Vector3::new(1.0, rho * t.cos(), rho * t.sin())
            }
            Family::AffineGraph { a, b, c } => Vector3::new(1.0, a * t.cos() + c * (2.0 * t).cos(), b * t.sin()),
        }
    }

    /// Samples `g(warp(t_k))`; `warp(t) - t` must be 2π-periodic.
    pub fn sample_warped(&self, n: usize, warp: impl Fn(f64) -> f64) -> Result<PeriodicVectorCurve> {
        PeriodicVectorCurve::new(spectral::nodes(n).into_iter().map(|t| self.eval(warp(t))).collect())
    }

    pub fn sample(&self, n: usize) -> Result<PeriodicVectorCurve> {
        self.sample_warped(n, |t| t)
    }
}

/// Samples the curve described by `spec`. No geometric validation happens here.
pub fn build_family(spec: &CurveSpec) -> Result<PeriodicVectorCurve> {
    match spec.family()? {
        Some(family) => family.sample(spec.grid.unwrap_or(DEFAULT_GRID)),
        None => {
            let data = spec
                .data
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("raw_samples requires `data`".into()))?;
            let expected = spec.grid.unwrap_or(data.len());
            check_grid(expected)?;
            if data.len() != expected {
                return Err(Error::SampleCountMismatch { expected, got: data.len() });
            }
            if data.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec("raw_samples contains non-finite values".into()));
            }
            PeriodicVectorCurve::new(data.iter().map(|p| Vector3::from(*p)).collect())
        }
    }
}

/// `order`-th derivative of the interpolant at the nodes.
pub fn trig_derivative(curve: &PeriodicVectorCurve, order: u32) -> Vec<Vector3<f64>> {
    spectral::derivative_vec(&curve.samples, order)
}

/// `det(a, b, c)` with the arguments as columns.
#[inline]
pub fn det3(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    a.dot(&b.cross(c))
}

/// `det(g''(t_k), g'(t_k), g(t_k))` at every node.
pub fn curvature_determinant(samples: &[Vector3<f64>]) -> Vec<f64> {
    let d1 = spectral::derivative_vec(samples, 1);
    let d2 = spectral::derivative_vec(samples, 2);
    (0..samples.len()).map(|k| det3(&d2[k], &d1[k], &samples[k])).collect()
}

/// An oriented curve with `det(g'', g', g) > 0` at every node.
#[derive(Debug, Clone)]
pub struct ValidatedCurve {
    pub curve: PeriodicVectorCurve,
    pub determinant: Vec<f64>,
    pub min_determinant: f64,
    pub warnings: Vec<Warning>,
}

/// Orients the curve so that `det(g'', g', g) > 0` and rejects inflections.
pub fn orient_and_validate(curve: &PeriodicVectorCurve, degeneracy: f64) -> Result<ValidatedCurve> {
    check_grid(curve.len())?;
    let max_norm = curve.samples.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if let Some(index) = curve.samples.iter().position(|p| !(p.norm() > 1e-12 * max_norm)) {
        return Err(Error::ZeroSample { index });
    }
    let det = curvature_determinant(&curve.samples);
    let min = det.iter().copied().fold(f64::INFINITY, f64::min);
    let max = det.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_abs = min.abs().max(max.abs());
    let min_abs = det.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    if !(min_abs >= degeneracy * max_abs) || max_abs == 0.0 {
        return Err(Error::NearDegenerate { min_abs, max_abs });
    }
    if min < 0.0 && max > 0.0 {
        return Err(Error::MixedSign { min, max });
    }
    let (curve, determinant) = if max < 0.0 {
        let n = det.len();
        let flipped = curve.reversed();
        let det = (0..n).map(|k| -det[(n - k) % n]).collect::<Vec<_>>();
        (flipped, det)
    } else {
        (curve.clone(), det)
    };
    let ratio = spectral::split(&curve.samples).iter().map(|c| spectral::tail_ratio(c)).fold(0.0, f64::max);
    let warnings = if ratio > TAIL_WARNING { vec![Warning::SpectralTail { ratio }] } else { Vec::new() };
    let min_determinant = determinant.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ValidatedCurve { curve, determinant, min_determinant, warnings })
}

/// Samples `g(t(s_j))` at uniform `s`-nodes.
pub fn resample(curve: &PeriodicVectorCurve, reparam: &Reparametrization) -> Result<PeriodicVectorCurve> {
    reparam.check_monotone()?;
    let interp = VectorInterpolant::new(&curve.samples);
    let samples = reparam.t_of_s().iter().map(|&t| interp.eval(t)).collect();
    Ok(PeriodicVectorCurve { samples, orientation_flipped: curve.orientation_flipped })
}

/// `2π / n`
pub fn spacing(n: usize) -> f64 {
    2.0 * PI / n as f64
}
