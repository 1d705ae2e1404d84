//! End-to-end runs: invariants and classification, then balancing.

use nalgebra::Matrix3;

use crate::balancer::{self, BalancedResult, EllipsoidalNormalization};
use crate::config::RunConfig;
use crate::curve::{self, Family, PeriodicVectorCurve, ValidatedCurve, MAX_GRID};
use crate::error::Result;
use crate::spectral;
use crate::monodromy::{self, MonodromyClass, MonodromyTag, ReducedSystem};
use crate::warning::Warning;
use crate::wilczynski::{self, CanonicalLift, DualLift, FramePath};

/// Everything computed before balancing.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub curve: ValidatedCurve,
    pub lift: CanonicalLift,
    pub frame: FramePath,
    pub system: ReducedSystem,
    pub class: MonodromyClass,
}

impl Analysis {
    pub fn warnings(&self) -> Vec<Warning> {
        self.curve.warnings.iter().chain(&self.class.warnings).cloned().collect()
    }
}

pub fn analyze(curve: &PeriodicVectorCurve, config: &RunConfig) -> Result<Analysis> {
    let tol = &config.tolerances;
    let curve = curve::orient_and_validate(curve, tol.degeneracy)?;
    let mut curve = curve;
    let tail = lift_tail_ratio(&curve);
    if tail > curve::TAIL_WARNING && !curve.warnings.iter().any(|w| matches!(w, Warning::SpectralTail { .. })) {
        curve.warnings.push(Warning::SpectralTail { ratio: tail });
    }
    let wilczynski::Invariants { lift, frame } = wilczynski::invariants(&curve, tol)?;
    let system = monodromy::integrate_reduced(&lift.alpha, tol.ode_rtol)?;
    let class = monodromy::classify_monodromy(&system, &lift.beta, tol)?;
    Ok(Analysis { curve, lift, frame, system, class })
}

/// Spectral tail of the normalized lift, which can be much less smooth than the input samples.
pub fn lift_tail_ratio(curve: &ValidatedCurve) -> f64 {
    let lift = wilczynski::canonical_lift(curve);
    spectral::split(&lift.y).iter().map(|c| spectral::tail_ratio(c)).fold(0.0, f64::max)
}

/// Tail ratio of the balanced curve; large values mean it needs a finer grid before being analyzed again.
pub fn balanced_tail_ratio(balanced: &BalancedResult) -> f64 {
    spectral::split(&balanced.y_balanced).iter().map(|c| spectral::tail_ratio(c)).fold(0.0, f64::max)
}

/// Lift tail ratio up to which third derivatives stay within the default tolerances.
pub const RESOLVED_TAIL: f64 = 1e-12;

/// Smallest grid `start·2^j` on which the normalized lift of `family` is resolved.
pub fn resolved_grid(family: &Family, start: usize, config: &RunConfig) -> Result<usize> {
    let mut n = start;
    loop {
        let curve = curve::orient_and_validate(&family.sample(n)?, config.tolerances.degeneracy)?;
        if lift_tail_ratio(&curve) <= RESOLVED_TAIL || n >= MAX_GRID {
            return Ok(n);
        }
        n *= 2;
    }
}

pub fn dual(analysis: &Analysis, config: &RunConfig) -> Result<DualLift> {
    wilczynski::dual_lift(&analysis.lift, &analysis.frame, &config.tolerances)
}

/// Balanced parametrization of an analyzed cone.
#[derive(Debug, Clone)]
pub struct Balanced {
    pub result: BalancedResult,
    /// Map to the circular cone, for ellipsoidal input.
    pub normalization: Option<EllipsoidalNormalization>,
}

impl Balanced {
    pub fn map(&self) -> Option<Matrix3<f64>> {
        self.normalization.as_ref().map(|n| n.map)
    }
}

pub fn balance(analysis: &Analysis, config: &RunConfig) -> Result<Balanced> {
    let tol = &config.tolerances;
    let (reparam, normalization) = match analysis.class.tag {
        MonodromyTag::Ellipsoidal => {
            let norm = balancer::ellipsoidal_normalization(&analysis.lift, tol)?;
            (norm.reparam.clone(), Some(norm))
        }
        _ => {
            let sol = monodromy::canonical_reduced_solution(&analysis.class, &analysis.system, tol)?;
            (balancer::build_reparametrization(&analysis.class, &sol, tol)?, None)
        }
    };
    let mut result = balancer::transform_lift(&analysis.lift, &reparam, analysis.class.tag, tol)?;
    let mut warnings = analysis.warnings();
    let ratio = balanced_tail_ratio(&result);
    if ratio > curve::TAIL_WARNING {
        warnings.push(Warning::SpectralTail { ratio });
    }
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(Balanced { result, normalization })
}

/// Analysis and balancing of a curve in one call.
pub fn run(curve: &PeriodicVectorCurve, config: &RunConfig) -> Result<(Analysis, Balanced)> {
    let analysis = analyze(curve, config)?;
    let balanced = balance(&analysis, config)?;
    Ok((analysis, balanced))
}
