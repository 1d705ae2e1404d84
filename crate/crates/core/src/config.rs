use serde::{Deserialize, Serialize};

/// Numerical thresholds used across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Band around trace ±2 inside which the monodromy counts as parabolic/ellipsoidal.
    pub class_trace: f64,
    /// max |beta| below which the cubic form counts as identically zero.
    pub beta_flat: f64,
    /// Relative tolerance of the adaptive integrator.
    pub ode_rtol: f64,
    /// Relative floor on |det(g'', g', g)|.
    pub degeneracy: f64,
    /// Largest admissible max |c2| after normalization.
    pub gauge: f64,
    /// Largest admissible condition number of a nodal 3x3 system.
    pub condition: f64,
    pub orthogonality: f64,
    pub closure: f64,
    pub frame_det: f64,
    pub frame_residual: f64,
    /// Agreement of the dual coefficients with (alpha, -beta).
    pub dual_coefficients: f64,
    /// Upper bound for the Riccati-type inequality along the dual pairing.
    pub inequality: f64,
    /// Most negative admissible value of the primal/dual pairing.
    pub pairing: f64,
    /// Allowed excursion of the normalized reduced solution outside its region.
    pub region: f64,
    pub inversion: f64,
    /// Relative singular value threshold of the quadric fit.
    pub quadric: f64,
    /// Allowed deviation of re-extracted alpha from the balanced constant.
    pub verification: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            class_trace: 1e-7,
            beta_flat: 1e-7,
            ode_rtol: 1e-11,
            degeneracy: 1e-10,
            gauge: 1e-6,
            condition: 1e10,
            orthogonality: 1e-8,
            closure: 1e-7,
            frame_det: 1e-9,
            frame_residual: 1e-7,
            dual_coefficients: 1e-6,
            inequality: 1e-6,
            pairing: 1e-9,
            region: 1e-9,
            inversion: 1e-12,
            quadric: 1e-6,
            verification: 1e-5,
        }
    }
}

/// Full effective configuration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Overrides the grid size requested by the curve spec.
    pub grid: Option<usize>,
    pub tolerances: Tolerances,
    /// Seed for randomized checks (zero-spacing scan, random transformations).
    pub seed: u64,
    /// Number of random initial conditions in the zero-spacing scan.
    pub zero_trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { grid: None, tolerances: Tolerances::default(), seed: 0x5eed, zero_trials: 100 }
    }
}
