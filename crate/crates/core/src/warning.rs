use serde::Serialize;

/// Non-fatal diagnostics attached to reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Warning {
    /// The monodromy trace lies within ten classification bands of ±2.
    NearBoundary { trace: f64, distance: f64 },
    /// High-frequency content of the input does not decay; derivatives may alias.
    SpectralTail { ratio: f64 },
    /// The cubic form touches zero without changing sign.
    TangentialZero { s: f64 },
    /// Two sign changes closer than one grid spacing were merged into a touch point.
    MergedZeros { s: f64 },
    /// Balanced parametrizations of ellipsoidal cones are not unique up to shift.
    EllipsoidalNonUnique,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NearBoundary { trace, distance } => {
                write!(f, "monodromy trace {trace} is {distance:e} from a case boundary")
            }
            Warning::SpectralTail { ratio } => {
                write!(f, "spectral tail ratio {ratio:e}; input may be under-resolved")
            }
            Warning::TangentialZero { s } => write!(f, "cubic form touches zero near s = {s}"),
            Warning::MergedZeros { s } => write!(f, "merged two nearby zeros of the cubic form at s = {s}"),
            Warning::EllipsoidalNonUnique => {
                write!(f, "ellipsoidal cone: balanced parametrization unique only up to disc automorphisms")
            }
        }
    }
}
