//! CSV and JSON writers for the pipeline products.
//!
//! CSV floats use `{:.16e}` (17 significant digits); JSON floats use the
//! shortest representation that round-trips. Every CSV starts with a `#`
//! header comment carrying the grid size and the orientation flag.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

use crate::analysis::{Segment, SextacticReport};
use crate::balancer::BalancedResult;
use crate::curve::PeriodicVectorCurve;
use crate::error::Result;
use crate::monodromy::{MonodromyClass, MonodromyTag};
use crate::spectral;

fn header(w: &mut impl Write, n: usize, orientation_flipped: bool) -> Result<()> {
    writeln!(w, "# N={n} orientation_flipped={orientation_flipped}")?;
    Ok(())
}

fn row(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(w, "{}", line.join(","))?;
    Ok(())
}

/// `t,g0,g1,g2`
pub fn write_curve_csv(w: &mut impl Write, curve: &PeriodicVectorCurve) -> Result<()> {
    header(w, curve.len(), curve.orientation_flipped)?;
    writeln!(w, "t,g0,g1,g2")?;
    for (t, g) in curve.nodes().into_iter().zip(&curve.samples) {
        row(w, &[t, g[0], g[1], g[2]])?;
    }
    Ok(())
}

/// `t,alpha,beta`
pub fn write_coefficients_csv(w: &mut impl Write, alpha: &[f64], beta: &[f64], orientation_flipped: bool) -> Result<()> {
    header(w, alpha.len(), orientation_flipped)?;
    writeln!(w, "t,alpha,beta")?;
    for ((t, a), b) in spectral::nodes(alpha.len()).into_iter().zip(alpha).zip(beta) {
        row(w, &[t, *a, *b])?;
    }
    Ok(())
}

/// Frames as row-major 3×3 arrays.
pub fn frames_json(frames: &[Matrix3<f64>], orientation_flipped: bool) -> Value {
    let rows: Vec<[[f64; 3]; 3]> = frames
        .iter()
        .map(|m| [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]))
        .collect();
    json!({ "N": frames.len(), "orientation_flipped": orientation_flipped, "frames": rows })
}

/// `{trace, tag, lambda | phi, alpha_star, warnings}`
pub fn monodromy_json(class: &MonodromyClass) -> Value {
    let mut report = json!({
        "trace": class.trace,
        "tag": class.tag.name(),
        "alpha_star": class.alpha_star,
        "warnings": class.warnings,
    });
    match class.tag {
        MonodromyTag::Hyperbolic { lambda } => report["lambda"] = json!(lambda),
        MonodromyTag::Elliptic { phi } => report["phi"] = json!(phi),
        MonodromyTag::Parabolic | MonodromyTag::Ellipsoidal => {}
    }
    report
}

/// `{alpha_star, case, beta, s_of_t, warnings}` plus the re-extraction deviations.
pub fn balanced_json(result: &BalancedResult) -> Value {
    json!({
        "alpha_star": result.alpha_star,
        "case": result.tag.name(),
        "beta": result.beta_balanced,
        "s_of_t": result.reparam.s_of_t(),
        "alpha_deviation": result.alpha_deviation,
        "beta_deviation": result.beta_deviation,
        "warnings": result.warnings,
    })
}

/// `s,beta,y0,y1,y2` at the uniform `s` nodes.
pub fn write_balanced_csv(w: &mut impl Write, result: &BalancedResult, orientation_flipped: bool) -> Result<()> {
    let n = result.beta_balanced.len();
    header(w, n, orientation_flipped)?;
    writeln!(w, "s,beta,y0,y1,y2")?;
    let y: &[Vector3<f64>] = &result.y_balanced;
    for ((s, b), y) in spectral::nodes(n).into_iter().zip(&result.beta_balanced).zip(y) {
        row(w, &[s, *b, y[0], y[1], y[2]])?;
    }
    Ok(())
}

pub fn sextactic_json(report: &SextacticReport) -> Value {
    serde_json::to_value(report).expect("sextactic report serializes")
}

/// `i,s_start,s_end,length`
pub fn write_segments_csv(w: &mut impl Write, segments: &[Segment], n: usize, orientation_flipped: bool) -> Result<()> {
    header(w, n, orientation_flipped)?;
    writeln!(w, "i,s_start,s_end,length")?;
    for (i, seg) in segments.iter().enumerate() {
        writeln!(w, "{i},{:.16e},{:.16e},{:.16e}", seg.start, seg.end, seg.length)?;
    }
    Ok(())
}
