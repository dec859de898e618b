use crate::error::{Error, Result};
use crate::policy::GradientVector;

/// Reference gradients with a squared norm below this are treated as zero.
const MIN_REF_NORM_SQ: f64 = 1e-12;

/// Project `g` so that it no longer points against `g_ref`.
///
/// Returns `g` unchanged when `g·g_ref >= 0` or `g_ref` is (numerically) zero,
/// otherwise `g - (g·g_ref / g_ref·g_ref) g_ref`.
pub fn agem_project(g: &GradientVector, g_ref: &GradientVector) -> Result<GradientVector> {
    if g.len() != g_ref.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            got: g_ref.len(),
        });
    }
    let dot = g.dot(g_ref);
    let ref_sq = g_ref.dot(g_ref);
    if dot >= 0.0 || ref_sq < MIN_REF_NORM_SQ {
        return Ok(g.clone());
    }
    let c = dot / ref_sq;
    Ok(GradientVector::from_vec(
        g.as_slice().iter().zip(g_ref.as_slice()).map(|(a, b)| a - c * b).collect(),
    ))
}
