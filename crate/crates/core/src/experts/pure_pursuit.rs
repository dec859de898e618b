use crate::error::Result;
use crate::geometry::{PreviewPoint, Projection, ReferencePath};
use crate::vehicle::{VehicleParams, VehicleState};

/// Pure-pursuit steering toward a body-frame preview point.
pub fn steer_toward(preview: &PreviewPoint, params: &VehicleParams) -> f64 {
    let ld = preview.distance();
    if ld <= f64::EPSILON {
        return 0.0;
    }
    let alpha = preview.y_ref.atan2(preview.x_ref);
    (2.0 * params.wheelbase() * alpha.sin() / ld)
        .atan()
        .clamp(-params.delta_max, params.delta_max)
}

pub fn pure_pursuit_at(
    state: &VehicleState,
    path: &ReferencePath,
    proj: Projection,
    lookahead: f64,
    params: &VehicleParams,
) -> Result<f64> {
    let preview = path.preview_from(&state.pose(), proj.s, lookahead)?;
    Ok(steer_toward(&preview, params))
}

pub fn pure_pursuit(state: &VehicleState, path: &ReferencePath, lookahead: f64, params: &VehicleParams) -> Result<f64> {
    let preview = crate::geometry::preview_point(path, &state.pose(), lookahead)?;
    Ok(steer_toward(&preview, params))
}
