//! Classical controllers: linear MPC (demonstrations and baseline) and pure
//! pursuit (baseline).

pub mod mpc;
pub mod pure_pursuit;
pub mod qp;

use crate::error::Result;
use crate::geometry::{Projection, ReferencePath};
use crate::vehicle::{VehicleParams, VehicleState};

pub use mpc::{mpc_control, mpc_control_at, ErrorModel, MpcConfig};
pub use pure_pursuit::{pure_pursuit, pure_pursuit_at};
pub use qp::{solve_box_qp, QpProblem};

/// A steering law that maps the current state and its projection onto the
/// reference path to a steering command.
pub trait Controller: Sync {
    fn id(&self) -> &str;

    fn steer(
        &self,
        state: &VehicleState,
        path: &ReferencePath,
        proj: Projection,
        params: &VehicleParams,
    ) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expert {
    PurePursuit { lookahead: f64 },
    Mpc(MpcConfig),
}

impl Controller for Expert {
    fn id(&self) -> &str {
        match self {
            Expert::PurePursuit { .. } => "pp",
            Expert::Mpc(_) => "mpc",
        }
    }

    fn steer(
        &self,
        state: &VehicleState,
        path: &ReferencePath,
        proj: Projection,
        params: &VehicleParams,
    ) -> Result<f64> {
        match self {
            Expert::PurePursuit { lookahead } => pure_pursuit_at(state, path, proj, *lookahead, params),
            Expert::Mpc(cfg) => mpc_control_at(state, path, proj, cfg, params),
        }
    }
}
