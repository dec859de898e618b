//! The learnable steering policy: a small tanh MLP over the 5-feature state
//! `[x_ref, y_ref, vx, vy, r]` with a frozen input normalizer, hand-written
//! backpropagation of the mean squared error, and SGD/Adam updates.

mod io;
mod net;
mod normalizer;
mod optimizer;

pub use io::{load_model, parse_model, save_model, write_model, MODEL_HEADER};
pub use net::{backward, forward, mse_loss, mse_loss_with, GradientVector, PolicyNet, LAYER_DIMS};
pub use normalizer::{fit_normalizer, Normalizer, SCALE_FLOOR};
pub use optimizer::{apply_gradient, Method, OptimizerState};

/// Number of state features fed to the policy.
pub const STATE_DIM: usize = 5;

/// Policy input `[x_ref, y_ref, vx, vy, r]`: body-frame preview point (m),
/// body-frame velocities (m/s) and yaw rate (rad/s).
pub type State = [f64; STATE_DIM];

/// One (state, action) pair; the action is the applied steering angle in rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub s: State,
    pub a: f64,
}

impl Sample {
    pub fn new(s: State, a: f64) -> Self {
        Self { s, a }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.s.iter().all(|v| v.is_finite())
    }
}
