//! Linear MPC on the lateral/heading tracking-error model.
//!
//! States are `[e_y, de_y, e_psi, de_psi]` linearized about the current
//! forward speed; the path's desired yaw rate `vx * kappa` enters as a known
//! disturbance over the horizon. The horizon is condensed into a box QP over
//! the steering sequence.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use super::qp::{solve_box_qp, QpProblem};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::geometry::{Projection, ReferencePath};
use crate::vehicle::{VehicleParams, VehicleState, MIN_SLIP_SPEED};

pub const QP_TOL: f64 = 1e-9;
pub const QP_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    pub horizon_steps: usize,
    pub dt: f64,
    /// Lateral error weight, 1/m^2.
    pub q_ey: f64,
    /// Heading error weight, 1/rad^2.
    pub q_epsi: f64,
    /// Steering magnitude weight, 1/rad^2.
    pub r_delta: f64,
    /// Steering increment weight, 1/rad^2.
    pub r_ddelta: f64,
    pub delta_bound: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon_steps: 20,
            dt: 0.05,
            q_ey: 10.0,
            q_epsi: 5.0,
            r_delta: 1.0,
            r_ddelta: 5.0,
            delta_bound: 0.5,
        }
    }
}

impl MpcConfig {
    pub const KEYS: [&'static str; 7] = ["horizon", "dt", "q_ey", "q_epsi", "r_delta", "r_ddelta", "delta_bound"];

    pub fn validate(&self) -> Result<()> {
        let weights = [self.q_ey, self.q_epsi, self.r_delta, self.r_ddelta];
        if self.horizon_steps < 2
            || !(self.dt > 0.0)
            || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || !(self.q_ey > 0.0 || self.q_epsi > 0.0)
            || !(self.delta_bound > 0.0)
        {
            return Err(Error::Config(
                "MPC config needs horizon >= 2, dt > 0, weights >= 0 with a positive state weight, delta_bound > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_config(cfg: &KvConfig, prefix: &str) -> Result<Self> {
        let d = Self::default();
        let k = |name: &str| format!("{prefix}{name}");
        let c = Self {
            horizon_steps: cfg.get_or(&k("horizon"), d.horizon_steps)?,
            dt: cfg.get_or(&k("dt"), d.dt)?,
            q_ey: cfg.get_or(&k("q_ey"), d.q_ey)?,
            q_epsi: cfg.get_or(&k("q_epsi"), d.q_epsi)?,
            r_delta: cfg.get_or(&k("r_delta"), d.r_delta)?,
            r_ddelta: cfg.get_or(&k("r_ddelta"), d.r_ddelta)?,
            delta_bound: cfg.get_or(&k("delta_bound"), d.delta_bound)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn write_config(&self, cfg: &mut KvConfig, prefix: &str) {
        cfg.set(&format!("{prefix}horizon"), self.horizon_steps);
        let vals = [self.dt, self.q_ey, self.q_epsi, self.r_delta, self.r_ddelta, self.delta_bound];
        for (key, v) in Self::KEYS[1..].iter().zip(vals) {
            cfg.set(&format!("{prefix}{key}"), v);
        }
    }
}

/// Discretized error model and initial conditions for one MPC solve.
#[derive(Debug, Clone)]
pub struct ErrorModel {
    pub ad: Matrix4<f64>,
    pub bd: Vector4<f64>,
    /// Input matrix of the desired yaw rate disturbance.
    pub ed: Vector4<f64>,
    pub x0: Vector4<f64>,
    /// Desired yaw rate at each horizon step.
    pub disturbance: Vec<f64>,
    /// Steering applied before the first horizon step.
    pub delta_prev: f64,
}

impl ErrorModel {
    pub fn build(
        state: &VehicleState,
        path: &ReferencePath,
        proj: Projection,
        cfg: &MpcConfig,
        params: &VehicleParams,
    ) -> Self {
        let vx = state.vx.max(MIN_SLIP_SPEED);
        let (m, iz, lf, lr, cf, cr) = (params.m, params.iz, params.lf, params.lr, params.cf, params.cr);
        let a = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            0.0, -(cf + cr) / (m * vx), (cf + cr) / m, (lr * cr - lf * cf) / (m * vx),
            0.0, 0.0, 0.0, 1.0,
            0.0, (lr * cr - lf * cf) / (iz * vx), (lf * cf - lr * cr) / iz, -(lf * lf * cf + lr * lr * cr) / (iz * vx),
        );
        let b = Vector4::new(0.0, cf / m, 0.0, lf * cf / iz);
        let e = Vector4::new(0.0, (lr * cr - lf * cf) / (m * vx) - vx, 0.0, -(lf * lf * cf + lr * lr * cr) / (iz * vx));

        // zero-order hold through the exponential of the augmented matrix
        let mut aug = DMatrix::<f64>::zeros(6, 6);
        for i in 0..4 {
            for j in 0..4 {
                aug[(i, j)] = a[(i, j)] * cfg.dt;
            }
            aug[(i, 4)] = b[i] * cfg.dt;
            aug[(i, 5)] = e[i] * cfg.dt;
        }
        let phi = aug.exp();
        let ad = Matrix4::from_fn(|i, j| phi[(i, j)]);
        let bd = Vector4::from_fn(|i, _| phi[(i, 4)]);
        let ed = Vector4::from_fn(|i, _| phi[(i, 5)]);

        let e_psi = crate::geometry::normalize_angle(state.psi - path.heading_at(proj.s));
        let kappa0 = path.curvature_at(proj.s);
        let x0 = Vector4::new(
            proj.e_lat,
            state.vy * e_psi.cos() + state.vx * e_psi.sin(),
            e_psi,
            state.r - kappa0 * state.vx,
        );
        let disturbance = (0..cfg.horizon_steps)
            .map(|k| vx * path.curvature_at(proj.s + vx * cfg.dt * k as f64))
            .collect();
        Self {
            ad,
            bd,
            ed,
            x0,
            disturbance,
            delta_prev: state.delta,
        }
    }

    /// Condensed box QP over the steering sequence.
    pub fn condense(&self, cfg: &MpcConfig) -> QpProblem {
        let n = cfg.horizon_steps;
        let q = [cfg.q_ey, 0.0, cfg.q_epsi, 0.0];
        // free response c_k and input response columns S[k][j] for states x_1..x_N
        let mut free = Vec::with_capacity(n);
        let mut x = self.x0;
        for k in 0..n {
            x = self.ad * x + self.ed * self.disturbance[k];
            free.push(x);
        }
        let mut powers = Vec::with_capacity(n);
        let mut col = self.bd;
        for _ in 0..n {
            powers.push(col);
            col = self.ad * col;
        }
        // x_{k+1} depends on u_j (j <= k) through Ad^(k-j) Bd
        let mut h = DMatrix::<f64>::zeros(n, n);
        let mut f = DVector::<f64>::zeros(n);
        for k in 0..n {
            for i in 0..n.min(k + 1) {
                let si = powers[k - i];
                f[i] += 2.0 * (0..4).map(|r| q[r] * si[r] * free[k][r]).sum::<f64>();
                for j in 0..n.min(k + 1) {
                    let sj = powers[k - j];
                    h[(i, j)] += 2.0 * (0..4).map(|r| q[r] * si[r] * sj[r]).sum::<f64>();
                }
            }
        }
        for i in 0..n {
            h[(i, i)] += 2.0 * cfg.r_delta;
        }
        // first differences D u - delta_prev e_0
        for i in 0..n {
            h[(i, i)] += 2.0 * cfg.r_ddelta;
            if i + 1 < n {
                h[(i, i)] += 2.0 * cfg.r_ddelta;
                h[(i, i + 1)] -= 2.0 * cfg.r_ddelta;
                h[(i + 1, i)] -= 2.0 * cfg.r_ddelta;
            }
        }
        f[0] -= 2.0 * cfg.r_ddelta * self.delta_prev;
        QpProblem {
            h,
            f,
            lower: DVector::from_element(n, -cfg.delta_bound),
            upper: DVector::from_element(n, cfg.delta_bound),
        }
    }
}

/// First steering command of the MPC solution, given a precomputed projection.
pub fn mpc_control_at(
    state: &VehicleState,
    path: &ReferencePath,
    proj: Projection,
    cfg: &MpcConfig,
    params: &VehicleParams,
) -> Result<f64> {
    let model = ErrorModel::build(state, path, proj, cfg, params);
    let qp = model.condense(cfg);
    let u = solve_box_qp(&qp, QP_TOL, QP_MAX_ITER)?;
    Ok(u[0])
}

pub fn mpc_control(
    state: &VehicleState,
    path: &ReferencePath,
    cfg: &MpcConfig,
    params: &VehicleParams,
) -> Result<f64> {
    let proj = path.project((state.x, state.y));
    mpc_control_at(state, path, proj, cfg, params)
}
