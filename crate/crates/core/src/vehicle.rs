//! Single-track (bicycle) lateral dynamics with linear tires, a kinematic
//! bicycle model for reference checks, and the fixed-step plant step.

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::geometry::Pose2D;

/// Slip angles are computed with at least this forward speed.
pub const MIN_SLIP_SPEED: f64 = 0.5;
const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Mass, kg.
    pub m: f64,
    /// Yaw inertia, kg m^2.
    pub iz: f64,
    /// CoG to front axle, m.
    pub lf: f64,
    /// CoG to rear axle, m.
    pub lr: f64,
    /// Front axle cornering stiffness, N/rad.
    pub cf: f64,
    pub cr: f64,
    pub delta_max: f64,
    /// Steering rate limit, rad/s.
    pub delta_rate_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            m: 1500.0,
            iz: 2500.0,
            lf: 1.2,
            lr: 1.4,
            cf: 80_000.0,
            cr: 80_000.0,
            delta_max: 0.5,
            delta_rate_max: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.lf + self.lr
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m, self.iz, self.lf, self.lr, self.cf, self.cr, self.delta_max, self.delta_rate_max];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("vehicle parameters must be positive and finite".into()));
        }
        if self.delta_max > std::f64::consts::FRAC_PI_4 {
            return Err(Error::Config("delta_max must not exceed pi/4".into()));
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 8] = ["m", "iz", "lf", "lr", "cf", "cr", "delta_max", "delta_rate_max"];

    /// Reads `<prefix>m`, `<prefix>iz`, ... from `cfg`, defaulting missing keys.
    pub fn from_config(cfg: &KvConfig, prefix: &str) -> Result<Self> {
        let d = Self::default();
        let k = |name: &str| format!("{prefix}{name}");
        let p = Self {
            m: cfg.get_or(&k("m"), d.m)?,
            iz: cfg.get_or(&k("iz"), d.iz)?,
            lf: cfg.get_or(&k("lf"), d.lf)?,
            lr: cfg.get_or(&k("lr"), d.lr)?,
            cf: cfg.get_or(&k("cf"), d.cf)?,
            cr: cfg.get_or(&k("cr"), d.cr)?,
            delta_max: cfg.get_or(&k("delta_max"), d.delta_max)?,
            delta_rate_max: cfg.get_or(&k("delta_rate_max"), d.delta_rate_max)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn write_config(&self, cfg: &mut KvConfig, prefix: &str) {
        let vals = [self.m, self.iz, self.lf, self.lr, self.cf, self.cr, self.delta_max, self.delta_rate_max];
        for (key, v) in Self::KEYS.iter().zip(vals) {
            cfg.set(&format!("{prefix}{key}"), v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    /// Body-frame longitudinal speed, m/s.
    pub vx: f64,
    /// Body-frame lateral speed, m/s.
    pub vy: f64,
    /// Yaw rate, rad/s.
    pub r: f64,
    /// Steering angle currently applied at the road wheel, rad.
    pub delta: f64,
}

impl VehicleState {
    /// At rest-free start on a pose with forward speed `vx`.
    pub fn at(pose: Pose2D, vx: f64) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            psi: pose.psi,
            vx,
            ..Self::default()
        }
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.psi)
    }

    fn is_sane(&self) -> bool {
        [self.x, self.y, self.psi, self.vx, self.vy, self.r, self.delta]
            .iter()
            .all(|v| v.is_finite() && v.abs() <= BLOWUP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Control period, s.
    pub dt: f64,
    /// RK4 substeps per control period.
    pub substeps: usize,
    /// First-order lag of vx toward its reference, s.
    pub vx_lag_tau: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            substeps: 5,
            vx_lag_tau: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.substeps == 0 || !(self.vx_lag_tau > 0.0) {
            return Err(Error::Config("sim config needs dt > 0, substeps >= 1, vx_lag_tau > 0".into()));
        }
        Ok(())
    }
}

/// Copy of `state` whose forward speed is raised to [`MIN_SLIP_SPEED`] for the
/// slip-angle terms.
pub fn low_speed_guard(state: &VehicleState) -> VehicleState {
    VehicleState {
        vx: state.vx.max(MIN_SLIP_SPEED),
        ..*state
    }
}

/// Front and rear slip angles.
pub fn slip_angles(state: &VehicleState, params: &VehicleParams) -> (f64, f64) {
    let g = low_speed_guard(state);
    let alpha_f = g.delta - (g.vy + params.lf * g.r).atan2(g.vx);
    let alpha_r = -(g.vy - params.lr * g.r).atan2(g.vx);
    (alpha_f, alpha_r)
}

/// Derivative of (x, y, psi, vx, vy, r) with steering held at `state.delta`.
fn dynamics(state: &VehicleState, vx_ref: f64, params: &VehicleParams, cfg: &SimConfig) -> [f64; 6] {
    let (alpha_f, alpha_r) = slip_angles(state, params);
    let fyf = params.cf * alpha_f;
    let fyr = params.cr * alpha_r;
    let cos_d = state.delta.cos();
    let (s, c) = state.psi.sin_cos();
    [
        state.vx * c - state.vy * s,
        state.vx * s + state.vy * c,
        state.r,
        (vx_ref - state.vx) / cfg.vx_lag_tau,
        (fyf * cos_d + fyr) / params.m - state.vx * state.r,
        (params.lf * fyf * cos_d - params.lr * fyr) / params.iz,
    ]
}

fn offset(state: &VehicleState, k: &[f64; 6], h: f64) -> VehicleState {
    VehicleState {
        x: state.x + h * k[0],
        y: state.y + h * k[1],
        psi: state.psi + h * k[2],
        vx: state.vx + h * k[3],
        vy: state.vy + h * k[4],
        r: state.r + h * k[5],
        delta: state.delta,
    }
}

/// Steering actually applied for one control period: `delta_cmd` saturated
/// to +-delta_max, then rate-limited relative to `current`.
pub fn apply_steering_limits(current: f64, delta_cmd: f64, dt: f64, params: &VehicleParams) -> f64 {
    let target = delta_cmd.clamp(-params.delta_max, params.delta_max);
    let max_step = params.delta_rate_max * dt;
    (current + (target - current).clamp(-max_step, max_step)).clamp(-params.delta_max, params.delta_max)
}

/// Advance one control period of the dynamic single-track model.
pub fn step_dynamic(
    state: &VehicleState,
    delta_cmd: f64,
    vx_ref: f64,
    params: &VehicleParams,
    cfg: &SimConfig,
) -> Result<VehicleState> {
    if !delta_cmd.is_finite() {
        return Err(Error::NumericBlowup);
    }
    let mut s = VehicleState {
        delta: apply_steering_limits(state.delta, delta_cmd, cfg.dt, params),
        ..*state
    };
    let h = cfg.dt / cfg.substeps as f64;
    for _ in 0..cfg.substeps {
        let k1 = dynamics(&s, vx_ref, params, cfg);
        let k2 = dynamics(&offset(&s, &k1, h / 2.0), vx_ref, params, cfg);
        let k3 = dynamics(&offset(&s, &k2, h / 2.0), vx_ref, params, cfg);
        let k4 = dynamics(&offset(&s, &k3, h), vx_ref, params, cfg);
        let mut k = [0.0; 6];
        for i in 0..6 {
            k[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        s = offset(&s, &k, h);
        if !s.is_sane() {
            return Err(Error::NumericBlowup);
        }
    }
    s.vx = s.vx.max(0.0);
    Ok(s)
}

/// Kinematic bicycle step (reference point at the rear axle, no slip), RK4.
pub fn step_kinematic(state: &VehicleState, delta: f64, v: f64, dt: f64, params: &VehicleParams) -> VehicleState {
    let yaw_rate = v * delta.tan() / params.wheelbase();
    let f = |psi: f64| (v * psi.cos(), v * psi.sin());
    let p0 = state.psi;
    let (x1, y1) = f(p0);
    let (x2, y2) = f(p0 + 0.5 * dt * yaw_rate);
    let (x4, y4) = f(p0 + dt * yaw_rate);
    VehicleState {
        x: state.x + dt * (x1 + 4.0 * x2 + x4) / 6.0,
        y: state.y + dt * (y1 + 4.0 * y2 + y4) / 6.0,
        psi: state.psi + dt * yaw_rate,
        vx: v,
        vy: 0.0,
        r: yaw_rate,
        delta,
    }
}

/// Closed-form steady-state yaw rate of the linear single-track model.
pub fn steady_state_yaw_rate(vx: f64, delta: f64, params: &VehicleParams) -> f64 {
    let l = params.wheelbase();
    let k_us = params.m / l * (params.lr / params.cf - params.lf / params.cr);
    vx * delta / (l + k_us * vx * vx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cruise(vx: f64) -> VehicleState {
        VehicleState {
            vx,
            ..Default::default()
        }
    }

    #[test]
    fn straight_run_stays_straight() {
        let p = VehicleParams::default();
        for dt in [0.01, 0.05, 0.2] {
            let cfg = SimConfig { dt, ..Default::default() };
            let mut s = cruise(10.0);
            for _ in 0..100 {
                s = step_dynamic(&s, 0.0, 10.0, &p, &cfg).unwrap();
            }
            assert_eq!(s.y, 0.0);
            assert_eq!(s.psi, 0.0);
            assert_eq!(s.vy, 0.0);
            assert_eq!(s.r, 0.0);
        }
    }

    #[test]
    fn yaw_rate_reaches_linear_steady_state() {
        let p = VehicleParams::default();
        let cfg = SimConfig::default();
        let delta = 0.02;
        let vx = 12.0;
        let mut s = cruise(vx);
        for _ in 0..200 {
            s = step_dynamic(&s, delta, vx, &p, &cfg).unwrap();
        }
        // oracle: solve the linearized lateral equations A [vy, r] = -B delta directly
        let (m, iz, lf, lr, cf, cr) = (p.m, p.iz, p.lf, p.lr, p.cf, p.cr);
        let a11 = -(cf + cr) / (m * vx);
        let a12 = (lr * cr - lf * cf) / (m * vx) - vx;
        let a21 = (lr * cr - lf * cf) / (iz * vx);
        let a22 = -(lf * lf * cf + lr * lr * cr) / (iz * vx);
        let (b1, b2) = (cf / m * delta, lf * cf / iz * delta);
        let det = a11 * a22 - a12 * a21;
        let r_ss = (-a11 * b2 + a21 * b1) / det;
        assert!((s.r - r_ss).abs() < 0.01 * r_ss.abs(), "{} vs {}", s.r, r_ss);
        let closed = steady_state_yaw_rate(vx, delta, &p);
        assert!((r_ss - closed).abs() < 1e-9 * closed.abs());
    }

    #[test]
    fn steering_saturates_and_rate_limits() {
        let p = VehicleParams::default();
        let cfg = SimConfig::default();
        let mut s = cruise(5.0);
        let mut prev = s.delta;
        for _ in 0..40 {
            s = step_dynamic(&s, 2.0, 5.0, &p, &cfg).unwrap();
            assert!((s.delta - prev).abs() <= p.delta_rate_max * cfg.dt + 1e-15);
            prev = s.delta;
        }
        assert_eq!(s.delta, p.delta_max);
    }

    #[test]
    fn low_speed_guard_clamps_slip_speed() {
        let p = VehicleParams::default();
        let at = |vx: f64| VehicleState { vx, vy: 0.3, r: 0.2, delta: 0.1, ..Default::default() };
        assert!(slip_angles(&at(0.0), &p).0.is_finite());
        assert_eq!(low_speed_guard(&at(10.0)), at(10.0));
        assert_eq!(slip_angles(&at(0.25), &p), slip_angles(&at(0.5), &p));
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let p = VehicleParams::default();
        let endpoint = |substeps: usize| {
            let cfg = SimConfig { substeps, ..Default::default() };
            let mut s = cruise(10.0);
            for k in 0..200 {
                let t = k as f64 * cfg.dt;
                s = step_dynamic(&s, 0.05 * (0.5 * t).sin(), 10.0, &p, &cfg).unwrap();
            }
            s
        };
        let e: Vec<VehicleState> = [1, 2, 4].iter().map(|&n| endpoint(n)).collect();
        let diff = |a: &VehicleState, b: &VehicleState| (a.x - b.x).hypot(a.y - b.y);
        let d1 = diff(&e[0], &e[1]);
        let d2 = diff(&e[1], &e[2]);
        assert!(d1 / d2 >= 8.0, "ratio {}", d1 / d2);
    }

    #[test]
    fn mirror_symmetry() {
        let p = VehicleParams::default();
        let cfg = SimConfig::default();
        let (mut a, mut b) = (cruise(8.0), cruise(8.0));
        for k in 0..150 {
            let cmd = 0.1 * (0.3 * k as f64).sin() + 0.02;
            a = step_dynamic(&a, cmd, 10.0, &p, &cfg).unwrap();
            b = step_dynamic(&b, -cmd, 10.0, &p, &cfg).unwrap();
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, -b.y);
            assert_eq!(a.psi, -b.psi);
            assert_eq!(a.vy, -b.vy);
            assert_eq!(a.r, -b.r);
        }
    }

    #[test]
    fn blowup_detected() {
        let p = VehicleParams::default();
        let cfg = SimConfig::default();
        let s = VehicleState { x: 2e6, vx: 5.0, ..Default::default() };
        assert!(matches!(step_dynamic(&s, 0.0, 5.0, &p, &cfg), Err(Error::NumericBlowup)));
    }

    #[test]
    fn kinematic_model() {
        let p = VehicleParams::default();
        let mut s = cruise(0.0);
        for _ in 0..50 {
            s = step_kinematic(&s, 0.0, 5.0, 0.05, &p);
        }
        assert_eq!(s.y, 0.0);
        assert_eq!(s.psi, 0.0);

        let still = step_kinematic(&s, 0.3, 0.0, 0.05, &p);
        assert_eq!((still.x, still.y, still.psi), (s.x, s.y, s.psi));

        let delta: f64 = 0.1;
        let radius = p.wheelbase() / delta.tan();
        let mut c = cruise(0.0);
        for _ in 0..400 {
            c = step_kinematic(&c, delta, 4.0, 0.05, &p);
            // circle centered at (0, radius)
            let dist = c.x.hypot(c.y - radius);
            assert!((dist - radius).abs() < 1e-6 * radius, "{dist} vs {radius}");
        }
    }

    #[test]
    fn params_config_round_trip() {
        let p = VehicleParams { m: 1800.0, ..Default::default() };
        let mut cfg = KvConfig::new();
        p.write_config(&mut cfg, "vehicle.");
        assert_eq!(VehicleParams::from_config(&cfg, "vehicle.").unwrap(), p);
    }
}
