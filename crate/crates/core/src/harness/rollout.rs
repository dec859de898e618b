use crate::error::Result;
use crate::experience::{run_closed_loop, start_state, LoopConfig, Outcome, Trajectory, TrajectoryMeta, TrajectoryRecord};
use crate::experts::Controller;
use crate::geometry::{Projection, ReferencePath};
use crate::policy::{forward, Normalizer, PolicyNet};
use crate::vehicle::{VehicleParams, VehicleState};

/// The learned policy as a steering controller.
#[derive(Debug, Clone, Copy)]
pub struct PolicyController<'a> {
    pub net: &'a PolicyNet,
    pub norm: &'a Normalizer,
    pub lookahead: f64,
}

impl Controller for PolicyController<'_> {
    fn id(&self) -> &str {
        "policy"
    }

    fn steer(&self, state: &VehicleState, path: &ReferencePath, proj: Projection, params: &VehicleParams) -> Result<f64> {
        let p = path.preview_from(&state.pose(), proj.s, self.lookahead)?;
        let delta = forward(self.net, self.norm, &[p.x_ref, p.y_ref, state.vx, state.vy, state.r]);
        Ok(delta.clamp(-params.delta_max, params.delta_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutReport {
    /// Mean and max absolute lateral deviation from the commanded path, m.
    pub mean_dev: f64,
    pub max_dev: f64,
    /// Mean absolute applied steering, rad.
    pub mean_abs_delta: f64,
    /// Mean absolute change of applied steering per control period, rad.
    pub smoothness: f64,
    pub completed: bool,
}

impl RolloutReport {
    pub const CSV_HEADER: &'static str = "mean_dev,max_dev,mean_abs_delta,smoothness,completed";

    pub fn from_records(records: &[TrajectoryRecord], completed: bool) -> Self {
        let n = records.len().max(1) as f64;
        let mean_dev = records.iter().map(|r| r.e_lat.abs()).sum::<f64>() / n;
        let max_dev = records.iter().map(|r| r.e_lat.abs()).fold(0.0, f64::max);
        let mean_abs_delta = records.iter().map(|r| r.delta_applied.abs()).sum::<f64>() / n;
        let smoothness = if records.len() > 1 {
            records
                .windows(2)
                .map(|w| (w[1].delta_applied - w[0].delta_applied).abs())
                .sum::<f64>()
                / (records.len() - 1) as f64
        } else {
            0.0
        };
        Self {
            mean_dev,
            max_dev,
            mean_abs_delta,
            smoothness,
            completed,
        }
    }

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.mean_dev, self.max_dev, self.mean_abs_delta, self.smoothness, self.completed
        )
    }
}

/// Drive `controller` along `path` at `v_ref` from a path-aligned start.
/// The run is marked incomplete on numerical blowup, controller failure or
/// a deviation above the abort threshold.
pub fn rollout_closed_loop(
    controller: &dyn Controller,
    path: &ReferencePath,
    section: &str,
    v_ref: f64,
    cfg: &LoopConfig,
) -> (RolloutReport, Trajectory) {
    let start = start_state(path, v_ref, 0.0, 0.0);
    let (records, outcome) = run_closed_loop(controller, path, v_ref, start, cfg);
    let report = RolloutReport::from_records(&records, outcome == Outcome::Completed);
    let traj = Trajectory {
        records,
        meta: TrajectoryMeta {
            section: section.to_string(),
            v_ref,
            expert: controller.id().to_string(),
            seed: 0,
            repetition: 0,
            outcome,
        },
    };
    (report, traj)
}

/// Vehicle trajectory CSV `t,x,y,psi,vx,vy,r,delta,delta_cmd`.
pub fn vehicle_trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,y,psi,vx,vy,r,delta,delta_cmd\n");
    for r in &traj.records {
        let s = &r.state;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.t, s.x, s.y, s.psi, s.vx, s.vy, s.r, r.delta_applied, r.delta_cmd
        ));
    }
    out
}
