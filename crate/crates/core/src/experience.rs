//! Demonstration collection with expert controllers, failure filtering,
//! experience processing with the driven trajectory as reference, and task
//! segmentation.
//!
//! Processing treats the path the vehicle actually drove as the reference
//! path. Every recorded state then sits exactly on its own reference, so the
//! (state, applied steering) pairs describe error-free tracking of that path.

use std::fmt;

use rand::seq::SliceRandom;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::experts::Controller;
use crate::geometry::{build_path, Pose2D, ReferencePath, Waypoint};
use crate::policy::Sample;
use crate::vehicle::{step_dynamic, SimConfig, VehicleParams, VehicleState};

/// Allowed reference speeds for demonstrations, m/s.
pub const V_REF_RANGE: (f64, f64) = (3.0, 15.0);
/// Default lateral deviation above which an episode is discarded, m.
pub const DEFAULT_DEV_THRESHOLD: f64 = 1.0;
/// Closed-loop runs are aborted beyond this deviation, m.
pub const ABORT_DEVIATION: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// State at the start of the control period.
    pub state: VehicleState,
    pub delta_cmd: f64,
    /// Steering the plant actually applied during the period.
    pub delta_applied: f64,
    /// Signed lateral deviation from the commanded reference path.
    pub e_lat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    DeviationExceeded,
    Blowup,
    ControllerFailure(String),
    Timeout,
}

impl Outcome {
    pub fn is_failure(&self) -> bool {
        !matches!(self, Outcome::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::DeviationExceeded => "deviation",
            Outcome::Blowup => "blowup",
            Outcome::ControllerFailure(_) => "controller",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub section: String,
    pub v_ref: f64,
    pub expert: String,
    pub seed: u64,
    pub repetition: usize,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn max_abs_deviation(&self) -> f64 {
        self.records.iter().map(|r| r.e_lat.abs()).fold(0.0, f64::max)
    }

    pub fn key(&self) -> TaskKey {
        TaskKey {
            section: self.meta.section.clone(),
            v_ref: self.meta.v_ref,
            repetition: self.meta.repetition,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,psi,vx,vy,r,delta_cmd,delta_applied\n");
        for r in &self.records {
            let s = &r.state;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.t, s.x, s.y, s.psi, s.vx, s.vy, s.r, r.delta_cmd, r.delta_applied
            ));
        }
        out
    }

    pub fn meta_config(&self) -> KvConfig {
        let mut cfg = KvConfig::new();
        cfg.set("section", &self.meta.section);
        cfg.set("v_ref", self.meta.v_ref);
        cfg.set("repetition", self.meta.repetition);
        cfg.set("expert", &self.meta.expert);
        cfg.set("seed", self.meta.seed);
        cfg.set("outcome", self.meta.outcome.label());
        cfg.set("failed", self.meta.outcome.is_failure());
        cfg.set("records", self.records.len());
        cfg
    }
}

/// Closed-loop run parameters shared by demonstration collection and rollouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub sim: SimConfig,
    pub params: VehicleParams,
    /// Runs stop once less than this much path remains ahead, m.
    pub end_margin: f64,
    pub abort_deviation: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            params: VehicleParams::default(),
            end_margin: 2.0,
            abort_deviation: ABORT_DEVIATION,
        }
    }
}

/// Simulate `controller` tracking `path` at constant reference speed.
pub fn run_closed_loop(
    controller: &dyn Controller,
    path: &ReferencePath,
    v_ref: f64,
    start: VehicleState,
    cfg: &LoopConfig,
) -> (Vec<TrajectoryRecord>, Outcome) {
    let dt = cfg.sim.dt;
    let max_steps = ((3.0 * path.length() / v_ref.max(0.5)) / dt) as usize + 200;
    let window = 5.0 + 2.0 * v_ref * dt;
    let mut state = start;
    let mut s_hint = path.project((state.x, state.y)).s;
    let mut records = Vec::new();
    for k in 0..max_steps {
        let proj = path.project_near((state.x, state.y), s_hint, window);
        s_hint = proj.s;
        if proj.s >= path.length() - cfg.end_margin {
            return (records, Outcome::Completed);
        }
        if proj.e_lat.abs() > cfg.abort_deviation {
            return (records, Outcome::DeviationExceeded);
        }
        let delta_cmd = match controller.steer(&state, path, proj, &cfg.params) {
            Ok(d) => d,
            Err(e) => return (records, Outcome::ControllerFailure(e.to_string())),
        };
        let next = match step_dynamic(&state, delta_cmd, v_ref, &cfg.params, &cfg.sim) {
            Ok(s) => s,
            Err(_) => return (records, Outcome::Blowup),
        };
        records.push(TrajectoryRecord {
            t: k as f64 * dt,
            state,
            delta_cmd,
            delta_applied: next.delta,
            e_lat: proj.e_lat,
        });
        state = next;
    }
    (records, Outcome::Timeout)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectConfig {
    pub run: LoopConfig,
    /// Uniform start perturbation bounds: lateral (m) and heading (rad).
    pub start_lateral: f64,
    pub start_heading: f64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            run: LoopConfig::default(),
            start_lateral: 0.3,
            start_heading: 0.05,
        }
    }
}

/// Path-aligned start at the beginning of `path`, perturbed by `rng`.
pub fn start_state(path: &ReferencePath, v_ref: f64, lateral: f64, heading: f64) -> VehicleState {
    let (x, y) = path.position_at(0.0);
    let psi = path.heading_at(0.0);
    VehicleState::at(
        Pose2D::new(x - lateral * psi.sin(), y + lateral * psi.cos(), psi + heading),
        v_ref,
    )
}

/// Drive `expert` along `path` once at `v_ref`. Simulation and controller
/// failures end the episode and are recorded in its metadata.
pub fn collect_episode(
    expert: &dyn Controller,
    path: &ReferencePath,
    key: &TaskKey,
    cfg: &CollectConfig,
    seed: u64,
) -> Result<Trajectory> {
    use rand::Rng;
    let (lo, hi) = V_REF_RANGE;
    if !(key.v_ref >= lo && key.v_ref <= hi) {
        return Err(Error::Config(format!("v_ref {} outside [{lo}, {hi}] m/s", key.v_ref)));
    }
    let mut rng = crate::rng::rng_from(seed);
    let lateral = if cfg.start_lateral > 0.0 {
        rng.random_range(-cfg.start_lateral..=cfg.start_lateral)
    } else {
        0.0
    };
    let heading = if cfg.start_heading > 0.0 {
        rng.random_range(-cfg.start_heading..=cfg.start_heading)
    } else {
        0.0
    };
    let start = start_state(path, key.v_ref, lateral, heading);
    let (records, outcome) = run_closed_loop(expert, path, key.v_ref, start, &cfg.run);
    let outcome = if records.len() < 2 && !outcome.is_failure() {
        Outcome::Timeout
    } else {
        outcome
    };
    Ok(Trajectory {
        records,
        meta: TrajectoryMeta {
            section: key.section.clone(),
            v_ref: key.v_ref,
            expert: expert.id().to_string(),
            seed,
            repetition: key.repetition,
            outcome,
        },
    })
}

/// Whether the episode should be excluded from training data.
pub fn episode_failed(traj: &Trajectory, dev_threshold: f64) -> bool {
    traj.meta.outcome.is_failure() || traj.max_abs_deviation() > dev_threshold
}

/// Reference path through the positions the vehicle actually drove.
pub fn driven_path(traj: &Trajectory, ds: f64) -> Result<ReferencePath> {
    let mut pts: Vec<Waypoint> = Vec::with_capacity(traj.records.len());
    for r in &traj.records {
        let w = Waypoint::new(r.state.x, r.state.y);
        if pts.last().is_none_or(|p| (p.x - w.x).hypot(p.y - w.y) > 1e-6) {
            pts.push(w);
        }
    }
    build_path(&pts, ds)
}

/// Convert a trajectory into (state, action) samples, using the driven path
/// as the reference. Records with less than `lookahead` of driven path ahead
/// are dropped.
pub fn process_experience(traj: &Trajectory, lookahead: f64, ds: f64) -> Result<Vec<Sample>> {
    let too_short = || Error::TrajectoryTooShort { lookahead };
    if traj.records.len() < 4 {
        return Err(too_short());
    }
    let path = driven_path(traj, ds).map_err(|_| too_short())?;
    let mut samples = Vec::with_capacity(traj.records.len());
    let mut hint = 0.0;
    let mut prev = (traj.records[0].state.x, traj.records[0].state.y);
    for r in &traj.records {
        let s = &r.state;
        hint += (s.x - prev.0).hypot(s.y - prev.1);
        prev = (s.x, s.y);
        let proj = path.project_near((s.x, s.y), hint, 5.0);
        if path.length() - proj.s < lookahead {
            break;
        }
        let preview = path.preview_from(&s.pose(), proj.s, lookahead)?;
        samples.push(Sample::new([preview.x_ref, preview.y_ref, s.vx, s.vy, s.r], r.delta_applied));
    }
    if samples.is_empty() {
        return Err(too_short());
    }
    Ok(samples)
}

/// Identity of a task: road section, reference speed and repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskKey {
    pub section: String,
    pub v_ref: f64,
    pub repetition: usize,
}

impl TaskKey {
    pub fn new(section: &str, v_ref: f64, repetition: usize) -> Self {
        Self {
            section: section.to_string(),
            v_ref,
            repetition,
        }
    }
}

impl fmt::Display for TaskKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_v{}_r{}", self.section, self.v_ref, self.repetition)
    }
}

/// Samples of one task with a disjoint train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub key: TaskKey,
    pub samples: Vec<Sample>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl TaskDataset {
    /// Random split with `train_fraction` of the samples in the training set
    /// (at least one sample on each side when there are two or more).
    pub fn split(key: TaskKey, samples: Vec<Sample>, train_fraction: f64, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = samples.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut crate::rng::rng_from(seed));
        let mut n_train = ((n as f64) * train_fraction).round() as usize;
        if n >= 2 {
            n_train = n_train.clamp(1, n - 1);
        } else {
            n_train = n;
        }
        let mut test_idx = idx.split_off(n_train);
        // both halves kept in time order
        idx.sort_unstable();
        test_idx.sort_unstable();
        Ok(Self {
            key,
            samples,
            train_idx: idx,
            test_idx,
        })
    }

    pub fn train_samples(&self) -> impl Iterator<Item = &Sample> {
        self.train_idx.iter().map(|&i| &self.samples[i])
    }

    pub fn test_samples(&self) -> impl Iterator<Item = &Sample> {
        self.test_idx.iter().map(|&i| &self.samples[i])
    }

    pub fn train_set(&self) -> Vec<Sample> {
        self.train_samples().copied().collect()
    }

    pub fn test_set(&self) -> Vec<Sample> {
        self.test_samples().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    pub lookahead: f64,
    pub ds: f64,
    pub dev_threshold: f64,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            lookahead: 2.0,
            ds: crate::geometry::DEFAULT_DS,
            dev_threshold: DEFAULT_DEV_THRESHOLD,
            train_fraction: 0.8,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Segmentation {
    pub tasks: Vec<TaskDataset>,
    pub warnings: Vec<String>,
}

/// Group episodes by task key in `curriculum` order. Failed episodes are
/// filtered out; keys left without samples are dropped with a warning.
pub fn segment_tasks(episodes: &[Trajectory], curriculum: &[TaskKey], opts: &SegmentOptions) -> Segmentation {
    let mut out = Segmentation::default();
    for (order, key) in curriculum.iter().enumerate() {
        let mut samples = Vec::new();
        let mut failed = 0;
        let mut total = 0;
        for ep in episodes.iter().filter(|e| e.key() == *key) {
            total += 1;
            if episode_failed(ep, opts.dev_threshold) {
                failed += 1;
                continue;
            }
            match process_experience(ep, opts.lookahead, opts.ds) {
                Ok(s) => samples.extend(s),
                Err(e) => out.warnings.push(format!("{key}: episode seed {} skipped: {e}", ep.meta.seed)),
            }
        }
        if samples.is_empty() {
            out.warnings.push(format!(
                "{key}: no usable samples ({total} episodes, {failed} failed); task omitted"
            ));
            continue;
        }
        let seed = crate::rng::derive_seed(opts.split_seed, crate::rng::stream::SPLIT, order as u64);
        match TaskDataset::split(key.clone(), samples, opts.train_fraction, seed) {
            Ok(ds) => out.tasks.push(ds),
            Err(e) => out.warnings.push(format!("{key}: {e}")),
        }
    }
    out
}

pub fn samples_to_csv<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> String {
    let mut out = String::from("x_ref,y_ref,vx,vy,r,a\n");
    for s in samples {
        let v = &s.s;
        out.push_str(&format!("{},{},{},{},{},{}\n", v[0], v[1], v[2], v[3], v[4], s.a));
    }
    out
}

pub fn samples_from_csv(text: &str) -> Result<Vec<Sample>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x_ref,y_ref,vx,vy,r,a") {
        return Err(Error::parse("dataset csv", "bad header"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let vals: Vec<f64> = l
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse("dataset csv", format!("bad row `{l}`")))?;
            if vals.len() != 6 {
                return Err(Error::parse("dataset csv", format!("expected 6 columns in `{l}`")));
            }
            Ok(Sample::new([vals[0], vals[1], vals[2], vals[3], vals[4]], vals[5]))
        })
        .collect()
}
