use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use sha2::{Digest, Sha256};

use super::metrics::{eval_matrix_update, EvalMatrix};
use super::plots::{emit_plots, PlotData};
use super::rollout::{rollout_closed_loop, vehicle_trajectory_csv, PolicyController, RolloutReport};
use crate::config::KvConfig;
use crate::continual::{TaskStats, TrainMethod, Trainer, TrainerConfig};
use crate::error::{Error, Result};
use crate::experience::{
    collect_episode, samples_to_csv, segment_tasks, CollectConfig, LoopConfig, SegmentOptions, TaskDataset,
    TaskKey, Trajectory, DEFAULT_DEV_THRESHOLD, V_REF_RANGE,
};
use crate::experts::{Expert, MpcConfig};
use crate::geometry::track::waypoints_to_csv;
use crate::geometry::{build_path, generate_track, ReferencePath, TrackSpec, Waypoint, DEFAULT_DS};
use crate::par::{self, Exec};
use crate::policy::{fit_normalizer, write_model, Normalizer, PolicyNet};
use crate::rng::{derive_seed, stream};
use crate::vehicle::{SimConfig, VehicleParams};

/// Everything that defines one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub train_sections: Vec<String>,
    pub test_section: String,
    pub velocities: Vec<f64>,
    pub repetitions: usize,
    pub test_velocity: f64,
    pub lookahead: f64,
    pub pp_lookahead: f64,
    pub ds: f64,
    pub dev_threshold: f64,
    pub train_fraction: f64,
    pub start_lateral: f64,
    pub start_heading: f64,
    pub methods: Vec<TrainMethod>,
    pub trainer: TrainerConfig,
    pub mpc: MpcConfig,
    pub vehicle: VehicleParams,
    pub sim: SimConfig,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_sections: vec!["S2".into(), "S3".into()],
            test_section: "S1".into(),
            velocities: vec![3.0, 6.0, 9.0, 12.0, 15.0],
            repetitions: 1,
            test_velocity: 10.0,
            lookahead: 2.0,
            pp_lookahead: 2.0,
            ds: DEFAULT_DS,
            dev_threshold: DEFAULT_DEV_THRESHOLD,
            train_fraction: 0.8,
            start_lateral: 0.3,
            start_heading: 0.05,
            methods: TrainMethod::ALL.to_vec(),
            trainer: TrainerConfig::default(),
            mpc: MpcConfig::default(),
            vehicle: VehicleParams::default(),
            sim: SimConfig::default(),
            exec: Exec::available(),
        }
    }
}

const TOP_KEYS: [&str; 15] = [
    "seed",
    "train_sections",
    "test_section",
    "velocities",
    "repetitions",
    "test_velocity",
    "lookahead",
    "pp_lookahead",
    "ds",
    "dev_threshold",
    "train_fraction",
    "start_lateral",
    "start_heading",
    "methods",
    "parallel",
];
const SIM_KEYS: [&str; 3] = ["sim.dt", "sim.substeps", "sim.vx_lag_tau"];

impl ExperimentConfig {
    /// Training curriculum: velocities from low to high, sections interleaved
    /// at each velocity, then further repetitions of the whole sweep.
    pub fn curriculum(&self) -> Vec<TaskKey> {
        let mut keys = Vec::new();
        for rep in 0..self.repetitions {
            for &v in &self.velocities {
                for s in &self.train_sections {
                    keys.push(TaskKey::new(s, v, rep));
                }
            }
        }
        keys
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.train_sections.is_empty() {
            return bad("no training sections".into());
        }
        if self.train_sections.contains(&self.test_section) {
            return bad(format!("test section {} must not appear in the training curriculum", self.test_section));
        }
        for s in self.train_sections.iter().chain([&self.test_section]) {
            if TrackSpec::preset(s).is_none() {
                return bad(format!("unknown section `{s}`"));
            }
        }
        let (lo, hi) = V_REF_RANGE;
        if self.velocities.is_empty() || self.velocities.iter().any(|v| !(*v >= lo && *v <= hi)) {
            return bad(format!("velocities must be non-empty and within [{lo}, {hi}] m/s"));
        }
        if !(self.test_velocity > 0.0 && self.test_velocity.is_finite()) {
            return bad("test_velocity must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if !(self.lookahead > 0.0 && self.pp_lookahead > 0.0 && self.ds > 0.0) {
            return bad("lookahead, pp_lookahead and ds must be positive".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)".into());
        }
        if !(self.dev_threshold > 0.0) || self.start_lateral < 0.0 || self.start_heading < 0.0 {
            return bad("dev_threshold must be positive and start perturbations non-negative".into());
        }
        if self.methods.is_empty() {
            return bad("no training methods selected".into());
        }
        self.trainer.validate()?;
        self.mpc.validate()?;
        self.vehicle.validate()?;
        self.sim.validate()
    }

    /// Overlay the keys of `cfg` on the defaults. Unknown keys are rejected.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let mut known: Vec<String> = TOP_KEYS.iter().map(|k| k.to_string()).collect();
        known.extend(TrainerConfig::KEYS.iter().map(|k| format!("train.{k}")));
        known.extend(MpcConfig::KEYS.iter().map(|k| format!("mpc.{k}")));
        known.extend(VehicleParams::KEYS.iter().map(|k| format!("vehicle.{k}")));
        known.extend(SIM_KEYS.iter().map(|k| k.to_string()));
        let known: Vec<&str> = known.iter().map(String::as_str).collect();
        cfg.reject_unknown(&known)?;

        let d = Self::default();
        let seed = cfg.get_or("seed", d.seed)?;
        let out = Self {
            seed,
            train_sections: cfg.get_list("train_sections")?.unwrap_or(d.train_sections),
            test_section: cfg.get_or("test_section", d.test_section)?,
            velocities: cfg.get_list("velocities")?.unwrap_or(d.velocities),
            repetitions: cfg.get_or("repetitions", d.repetitions)?,
            test_velocity: cfg.get_or("test_velocity", d.test_velocity)?,
            lookahead: cfg.get_or("lookahead", d.lookahead)?,
            pp_lookahead: cfg.get_or("pp_lookahead", d.pp_lookahead)?,
            ds: cfg.get_or("ds", d.ds)?,
            dev_threshold: cfg.get_or("dev_threshold", d.dev_threshold)?,
            train_fraction: cfg.get_or("train_fraction", d.train_fraction)?,
            start_lateral: cfg.get_or("start_lateral", d.start_lateral)?,
            start_heading: cfg.get_or("start_heading", d.start_heading)?,
            methods: cfg.get_list("methods")?.unwrap_or(d.methods),
            trainer: TrainerConfig::from_config(cfg, "train.", TrainerConfig { seed, ..d.trainer })?,
            mpc: MpcConfig::from_config(cfg, "mpc.")?,
            vehicle: VehicleParams::from_config(cfg, "vehicle.")?,
            sim: SimConfig {
                dt: cfg.get_or("sim.dt", d.sim.dt)?,
                substeps: cfg.get_or("sim.substeps", d.sim.substeps)?,
                vx_lag_tau: cfg.get_or("sim.vx_lag_tau", d.sim.vx_lag_tau)?,
            },
            exec: if cfg.get_or("parallel", true)? { Exec::available() } else { Exec::Sequential },
        };
        out.validate()?;
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvConfig::load(path)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.trainer.seed = seed;
        self
    }

    /// Canonical key-value form (execution strategy excluded: it never
    /// changes results).
    pub fn to_kv(&self) -> KvConfig {
        let mut cfg = KvConfig::new();
        let join = |v: Vec<String>| v.join(", ");
        cfg.set("seed", self.seed);
        cfg.set("train_sections", self.train_sections.join(", "));
        cfg.set("test_section", &self.test_section);
        cfg.set("velocities", join(self.velocities.iter().map(f64::to_string).collect()));
        cfg.set("repetitions", self.repetitions);
        cfg.set("test_velocity", self.test_velocity);
        cfg.set("lookahead", self.lookahead);
        cfg.set("pp_lookahead", self.pp_lookahead);
        cfg.set("ds", self.ds);
        cfg.set("dev_threshold", self.dev_threshold);
        cfg.set("train_fraction", self.train_fraction);
        cfg.set("start_lateral", self.start_lateral);
        cfg.set("start_heading", self.start_heading);
        cfg.set("methods", join(self.methods.iter().map(|m| m.to_string()).collect()));
        self.trainer.write_config(&mut cfg, "train.");
        self.mpc.write_config(&mut cfg, "mpc.");
        self.vehicle.write_config(&mut cfg, "vehicle.");
        cfg.set("sim.dt", self.sim.dt);
        cfg.set("sim.substeps", self.sim.substeps);
        cfg.set("sim.vx_lag_tau", self.sim.vx_lag_tau);
        cfg
    }

    /// Hex SHA-256 of the canonical configuration text.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_kv().to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            sim: self.sim,
            params: self.vehicle,
            end_margin: self.lookahead.max(self.pp_lookahead),
            ..LoopConfig::default()
        }
    }

    fn segment_options(&self) -> SegmentOptions {
        SegmentOptions {
            lookahead: self.lookahead,
            ds: self.ds,
            dev_threshold: self.dev_threshold,
            train_fraction: self.train_fraction,
            split_seed: derive_seed(self.seed, stream::SPLIT, 0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Track {
    pub spec: TrackSpec,
    pub waypoints: Vec<Waypoint>,
    pub path: ReferencePath,
}

impl Track {
    pub fn generate(section: &str, ds: f64) -> Result<Self> {
        let spec = TrackSpec::preset(section).ok_or_else(|| Error::Config(format!("unknown section `{section}`")))?;
        let waypoints = generate_track(&spec)?;
        let path = build_path(&waypoints, ds)?;
        Ok(Self { spec, waypoints, path })
    }
}

/// Demonstrations and the tasks built from them.
#[derive(Debug, Clone)]
pub struct Collection {
    pub tracks: BTreeMap<String, Track>,
    pub episodes: Vec<Trajectory>,
    pub tasks: Vec<TaskDataset>,
    pub warnings: Vec<String>,
}

/// Result of training one method over the curriculum.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub method: TrainMethod,
    pub stats: Vec<TaskStats>,
    pub matrix: EvalMatrix,
    /// Closed-loop test after each task.
    pub rollouts: Vec<RolloutReport>,
    pub final_rollout: Option<Trajectory>,
    pub net: PolicyNet,
    pub memory_csv: Option<(String, KvConfig)>,
}

#[derive(Debug, Clone)]
pub struct Baseline {
    pub id: String,
    pub report: RolloutReport,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub collection: Collection,
    pub norm: Normalizer,
    pub arms: Vec<ArmResult>,
    pub baselines: Vec<Baseline>,
}

impl ExperimentResults {
    pub fn arm(&self, method: TrainMethod) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.method == method)
    }

    pub fn plot_data(&self) -> PlotData {
        PlotData {
            methods: self
                .arms
                .iter()
                .map(|a| (a.method.to_string(), a.matrix.big_b.clone(), a.rollouts.iter().map(|r| r.max_dev).collect()))
                .collect(),
            baselines: self.baselines.iter().map(|b| (b.id.clone(), b.report.max_dev)).collect(),
        }
    }
}

/// Generate tracks, collect expert demonstrations and build the tasks.
pub fn collect(cfg: &ExperimentConfig) -> Result<Collection> {
    cfg.validate()?;
    let mut tracks = BTreeMap::new();
    for s in cfg.train_sections.iter().chain([&cfg.test_section]) {
        tracks.insert(s.clone(), Track::generate(s, cfg.ds)?);
    }
    let curriculum = cfg.curriculum();
    let expert = Expert::Mpc(cfg.mpc);
    let collect_cfg = CollectConfig {
        run: cfg.loop_config(),
        start_lateral: cfg.start_lateral,
        start_heading: cfg.start_heading,
    };
    let episodes = par::map_range(cfg.exec, curriculum.len(), |i| {
        let key = &curriculum[i];
        let seed = derive_seed(cfg.seed, stream::COLLECTION, i as u64);
        collect_episode(&expert, &tracks[&key.section].path, key, &collect_cfg, seed)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for ep in &episodes {
        if ep.meta.outcome.is_failure() {
            warn!("episode {} ended early: {:?}", ep.key(), ep.meta.outcome);
        }
    }
    let seg = segment_tasks(&episodes, &curriculum, &cfg.segment_options());
    for w in &seg.warnings {
        warn!("{w}");
    }
    if seg.tasks.is_empty() {
        return Err(Error::EmptyData);
    }
    info!("collected {} episodes, {} tasks", episodes.len(), seg.tasks.len());
    Ok(Collection {
        tracks,
        episodes,
        tasks: seg.tasks,
        warnings: seg.warnings,
    })
}

/// Train one method arm over `tasks` in order, evaluating after each task.
pub fn run_arm(
    cfg: &ExperimentConfig,
    method: TrainMethod,
    tasks: &[TaskDataset],
    norm: &Normalizer,
    test_path: &ReferencePath,
) -> Result<ArmResult> {
    let mut trainer = Trainer::new(TrainerConfig { method, ..cfg.trainer }, *norm)?;
    let test_sets: Vec<_> = tasks.iter().map(TaskDataset::test_set).collect();
    let loop_cfg = cfg.loop_config();
    let mut stats = Vec::with_capacity(tasks.len());
    let mut matrix = EvalMatrix::new();
    let mut rollouts = Vec::with_capacity(tasks.len());
    let mut final_rollout = None;
    for (k, task) in tasks.iter().enumerate() {
        let s = trainer.train_task(task)?;
        eval_matrix_update(&mut matrix, &trainer.net, norm, &test_sets, k, Exec::Sequential)?;
        let ctl = PolicyController {
            net: &trainer.net,
            norm,
            lookahead: cfg.lookahead,
        };
        let (report, traj) = rollout_closed_loop(&ctl, test_path, &cfg.test_section, cfg.test_velocity, &loop_cfg);
        info!(
            "{method} task {}/{} ({}): B_k {:.3e}, max_dev {:.3} m, projected {}/{}",
            k + 1,
            tasks.len(),
            task.key,
            matrix.big_b[k],
            report.max_dev,
            s.projected_steps,
            s.steps
        );
        stats.push(s);
        rollouts.push(report);
        final_rollout = Some(traj);
    }
    let memory_csv = trainer.memory.as_ref().map(|m| (m.snapshot_csv(), m.snapshot_meta()));
    Ok(ArmResult {
        method,
        stats,
        matrix,
        rollouts,
        final_rollout,
        net: trainer.net,
        memory_csv,
    })
}

/// Closed-loop runs of the pure-pursuit and MPC baselines on the test section.
pub fn run_baselines(cfg: &ExperimentConfig, test_path: &ReferencePath) -> Vec<Baseline> {
    let experts = [Expert::PurePursuit { lookahead: cfg.pp_lookahead }, Expert::Mpc(cfg.mpc)];
    par::map(cfg.exec, &experts, |e| {
        let (report, trajectory) = rollout_closed_loop(e, test_path, &cfg.test_section, cfg.test_velocity, &cfg.loop_config());
        Baseline {
            id: crate::experts::Controller::id(e).to_string(),
            report,
            trajectory,
        }
    })
}

/// Train every method arm on an existing collection.
pub fn train_arms(cfg: &ExperimentConfig, collection: &Collection, norm: &Normalizer) -> Result<Vec<ArmResult>> {
    let test_path = &collection.tracks[&cfg.test_section].path;
    par::map(cfg.exec, &cfg.methods, |&m| run_arm(cfg, m, &collection.tasks, norm, test_path))
        .into_iter()
        .collect()
}

/// The whole pipeline, in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    let collection = collect(cfg)?;
    let norm = fit_normalizer(&collection.tasks)?;
    let arms = train_arms(cfg, &collection, &norm)?;
    let baselines = run_baselines(cfg, &collection.tracks[&cfg.test_section].path);
    Ok(ExperimentResults {
        config: cfg.clone(),
        collection,
        norm,
        arms,
        baselines,
    })
}

/// Collects written files relative to an output root.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// `manifest.txt`: root seed, configuration hash and every written file.
    pub fn write_manifest(&mut self, cfg: &ExperimentConfig) -> Result<()> {
        let mut text = format!("seed = {}\nconfig_sha256 = {}\n", cfg.seed, cfg.hash());
        for f in &self.files {
            text.push_str(&format!("file = {f}\n"));
        }
        self.write("manifest.txt", &text)
    }
}

pub fn write_tracks(out: &mut OutputDir, tracks: &BTreeMap<String, Track>) -> Result<()> {
    for (id, t) in tracks {
        out.write(&format!("tracks/{id}.csv"), &waypoints_to_csv(&t.waypoints))?;
        out.write(&format!("tracks/{id}.meta"), &t.spec.to_config().to_text())?;
    }
    Ok(())
}

pub fn write_collection(out: &mut OutputDir, c: &Collection) -> Result<()> {
    write_tracks(out, &c.tracks)?;
    let mut summary = String::from("key,seed,outcome,records,max_dev\n");
    for ep in &c.episodes {
        let key = ep.key();
        out.write(&format!("episodes/{key}.csv"), &ep.to_csv())?;
        out.write(&format!("episodes/{key}.meta"), &ep.meta_config().to_text())?;
        summary.push_str(&format!(
            "{key},{},{},{},{}\n",
            ep.meta.seed,
            ep.meta.outcome.label(),
            ep.records.len(),
            ep.max_abs_deviation()
        ));
    }
    out.write("metrics/episodes.csv", &summary)?;
    let mut index = String::from("task,key,section,v_ref,repetition,train,test\n");
    for (k, t) in c.tasks.iter().enumerate() {
        out.write(&format!("datasets/{}_train.csv", t.key), &samples_to_csv(t.train_samples()))?;
        out.write(&format!("datasets/{}_test.csv", t.key), &samples_to_csv(t.test_samples()))?;
        index.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            k + 1,
            t.key,
            t.key.section,
            t.key.v_ref,
            t.key.repetition,
            t.train_idx.len(),
            t.test_idx.len()
        ));
    }
    out.write("datasets/index.csv", &index)
}

pub fn training_csv(arm: &ArmResult) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut s = String::from(
        "task,final_loss,steps,projected_steps,memory_size,memory_loss_before,memory_loss_after,min_alignment,inserts,replacements,rejections,evicted\n",
    );
    for st in &arm.stats {
        let r = st.memory_report;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            st.task + 1,
            st.epoch_loss.last().copied().unwrap_or(f64::NAN),
            st.steps,
            st.projected_steps,
            st.memory_size,
            opt(st.memory_loss_before),
            opt(st.memory_loss_after),
            opt(st.min_alignment),
            r.inserts,
            r.replacements,
            r.rejections,
            r.evicted
        ));
    }
    s
}

pub fn epoch_loss_csv(arm: &ArmResult) -> String {
    let mut s = String::from("task,epoch,loss\n");
    for st in &arm.stats {
        for (e, l) in st.epoch_loss.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", st.task + 1, e + 1, l));
        }
    }
    s
}

pub fn rollouts_csv(reports: &[RolloutReport]) -> String {
    let mut s = format!("task,{}\n", RolloutReport::CSV_HEADER);
    for (k, r) in reports.iter().enumerate() {
        s.push_str(&format!("{},{}\n", k + 1, r.csv_fields()));
    }
    s
}

pub fn baselines_csv(baselines: &[Baseline]) -> String {
    let mut s = format!("controller,{}\n", RolloutReport::CSV_HEADER);
    for b in baselines {
        s.push_str(&format!("{},{}\n", b.id, b.report.csv_fields()));
    }
    s
}

pub fn write_arm(out: &mut OutputDir, arm: &ArmResult, norm: &Normalizer) -> Result<()> {
    let m = arm.method;
    out.write(&format!("models/{m}.txt"), &write_model(&arm.net, norm))?;
    if let Some((csv, meta)) = &arm.memory_csv {
        out.write(&format!("models/memory_{m}.csv"), csv)?;
        out.write(&format!("models/memory_{m}.meta"), &meta.to_text())?;
    }
    out.write(&format!("metrics/eval_matrix_{m}.csv"), &arm.matrix.to_csv())?;
    out.write(&format!("metrics/training_{m}.csv"), &training_csv(arm))?;
    out.write(&format!("metrics/epoch_loss_{m}.csv"), &epoch_loss_csv(arm))?;
    out.write(&format!("metrics/rollouts_{m}.csv"), &rollouts_csv(&arm.rollouts))?;
    if let Some(t) = &arm.final_rollout {
        out.write(&format!("rollouts/{m}.csv"), &vehicle_trajectory_csv(t))?;
    }
    Ok(())
}

pub fn write_baselines(out: &mut OutputDir, baselines: &[Baseline]) -> Result<()> {
    out.write("metrics/baselines.csv", &baselines_csv(baselines))?;
    for b in baselines {
        out.write(&format!("rollouts/{}.csv", b.id), &vehicle_trajectory_csv(&b.trajectory))?;
    }
    Ok(())
}

/// Write the complete results layout and manifest under `root`.
pub fn write_results(results: &ExperimentResults, root: &Path) -> Result<Vec<String>> {
    let mut out = OutputDir::create(root)?;
    out.write("config.txt", &results.config.to_kv().to_text())?;
    write_collection(&mut out, &results.collection)?;
    for arm in &results.arms {
        write_arm(&mut out, arm, &results.norm)?;
    }
    write_baselines(&mut out, &results.baselines)?;
    for (rel, text) in emit_plots(&results.plot_data()) {
        out.write(&rel, &text)?;
    }
    out.write_manifest(&results.config)?;
    Ok(out.files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curriculum_order() {
        let cfg = ExperimentConfig {
            velocities: vec![3.0, 9.0],
            repetitions: 2,
            ..Default::default()
        };
        let names: Vec<String> = cfg.curriculum().iter().map(|k| k.to_string()).collect();
        assert_eq!(
            names,
            [
                "S2_v3_r0", "S3_v3_r0", "S2_v9_r0", "S3_v9_r0", "S2_v3_r1", "S3_v3_r1", "S2_v9_r1", "S3_v9_r1"
            ]
        );
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = ExperimentConfig::default().with_seed(9);
        let back = ExperimentConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back.to_kv().to_text(), cfg.to_kv().to_text());
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(cfg.hash(), ExperimentConfig::default().hash());

        let mut kv = KvConfig::new();
        kv.set("train_sections", "S1, S2");
        assert!(matches!(ExperimentConfig::from_kv(&kv), Err(Error::Config(_))));
        let mut kv = KvConfig::new();
        kv.set("velocitys", "3");
        assert!(ExperimentConfig::from_kv(&kv).is_err());
        let mut kv = KvConfig::new();
        kv.set("velocities", "3, 20");
        assert!(ExperimentConfig::from_kv(&kv).is_err());
        let mut kv = KvConfig::new();
        kv.set("train.epochs", 3);
        kv.set("methods", "ll_me");
        let c = ExperimentConfig::from_kv(&kv).unwrap();
        assert_eq!((c.trainer.epochs, c.methods.as_slice()), (3, &[TrainMethod::LlMe][..]));
    }
}
