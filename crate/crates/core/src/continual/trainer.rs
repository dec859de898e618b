use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::agem::agem_project;
use super::memory::{EpisodicMemory, EvalId, UpdateReport, DEFAULT_ETA, DEFAULT_RESERVOIR_PER_TASK};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::experience::TaskDataset;
use crate::policy::{apply_gradient, backward, mse_loss, Method, Normalizer, OptimizerState, PolicyNet, LAYER_DIMS};
use crate::rng::{derived_rng, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrainMethod {
    /// Plain sequential fine-tuning.
    NonLl,
    /// AGEM with a uniformly sampled memory.
    LlNoMe,
    /// AGEM with the curated memory.
    LlMe,
}

impl TrainMethod {
    pub const ALL: [TrainMethod; 3] = [TrainMethod::NonLl, TrainMethod::LlNoMe, TrainMethod::LlMe];

    pub fn uses_memory(self) -> bool {
        self != TrainMethod::NonLl
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMethod::NonLl => "non_ll",
            TrainMethod::LlNoMe => "ll_no_me",
            TrainMethod::LlMe => "ll_me",
        }
    }
}

impl FromStr for TrainMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrainMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown training method `{s}`")))
    }
}

impl fmt::Display for TrainMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerConfig {
    pub method: TrainMethod,
    pub epochs: usize,
    pub batch: usize,
    /// Memory batch used for the reference gradient.
    pub mem_batch: usize,
    pub optimizer: Method,
    pub lr: f64,
    pub eta: f64,
    pub eval_id: EvalId,
    pub reservoir_per_task: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            method: TrainMethod::LlMe,
            epochs: 50,
            batch: 64,
            mem_batch: 256,
            optimizer: Method::Adam,
            lr: 1e-3,
            eta: DEFAULT_ETA,
            eval_id: EvalId::SteerEffort,
            reservoir_per_task: DEFAULT_RESERVOIR_PER_TASK,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub const KEYS: [&'static str; 8] = [
        "epochs",
        "batch",
        "mem_batch",
        "optimizer",
        "lr",
        "eta",
        "eval_id",
        "reservoir_per_task",
    ];

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(Error::Config("epochs and batch must be >= 1".into()));
        }
        if self.method.uses_memory() && self.mem_batch == 0 {
            return Err(Error::Config("mem_batch must be >= 1 for memory-based methods".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.reservoir_per_task == 0 {
            return Err(Error::Config("reservoir_per_task must be >= 1".into()));
        }
        Ok(())
    }

    /// Read the keys in [`Self::KEYS`] under `prefix`, keeping defaults for
    /// missing ones.
    pub fn from_config(cfg: &KvConfig, prefix: &str, base: Self) -> Result<Self> {
        let k = |name: &str| format!("{prefix}{name}");
        let out = Self {
            epochs: cfg.get_or(&k("epochs"), base.epochs)?,
            batch: cfg.get_or(&k("batch"), base.batch)?,
            mem_batch: cfg.get_or(&k("mem_batch"), base.mem_batch)?,
            optimizer: cfg.get_or(&k("optimizer"), base.optimizer)?,
            lr: cfg.get_or(&k("lr"), base.lr)?,
            eta: cfg.get_or(&k("eta"), base.eta)?,
            eval_id: match cfg.get(&k("eval_id")) {
                Some(v) => v.parse()?,
                None => base.eval_id,
            },
            reservoir_per_task: cfg.get_or(&k("reservoir_per_task"), base.reservoir_per_task)?,
            ..base
        };
        out.validate()?;
        Ok(out)
    }

    pub fn write_config(&self, cfg: &mut KvConfig, prefix: &str) {
        cfg.set(&format!("{prefix}epochs"), self.epochs);
        cfg.set(&format!("{prefix}batch"), self.batch);
        cfg.set(&format!("{prefix}mem_batch"), self.mem_batch);
        cfg.set(&format!("{prefix}optimizer"), self.optimizer);
        cfg.set(&format!("{prefix}lr"), self.lr);
        cfg.set(&format!("{prefix}eta"), self.eta);
        cfg.set(&format!("{prefix}eval_id"), self.eval_id);
        cfg.set(&format!("{prefix}reservoir_per_task"), self.reservoir_per_task);
    }
}

/// Per-task training record.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStats {
    pub task: usize,
    /// Mean minibatch loss of each epoch.
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
    /// Steps whose gradient was projected.
    pub projected_steps: usize,
    /// Memory size after the post-task update.
    pub memory_size: usize,
    /// Loss on the whole memory before and after the task's training steps.
    pub memory_loss_before: Option<f64>,
    pub memory_loss_after: Option<f64>,
    /// Smallest `g̃·g_ref / (|g̃| |g_ref|)` seen over the task's steps.
    pub min_alignment: Option<f64>,
    pub memory_report: UpdateReport,
}

/// Random streams consumed by training.
#[derive(Debug, Clone)]
pub struct TrainRngs {
    pub shuffle: Rng,
    pub memory: Rng,
}

impl TrainRngs {
    pub fn new(seed: u64) -> Self {
        Self {
            shuffle: derived_rng(seed, stream::SHUFFLE, 0),
            memory: derived_rng(seed, stream::MEMORY, 0),
        }
    }
}

/// Train on one task's training split, then fold the task into `memory`.
#[allow(clippy::too_many_arguments)]
pub fn train_task(
    net: &mut PolicyNet,
    norm: &Normalizer,
    opt: &mut OptimizerState,
    memory: Option<&mut EpisodicMemory>,
    task: usize,
    dataset: &TaskDataset,
    cfg: &TrainerConfig,
    rngs: &mut TrainRngs,
) -> Result<TaskStats> {
    let train = dataset.train_set();
    if train.is_empty() {
        return Err(Error::EmptyData);
    }
    let memory_loss = |net: &PolicyNet, mem: &Option<&mut EpisodicMemory>| -> Result<Option<f64>> {
        match mem {
            Some(m) if !m.is_empty() => Ok(Some(mse_loss(net, norm, &m.samples())?)),
            _ => Ok(None),
        }
    };
    let memory_loss_before = memory_loss(net, &memory)?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    let mut projected_steps = 0;
    let mut min_alignment: Option<f64> = None;
    let mut batch = Vec::with_capacity(cfg.batch);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rngs.shuffle);
        let mut total = 0.0;
        let mut count = 0;
        for chunk in order.chunks(cfg.batch) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i]));
            let (loss, g) = backward(net, norm, &batch)?;
            total += loss;
            count += 1;
            let step = match memory.as_deref() {
                Some(mem) if cfg.method.uses_memory() && !mem.is_empty() => {
                    let refs = mem.sample_batch(cfg.mem_batch, &mut rngs.memory)?;
                    let (_, g_ref) = backward(net, norm, &refs)?;
                    let projected = agem_project(&g, &g_ref)?;
                    if projected != g {
                        projected_steps += 1;
                    }
                    let denom = projected.norm() * g_ref.norm();
                    if denom > 0.0 {
                        let a = projected.dot(&g_ref) / denom;
                        debug_assert!(a >= -1e-9, "projected gradient violates the memory constraint");
                        min_alignment = Some(min_alignment.map_or(a, |m| m.min(a)));
                    }
                    projected
                }
                _ => g,
            };
            apply_gradient(net, opt, &step)?;
            steps += 1;
        }
        epoch_loss.push(total / count as f64);
    }
    if !net.is_finite() {
        return Err(Error::NumericBlowup);
    }
    let memory_loss_after = memory_loss(net, &memory)?;

    let mut memory_report = UpdateReport::default();
    let mut memory_size = 0;
    if let Some(mem) = memory {
        if cfg.method.uses_memory() {
            memory_report = mem.update(task, dataset, &mut rngs.memory);
        }
        memory_size = mem.len();
    }
    Ok(TaskStats {
        task,
        epoch_loss,
        steps,
        projected_steps,
        memory_size,
        memory_loss_before,
        memory_loss_after,
        min_alignment,
        memory_report,
    })
}

/// One method arm: a network, its optimizer and (for LL methods) its memory.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: TrainerConfig,
    pub net: PolicyNet,
    pub norm: Normalizer,
    pub opt: OptimizerState,
    pub memory: Option<EpisodicMemory>,
    rngs: TrainRngs,
    tasks_seen: usize,
}

impl Trainer {
    /// Fresh arm. All methods built from the same seed share the initial
    /// network and shuffling stream.
    pub fn new(cfg: TrainerConfig, norm: Normalizer) -> Result<Self> {
        cfg.validate()?;
        let net = PolicyNet::init(&LAYER_DIMS, &mut derived_rng(cfg.seed, stream::INIT, 0))?;
        let opt = OptimizerState::new(cfg.optimizer, cfg.lr, net.param_count());
        let memory = match cfg.method {
            TrainMethod::NonLl => None,
            TrainMethod::LlNoMe => Some(EpisodicMemory::reservoir(cfg.reservoir_per_task, norm)?),
            TrainMethod::LlMe => Some(EpisodicMemory::curated(cfg.eta, cfg.eval_id, norm)?),
        };
        Ok(Self {
            cfg,
            net,
            norm,
            opt,
            memory,
            rngs: TrainRngs::new(cfg.seed),
            tasks_seen: 0,
        })
    }

    pub fn tasks_seen(&self) -> usize {
        self.tasks_seen
    }

    pub fn train_task(&mut self, dataset: &TaskDataset) -> Result<TaskStats> {
        let stats = train_task(
            &mut self.net,
            &self.norm,
            &mut self.opt,
            self.memory.as_mut(),
            self.tasks_seen,
            dataset,
            &self.cfg,
            &mut self.rngs,
        )?;
        self.tasks_seen += 1;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experience::TaskKey;
    use crate::policy::Sample;
    use rand::Rng as _;

    fn task(seed: u64, n: usize, f: impl Fn(&[f64; 5]) -> f64) -> TaskDataset {
        task_in(seed, n, (3.0, 15.0), f)
    }

    fn task_in(seed: u64, n: usize, speeds: (f64, f64), f: impl Fn(&[f64; 5]) -> f64) -> TaskDataset {
        let mut rng = crate::rng::rng_from(seed);
        let samples = (0..n)
            .map(|_| {
                let s = [
                    rng.random_range(1.5..2.0),
                    rng.random_range(-0.6..0.6),
                    rng.random_range(speeds.0..speeds.1),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.5..0.5),
                ];
                let a = f(&s);
                Sample::new(s, a)
            })
            .collect();
        TaskDataset::split(TaskKey::new("T", seed as f64, 0), samples, 0.8, seed).unwrap()
    }

    fn norm_for(tasks: &[TaskDataset]) -> Normalizer {
        crate::policy::fit_normalizer(tasks).unwrap()
    }

    fn quick(method: TrainMethod) -> TrainerConfig {
        TrainerConfig {
            method,
            epochs: 5,
            batch: 32,
            mem_batch: 64,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in TrainMethod::ALL {
            assert_eq!(m.as_str().parse::<TrainMethod>().unwrap(), m);
        }
        assert!("gem".parse::<TrainMethod>().is_err());
    }

    #[test]
    fn first_task_matches_plain_training() {
        let t = task(1, 200, |s| 0.3 * s[1]);
        let norm = norm_for(std::slice::from_ref(&t));
        let mut plain = Trainer::new(quick(TrainMethod::NonLl), norm).unwrap();
        plain.train_task(&t).unwrap();
        for m in [TrainMethod::LlNoMe, TrainMethod::LlMe] {
            let mut arm = Trainer::new(quick(m), norm).unwrap();
            let stats = arm.train_task(&t).unwrap();
            assert_eq!(arm.net, plain.net);
            assert_eq!(stats.projected_steps, 0);
            assert!(stats.memory_size > 0);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let tasks = [task(1, 150, |s| 0.3 * s[1]), task(2, 150, |s| -0.3 * s[1])];
        let norm = norm_for(&tasks);
        for m in TrainMethod::ALL {
            let run = || {
                let mut arm = Trainer::new(quick(m), norm).unwrap();
                for t in &tasks {
                    arm.train_task(t).unwrap();
                }
                arm.net.flatten()
            };
            let (a, b) = (run(), run());
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn ll_steps_respect_the_constraint() {
        let tasks = [task(1, 200, |s| 0.4 * s[1]), task(2, 200, |s| -0.4 * s[1])];
        let norm = norm_for(&tasks);
        for m in [TrainMethod::LlNoMe, TrainMethod::LlMe] {
            let mut arm = Trainer::new(quick(m), norm).unwrap();
            arm.train_task(&tasks[0]).unwrap();
            let stats = arm.train_task(&tasks[1]).unwrap();
            assert!(stats.projected_steps > 0);
            assert!(stats.min_alignment.unwrap() >= -1e-9);
            assert!(stats.memory_loss_before.is_some() && stats.memory_loss_after.is_some());
        }
    }

    #[test]
    fn conflicting_tasks_forget_less_with_memory() {
        let tasks = [
            task_in(1, 300, (3.0, 6.0), |s| 0.4 * s[1]),
            task_in(2, 300, (12.0, 15.0), |s| -0.4 * s[1] + 0.1),
        ];
        let norm = norm_for(&tasks);
        let test0 = tasks[0].test_set();
        let loss_after = |m| {
            let mut arm = Trainer::new(TrainerConfig { epochs: 20, ..quick(m) }, norm).unwrap();
            for t in &tasks {
                arm.train_task(t).unwrap();
            }
            mse_loss(&arm.net, &norm, &test0).unwrap()
        };
        assert!(loss_after(TrainMethod::NonLl) > loss_after(TrainMethod::LlNoMe));
    }

    #[test]
    fn config_round_trip() {
        let cfg = TrainerConfig {
            epochs: 7,
            lr: 3e-4,
            optimizer: Method::Sgd,
            ..Default::default()
        };
        let mut kv = KvConfig::new();
        cfg.write_config(&mut kv, "train.");
        assert_eq!(TrainerConfig::from_config(&kv, "train.", TrainerConfig::default()).unwrap(), cfg);
        kv.set("train.epochs", 0);
        assert!(TrainerConfig::from_config(&kv, "train.", TrainerConfig::default()).is_err());
    }
}
