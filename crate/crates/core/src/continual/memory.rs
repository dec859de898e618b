use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::experience::TaskDataset;
use crate::policy::{Normalizer, Sample, State};

/// Default similarity threshold in normalized state space.
pub const DEFAULT_ETA: f64 = 0.25;
/// Default number of samples kept per task in reservoir mode.
pub const DEFAULT_RESERVOIR_PER_TASK: usize = 100;

/// Squared Euclidean distance between two (normalized) states.
pub fn sim(a: &State, b: &State) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Score used to rank redundant memory entries; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalId {
    /// Squared steering effort `a^2`.
    #[default]
    SteerEffort,
}

impl EvalId {
    pub fn score(self, _s: &State, a: f64) -> f64 {
        match self {
            EvalId::SteerEffort => a * a,
        }
    }
}

impl FromStr for EvalId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steer_effort" => Ok(EvalId::SteerEffort),
            other => Err(Error::UnknownEvalId(other.to_string())),
        }
    }
}

impl fmt::Display for EvalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalId::SteerEffort => "steer_effort",
        })
    }
}

/// Evaluate `(s, a)` with the scoring function named `eval_id`.
pub fn eval_fn(s: &State, a: f64, eval_id: &str) -> Result<f64> {
    Ok(eval_id.parse::<EvalId>()?.score(s, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryMode {
    Curated,
    Reservoir { per_task: usize },
}

impl fmt::Display for MemoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryMode::Curated => f.write_str("curated"),
            MemoryMode::Reservoir { .. } => f.write_str("reservoir"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryEntry {
    pub task: usize,
    pub sample: Sample,
    /// Normalized state, the space in which similarity is measured.
    pub key: State,
}

/// Outcome counts of one curated update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateReport {
    /// Candidates stored without any neighbor.
    pub inserts: usize,
    /// Candidates that displaced their whole neighborhood.
    pub replacements: usize,
    /// Candidates dropped in favor of a stored neighbor.
    pub rejections: usize,
    /// Stored entries removed.
    pub evicted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMemory {
    entries: Vec<MemoryEntry>,
    eta: f64,
    eval_id: EvalId,
    mode: MemoryMode,
    norm: Normalizer,
}

impl EpisodicMemory {
    pub fn curated(eta: f64, eval_id: EvalId, norm: Normalizer) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::Config(format!("similarity threshold must be >= 0, got {eta}")));
        }
        Ok(Self {
            entries: Vec::new(),
            eta,
            eval_id,
            mode: MemoryMode::Curated,
            norm,
        })
    }

    pub fn reservoir(per_task: usize, norm: Normalizer) -> Result<Self> {
        if per_task == 0 {
            return Err(Error::Config("reservoir_per_task must be >= 1".into()));
        }
        Ok(Self {
            entries: Vec::new(),
            eta: DEFAULT_ETA,
            eval_id: EvalId::SteerEffort,
            mode: MemoryMode::Reservoir { per_task },
            norm,
        })
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn samples(&self) -> Vec<Sample> {
        self.entries.iter().map(|e| e.sample).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eval_id(&self) -> EvalId {
        self.eval_id
    }

    pub fn mode(&self) -> MemoryMode {
        self.mode
    }

    fn entry(&self, task: usize, sample: Sample) -> MemoryEntry {
        MemoryEntry {
            task,
            sample,
            key: self.norm.apply(&sample.s),
        }
    }

    /// Offer one candidate to a curated memory.
    pub fn offer(&mut self, task: usize, sample: Sample, report: &mut UpdateReport) {
        let cand = self.entry(task, sample);
        let neighbors: Vec<usize> = (0..self.entries.len())
            .filter(|&j| sim(&cand.key, &self.entries[j].key) <= self.eta)
            .collect();
        if neighbors.is_empty() {
            self.entries.push(cand);
            report.inserts += 1;
            return;
        }
        let score = |e: &MemoryEntry| self.eval_id.score(&e.sample.s, e.sample.a);
        let mut best = neighbors[0];
        for &j in &neighbors[1..] {
            if score(&self.entries[j]) < score(&self.entries[best]) {
                best = j;
            }
        }
        let candidate_wins = score(&cand) < score(&self.entries[best]);
        let keep = if candidate_wins { None } else { Some(best) };
        let mut k = 0;
        let mut removed = 0;
        self.entries.retain(|_| {
            let j = k;
            k += 1;
            let drop = neighbors.binary_search(&j).is_ok() && Some(j) != keep;
            removed += drop as usize;
            !drop
        });
        report.evicted += removed;
        if candidate_wins {
            self.entries.push(cand);
            report.replacements += 1;
        } else {
            report.rejections += 1;
        }
    }

    /// Curated update with the training samples of `dataset`, in time order.
    pub fn update_curated(&mut self, task: usize, dataset: &TaskDataset) -> UpdateReport {
        let mut idx = dataset.train_idx.clone();
        idx.sort_unstable();
        let mut report = UpdateReport::default();
        for i in idx {
            self.offer(task, dataset.samples[i], &mut report);
        }
        report
    }

    /// Append a uniform random subset of the training samples of `dataset`.
    pub fn update_reservoir(&mut self, task: usize, dataset: &TaskDataset, rng: &mut impl Rng) -> usize {
        let per_task = match self.mode {
            MemoryMode::Reservoir { per_task } => per_task,
            MemoryMode::Curated => return 0,
        };
        let n = dataset.train_idx.len();
        let mut picked: Vec<usize> = if n <= per_task {
            (0..n).collect()
        } else {
            index::sample(rng, n, per_task).into_vec()
        };
        picked.sort_unstable();
        let added = picked.len();
        for p in picked {
            let e = self.entry(task, dataset.samples[dataset.train_idx[p]]);
            self.entries.push(e);
        }
        added
    }

    /// Dispatch to the update rule of this memory's mode.
    pub fn update(&mut self, task: usize, dataset: &TaskDataset, rng: &mut impl Rng) -> UpdateReport {
        match self.mode {
            MemoryMode::Curated => self.update_curated(task, dataset),
            MemoryMode::Reservoir { .. } => UpdateReport {
                inserts: self.update_reservoir(task, dataset, rng),
                ..Default::default()
            },
        }
    }

    /// `n` stored samples drawn uniformly without replacement. When fewer than
    /// `n` are stored, every entry is taken once and the rest is drawn with
    /// replacement.
    pub fn sample_batch(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<Sample>> {
        let m = self.entries.len();
        if m == 0 {
            return Err(Error::EmptyMemory);
        }
        if n <= m {
            return Ok(index::sample(rng, m, n).iter().map(|i| self.entries[i].sample).collect());
        }
        let mut out = self.samples();
        out.extend((m..n).map(|_| self.entries[rng.random_range(0..m)].sample));
        Ok(out)
    }

    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from("task_id,x_ref,y_ref,vx,vy,r,a\n");
        for e in &self.entries {
            let s = &e.sample.s;
            out.push_str(&format!("{},{},{},{},{},{},{}\n", e.task, s[0], s[1], s[2], s[3], s[4], e.sample.a));
        }
        out
    }

    pub fn snapshot_meta(&self) -> KvConfig {
        let mut cfg = KvConfig::new();
        cfg.set("eta", self.eta);
        cfg.set("eval_id", self.eval_id);
        cfg.set("mode", self.mode);
        if let MemoryMode::Reservoir { per_task } = self.mode {
            cfg.set("reservoir_per_task", per_task);
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experience::TaskKey;
    use crate::rng::rng_from;
    use proptest::prelude::*;

    fn dataset(samples: Vec<Sample>) -> TaskDataset {
        let n = samples.len();
        TaskDataset {
            key: TaskKey::new("T", 5.0, 0),
            samples,
            train_idx: (0..n).collect(),
            test_idx: Vec::new(),
        }
    }

    fn at(x: f64, a: f64) -> Sample {
        Sample::new([x, 0.0, 0.0, 0.0, 0.0], a)
    }

    fn curated() -> EpisodicMemory {
        EpisodicMemory::curated(DEFAULT_ETA, EvalId::SteerEffort, Normalizer::identity()).unwrap()
    }

    #[test]
    fn similarity_examples() {
        let a = [0.1, -0.2, 3.0, 0.0, 1.0];
        let mut b = a;
        assert_eq!(sim(&a, &b), 0.0);
        b[2] += 1.0;
        assert_eq!(sim(&a, &b), 1.0);
        assert_eq!(sim(&a, &b), sim(&b, &a));
    }

    #[test]
    fn eval_examples() {
        let s = [0.0; 5];
        assert_eq!(eval_fn(&s, 0.0, "steer_effort").unwrap(), 0.0);
        assert!((eval_fn(&s, 0.2, "steer_effort").unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(eval_fn(&s, 0.37, "steer_effort").unwrap(), eval_fn(&s, -0.37, "steer_effort").unwrap());
        assert!(matches!(eval_fn(&s, 0.1, "comfort"), Err(Error::UnknownEvalId(_))));
    }

    #[test]
    fn curated_examples() {
        let mut m = curated();
        let r = m.update_curated(0, &dataset(vec![at(0.0, 0.3)]));
        assert_eq!((r.inserts, m.len()), (1, 1));

        let r = m.update_curated(1, &dataset(vec![at(2.0, 0.5)]));
        assert_eq!((r.inserts, m.len()), (1, 2));

        // close to the first entry with lower effort: replaces it
        let r = m.update_curated(1, &dataset(vec![at(0.1, 0.1)]));
        assert_eq!((r.replacements, r.evicted, m.len()), (1, 1, 2));
        assert!(m.entries().iter().any(|e| e.sample.a == 0.1));
        assert!(!m.entries().iter().any(|e| e.sample.a == 0.3));

        // equal effort: the stored entry stays
        let r = m.update_curated(2, &dataset(vec![at(0.2, -0.1)]));
        assert_eq!((r.rejections, m.len()), (1, 2));
        assert!(m.entries().iter().any(|e| e.sample.a == 0.1 && e.task == 1));
    }

    #[test]
    fn candidate_bridging_two_entries_keeps_the_best() {
        let mut m = curated();
        m.update_curated(0, &dataset(vec![at(0.0, 0.2), at(0.8, 0.05)]));
        assert_eq!(m.len(), 2);
        let r = m.update_curated(1, &dataset(vec![at(0.4, 0.1)]));
        assert_eq!((r.rejections, r.evicted, m.len()), (1, 1, 1));
        assert_eq!(m.entries()[0].sample.a, 0.05);
    }

    #[test]
    fn reservoir_examples() {
        let mut m = EpisodicMemory::reservoir(10, Normalizer::identity()).unwrap();
        let small = dataset((0..4).map(|i| at(i as f64, 0.0)).collect());
        m.update_reservoir(0, &small, &mut rng_from(1));
        assert_eq!(m.len(), 4);
        let big = dataset((0..50).map(|i| at(i as f64, 0.0)).collect());
        m.update_reservoir(1, &big, &mut rng_from(1));
        assert_eq!(m.entries().iter().filter(|e| e.task == 1).count(), 10);
        let mut again = EpisodicMemory::reservoir(10, Normalizer::identity()).unwrap();
        again.update_reservoir(0, &small, &mut rng_from(1));
        again.update_reservoir(1, &big, &mut rng_from(1));
        assert_eq!(m, again);
    }

    // Each of n items should be chosen with probability k/n.
    fn within_three_sigma(counts: &[usize], trials: usize, p: f64) -> bool {
        let mean = trials as f64 * p;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        counts.iter().all(|&c| (c as f64 - mean).abs() <= 3.0 * sd + 1.0)
    }

    #[test]
    fn reservoir_selection_is_uniform() {
        let n = 20;
        let data = dataset((0..n).map(|i| at(i as f64, 0.0)).collect());
        let mut counts = vec![0usize; n];
        let mut rng = rng_from(99);
        let trials = 10_000;
        for _ in 0..trials {
            let mut m = EpisodicMemory::reservoir(5, Normalizer::identity()).unwrap();
            m.update_reservoir(0, &data, &mut rng);
            for e in m.entries() {
                counts[e.sample.s[0] as usize] += 1;
            }
        }
        assert!(within_three_sigma(&counts, trials, 5.0 / n as f64), "{counts:?}");
    }

    #[test]
    fn memory_batches() {
        let mut m = EpisodicMemory::reservoir(100, Normalizer::identity()).unwrap();
        assert!(matches!(m.sample_batch(3, &mut rng_from(0)), Err(Error::EmptyMemory)));
        m.update_reservoir(0, &dataset((0..8).map(|i| at(i as f64, 0.0)).collect()), &mut rng_from(0));
        let b = m.sample_batch(12, &mut rng_from(3)).unwrap();
        assert_eq!(b.len(), 12);
        for i in 0..8 {
            assert!(b.iter().any(|s| s.s[0] == i as f64));
        }
        assert_eq!(m.sample_batch(5, &mut rng_from(4)).unwrap(), m.sample_batch(5, &mut rng_from(4)).unwrap());

        let mut counts = [0usize; 8];
        let mut rng = rng_from(5);
        for _ in 0..10_000 {
            for s in m.sample_batch(3, &mut rng).unwrap() {
                counts[s.s[0] as usize] += 1;
            }
        }
        assert!(within_three_sigma(&counts, 10_000, 3.0 / 8.0), "{counts:?}");
    }

    #[test]
    fn snapshot_format() {
        let mut m = curated();
        m.update_curated(3, &dataset(vec![at(1.0, 0.2)]));
        let csv = m.snapshot_csv();
        assert_eq!(csv.lines().next(), Some("task_id,x_ref,y_ref,vx,vy,r,a"));
        assert!(csv.lines().nth(1).unwrap().starts_with("3,1,0,"));
        let meta = m.snapshot_meta();
        assert_eq!(meta.get("mode"), Some("curated"));
        assert_eq!(meta.get("eval_id"), Some("steer_effort"));
        assert_eq!(meta.get("eta"), Some("0.25"));
    }

    fn stream() -> impl Strategy<Value = Vec<Vec<Sample>>> {
        let sample = (prop::array::uniform5(-1.5f64..1.5), -0.5f64..0.5).prop_map(|(s, a)| Sample::new(s, a));
        prop::collection::vec(prop::collection::vec(sample, 1..40), 1..4)
    }

    proptest! {
        #[test]
        fn curated_invariant_after_any_interleaving(batches in stream()) {
            let mut m = curated();
            for (t, b) in batches.into_iter().enumerate() {
                m.update_curated(t, &dataset(b));
                let e = m.entries();
                for i in 0..e.len() {
                    for j in i + 1..e.len() {
                        prop_assert!(sim(&e[i].key, &e[j].key) > m.eta());
                    }
                }
            }
        }
    }
}
