//! Continual learning over a task sequence: AGEM gradient projection, an
//! episodic memory curated by state similarity and steering effort, and the
//! three trainer variants (plain fine-tuning, AGEM with a reservoir memory,
//! AGEM with the curated memory).

mod agem;
mod memory;
mod trainer;

pub use agem::agem_project;
pub use memory::{
    eval_fn, sim, EpisodicMemory, EvalId, MemoryEntry, MemoryMode, UpdateReport, DEFAULT_ETA,
    DEFAULT_RESERVOIR_PER_TASK,
};
pub use trainer::{train_task, TaskStats, TrainMethod, Trainer, TrainerConfig};
