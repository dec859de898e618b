//! Experiment orchestration: the task-loss matrix, closed-loop rollouts, the
//! full pipeline with its output layout, plots, and the command line.

pub mod cli;
mod experiment;
mod metrics;
mod plots;
mod rollout;

pub use experiment::{
    collect, run_arm, run_baselines, run_experiment, train_arms, write_results, ArmResult, Baseline, Collection,
    ExperimentConfig, ExperimentResults, OutputDir, Track,
};
pub use metrics::{eval_matrix_update, EvalMatrix};
pub use plots::{emit_plots, PlotData};
pub use rollout::{rollout_closed_loop, vehicle_trajectory_csv, PolicyController, RolloutReport};
