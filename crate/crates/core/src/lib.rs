//! Continual-learning workbench for model-free vehicle path tracking.
//!
//! A steering policy is learned from simulated driving experience, trained
//! over a sequence of tasks with averaged-gradient episodic memory (AGEM)
//! projection and a curated episodic memory, and evaluated in closed loop
//! against pure-pursuit and MPC baselines.
//!
//! Module map:
//! - [`geometry`]: reference paths, projection, preview points, procedural tracks
//! - [`vehicle`]: single-track dynamics, kinematic bicycle, fixed-step simulator
//! - [`experts`]: box-QP solver, linear MPC, pure pursuit
//! - [`policy`]: 5-64-64-1 network with hand-written backprop, optimizers, model files
//! - [`continual`]: AGEM projection, episodic memory, trainers
//! - [`experience`]: episode collection, experience processing, task segmentation
//! - [`harness`]: metrics, closed-loop rollouts, experiment pipeline, plots, CLI

pub mod config;
pub mod continual;
pub mod error;
pub mod experience;
pub mod experts;
pub mod geometry;
pub mod harness;
pub mod par;
pub mod policy;
pub mod rng;
pub mod vehicle;

pub use error::{Error, Result};
