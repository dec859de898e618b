//! Command-line entry point.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use super::experiment::{
    collect, run_baselines, run_experiment, train_arms, write_arm, write_baselines, write_collection, write_results,
    write_tracks, Collection, ExperimentConfig, OutputDir, Track,
};
use super::plots::{emit_plots, PlotData};
use super::rollout::{rollout_closed_loop, vehicle_trajectory_csv, PolicyController, RolloutReport};
use crate::continual::TrainMethod;
use crate::error::{Error, Result};
use crate::experience::{samples_from_csv, LoopConfig, TaskDataset, TaskKey};
use crate::geometry::TrackSpec;
use crate::policy::{fit_normalizer, load_model};

#[derive(Debug, Parser)]
#[command(name = "lifetrack", version, about = "Continual learning of a path-tracking steering policy")]
struct Cli {
    /// Experiment configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the preset track sections.
    Tracks,
    /// Collect expert demonstrations and build the task datasets.
    Collect,
    /// Train every method on previously collected datasets.
    Train,
    /// Closed-loop evaluation of trained models and baselines on the test section.
    Eval,
    /// Full experiment: collect, train, evaluate, plot.
    Run,
    /// Rebuild plots from the metric files in the output directory.
    Plot,
}

/// Parse `args` (including the program name) and run. Returns the exit code:
/// 0 on success, 1 on usage errors, 2 on runtime failures.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Tracks => {
            let mut out = OutputDir::create(&cli.out)?;
            let mut tracks = BTreeMap::new();
            for spec in TrackSpec::presets() {
                tracks.insert(spec.section_id.clone(), Track::generate(&spec.section_id, cfg.ds)?);
            }
            write_tracks(&mut out, &tracks)?;
        }
        Command::Collect => {
            let collection = collect(&cfg)?;
            let mut out = OutputDir::create(&cli.out)?;
            out.write("config.txt", &cfg.to_kv().to_text())?;
            write_collection(&mut out, &collection)?;
            out.write_manifest(&cfg)?;
        }
        Command::Train => {
            let collection = load_collection(&cfg, &cli.out)?;
            let norm = fit_normalizer(&collection.tasks)?;
            let arms = train_arms(&cfg, &collection, &norm)?;
            let mut out = OutputDir::create(&cli.out)?;
            for arm in &arms {
                write_arm(&mut out, arm, &norm)?;
            }
        }
        Command::Eval => evaluate(&cfg, &cli.out)?,
        Command::Run => {
            let results = run_experiment(&cfg)?;
            let files = write_results(&results, &cli.out)?;
            info!("wrote {} files to {}", files.len(), cli.out.display());
        }
        Command::Plot => {
            let data = PlotData::load(&cli.out)?;
            let mut out = OutputDir::create(&cli.out)?;
            for (rel, text) in emit_plots(&data) {
                out.write(&rel, &text)?;
            }
        }
    }
    Ok(())
}

fn read(root: &Path, rel: &str) -> Result<String> {
    let p = root.join(rel);
    fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
}

/// Tasks from `datasets/index.csv` and the per-task split files.
fn load_collection(cfg: &ExperimentConfig, root: &Path) -> Result<Collection> {
    let index = read(root, "datasets/index.csv")?;
    let mut tasks = Vec::new();
    for line in index.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::parse("datasets/index.csv", format!("bad row `{line}`"));
        if f.len() != 7 {
            return Err(bad());
        }
        let key = TaskKey::new(f[2], f[3].parse().map_err(|_| bad())?, f[4].parse().map_err(|_| bad())?);
        let train = samples_from_csv(&read(root, &format!("datasets/{}_train.csv", f[1]))?)?;
        let test = samples_from_csv(&read(root, &format!("datasets/{}_test.csv", f[1]))?)?;
        let n_train = train.len();
        let samples: Vec<_> = train.into_iter().chain(test).collect();
        tasks.push(TaskDataset {
            key,
            train_idx: (0..n_train).collect(),
            test_idx: (n_train..samples.len()).collect(),
            samples,
        });
    }
    if tasks.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut tracks = BTreeMap::new();
    tracks.insert(cfg.test_section.clone(), Track::generate(&cfg.test_section, cfg.ds)?);
    Ok(Collection {
        tracks,
        episodes: Vec::new(),
        tasks,
        warnings: Vec::new(),
    })
}

fn evaluate(cfg: &ExperimentConfig, root: &Path) -> Result<()> {
    let track = Track::generate(&cfg.test_section, cfg.ds)?;
    let mut out = OutputDir::create(root)?;
    let loop_cfg = LoopConfig {
        sim: cfg.sim,
        params: cfg.vehicle,
        end_margin: cfg.lookahead.max(cfg.pp_lookahead),
        ..LoopConfig::default()
    };
    let mut found = false;
    for m in TrainMethod::ALL {
        let path = root.join(format!("models/{m}.txt"));
        if !path.exists() {
            continue;
        }
        found = true;
        let (net, norm) = load_model(&path)?;
        let ctl = PolicyController {
            net: &net,
            norm: &norm,
            lookahead: cfg.lookahead,
        };
        let (report, traj) = rollout_closed_loop(&ctl, &track.path, &cfg.test_section, cfg.test_velocity, &loop_cfg);
        out.write(
            &format!("metrics/closed_loop_{m}.csv"),
            &format!("{}\n{}\n", RolloutReport::CSV_HEADER, report.csv_fields()),
        )?;
        out.write(&format!("rollouts/{m}.csv"), &vehicle_trajectory_csv(&traj))?;
    }
    if !found {
        return Err(Error::Config(format!("no trained models under {}", root.join("models").display())));
    }
    write_baselines(&mut out, &run_baselines(cfg, &track.path))
}
