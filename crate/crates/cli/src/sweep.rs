//! Parameter-study sweep: every (crossover, mutation) block crossed with the
//! (population, hidden) scale rows, each cell a full GA selection over a
//! shared preprocessed dataset. Cells run in parallel up to the worker limit
//! with per-cell derived seeds, so parallel and serial sweeps emit identical
//! reports.

use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use gafs_core::ga::{GaRunner, MlpCostFn};
use gafs_core::rng;

use crate::config::{RunConfig, SweepGrid};
use crate::pipeline::{prepare, write_json, Timing};

#[derive(Serialize)]
pub struct SweepCell {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub population: usize,
    pub hidden: usize,
    pub seed: u64,
    pub final_best_cost: Option<f64>,
    pub n_selected: Option<usize>,
    pub nfe_used: Option<usize>,
    /// Last few best-cost values, newest last.
    pub trajectory_tail: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

pub fn run_sweep(config: &RunConfig, grid: &SweepGrid) -> anyhow::Result<()> {
    let mut timing = Timing::default();
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create out dir {}", out_dir.display()))?;

    // Preprocess once; every cell shares the balanced training partition.
    let prepared = prepare(config, &mut timing)?;

    let cells = grid.cells();
    let t = Instant::now();
    let run_cell = |(index, &(theta, mu, scale)): (usize, &(f64, f64, crate::config::ScaleRow))| {
        let mut ga = config.ga.clone();
        ga.crossover_rate = theta;
        ga.mutation_rate = mu;
        ga.population_size = scale.population.max(4) / 2 * 2;
        ga.seed = rng::derive_seed(config.seed, &[rng::label::SWEEP_CELL, index as u64]);
        let mut cost = config.cost.clone();
        cost.hidden_dim = scale.hidden;

        let cost_fn = MlpCostFn {
            dataset: &prepared.train,
            config: cost,
        };
        let outcome = GaRunner::new(prepared.train.n_features(), ga.clone(), &cost_fn)
            .and_then(|runner| runner.run());
        match outcome {
            Ok(result) => {
                let tail_start = result.best_cost_trajectory.len().saturating_sub(5);
                SweepCell {
                    crossover_rate: theta,
                    mutation_rate: mu,
                    population: ga.population_size,
                    hidden: scale.hidden,
                    seed: ga.seed,
                    final_best_cost: Some(result.best_cost.j),
                    n_selected: Some(result.best_cost.n_selected),
                    nfe_used: Some(result.nfe_used),
                    trajectory_tail: result.best_cost_trajectory[tail_start..].to_vec(),
                    error: None,
                }
            }
            Err(e) => SweepCell {
                crossover_rate: theta,
                mutation_rate: mu,
                population: scale.population,
                hidden: scale.hidden,
                seed: ga.seed,
                final_best_cost: None,
                n_selected: None,
                nfe_used: None,
                trajectory_tail: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    };

    // The worker limit is applied to the global pool at startup; cell seeds
    // are positional, so any schedule yields the same report.
    let results: Vec<SweepCell> = cells.par_iter().enumerate().map(run_cell).collect();
    timing.push_stage("sweep", t);

    write_json(&out_dir.join("sweep_report.json"), &SweepReport { cells: results })?;
    write_json(&out_dir.join("timing.json"), &timing)?;
    Ok(())
}
