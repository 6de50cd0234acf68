//! `gafs` — GA + neural-network wrapper feature selection pipeline.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

mod config;
mod pipeline;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig, SweepGrid};

#[derive(Parser)]
#[command(name = "gafs", version, about = "GA + neural-network wrapper feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Global seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature-count penalty weight; overrides cost.omega.
    #[arg(long)]
    omega: Option<f64>,
    /// GA population size; overrides ga.population_size.
    #[arg(long)]
    pop: Option<usize>,
    /// GA iteration cap; overrides ga.max_iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Worker thread limit for parallel stages.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run preprocessing only and write the cleaned train/test CSVs.
    Preprocess(CommonArgs),
    /// Run GA feature selection and write the selected mask + trajectory.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        /// Resume from a previously written checkpoint.json.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Train/evaluate the configured classifier on a fixed feature set.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// selected_features.json from a prior select/run.
        #[arg(long)]
        features: PathBuf,
        /// Reuse a serialized model.json instead of retraining.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Compare the proposed selector against the configured baselines.
    Compare(CommonArgs),
    /// Parameter-study sweep over a grid of GA settings.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep grid (JSON).
        #[arg(long)]
        grid: PathBuf,
    },
    /// Full pipeline: preprocess, select, classify, evaluate, report.
    Run(CommonArgs),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

enum CliError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn load_validated(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let overrides = Overrides {
        seed: common.seed,
        out: common.out.clone(),
        omega: common.omega,
        pop: common.pop,
        iters: common.iters,
    };
    let config = RunConfig::load(&common.config, &overrides).map_err(CliError::Config)?;
    config.validate().map_err(CliError::Config)?;
    if let Some(workers) = common.workers {
        // Build the global pool once; later calls fail harmlessly.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global();
    }
    Ok(config.effective())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Preprocess(common) => {
            let config = load_validated(&common)?;
            pipeline::run_preprocess(&config).map_err(CliError::Runtime)
        }
        Command::Select { common, resume } => {
            let config = load_validated(&common)?;
            run_select(&config, resume.as_deref()).map_err(CliError::Runtime)
        }
        Command::Evaluate {
            common,
            features,
            model,
        } => {
            let config = load_validated(&common)?;
            let indices = read_feature_indices(&features).map_err(CliError::Config)?;
            pipeline::run_evaluate(&config, &indices, model.as_deref()).map_err(CliError::Runtime)
        }
        Command::Compare(common) => {
            let config = load_validated(&common)?;
            pipeline::run_compare(&config)
                .map(|report| {
                    for row in &report.rows {
                        match &row.error {
                            None => println!(
                                "{:<12} features {:>4}  train {:>6}  test {:>6}  auc {:.3}",
                                row.method,
                                row.n_selected,
                                fmt_pct(row.train_accuracy),
                                fmt_pct(row.test_accuracy),
                                row.auc
                            ),
                            Some(e) => println!("{:<12} failed: {e}", row.method),
                        }
                    }
                })
                .map_err(CliError::Runtime)
        }
        Command::Sweep { common, grid } => {
            let config = load_validated(&common)?;
            let grid = SweepGrid::load(&grid).map_err(CliError::Config)?;
            sweep::run_sweep(&config, &grid).map_err(CliError::Runtime)
        }
        Command::Run(common) => {
            let config = load_validated(&common)?;
            pipeline::run_pipeline(&config).map_err(CliError::Runtime)
        }
    }
}

fn run_select(config: &RunConfig, resume: Option<&std::path::Path>) -> anyhow::Result<()> {
    use anyhow::Context;
    let mut timing = pipeline::Timing::default();
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create out dir {}", out_dir.display()))?;

    let prepared = pipeline::prepare(config, &mut timing)?;
    let checkpoint = match resume {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
            Some(serde_json::from_str(&text).context("invalid checkpoint file")?)
        }
        None => None,
    };
    let t = std::time::Instant::now();
    let selection = pipeline::select_features(config, &prepared, Some(&out_dir), checkpoint)?;
    timing.push_stage("select", t);

    pipeline::write_selection_artifacts(&out_dir, &prepared, config, &selection)?;
    pipeline::write_json(&out_dir.join("timing.json"), &timing)?;
    println!(
        "selected {} features, best cost {:.6}, nfe {}",
        selection.mask.count_selected(),
        selection.best_cost,
        selection.nfe_used
    );
    Ok(())
}

fn read_feature_indices(path: &std::path::Path) -> anyhow::Result<Vec<usize>> {
    #[derive(serde::Deserialize)]
    struct Features {
        indices: Vec<usize>,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read features {}: {e}", path.display()))?;
    let parsed: Features = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("invalid features file {}: {e}", path.display()))?;
    if parsed.indices.is_empty() {
        anyhow::bail!("features file selects nothing");
    }
    Ok(parsed.indices)
}

fn fmt_pct(v: Option<f64>) -> String {
    match v {
        Some(p) => format!("{p:.1}%"),
        None => "n/a".to_string(),
    }
}
