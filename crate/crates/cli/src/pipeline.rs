//! The end-to-end pipeline: load -> impute -> standardize -> outlier
//! removal -> split -> over-sample (train only) -> GA selection ->
//! classifier training -> evaluation. Every artifact write is atomic
//! (temp file + rename) and byte-deterministic for a fixed config + seed;
//! wall-clock times go to a separate timing.json outside the determinism
//! contract.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

use gafs_core::classifiers::{predict, train, TrainedClassifier};
use gafs_core::dataset::{
    impute_missing, load_csv, load_secom, project, standardize, stratified_split, Dataset,
    SelectionMask, SplitSpec,
};
use gafs_core::evaluation::{
    accuracy, auc, class_metrics, compare_methods_on_split, confusion, ppv, roc_curve,
    ComparisonReport, RocCurve, SelectorSpec,
};
use gafs_core::ga::{GaCheckpoint, GaRunner, MlpCostFn};
use gafs_core::preprocess::{dbsmote_oversample, remove_outliers, OutlierReport};
use gafs_core::synth::secom_like;

use crate::config::{DatasetConfig, RunConfig};

/// Preprocessed data shared by the selection and comparison stages.
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub outlier_report: Option<OutlierReport>,
    pub synthetic_rows: usize,
    pub rows_loaded: usize,
    pub features_loaded: usize,
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: ToolInfo,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub stages: StageSummary,
    pub ga: Option<GaSummary>,
}

#[derive(Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "gafs",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Serialize)]
pub struct StageSummary {
    pub rows_loaded: usize,
    pub features_loaded: usize,
    pub features_after_impute: usize,
    pub outliers_removed: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub synthetic_minority_rows: usize,
}

#[derive(Serialize)]
pub struct GaSummary {
    pub best_cost: f64,
    pub epsilon: f64,
    pub n_selected: usize,
    pub iterations: usize,
    pub nfe_used: usize,
}

/// Wall-clock per stage; volatile by design, kept out of manifest.json so
/// repeated runs stay byte-identical.
#[derive(Serialize, Default)]
pub struct Timing {
    pub stages_ms: Vec<(String, u128)>,
}

pub fn load_dataset(config: &RunConfig) -> anyhow::Result<Dataset> {
    let dataset = match &config.dataset {
        DatasetConfig::Secom { features, labels } => {
            load_secom(features, labels).context("stage load")?
        }
        DatasetConfig::Csv { path, label_column } => {
            load_csv(path, label_column, None).context("stage load")?
        }
        DatasetConfig::Synthetic {
            rows,
            features,
            failures,
            gen_seed,
        } => secom_like(*rows, *features, *failures, *gen_seed).dataset,
    };
    Ok(dataset)
}

/// Runs the preprocessing chain and the post-split over-sampling.
pub fn prepare(config: &RunConfig, timing: &mut Timing) -> anyhow::Result<Prepared> {
    let t = Instant::now();
    let raw = load_dataset(config)?;
    let rows_loaded = raw.n_rows();
    let features_loaded = raw.n_features();
    timing.push_stage("load", t);

    let t = Instant::now();
    let imputed = impute_missing(&raw, config.preprocess.impute).context("stage impute")?;
    timing.push_stage("impute", t);

    let t = Instant::now();
    let (scaled, _params) = standardize(&imputed).context("stage standardize")?;
    timing.push_stage("standardize", t);

    let t = Instant::now();
    let (cleaned, outlier_report) = match config.preprocess.outlier_quantile {
        Some(q) => {
            let (ds, report) = remove_outliers(&scaled, q).context("stage outliers")?;
            (ds, Some(report))
        }
        None => (scaled, None),
    };
    timing.push_stage("outliers", t);

    let t = Instant::now();
    let spec = SplitSpec {
        train_fraction: config.split.train_fraction,
        stratified: config.split.stratified,
        seed: config.seed,
    };
    let (train_raw, test) = stratified_split(&cleaned, &spec).context("stage split")?;
    timing.push_stage("split", t);

    let t = Instant::now();
    let (train, synthetic_rows) = match &config.preprocess.smote {
        Some(smote_cfg) => {
            let (balanced, report) =
                dbsmote_oversample(&train_raw, smote_cfg).context("stage oversample")?;
            (balanced, report.synthetic_rows)
        }
        None => (train_raw, 0),
    };
    timing.push_stage("oversample", t);

    Ok(Prepared {
        train,
        test,
        outlier_report,
        synthetic_rows,
        rows_loaded,
        features_loaded,
    })
}

pub struct SelectionOutcome {
    pub mask: SelectionMask,
    pub trajectory: Vec<f64>,
    pub nfe_used: usize,
    pub best_cost: f64,
    pub epsilon: f64,
}

/// GA selection over the prepared training partition, with optional
/// checkpointing every `checkpoint_every` generations.
pub fn select_features(
    config: &RunConfig,
    prepared: &Prepared,
    out_dir: Option<&Path>,
    resume: Option<GaCheckpoint>,
) -> anyhow::Result<SelectionOutcome> {
    let cost_fn = MlpCostFn {
        dataset: &prepared.train,
        config: config.cost.clone(),
    };
    let mut runner = match resume {
        Some(checkpoint) => GaRunner::resume(checkpoint, &cost_fn).context("stage select")?,
        None => GaRunner::new(prepared.train.n_features(), config.ga.clone(), &cost_fn)
            .context("stage select")?,
    };
    while !runner.finished() {
        runner.step().context("stage select")?;
        if let (Some(every), Some(dir)) = (config.checkpoint_every, out_dir) {
            if every > 0 && runner.generation() % every == 0 {
                write_json(&dir.join("checkpoint.json"), &runner.checkpoint())?;
            }
        }
    }
    let result = runner.into_result();
    Ok(SelectionOutcome {
        mask: result.best_mask,
        trajectory: result.best_cost_trajectory,
        nfe_used: result.nfe_used,
        best_cost: result.best_cost.j,
        epsilon: result.best_cost.epsilon,
    })
}

#[derive(Serialize)]
pub struct SelectedFeatures {
    pub n_selected: usize,
    pub indices: Vec<usize>,
    pub names: Vec<String>,
}

#[derive(Serialize)]
struct EvaluateReport {
    train_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    ppv_success: Option<f64>,
    fdr_failure: Option<f64>,
    auc: f64,
}

/// Full `run` pipeline; writes every artifact into `config.out_dir`.
pub fn run_pipeline(config: &RunConfig) -> anyhow::Result<()> {
    let mut timing = Timing::default();
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create out dir {}", out_dir.display()))?;

    let prepared = prepare(config, &mut timing)?;

    let t = Instant::now();
    let selection = select_features(config, &prepared, Some(&out_dir), None)?;
    timing.push_stage("select", t);

    let t = Instant::now();
    let train_view = project(&prepared.train, &selection.mask).context("stage classify")?;
    let test_view = project(&prepared.test, &selection.mask).context("stage classify")?;
    let model = train(
        config.evaluation.classifier,
        &train_view,
        &config.evaluation.train,
    )
    .context("stage classify")?;
    timing.push_stage("classify", t);

    let t = Instant::now();
    let (train_pred, _) = predict(&model, &train_view.rows).context("stage evaluate")?;
    let (test_pred, test_scores) = predict(&model, &test_view.rows).context("stage evaluate")?;
    let train_cm = confusion(&train_view.labels, &train_pred).context("stage evaluate")?;
    let test_cm = confusion(&test_view.labels, &test_pred).context("stage evaluate")?;
    let failure = class_metrics(&test_view.labels, &test_pred, 0).context("stage evaluate")?;
    let curve = roc_curve(&test_scores, &test_view.labels).context("stage evaluate")?;
    timing.push_stage("evaluate", t);

    // Artifacts.
    write_selection_artifacts(&out_dir, &prepared, config, &selection)?;
    write_json(&out_dir.join("model.json"), &model)?;
    write_json(
        &out_dir.join("metrics.json"),
        &EvaluateReport {
            train_accuracy: accuracy(&train_cm),
            test_accuracy: accuracy(&test_cm),
            ppv_success: ppv(&test_cm),
            fdr_failure: failure.fdr,
            auc: auc(&curve),
        },
    )?;
    write_roc_csv(&out_dir.join("roc_proposed.csv"), &curve)?;
    write_json(&out_dir.join("timing.json"), &timing)?;
    Ok(())
}

/// Shared artifact block for `run` and `select`.
pub fn write_selection_artifacts(
    out_dir: &Path,
    prepared: &Prepared,
    config: &RunConfig,
    selection: &SelectionOutcome,
) -> anyhow::Result<()> {
    let names = selection
        .mask
        .selected_indices()
        .iter()
        .map(|&j| prepared.train.feature_names[j].clone())
        .collect();
    write_json(
        &out_dir.join("selected_features.json"),
        &SelectedFeatures {
            n_selected: selection.mask.count_selected(),
            indices: selection.mask.selected_indices(),
            names,
        },
    )?;
    write_trajectory_csv(&out_dir.join("trajectory.csv"), &selection.trajectory, config)?;
    if let Some(report) = &prepared.outlier_report {
        write_json(&out_dir.join("outlier_report.json"), report)?;
    }
    let manifest = Manifest {
        tool: ToolInfo::current(),
        seed: config.seed,
        config,
        stages: StageSummary {
            rows_loaded: prepared.rows_loaded,
            features_loaded: prepared.features_loaded,
            features_after_impute: prepared.train.n_features(),
            outliers_removed: prepared
                .outlier_report
                .as_ref()
                .map_or(0, |r| r.flagged.len()),
            train_rows: prepared.train.n_rows(),
            test_rows: prepared.test.n_rows(),
            synthetic_minority_rows: prepared.synthetic_rows,
        },
        ga: Some(GaSummary {
            best_cost: selection.best_cost,
            epsilon: selection.epsilon,
            n_selected: selection.mask.count_selected(),
            iterations: selection.trajectory.len().saturating_sub(1),
            nfe_used: selection.nfe_used,
        }),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

/// `compare` subcommand: proposed method plus the configured baselines on
/// one shared split.
pub fn run_compare(config: &RunConfig) -> anyhow::Result<ComparisonReport> {
    let mut timing = Timing::default();
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create out dir {}", out_dir.display()))?;

    let prepared = prepare(config, &mut timing)?;
    let mut specs = vec![SelectorSpec::Proposed {
        ga: config.ga.clone(),
        cost: config.cost.clone(),
    }];
    specs.extend(config.baselines.iter().cloned());

    let t = Instant::now();
    let report = compare_methods_on_split(
        &prepared.train,
        &prepared.test,
        &specs,
        &config.evaluation,
        config.seed,
    )
    .context("stage compare")?;
    timing.push_stage("compare", t);

    write_json(&out_dir.join("metrics.json"), &report)?;
    for (name, curve) in &report.roc_curves {
        write_roc_csv(&out_dir.join(format!("roc_{name}.csv")), curve)?;
    }
    write_json(&out_dir.join("timing.json"), &timing)?;
    Ok(report)
}

/// `evaluate` subcommand: train (or load) the classifier on a fixed feature
/// set and report metrics.
pub fn run_evaluate(
    config: &RunConfig,
    mask_indices: &[usize],
    model_path: Option<&Path>,
) -> anyhow::Result<()> {
    let mut timing = Timing::default();
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create out dir {}", out_dir.display()))?;

    let prepared = prepare(config, &mut timing)?;
    let m = prepared.train.n_features();
    for &j in mask_indices {
        if j >= m {
            anyhow::bail!("feature index {j} out of range (m = {m})");
        }
    }
    let mask = SelectionMask::from_indices(m, mask_indices);
    let train_view = project(&prepared.train, &mask).context("stage classify")?;
    let test_view = project(&prepared.test, &mask).context("stage classify")?;

    let t = Instant::now();
    let model: TrainedClassifier = match model_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read model {}", path.display()))?;
            serde_json::from_str(&text).context("invalid model file")?
        }
        None => train(
            config.evaluation.classifier,
            &train_view,
            &config.evaluation.train,
        )
        .context("stage classify")?,
    };
    timing.push_stage("classify", t);

    let (train_pred, _) = predict(&model, &train_view.rows).context("stage evaluate")?;
    let (test_pred, test_scores) = predict(&model, &test_view.rows).context("stage evaluate")?;
    let train_cm = confusion(&train_view.labels, &train_pred)?;
    let test_cm = confusion(&test_view.labels, &test_pred)?;
    let failure = class_metrics(&test_view.labels, &test_pred, 0)?;
    let curve = roc_curve(&test_scores, &test_view.labels).context("stage evaluate")?;

    write_json(
        &out_dir.join("metrics.json"),
        &EvaluateReport {
            train_accuracy: accuracy(&train_cm),
            test_accuracy: accuracy(&test_cm),
            ppv_success: ppv(&test_cm),
            fdr_failure: failure.fdr,
            auc: auc(&curve),
        },
    )?;
    if model_path.is_none() {
        write_json(&out_dir.join("model.json"), &model)?;
    }
    write_roc_csv(&out_dir.join("roc_evaluate.csv"), &curve)?;
    write_json(&out_dir.join("timing.json"), &timing)?;
    Ok(())
}

/// `preprocess` subcommand: cleaned/balanced partitions written as CSV plus
/// the outlier report.
pub fn run_preprocess(config: &RunConfig) -> anyhow::Result<()> {
    let mut timing = Timing::default();
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create out dir {}", out_dir.display()))?;

    let prepared = prepare(config, &mut timing)?;
    write_dataset_csv(&out_dir.join("train.csv"), &prepared.train)?;
    write_dataset_csv(&out_dir.join("test.csv"), &prepared.test)?;
    if let Some(report) = &prepared.outlier_report {
        write_json(&out_dir.join("outlier_report.json"), report)?;
    }
    write_json(&out_dir.join("timing.json"), &timing)?;
    Ok(())
}

impl Timing {
    pub fn push_stage(&mut self, stage: &str, start: Instant) {
        self.stages_ms
            .push((stage.to_string(), start.elapsed().as_millis()));
    }
}

/// Atomic write: serialize to a sibling temp file, then rename into place.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value).context("serialize artifact")?;
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot rename into {}", path.display()))?;
    Ok(())
}

pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> anyhow::Result<()> {
    let mut text = String::from("fpr,tpr,threshold\n");
    for ((fpr, tpr), threshold) in curve.points.iter().zip(&curve.thresholds) {
        let thr = if threshold.is_infinite() {
            "inf".to_string()
        } else {
            format!("{threshold}")
        };
        text.push_str(&format!("{fpr},{tpr},{thr}\n"));
    }
    write_atomic(path, text.as_bytes())
}

fn write_trajectory_csv(path: &Path, trajectory: &[f64], config: &RunConfig) -> anyhow::Result<()> {
    // NFE after the initial population, then per generation.
    let per_generation = 2 * config.ga.n_crossover_pairs() + config.ga.n_mutants();
    let mut text = String::from("iteration,best_cost,nfe\n");
    for (i, cost) in trajectory.iter().enumerate() {
        let nfe = config.ga.population_size + i * per_generation;
        text.push_str(&format!("{i},{cost},{nfe}\n"));
    }
    write_atomic(path, text.as_bytes())
}

fn write_dataset_csv(path: &Path, dataset: &Dataset) -> anyhow::Result<()> {
    let mut text = String::new();
    text.push_str(&dataset.feature_names.join(","));
    text.push_str(",label\n");
    for (row, label) in dataset.rows.iter().zip(&dataset.labels) {
        for v in row {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&format!("{label}\n"));
    }
    write_atomic(path, text.as_bytes())
}
