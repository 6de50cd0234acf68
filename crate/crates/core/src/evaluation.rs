//! Confusion metrics (PPV, FDR, accuracy), ROC curves with trapezoidal AUC,
//! and the cross-method comparison harness that runs each selector on the
//! training partition, trains the evaluation classifier on the selected
//! features and reports train/test metrics side by side.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    cfs, lasso_lambda_max, lasso_path, lasso_select, pca_fit, pca_transform, sbs, select_fdr,
    select_fwe, select_percentile, sfs, univariate_scores,
};
use crate::classifiers::{predict, train, ClassifierKind, TrainConfig};
use crate::dataset::{project, Dataset, SelectionMask, SplitSpec};
use crate::error::{Error, Result};
use crate::ga::{GaConfig, GaRunner, MlpCostFn};
use crate::neuro::CostConfig;
use crate::rng;

/// 2x2 counts with Success (label 1) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Counts per 2x2 cell. Labels outside {0,1} are rejected.
pub fn confusion(true_labels: &[u8], predicted_labels: &[u8]) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: true_labels.len(),
            actual: predicted_labels.len(),
        });
    }
    let mut cm = ConfusionMatrix {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        match (t, p) {
            (1, 1) => cm.true_positives += 1,
            (0, 1) => cm.false_positives += 1,
            (0, 0) => cm.true_negatives += 1,
            (1, 0) => cm.false_negatives += 1,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "labels must be 0 or 1, got ({t}, {p})"
                )))
            }
        }
    }
    Ok(cm)
}

/// Positive predictive value in percent; `None` when nothing was predicted
/// positive.
pub fn ppv(cm: &ConfusionMatrix) -> Option<f64> {
    let denom = cm.true_positives + cm.false_positives;
    (denom > 0).then(|| 100.0 * cm.true_positives as f64 / denom as f64)
}

/// False discovery rate in percent over positive predictions.
pub fn fdr(cm: &ConfusionMatrix) -> Option<f64> {
    let denom = cm.true_positives + cm.false_positives;
    (denom > 0).then(|| 100.0 * cm.false_positives as f64 / denom as f64)
}

/// Overall accuracy in percent.
pub fn accuracy(cm: &ConfusionMatrix) -> Option<f64> {
    let total = cm.total();
    (total > 0).then(|| 100.0 * (cm.true_positives + cm.true_negatives) as f64 / total as f64)
}

/// PPV/FDR computed over the predictions of one class. The comparison tables
/// report PPV on Success predictions and FDR on Failure predictions, which is
/// why the two columns need not sum to 100.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub ppv: Option<f64>,
    pub fdr: Option<f64>,
}

pub fn class_metrics(true_labels: &[u8], predicted_labels: &[u8], class: u8) -> Result<ClassMetrics> {
    if class > 1 {
        return Err(Error::InvalidInput("class must be 0 or 1".into()));
    }
    let mut predicted = 0usize;
    let mut correct = 0usize;
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        if p == class {
            predicted += 1;
            if t == class {
                correct += 1;
            }
        }
    }
    let ppv = (predicted > 0).then(|| 100.0 * correct as f64 / predicted as f64);
    Ok(ClassMetrics {
        class,
        ppv,
        fdr: ppv.map(|v| 100.0 - v),
    })
}

/// ROC curve from (0,0) to (1,1); tied scores collapse into one step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate) pairs.
    pub points: Vec<(f64, f64)>,
    /// Score cutoff producing each point; the origin carries +infinity.
    pub thresholds: Vec<f64>,
}

pub fn roc_curve(scores: &[f64], true_labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != true_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: true_labels.len(),
            actual: scores.len(),
        });
    }
    let positives = true_labels.iter().filter(|&&l| l == 1).count();
    let negatives = true_labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidInput(
            "ROC needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let cutoff = scores[order[i]];
        // Consume the whole tie group at this score.
        while i < order.len() && scores[order[i]] == cutoff {
            if true_labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(cutoff);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            (x1 - x0) * (y0 + y1) * 0.5
        })
        .sum()
}

/// A selector to run in the comparison harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectorSpec {
    /// The GA + MLP wrapper.
    Proposed { ga: GaConfig, cost: CostConfig },
    Fwe { alpha: f64 },
    Fdr { alpha: f64 },
    Percentile { percentile: f64 },
    Pca { components: usize },
    Sfs { max_features: usize, cv_folds: usize },
    Sbs { min_features: usize, cv_folds: usize },
    Cfs,
    /// Lasso at `fraction_of_lambda_max` along a warm-started path.
    Lasso { fraction_of_lambda_max: f64 },
    /// Identity selection (all features), the classifier-only baseline.
    Full,
}

impl SelectorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SelectorSpec::Proposed { .. } => "proposed",
            SelectorSpec::Fwe { .. } => "fwe",
            SelectorSpec::Fdr { .. } => "fdr",
            SelectorSpec::Percentile { .. } => "percentile",
            SelectorSpec::Pca { .. } => "pca",
            SelectorSpec::Sfs { .. } => "sfs",
            SelectorSpec::Sbs { .. } => "sbs",
            SelectorSpec::Cfs => "cfs",
            SelectorSpec::Lasso { .. } => "lasso",
            SelectorSpec::Full => "full",
        }
    }
}

/// Classifier used to score every method row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub classifier: ClassifierKind,
    pub train: TrainConfig,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            classifier: ClassifierKind::GaussianSvm,
            train: TrainConfig::default(),
        }
    }
}

/// One comparison row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub n_selected: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub ppv_success: Option<f64>,
    pub fdr_failure: Option<f64>,
    pub auc: f64,
    pub selected_features: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<MethodReport>,
    /// Test-partition ROC per method, in row order.
    pub roc_curves: Vec<(String, RocCurve)>,
}

/// Stratified k-fold cross-validated accuracy of the evaluation classifier on
/// the masked dataset; the default SFS/SBS evaluator.
pub fn cv_accuracy(
    dataset: &Dataset,
    mask: &SelectionMask,
    eval: &EvaluationConfig,
    folds: usize,
    seed: u64,
) -> f64 {
    let projected = match project(dataset, mask) {
        Ok(d) => d,
        Err(_) => return f64::NEG_INFINITY,
    };
    let folds = folds.max(2);
    let assignments = fold_assignments(&projected, folds, seed);
    let mut correct = 0usize;
    let mut total = 0usize;
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..projected.n_rows())
            .filter(|&i| assignments[i] != fold)
            .collect();
        let test_idx: Vec<usize> = (0..projected.n_rows())
            .filter(|&i| assignments[i] == fold)
            .collect();
        if train_idx.is_empty() || test_idx.is_empty() {
            continue;
        }
        let train_ds = projected.subset_rows(&train_idx);
        if train_ds.count_label(0) == 0 || train_ds.count_label(1) == 0 {
            continue;
        }
        let test_ds = projected.subset_rows(&test_idx);
        match train(eval.classifier, &train_ds, &eval.train) {
            Ok(model) => {
                if let Ok((labels, _)) = predict(&model, &test_ds.rows) {
                    correct += labels
                        .iter()
                        .zip(&test_ds.labels)
                        .filter(|(a, b)| a == b)
                        .count();
                    total += test_ds.n_rows();
                }
            }
            Err(_) => continue,
        }
    }
    if total == 0 {
        f64::NEG_INFINITY
    } else {
        correct as f64 / total as f64
    }
}

/// Round-robin stratified fold assignment after a seeded per-class shuffle.
fn fold_assignments(dataset: &Dataset, folds: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = rng::stream(seed, &[rng::label::CV_FOLDS]);
    let mut assignment = vec![0usize; dataset.n_rows()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..dataset.n_rows())
            .filter(|&i| dataset.labels[i] == class)
            .collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

enum Selection {
    Mask(SelectionMask),
    /// PCA transform applied to both partitions.
    Transformed { train: Dataset, test: Dataset, components: usize },
}

fn run_selector(
    spec: &SelectorSpec,
    train_ds: &Dataset,
    test_ds: &Dataset,
    eval: &EvaluationConfig,
    seed: u64,
) -> Result<Selection> {
    Ok(match spec {
        SelectorSpec::Proposed { ga, cost } => {
            let cost_fn = MlpCostFn {
                dataset: train_ds,
                config: cost.clone(),
            };
            let result = GaRunner::new(train_ds.n_features(), ga.clone(), &cost_fn)?.run()?;
            Selection::Mask(result.best_mask)
        }
        SelectorSpec::Fwe { alpha } => {
            Selection::Mask(select_fwe(&univariate_scores(train_ds)?, *alpha)?)
        }
        SelectorSpec::Fdr { alpha } => {
            Selection::Mask(select_fdr(&univariate_scores(train_ds)?, *alpha)?)
        }
        SelectorSpec::Percentile { percentile } => {
            Selection::Mask(select_percentile(&univariate_scores(train_ds)?, *percentile)?)
        }
        SelectorSpec::Pca { components } => {
            let model = pca_fit(train_ds, *components)?;
            Selection::Transformed {
                train: pca_transform(&model, train_ds)?,
                test: pca_transform(&model, test_ds)?,
                components: *components,
            }
        }
        SelectorSpec::Sfs {
            max_features,
            cv_folds,
        } => {
            let evaluator =
                |mask: &SelectionMask| cv_accuracy(train_ds, mask, eval, *cv_folds, seed);
            Selection::Mask(sfs(train_ds, evaluator, *max_features)?)
        }
        SelectorSpec::Sbs {
            min_features,
            cv_folds,
        } => {
            let evaluator =
                |mask: &SelectionMask| cv_accuracy(train_ds, mask, eval, *cv_folds, seed);
            Selection::Mask(sbs(train_ds, evaluator, *min_features)?)
        }
        SelectorSpec::Cfs => Selection::Mask(cfs(train_ds)?),
        SelectorSpec::Lasso {
            fraction_of_lambda_max,
        } => {
            let lmax = lasso_lambda_max(train_ds);
            let target = lmax * fraction_of_lambda_max.clamp(1e-6, 1.0);
            // Warm-started geometric path down to the requested lambda.
            let mut lambdas = Vec::new();
            let mut l = lmax;
            while l > target * 1.0001 {
                lambdas.push(l);
                l *= 0.8;
            }
            lambdas.push(target);
            let path = lasso_path(train_ds, &lambdas)?;
            Selection::Mask(lasso_select(&path, target)?)
        }
        SelectorSpec::Full => Selection::Mask(SelectionMask::all_ones(train_ds.n_features())),
    })
}

/// Runs every selector on the training partition only, trains the evaluation
/// classifier on the selected features, and reports train/test accuracy,
/// PPV (Success), FDR (Failure) and test AUC per method. A method failure is
/// recorded in its row and the run continues.
pub fn compare_methods(
    dataset: &Dataset,
    method_specs: &[SelectorSpec],
    split_spec: &SplitSpec,
    eval: &EvaluationConfig,
) -> Result<ComparisonReport> {
    let (train_ds, test_ds) = crate::dataset::stratified_split(dataset, split_spec)?;
    compare_methods_on_split(&train_ds, &test_ds, method_specs, eval, split_spec.seed)
}

/// Comparison over an existing train/test partition (e.g. when the training
/// side has been over-sampled after the split).
pub fn compare_methods_on_split(
    train_ds: &Dataset,
    test_ds: &Dataset,
    method_specs: &[SelectorSpec],
    eval: &EvaluationConfig,
    seed: u64,
) -> Result<ComparisonReport> {
    if method_specs.is_empty() {
        return Err(Error::InvalidInput("no method specs".into()));
    }
    let mut rows = Vec::new();
    let mut roc_curves = Vec::new();

    for spec in method_specs {
        let name = spec.name().to_string();
        match evaluate_method(spec, train_ds, test_ds, eval, seed) {
            Ok((report, curve)) => {
                rows.push(report);
                roc_curves.push((name, curve));
            }
            Err(e) => rows.push(MethodReport {
                method: name,
                n_selected: 0,
                train_accuracy: None,
                test_accuracy: None,
                ppv_success: None,
                fdr_failure: None,
                auc: 0.0,
                selected_features: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(ComparisonReport { rows, roc_curves })
}

fn evaluate_method(
    spec: &SelectorSpec,
    train_ds: &Dataset,
    test_ds: &Dataset,
    eval: &EvaluationConfig,
    seed: u64,
) -> Result<(MethodReport, RocCurve)> {
    let selection = run_selector(spec, train_ds, test_ds, eval, seed)?;
    let (train_view, test_view, n_selected, selected_features) = match selection {
        Selection::Mask(mask) => {
            let names = mask
                .selected_indices()
                .iter()
                .map(|&j| train_ds.feature_names[j].clone())
                .collect();
            (
                project(train_ds, &mask)?,
                project(test_ds, &mask)?,
                mask.count_selected(),
                names,
            )
        }
        Selection::Transformed {
            train,
            test,
            components,
        } => {
            let names = train.feature_names.clone();
            (train, test, components, names)
        }
    };

    let model = train(eval.classifier, &train_view, &eval.train)?;
    let (train_pred, _) = predict(&model, &train_view.rows)?;
    let (test_pred, test_scores) = predict(&model, &test_view.rows)?;

    let train_cm = confusion(&train_view.labels, &train_pred)?;
    let test_cm = confusion(&test_view.labels, &test_pred)?;
    let failure = class_metrics(&test_view.labels, &test_pred, 0)?;
    let curve = roc_curve(&test_scores, &test_view.labels)?;
    let area = auc(&curve);

    Ok((
        MethodReport {
            method: spec.name().to_string(),
            n_selected,
            train_accuracy: accuracy(&train_cm),
            test_accuracy: accuracy(&test_cm),
            ppv_success: ppv(&test_cm),
            fdr_failure: failure.fdr,
            auc: area,
            selected_features,
            error: None,
        },
        curve,
    ))
}
