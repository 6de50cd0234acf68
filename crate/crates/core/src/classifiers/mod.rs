//! The classifier family used to score selected feature subsets: linear
//! discriminant, L2 logistic regression, (distance-weighted) k-nearest
//! neighbors, Gaussian-RBF SVM trained by SMO, and a bagged CART forest.
//!
//! Every trained model predicts a probability-like score in [0,1] for the
//! Success class and a hard label at the 0.5 threshold.

mod forest;
mod knn;
mod linear;
mod svm;

pub use forest::ForestModel;
pub use knn::KnnModel;
pub use linear::{LdaModel, LogisticModel};
pub use svm::SvmModel;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Classifier selector. `GaussianSvm` and `RbfSvm` share the same kernel
/// family and differ only in the default bandwidth heuristic (median pairwise
/// distance vs 1/m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Lda,
    Logistic,
    Knn,
    GaussianSvm,
    RbfSvm,
    RandomForest,
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianSvm => "gaussian_svm",
            ClassifierKind::RbfSvm => "rbf_svm",
            ClassifierKind::RandomForest => "random_forest",
        };
        f.write_str(name)
    }
}

/// Kernel bandwidth selection for the SVM presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSpec {
    /// 1 / (2 * median^2) of pairwise distances on a 500-row subsample.
    MedianHeuristic,
    /// 1 / n_features.
    InverseDim,
    Value(f64),
}

/// Training hyperparameters (paper leaves these unreported; defaults are
/// ordinary textbook settings).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub knn_k: usize,
    /// Distance-weighted voting (1/d); false switches to uniform votes.
    pub knn_weighted: bool,
    pub svm_c: f64,
    pub svm_gamma: GammaSpec,
    pub logistic_l2: f64,
    pub forest_trees: usize,
    pub forest_max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            knn_k: 5,
            knn_weighted: true,
            svm_c: 1.0,
            svm_gamma: GammaSpec::MedianHeuristic,
            logistic_l2: 1e-4,
            forest_trees: 100,
            forest_max_depth: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 || self.knn_k % 2 == 0 {
            return Err(Error::InvalidConfig("knn_k must be odd and positive".into()));
        }
        if self.svm_c <= 0.0 {
            return Err(Error::InvalidConfig("svm_c must be > 0".into()));
        }
        if let GammaSpec::Value(g) = self.svm_gamma {
            if g <= 0.0 {
                return Err(Error::InvalidConfig("svm_gamma must be > 0".into()));
            }
        }
        if self.logistic_l2 < 0.0 {
            return Err(Error::InvalidConfig("logistic_l2 must be >= 0".into()));
        }
        if self.forest_trees == 0 {
            return Err(Error::InvalidConfig("forest_trees must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trained classifier of any kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedClassifier {
    Lda(LdaModel),
    Logistic(LogisticModel),
    Knn(KnnModel),
    Svm(SvmModel),
    RandomForest(ForestModel),
}

impl TrainedClassifier {
    pub fn input_dim(&self) -> usize {
        match self {
            TrainedClassifier::Lda(m) => m.input_dim(),
            TrainedClassifier::Logistic(m) => m.input_dim(),
            TrainedClassifier::Knn(m) => m.input_dim(),
            TrainedClassifier::Svm(m) => m.input_dim(),
            TrainedClassifier::RandomForest(m) => m.input_dim(),
        }
    }

    /// Success-class score in [0,1] for one row.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: row.len(),
            });
        }
        Ok(match self {
            TrainedClassifier::Lda(m) => m.score(row),
            TrainedClassifier::Logistic(m) => m.score(row),
            TrainedClassifier::Knn(m) => m.score(row),
            TrainedClassifier::Svm(m) => m.score(row),
            TrainedClassifier::RandomForest(m) => m.score(row),
        })
    }
}

/// Trains the requested classifier kind. Requires both classes present.
pub fn train(kind: ClassifierKind, dataset: &Dataset, config: &TrainConfig) -> Result<TrainedClassifier> {
    config.validate()?;
    if dataset.count_label(0) == 0 || dataset.count_label(1) == 0 {
        return Err(Error::InvalidInput(
            "training set must contain both classes".into(),
        ));
    }
    Ok(match kind {
        ClassifierKind::Lda => TrainedClassifier::Lda(linear::train_lda(dataset)?),
        ClassifierKind::Logistic => {
            TrainedClassifier::Logistic(linear::train_logistic(dataset, config.logistic_l2)?)
        }
        ClassifierKind::Knn => TrainedClassifier::Knn(knn::train_knn(dataset, config)?),
        ClassifierKind::GaussianSvm | ClassifierKind::RbfSvm => {
            let gamma = svm::resolve_gamma(dataset, kind, config);
            TrainedClassifier::Svm(svm::train_smo(dataset, config.svm_c, gamma)?)
        }
        ClassifierKind::RandomForest => {
            TrainedClassifier::RandomForest(forest::train_forest(dataset, config)?)
        }
    })
}

/// Hard labels and scores for a batch of rows.
pub fn predict(model: &TrainedClassifier, rows: &[Vec<f64>]) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut labels = Vec::with_capacity(rows.len());
    let mut scores = Vec::with_capacity(rows.len());
    for row in rows {
        let s = model.score(row)?;
        scores.push(s);
        labels.push(if s >= 0.5 { 1 } else { 0 });
    }
    Ok((labels, scores))
}

/// Fraction of rows classified correctly, as a percentage.
pub fn training_accuracy(model: &TrainedClassifier, dataset: &Dataset) -> Result<f64> {
    let (labels, _) = predict(model, &dataset.rows)?;
    let correct = labels
        .iter()
        .zip(&dataset.labels)
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * correct as f64 / dataset.n_rows() as f64)
}
