//! Wrapper feature selection for high-dimensional fault classification:
//! a binary genetic algorithm scored by a Levenberg-Marquardt-trained
//! perceptron, the preprocessing pipeline around it (Mahalanobis outlier
//! elimination, density-based minority over-sampling), conventional
//! selector baselines, a small classifier family and the evaluation
//! harness that compares them.

pub mod baselines;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod ga;
pub mod neuro;
pub mod preprocess;
pub mod rng;
pub mod stats;
pub mod synth;

pub use dataset::{Dataset, ScalingParams, SelectionMask, SplitSpec};
pub use error::{Error, Result};
pub use evaluation::{ComparisonReport, ConfusionMatrix, RocCurve};
pub use ga::{GaConfig, GaResult, Individual};
pub use neuro::{CostConfig, CostValue, LmConfig, MlpModel};
pub use preprocess::{OutlierReport, ScatterMatrix, SmoteConfig};
