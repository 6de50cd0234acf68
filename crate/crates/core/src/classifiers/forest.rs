//! Bagged CART forest: bootstrap sample per tree, sqrt(m) random feature
//! candidates per split, Gini impurity, grown to purity unless depth-capped.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

use super::TrainConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        positive_fraction: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn score(&self, row: &[f64]) -> f64 {
        match self {
            TreeNode::Leaf { positive_fraction } => *positive_fraction,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.score(row)
                } else {
                    right.score(row)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
    /// Feature candidates drawn per split.
    pub features_per_split: usize,
}

impl ForestModel {
    pub fn input_dim(&self) -> usize {
        self.n_features
    }

    /// Fraction of trees voting positive (majority leaf vote per tree).
    pub fn score(&self, row: &[f64]) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.score(row) >= 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }
}

pub fn train_forest(dataset: &Dataset, config: &TrainConfig) -> Result<ForestModel> {
    let n = dataset.n_rows();
    let m = dataset.n_features();
    if n == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let features_per_split = (m as f64).sqrt().round().max(1.0) as usize;
    let trees = (0..config.forest_trees)
        .map(|t| {
            let mut tree_rng = rng::stream(config.seed, &[rng::label::FOREST, t as u64]);
            let sample: Vec<usize> = (0..n).map(|_| tree_rng.gen_range(0..n)).collect();
            grow_tree(
                dataset,
                &sample,
                features_per_split,
                config.forest_max_depth,
                0,
                &mut tree_rng,
            )
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features: m,
        features_per_split,
    })
}

fn grow_tree(
    dataset: &Dataset,
    indices: &[usize],
    features_per_split: usize,
    max_depth: Option<usize>,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let positives = indices.iter().filter(|&&i| dataset.labels[i] == 1).count();
    let fraction = positives as f64 / indices.len() as f64;
    if fraction == 0.0 || fraction == 1.0 || max_depth.is_some_and(|d| depth >= d) {
        return TreeNode::Leaf {
            positive_fraction: fraction,
        };
    }

    let m = dataset.n_features();
    // Random feature subset without replacement.
    let mut candidates: Vec<usize> = (0..m).collect();
    for i in 0..features_per_split.min(m) {
        let j = rng.gen_range(i..m);
        candidates.swap(i, j);
    }
    candidates.truncate(features_per_split.min(m));
    candidates.sort_unstable();

    let parent_gini = gini(fraction);
    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, gain)
    for &feature in &candidates {
        let mut values: Vec<(f64, u8)> = indices
            .iter()
            .map(|&i| (dataset.rows[i][feature], dataset.labels[i]))
            .collect();
        values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total_pos = values.iter().filter(|(_, l)| *l == 1).count() as f64;
        let n_total = values.len() as f64;
        let mut left_pos = 0.0;
        let mut left_n = 0.0;
        for w in 0..values.len() - 1 {
            left_n += 1.0;
            if values[w].1 == 1 {
                left_pos += 1.0;
            }
            if values[w].0 == values[w + 1].0 {
                continue;
            }
            let right_n = n_total - left_n;
            let right_pos = total_pos - left_pos;
            let weighted = (left_n / n_total) * gini(left_pos / left_n)
                + (right_n / n_total) * gini(right_pos / right_n);
            let gain = parent_gini - weighted;
            if gain > best.map_or(1e-12, |(_, _, g)| g) {
                let threshold = 0.5 * (values[w].0 + values[w + 1].0);
                best = Some((feature, threshold, gain));
            }
        }
    }

    match best {
        None => TreeNode::Leaf {
            positive_fraction: fraction,
        },
        Some((feature, threshold, _)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| dataset.rows[i][feature] <= threshold);
            if left_idx.is_empty() || right_idx.is_empty() {
                return TreeNode::Leaf {
                    positive_fraction: fraction,
                };
            }
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow_tree(
                    dataset,
                    &left_idx,
                    features_per_split,
                    max_depth,
                    depth + 1,
                    rng,
                )),
                right: Box::new(grow_tree(
                    dataset,
                    &right_idx,
                    features_per_split,
                    max_depth,
                    depth + 1,
                    rng,
                )),
            }
        }
    }
}

fn gini(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let m = rows[0].len();
        let names = (0..m).map(|i| format!("f{i}")).collect();
        Dataset::new(rows, labels, names).unwrap()
    }

    fn consistent_dataset() -> Dataset {
        data(
            vec![
                vec![0.0, 1.0],
                vec![0.5, 0.2],
                vec![1.0, 0.8],
                vec![3.0, 0.1],
                vec![3.5, 0.9],
                vec![4.0, 0.4],
            ],
            vec![0, 0, 0, 1, 1, 1],
        )
    }

    #[test]
    fn single_unbounded_tree_memorizes_consistent_data() {
        // Bootstrap sampling may omit rows, so grow one tree on all indices.
        let ds = consistent_dataset();
        let mut rng = rng::stream(0, &[rng::label::FOREST, 0]);
        let all: Vec<usize> = (0..ds.n_rows()).collect();
        let tree = grow_tree(&ds, &all, 2, None, 0, &mut rng);
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            let pred = (tree.score(row) >= 0.5) as u8;
            assert_eq!(pred, label, "row {row:?}");
        }
    }

    #[test]
    fn forest_deterministic_for_fixed_seed() {
        let ds = consistent_dataset();
        let cfg = TrainConfig {
            forest_trees: 7,
            seed: 42,
            ..Default::default()
        };
        let a = train_forest(&ds, &cfg).unwrap();
        let b = train_forest(&ds, &cfg).unwrap();
        for row in &ds.rows {
            assert_eq!(a.score(row), b.score(row));
        }
    }

    #[test]
    fn depth_cap_limits_tree() {
        let ds = consistent_dataset();
        let cfg = TrainConfig {
            forest_trees: 1,
            forest_max_depth: Some(0),
            ..Default::default()
        };
        let forest = train_forest(&ds, &cfg).unwrap();
        assert!(matches!(forest.trees[0], TreeNode::Leaf { .. }));
    }
}
