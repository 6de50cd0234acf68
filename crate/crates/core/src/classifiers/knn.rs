//! k-nearest neighbors with distance-weighted (1/d) or uniform voting.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::TrainConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub k: usize,
    pub weighted: bool,
}

impl KnnModel {
    pub fn input_dim(&self) -> usize {
        self.rows[0].len()
    }

    /// Positive-vote fraction among the k nearest stored rows. With
    /// weighting, votes count 1/d; an exact-distance-zero match dominates by
    /// restricting the vote to the zero-distance neighbors.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, u8)> = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(r, &l)| (euclidean(r, row), l))
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let k = self.k.min(dist.len());
        let nearest = &dist[..k];

        if self.weighted {
            let zero: Vec<&(f64, u8)> = nearest.iter().filter(|(d, _)| *d == 0.0).collect();
            if !zero.is_empty() {
                let pos = zero.iter().filter(|(_, l)| *l == 1).count();
                return pos as f64 / zero.len() as f64;
            }
            let mut total = 0.0;
            let mut pos = 0.0;
            for &(d, l) in nearest {
                let w = 1.0 / d;
                total += w;
                if l == 1 {
                    pos += w;
                }
            }
            pos / total
        } else {
            let pos = nearest.iter().filter(|(_, l)| *l == 1).count();
            pos as f64 / k as f64
        }
    }
}

pub fn train_knn(dataset: &Dataset, config: &TrainConfig) -> Result<KnnModel> {
    if dataset.n_rows() == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    Ok(KnnModel {
        rows: dataset.rows.clone(),
        labels: dataset.labels.clone(),
        k: config.knn_k,
        weighted: config.knn_weighted,
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
