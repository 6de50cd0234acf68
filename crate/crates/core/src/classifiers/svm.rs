//! Soft-margin SVM with a Gaussian RBF kernel, trained by sequential minimal
//! optimization on the dual. Scores are a fixed-slope sigmoid of the decision
//! value so they land in [0,1] like the other classifiers.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::{ClassifierKind, GammaSpec, TrainConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector (y in {-1, +1}).
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl SvmModel {
    pub fn input_dim(&self) -> usize {
        self.support_vectors[0].len()
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut d = self.bias;
        for (sv, &coef) in self.support_vectors.iter().zip(&self.dual_coefficients) {
            d += coef * rbf(sv, row, self.gamma);
        }
        d
    }

    /// Sigmoid with slope 1 of the decision value.
    pub fn score(&self, row: &[f64]) -> f64 {
        let d = self.decision(row);
        if d >= 0.0 {
            1.0 / (1.0 + (-d).exp())
        } else {
            let e = d.exp();
            e / (1.0 + e)
        }
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// Resolves the kernel bandwidth: the Gaussian preset defaults to the median
/// pairwise-distance heuristic, the RBF preset to 1/m.
pub fn resolve_gamma(dataset: &Dataset, kind: ClassifierKind, config: &TrainConfig) -> f64 {
    match config.svm_gamma {
        GammaSpec::Value(g) => g,
        GammaSpec::InverseDim => 1.0 / dataset.n_features() as f64,
        GammaSpec::MedianHeuristic => match kind {
            ClassifierKind::RbfSvm => 1.0 / dataset.n_features() as f64,
            _ => median_heuristic(dataset),
        },
    }
}

/// 1 / (2 * median^2) of pairwise distances on a deterministic subsample of
/// at most 500 rows.
fn median_heuristic(dataset: &Dataset) -> f64 {
    let n = dataset.n_rows();
    let take = n.min(500);
    let stride = (n / take).max(1);
    let sample: Vec<&Vec<f64>> = (0..n).step_by(stride).take(take).map(|i| &dataset.rows[i]).collect();
    let mut dists = Vec::new();
    for i in 0..sample.len() {
        for j in i + 1..sample.len() {
            let d: f64 = sample[i]
                .iter()
                .zip(sample[j])
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dists[dists.len() / 2];
    1.0 / (2.0 * median * median)
}

const KKT_TOL: f64 = 1e-3;

/// SMO on the dual problem. Alternates full passes and passes over the
/// non-bound set until no KKT violator above tolerance remains.
pub fn train_smo(dataset: &Dataset, c: f64, gamma: f64) -> Result<SvmModel> {
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::InvalidInput("SVM needs >= 2 rows".into()));
    }
    let y: Vec<f64> = dataset
        .labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();

    // Full kernel matrix; training sets here are at most a few thousand rows.
    let mut kernel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let k = rbf(&dataset.rows[i], &dataset.rows[j], gamma);
            kernel[i][j] = k;
            kernel[j][i] = k;
        }
    }

    let mut alpha = vec![0.0; n];
    let mut bias = 0.0;
    // Error cache: decision(i) - y_i with all alpha = 0 is -y_i.
    let mut errors: Vec<f64> = y.iter().map(|&yi| -yi).collect();

    let mut examine_all = true;
    let mut changed = 0usize;
    let mut guard = 0usize;
    while (changed > 0 || examine_all) && guard < 200 * n {
        changed = 0;
        if examine_all {
            for i in 0..n {
                changed += examine(i, &mut alpha, &mut bias, &mut errors, &kernel, &y, c) as usize;
            }
        } else {
            for i in 0..n {
                if alpha[i] > 0.0 && alpha[i] < c {
                    changed +=
                        examine(i, &mut alpha, &mut bias, &mut errors, &kernel, &y, c) as usize;
                }
            }
        }
        guard += 1;
        if examine_all {
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
            // A clean full pass after a clean non-bound pass terminates the
            // loop on the next iteration if nothing moves.
            let violations = (0..n)
                .filter(|&i| kkt_violation(i, &alpha, &errors, &y, c) > KKT_TOL)
                .count();
            if violations == 0 {
                break;
            }
        }
    }

    let support: Vec<usize> = (0..n).filter(|&i| alpha[i] > 1e-12).collect();
    let support_vectors = support.iter().map(|&i| dataset.rows[i].clone()).collect();
    let dual_coefficients = support.iter().map(|&i| alpha[i] * y[i]).collect();
    Ok(SvmModel {
        support_vectors,
        dual_coefficients,
        bias,
        gamma,
    })
}

fn kkt_violation(i: usize, alpha: &[f64], errors: &[f64], y: &[f64], c: f64) -> f64 {
    let r = errors[i] * y[i];
    if alpha[i] < c && r < 0.0 {
        -r
    } else if alpha[i] > 0.0 && r > 0.0 {
        r
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn examine(
    i2: usize,
    alpha: &mut [f64],
    bias: &mut f64,
    errors: &mut [f64],
    kernel: &[Vec<f64>],
    y: &[f64],
    c: f64,
) -> bool {
    if kkt_violation(i2, alpha, errors, y, c) <= KKT_TOL {
        return false;
    }
    let n = alpha.len();
    // Second-choice heuristic: maximize |E1 - E2|.
    let e2 = errors[i2];
    let mut best: Option<(usize, f64)> = None;
    for i1 in 0..n {
        if i1 == i2 || !(alpha[i1] > 0.0 && alpha[i1] < c) {
            continue;
        }
        let gap = (errors[i1] - e2).abs();
        if best.map_or(true, |(_, g)| gap > g) {
            best = Some((i1, gap));
        }
    }
    if let Some((i1, _)) = best {
        if take_step(i1, i2, alpha, bias, errors, kernel, y, c) {
            return true;
        }
    }
    // Fall back to scanning everything in a fixed order.
    for i1 in 0..n {
        if i1 != i2 && take_step(i1, i2, alpha, bias, errors, kernel, y, c) {
            return true;
        }
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn take_step(
    i1: usize,
    i2: usize,
    alpha: &mut [f64],
    bias: &mut f64,
    errors: &mut [f64],
    kernel: &[Vec<f64>],
    y: &[f64],
    c: f64,
) -> bool {
    let (a1_old, a2_old) = (alpha[i1], alpha[i2]);
    let (y1, y2) = (y[i1], y[i2]);
    let (e1, e2) = (errors[i1], errors[i2]);
    let s = y1 * y2;
    let (lo, hi) = if s < 0.0 {
        ((a2_old - a1_old).max(0.0), (c + a2_old - a1_old).min(c))
    } else {
        ((a2_old + a1_old - c).max(0.0), (a2_old + a1_old).min(c))
    };
    if (hi - lo).abs() < 1e-12 {
        return false;
    }
    let k11 = kernel[i1][i1];
    let k12 = kernel[i1][i2];
    let k22 = kernel[i2][i2];
    let eta = k11 + k22 - 2.0 * k12;
    let a2_new = if eta > 1e-12 {
        (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
    } else {
        // Degenerate curvature: pick the better bound by objective sign.
        if y2 * (e1 - e2) > 0.0 {
            hi
        } else {
            lo
        }
    };
    if (a2_new - a2_old).abs() < 1e-12 * (a2_new + a2_old + 1e-12) {
        return false;
    }
    let a1_new = a1_old + s * (a2_old - a2_new);

    // Bias from whichever multiplier stays interior.
    let b1 = *bias - e1 - y1 * (a1_new - a1_old) * k11 - y2 * (a2_new - a2_old) * k12;
    let b2 = *bias - e2 - y1 * (a1_new - a1_old) * k12 - y2 * (a2_new - a2_old) * k22;
    let new_bias = if a1_new > 0.0 && a1_new < c {
        b1
    } else if a2_new > 0.0 && a2_new < c {
        b2
    } else {
        0.5 * (b1 + b2)
    };

    let d1 = y1 * (a1_new - a1_old);
    let d2 = y2 * (a2_new - a2_old);
    let db = new_bias - *bias;
    for (k, err) in errors.iter_mut().enumerate() {
        *err += d1 * kernel[i1][k] + d2 * kernel[i2][k] + db;
    }
    alpha[i1] = a1_new;
    alpha[i2] = a2_new;
    *bias = new_bias;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> Dataset {
        let mut rng = rng::stream(seed, &[17]);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = (i % 2) as u8;
            let offset = if y == 1 { 1.5 } else { -1.5 };
            rows.push(vec![
                offset + rng.gen_range(-0.5..0.5),
                rng.gen_range(-1.0..1.0),
            ]);
            labels.push(y);
        }
        Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn separable_data_trains_to_zero_errors() {
        let ds = separable(60, 3);
        let model = train_smo(&ds, 10.0, 0.5).unwrap();
        let errors = ds
            .rows
            .iter()
            .zip(&ds.labels)
            .filter(|(r, &l)| {
                let pred = (model.decision(r) >= 0.0) as u8;
                pred != l
            })
            .count();
        assert_eq!(errors, 0);
    }

    #[test]
    fn dual_constraints_hold_at_termination() {
        let ds = separable(50, 7);
        let c = 2.0;
        let n = ds.n_rows();
        let y: Vec<f64> = ds.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

        // Re-run the optimizer internals to read back alpha.
        let mut kernel = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                kernel[i][j] = rbf(&ds.rows[i], &ds.rows[j], 0.7);
            }
        }
        let mut alpha = vec![0.0; n];
        let mut bias = 0.0;
        let mut errors: Vec<f64> = y.iter().map(|&yi| -yi).collect();
        for _ in 0..100 {
            let mut changed = 0;
            for i in 0..n {
                changed +=
                    examine(i, &mut alpha, &mut bias, &mut errors, &kernel, &y, c) as usize;
            }
            if changed == 0 {
                break;
            }
        }
        let balance: f64 = alpha.iter().zip(&y).map(|(&a, &yi)| a * yi).sum();
        assert!(balance.abs() < 1e-6, "sum alpha_i y_i = {balance}");
        for &a in &alpha {
            assert!((-1e-12..=c + 1e-12).contains(&a), "alpha {a} outside [0, C]");
        }
        let max_violation = (0..n)
            .map(|i| kkt_violation(i, &alpha, &errors, &y, c))
            .fold(0.0f64, f64::max);
        assert!(max_violation <= KKT_TOL, "KKT violation {max_violation}");
    }

    #[test]
    fn score_is_sigmoid_of_decision() {
        let ds = separable(30, 1);
        let model = train_smo(&ds, 1.0, 0.5).unwrap();
        let row = &ds.rows[0];
        let d = model.decision(row);
        let s = model.score(row);
        assert!((s - 1.0 / (1.0 + (-d).exp())).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn gamma_presets_differ() {
        let ds = separable(40, 5);
        let cfg = TrainConfig::default();
        let g_median = resolve_gamma(&ds, ClassifierKind::GaussianSvm, &cfg);
        let g_inverse = resolve_gamma(&ds, ClassifierKind::RbfSvm, &cfg);
        assert!(g_median > 0.0 && g_inverse > 0.0);
        assert!((g_inverse - 0.5).abs() < 1e-12);
        assert_ne!(g_median, g_inverse);
    }
}
