//! Conventional feature selection baselines: univariate ANOVA filters with
//! Bonferroni (family-wise error) and Benjamini-Hochberg (false discovery
//! rate) corrections, percentile selection, PCA, greedy sequential
//! forward/backward search, correlation-based selection and a lasso
//! regularization path solved by cyclic coordinate descent.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SelectionMask};
use crate::error::{Error, Result};
use crate::stats::f_sf;

/// Per-feature ANOVA statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureScores {
    /// One-way F statistic per feature (infinite for perfect separation).
    pub statistic: Vec<f64>,
    /// Upper-tail p-value per feature.
    pub p_value: Vec<f64>,
}

/// Principal component model (rows of `components` are orthonormal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Lasso coefficients along a descending lambda grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

/// One-way ANOVA F statistic and p-value per feature, between the two classes.
pub fn univariate_scores(dataset: &Dataset) -> Result<FeatureScores> {
    let n = dataset.n_rows();
    let groups: Vec<Vec<usize>> = [0u8, 1u8]
        .iter()
        .map(|&c| (0..n).filter(|&i| dataset.labels[i] == c).collect())
        .collect();
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidInput(
            "ANOVA needs >= 2 members in each class".into(),
        ));
    }
    let df_between = 1.0;
    let df_within = (n - 2) as f64;
    let mut statistic = Vec::with_capacity(dataset.n_features());
    let mut p_value = Vec::with_capacity(dataset.n_features());

    for j in 0..dataset.n_features() {
        let grand_mean: f64 = dataset.rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let mut ss_between = 0.0;
        let mut ss_within = 0.0;
        for g in &groups {
            let mean_g: f64 = g.iter().map(|&i| dataset.rows[i][j]).sum::<f64>() / g.len() as f64;
            ss_between += g.len() as f64 * (mean_g - grand_mean).powi(2);
            ss_within += g
                .iter()
                .map(|&i| (dataset.rows[i][j] - mean_g).powi(2))
                .sum::<f64>();
        }
        let (f, p) = if ss_within <= 0.0 {
            if ss_between <= 0.0 {
                (0.0, 1.0)
            } else {
                (f64::INFINITY, 0.0)
            }
        } else {
            let f = (ss_between / df_between) / (ss_within / df_within);
            (f, f_sf(df_between, df_within, f))
        };
        statistic.push(f);
        p_value.push(p);
    }
    Ok(FeatureScores { statistic, p_value })
}

/// Bonferroni correction: keep feature i iff p_i <= alpha / m.
pub fn select_fwe(scores: &FeatureScores, alpha: f64) -> Result<SelectionMask> {
    check_alpha(alpha)?;
    let m = scores.p_value.len() as f64;
    Ok(SelectionMask(
        scores.p_value.iter().map(|&p| p <= alpha / m).collect(),
    ))
}

/// Benjamini-Hochberg: keep everything at or below the largest p_(i) with
/// p_(i) <= i * alpha / m.
pub fn select_fdr(scores: &FeatureScores, alpha: f64) -> Result<SelectionMask> {
    check_alpha(alpha)?;
    let m = scores.p_value.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores.p_value[a].partial_cmp(&scores.p_value[b]).unwrap());
    let mut cutoff = None;
    for (rank, &idx) in order.iter().enumerate() {
        let threshold = (rank + 1) as f64 * alpha / m as f64;
        if scores.p_value[idx] <= threshold {
            cutoff = Some(scores.p_value[idx]);
        }
    }
    Ok(SelectionMask(match cutoff {
        Some(c) => scores.p_value.iter().map(|&p| p <= c).collect(),
        None => vec![false; m],
    }))
}

/// Keeps the top ceil(m * percentile / 100) features by statistic; ties go to
/// the lower index.
pub fn select_percentile(scores: &FeatureScores, percentile: f64) -> Result<SelectionMask> {
    if !(0.0 < percentile && percentile <= 100.0) {
        return Err(Error::InvalidConfig("percentile must be in (0, 100]".into()));
    }
    let m = scores.statistic.len();
    let keep = ((m as f64 * percentile / 100.0).ceil() as usize).min(m);
    let mut order: Vec<usize> = (0..m).collect();
    // Descending statistic, ascending index on ties.
    order.sort_by(|&a, &b| {
        scores.statistic[b]
            .partial_cmp(&scores.statistic[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    Ok(SelectionMask::from_indices(m, &order[..keep]))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidConfig("alpha must be in (0,1)".into()));
    }
    Ok(())
}

/// Fits the top-k principal components of the covariance of a standardized
/// dataset.
pub fn pca_fit(dataset: &Dataset, k: usize) -> Result<PcaModel> {
    let n = dataset.n_rows();
    let m = dataset.n_features();
    if k == 0 || k > m.min(n.saturating_sub(1)) {
        return Err(Error::InvalidConfig(format!(
            "k must be in [1, min(n-1, m)] = [1, {}], got {k}",
            m.min(n.saturating_sub(1))
        )));
    }
    let mean: Vec<f64> = (0..m)
        .map(|j| dataset.rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = DMatrix::zeros(m, m);
    for row in &dataset.rows {
        for r in 0..m {
            let dr = row[r] - mean[r];
            for c in r..m {
                cov[(r, c)] += dr * (row[c] - mean[c]);
            }
        }
    }
    for r in 0..m {
        for c in r..m {
            let v = cov[(r, c)] / (n - 1) as f64;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    let eigen = SymmetricEigen::new(cov);
    let eigenvalues: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());
    let components = order[..k]
        .iter()
        .map(|&i| eigen.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let explained_variance = order[..k].iter().map(|&i| eigenvalues[i].max(0.0)).collect();
    Ok(PcaModel {
        components,
        explained_variance,
        mean,
    })
}

/// Projects centered rows onto the fitted components. Labels carry over;
/// features are renamed pc0..pc(k-1).
pub fn pca_transform(model: &PcaModel, dataset: &Dataset) -> Result<Dataset> {
    let m = model.mean.len();
    if dataset.n_features() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: dataset.n_features(),
        });
    }
    let k = model.components.len();
    let rows: Vec<Vec<f64>> = dataset
        .rows
        .iter()
        .map(|row| {
            (0..k)
                .map(|c| {
                    row.iter()
                        .zip(&model.mean)
                        .zip(&model.components[c])
                        .map(|((&x, &mu), &w)| (x - mu) * w)
                        .sum()
                })
                .collect()
        })
        .collect();
    let names = (0..k).map(|c| format!("pc{c}")).collect();
    Dataset::new(rows, dataset.labels.clone(), names)
}

/// Greedy forward selection driven by an arbitrary mask evaluator (higher
/// score wins; ties go to the lower feature index). Stops when no addition
/// improves the score or `max_features` is reached.
pub fn sfs<F>(dataset: &Dataset, evaluator: F, max_features: usize) -> Result<SelectionMask>
where
    F: Fn(&SelectionMask) -> f64,
{
    let m = dataset.n_features();
    let mut current = vec![false; m];
    let mut best_score = f64::NEG_INFINITY;
    let limit = max_features.min(m).max(1);
    for _ in 0..limit {
        let mut best_candidate: Option<(usize, f64)> = None;
        for j in 0..m {
            if current[j] {
                continue;
            }
            let mut candidate = current.clone();
            candidate[j] = true;
            let score = evaluator(&SelectionMask(candidate));
            let better = match best_candidate {
                None => true,
                Some((_, s)) => score > s,
            };
            if better {
                best_candidate = Some((j, score));
            }
        }
        match best_candidate {
            Some((j, score)) if score > best_score => {
                current[j] = true;
                best_score = score;
            }
            _ => break,
        }
    }
    if current.iter().all(|&b| !b) {
        // A constant evaluator still selects one feature (the first tried).
        current[0] = true;
    }
    Ok(SelectionMask(current))
}

/// Greedy backward elimination from the full set; stops when every removal
/// degrades the score or `min_features` is reached.
pub fn sbs<F>(dataset: &Dataset, evaluator: F, min_features: usize) -> Result<SelectionMask>
where
    F: Fn(&SelectionMask) -> f64,
{
    let m = dataset.n_features();
    let mut current = vec![true; m];
    let mut selected = m;
    let floor = min_features.clamp(1, m);
    let mut best_score = evaluator(&SelectionMask(current.clone()));
    while selected > floor {
        let mut best_candidate: Option<(usize, f64)> = None;
        for j in 0..m {
            if !current[j] {
                continue;
            }
            let mut candidate = current.clone();
            candidate[j] = false;
            let score = evaluator(&SelectionMask(candidate));
            let better = match best_candidate {
                None => true,
                Some((_, s)) => score > s,
            };
            if better {
                best_candidate = Some((j, score));
            }
        }
        match best_candidate {
            Some((j, score)) if score >= best_score => {
                current[j] = false;
                selected -= 1;
                best_score = score;
            }
            _ => break,
        }
    }
    Ok(SelectionMask(current))
}

/// Correlation-based feature selection: greedy forward search maximizing
/// merit(S) = k * mean|corr(f, y)| / sqrt(k + k(k-1) * mean|corr(f, f')|).
pub fn cfs(dataset: &Dataset) -> Result<SelectionMask> {
    let m = dataset.n_features();
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::InvalidInput("cfs needs n >= 2".into()));
    }
    let label: Vec<f64> = dataset.labels.iter().map(|&l| l as f64).collect();
    let feature_label_corr: Vec<f64> = (0..m)
        .map(|j| pearson_abs(&dataset.column(j), &label))
        .collect();

    let mut selected: Vec<usize> = Vec::new();
    let mut current_merit = f64::NEG_INFINITY;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..m {
            if selected.contains(&j) {
                continue;
            }
            let mut trial = selected.clone();
            trial.push(j);
            let merit = merit_of(dataset, &trial, &feature_label_corr);
            if best.map_or(true, |(_, s)| merit > s) {
                best = Some((j, merit));
            }
        }
        match best {
            Some((j, merit)) if merit > current_merit => {
                selected.push(j);
                current_merit = merit;
            }
            _ => break,
        }
    }
    Ok(SelectionMask::from_indices(m, &selected))
}

fn merit_of(dataset: &Dataset, selected: &[usize], feature_label_corr: &[f64]) -> f64 {
    let k = selected.len() as f64;
    let r_cf: f64 = selected.iter().map(|&j| feature_label_corr[j]).sum::<f64>() / k;
    let mut r_ff = 0.0;
    let mut pairs = 0.0;
    for (a, &i) in selected.iter().enumerate() {
        for &j in &selected[a + 1..] {
            r_ff += pearson_abs(&dataset.column(i), &dataset.column(j));
            pairs += 1.0;
        }
    }
    let r_ff = if pairs > 0.0 { r_ff / pairs } else { 0.0 };
    k * r_cf / (k + k * (k - 1.0) * r_ff).sqrt()
}

/// |Pearson correlation|; zero-variance inputs yield 0.
fn pearson_abs(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).abs()
    }
}

/// Cyclic coordinate descent on (1/2n)||y - X beta||^2 + lambda ||beta||_1,
/// warm-started along the descending lambda grid. Expects standardized
/// features; the label mean is absorbed into the intercept.
pub fn lasso_path(dataset: &Dataset, lambdas: &[f64]) -> Result<LassoPath> {
    if lambdas.is_empty() {
        return Err(Error::InvalidConfig("empty lambda grid".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("lambdas must be strictly descending".into()));
    }
    let n = dataset.n_rows();
    let m = dataset.n_features();
    let y_mean: f64 = dataset.labels.iter().map(|&l| l as f64).sum::<f64>() / n as f64;
    let y: Vec<f64> = dataset.labels.iter().map(|&l| l as f64 - y_mean).collect();
    let columns: Vec<Vec<f64>> = (0..m).map(|j| dataset.column(j)).collect();
    let col_sq_norm: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64)
        .collect();

    let mut beta = vec![0.0; m];
    let mut residual = y.clone();
    let mut coefficients = Vec::with_capacity(lambdas.len());
    let mut intercepts = Vec::with_capacity(lambdas.len());

    for &lambda in lambdas {
        for _sweep in 0..10_000 {
            let mut max_delta = 0.0f64;
            for j in 0..m {
                if col_sq_norm[j] <= 0.0 {
                    continue;
                }
                let old = beta[j];
                // rho = x_j' (residual + x_j * old) / n
                let mut rho = 0.0;
                for (xi, ri) in columns[j].iter().zip(&residual) {
                    rho += xi * ri;
                }
                rho = rho / n as f64 + col_sq_norm[j] * old;
                let new = soft_threshold(rho, lambda) / col_sq_norm[j];
                if new != old {
                    let delta = new - old;
                    for (xi, ri) in columns[j].iter().zip(residual.iter_mut()) {
                        *ri -= delta * xi;
                    }
                    beta[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta < 1e-7 {
                break;
            }
        }
        coefficients.push(beta.clone());
        intercepts.push(y_mean);
    }
    Ok(LassoPath {
        lambdas: lambdas.to_vec(),
        coefficients,
        intercepts,
    })
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Mask of nonzero coefficients at the grid lambda closest to the request.
pub fn lasso_select(path: &LassoPath, lambda: f64) -> Result<SelectionMask> {
    let idx = path
        .lambdas
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - lambda).abs().partial_cmp(&(*b - lambda).abs()).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("empty lasso path".into()))?;
    Ok(SelectionMask(
        path.coefficients[idx].iter().map(|&b| b != 0.0).collect(),
    ))
}

/// Smallest penalty at which every coefficient is zero: max_j |x_j' y| / n.
pub fn lasso_lambda_max(dataset: &Dataset) -> f64 {
    let n = dataset.n_rows() as f64;
    let y_mean: f64 = dataset.labels.iter().map(|&l| l as f64).sum::<f64>() / n;
    let y: Vec<f64> = dataset.labels.iter().map(|&l| l as f64 - y_mean).collect();
    (0..dataset.n_features())
        .map(|j| {
            dataset
                .column(j)
                .iter()
                .zip(&y)
                .map(|(&x, &yi)| x * yi)
                .sum::<f64>()
                .abs()
                / n
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::standardize;

    fn data(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let m = rows[0].len();
        let names = (0..m).map(|i| format!("f{i}")).collect();
        Dataset::new(rows, labels, names).unwrap()
    }

    #[test]
    fn anova_hand_example() {
        // {1,2} vs {3,4}: between SS 4, within SS 1, df (1,2) -> F = 8.
        let ds = data(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![0, 0, 1, 1],
        );
        let scores = univariate_scores(&ds).unwrap();
        assert!((scores.statistic[0] - 8.0).abs() < 1e-9);
        assert!(scores.p_value[0] > 0.0 && scores.p_value[0] < 1.0);
    }

    #[test]
    fn anova_degenerate_features() {
        let ds = data(
            vec![
                vec![1.0, 0.0, 5.0],
                vec![1.0, 0.0, 5.0],
                vec![1.0, 1.0, 5.0],
                vec![1.0, 1.0, 5.0],
            ],
            vec![0, 0, 1, 1],
        );
        let scores = univariate_scores(&ds).unwrap();
        // Identical across classes -> F = 0, p = 1.
        assert_eq!(scores.statistic[0], 0.0);
        assert_eq!(scores.p_value[0], 1.0);
        // Perfect separation with zero within-variance -> infinite F, p = 0.
        assert!(scores.statistic[1].is_infinite());
        assert_eq!(scores.p_value[1], 0.0);
        // Constant overall.
        assert_eq!(scores.statistic[2], 0.0);
    }

    #[test]
    fn fwe_bonferroni_hand_case() {
        let scores = FeatureScores {
            statistic: vec![5.0, 1.0],
            p_value: vec![0.01, 0.2],
        };
        let mask = select_fwe(&scores, 0.05).unwrap();
        assert_eq!(mask.0, vec![true, false]);

        let all_ones = FeatureScores {
            statistic: vec![0.0; 3],
            p_value: vec![1.0; 3],
        };
        assert_eq!(select_fwe(&all_ones, 0.05).unwrap().count_selected(), 0);
    }

    #[test]
    fn fdr_benjamini_hochberg_hand_cases() {
        let keep_all = FeatureScores {
            statistic: vec![0.0; 4],
            p_value: vec![0.01, 0.02, 0.03, 0.04],
        };
        assert_eq!(select_fdr(&keep_all, 0.05).unwrap().count_selected(), 4);

        let keep_none = FeatureScores {
            statistic: vec![0.0; 2],
            p_value: vec![0.04, 0.9],
        };
        assert_eq!(select_fdr(&keep_none, 0.05).unwrap().count_selected(), 0);

        let single = FeatureScores {
            statistic: vec![0.0],
            p_value: vec![0.04],
        };
        assert_eq!(select_fdr(&single, 0.05).unwrap().count_selected(), 1);
    }

    #[test]
    fn fwe_mask_is_subset_of_fdr_mask() {
        let scores = FeatureScores {
            statistic: vec![0.0; 6],
            p_value: vec![0.001, 0.004, 0.02, 0.03, 0.2, 0.9],
        };
        let fwe = select_fwe(&scores, 0.05).unwrap();
        let fdr = select_fdr(&scores, 0.05).unwrap();
        for (a, b) in fwe.0.iter().zip(&fdr.0) {
            assert!(!a || *b, "FWE selected a feature FDR rejected");
        }
    }

    #[test]
    fn percentile_count_and_tie_break() {
        let scores = FeatureScores {
            statistic: vec![3.0, 5.0, 5.0, 1.0, 0.5, 2.0, 0.1, 0.2, 4.0, 0.3],
            p_value: vec![0.5; 10],
        };
        let mask = select_percentile(&scores, 30.0).unwrap();
        assert_eq!(mask.count_selected(), 3);
        // Top 3 by statistic: indices 1, 2 (tied 5.0, lower first), 8.
        assert_eq!(mask.selected_indices(), vec![1, 2, 8]);
        assert_eq!(
            select_percentile(&scores, 100.0).unwrap().count_selected(),
            10
        );
    }

    #[test]
    fn pca_recovers_hand_eigenvalues() {
        // Covariance [[2,1],[1,2]] has eigenvalues {3,1}. Build data whose
        // sample covariance is exactly that via symmetric points.
        let rows = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![2.0, 2.0],
            vec![-2.0, -2.0],
        ];
        let n = rows.len();
        let ds = data(rows, vec![0, 1, 0, 1, 0, 1]);
        let model = pca_fit(&ds, 2).unwrap();
        // Sample covariance here: diag terms 12/5, off-diag 8/5 -> eig {4, 0.8}.
        let c = 12.0 / (n - 1) as f64;
        let o = 8.0 / (n - 1) as f64;
        assert!((model.explained_variance[0] - (c + o)).abs() < 1e-9);
        assert!((model.explained_variance[1] - (c - o)).abs() < 1e-9);
    }

    #[test]
    fn pca_rank_one_line() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let ds = data(rows, vec![0, 1, 0, 1, 0, 1, 0, 1]);
        let model = pca_fit(&ds, 2).unwrap();
        let c = model.components[0].clone();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        assert!((c[0].abs() - inv_sqrt2).abs() < 1e-9);
        assert!((c[1].abs() - inv_sqrt2).abs() < 1e-9);
        assert!(model.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn pca_components_orthonormal_and_reconstruction() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin(), t.cos() * 2.0, (t * 1.7).sin() - 0.3]
            })
            .collect();
        let ds = data(rows.clone(), (0..20).map(|i| (i % 2) as u8).collect());
        let model = pca_fit(&ds, 3).unwrap();
        // Gram matrix of components = identity.
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = model.components[a]
                    .iter()
                    .zip(&model.components[b])
                    .map(|(&x, &y)| x * y)
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "gram ({a},{b}) = {dot}");
            }
        }
        // Full-rank transform then reconstruct.
        let transformed = pca_transform(&model, &ds).unwrap();
        for (orig, proj) in rows.iter().zip(&transformed.rows) {
            for d in 0..3 {
                let rebuilt: f64 = (0..3)
                    .map(|c| proj[c] * model.components[c][d])
                    .sum::<f64>()
                    + model.mean[d];
                assert!((rebuilt - orig[d]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sfs_recovers_planted_set_with_counting_evaluator() {
        let informative = [1usize, 3, 4];
        let ds = data(vec![vec![0.0; 6]; 4], vec![0, 0, 1, 1]);
        let evaluator = |mask: &SelectionMask| {
            let idx = mask.selected_indices();
            let good = idx.iter().filter(|i| informative.contains(i)).count() as f64;
            let bad = idx.len() as f64 - good;
            good - bad
        };
        let mask = sfs(&ds, evaluator, 6).unwrap();
        assert_eq!(mask.selected_indices(), vec![1, 3, 4]);
    }

    #[test]
    fn sfs_single_step_and_constant_evaluator() {
        let ds = data(vec![vec![0.0; 4]; 4], vec![0, 0, 1, 1]);
        let best_single = sfs(&ds, |m: &SelectionMask| {
            if m.0[2] {
                1.0
            } else {
                0.0
            }
        }, 1)
        .unwrap();
        assert_eq!(best_single.selected_indices(), vec![2]);

        let constant = sfs(&ds, |_: &SelectionMask| 1.0, 4).unwrap();
        assert_eq!(constant.count_selected(), 1);
    }

    #[test]
    fn sbs_eliminates_noise_and_respects_floor() {
        let informative = [0usize, 2];
        let ds = data(vec![vec![0.0; 5]; 4], vec![0, 0, 1, 1]);
        let evaluator = |mask: &SelectionMask| {
            let idx = mask.selected_indices();
            let good = idx.iter().filter(|i| informative.contains(i)).count() as f64;
            let bad = idx.len() as f64 - good;
            good - 0.1 * bad
        };
        let mask = sbs(&ds, evaluator, 1).unwrap();
        assert_eq!(mask.selected_indices(), vec![0, 2]);

        let full = sbs(&ds, |_: &SelectionMask| 1.0, 5).unwrap();
        assert_eq!(full.count_selected(), 5);
    }

    #[test]
    fn cfs_single_feature_merit_is_label_correlation() {
        let ds = data(
            vec![vec![0.0], vec![0.2], vec![0.9], vec![1.1]],
            vec![0, 0, 1, 1],
        );
        let mask = cfs(&ds).unwrap();
        assert_eq!(mask.count_selected(), 1);
    }

    #[test]
    fn cfs_drops_perfectly_redundant_copy() {
        // Feature 1 duplicates feature 0; r_ff = 1 makes the pair merit
        // strictly worse than the singleton.
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let v = if i < 6 { i as f64 * 0.1 } else { 1.0 + i as f64 * 0.1 };
                vec![v, v]
            })
            .collect();
        let ds = data(rows, (0..12).map(|i| (i >= 6) as u8).collect());
        let mask = cfs(&ds).unwrap();
        assert_eq!(mask.count_selected(), 1);
    }

    #[test]
    fn cfs_all_noise_keeps_at_most_one() {
        // Sensor-style noise: a shared drift component makes the features
        // mutually correlated while none of them tracks the label.
        let mut rng = crate::rng::stream(13, &[2]);
        use rand::Rng;
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let drift: f64 = rng.gen_range(-1.0..1.0);
                vec![
                    drift + 0.3 * rng.gen_range(-1.0..1.0),
                    drift + 0.3 * rng.gen_range(-1.0..1.0),
                    drift + 0.3 * rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let labels: Vec<u8> = (0..200).map(|_| rng.gen_range(0..2u8)).collect();
        let ds = data(rows, labels);
        let mask = cfs(&ds).unwrap();
        assert!(mask.count_selected() <= 1, "kept {}", mask.count_selected());
    }

    fn regression_dataset() -> Dataset {
        // Standardized 3-feature system with a linear label signal.
        let raw: Vec<Vec<f64>> = (0..24)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.61).sin(), (t * 1.13).cos(), (t * 0.23).sin() * 2.0]
            })
            .collect();
        let labels: Vec<u8> = raw.iter().map(|r| (r[0] + 0.4 * r[1] > 0.0) as u8).collect();
        let (std_ds, _) = standardize(&data(raw, labels)).unwrap();
        std_ds
    }

    #[test]
    fn lasso_at_lambda_max_is_all_zero() {
        let ds = regression_dataset();
        let lmax = lasso_lambda_max(&ds);
        let path = lasso_path(&ds, &[lmax * 1.0001]).unwrap();
        assert!(path.coefficients[0].iter().all(|&b| b == 0.0));
        let mask = lasso_select(&path, lmax).unwrap();
        assert_eq!(mask.count_selected(), 0);
    }

    #[test]
    fn lasso_near_zero_lambda_matches_least_squares() {
        let ds = regression_dataset();
        let path = lasso_path(&ds, &[1e-10]).unwrap();
        let beta = &path.coefficients[0];

        // Normal-equations oracle on centered label.
        let n = ds.n_rows();
        let m = ds.n_features();
        let y_mean: f64 = ds.labels.iter().map(|&l| l as f64).sum::<f64>() / n as f64;
        let x = DMatrix::from_fn(n, m, |i, j| ds.rows[i][j]);
        let y = nalgebra::DVector::from_fn(n, |i, _| ds.labels[i] as f64 - y_mean);
        let xtx = x.transpose() * &x;
        let xty = x.transpose() * y;
        let ols = xtx.lu().solve(&xty).expect("well-conditioned system");
        for j in 0..m {
            assert!(
                (beta[j] - ols[j]).abs() < 1e-5,
                "coef {j}: {} vs OLS {}",
                beta[j],
                ols[j]
            );
        }
    }

    #[test]
    fn lasso_orthonormal_design_soft_thresholds_ols() {
        // Orthogonal +-1 design columns with x'x/n = 1.
        let rows = vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ];
        let labels = vec![1, 1, 0, 0];
        let ds = data(rows, labels);
        let lambda = 0.1;
        let path = lasso_path(&ds, &[lambda]).unwrap();
        // OLS coefficients: x_j'y/n; y centered = {0.5,0.5,-0.5,-0.5}.
        let ols = [0.5, 0.0];
        for j in 0..2 {
            let expect = soft_threshold(ols[j], lambda);
            assert!(
                (path.coefficients[0][j] - expect).abs() < 1e-10,
                "coef {j}"
            );
        }
    }

    #[test]
    fn lasso_kkt_certificate_along_path() {
        let ds = regression_dataset();
        let lmax = lasso_lambda_max(&ds);
        let lambdas = [lmax * 0.9, lmax * 0.5, lmax * 0.1];
        let path = lasso_path(&ds, &lambdas).unwrap();
        let n = ds.n_rows() as f64;
        let y_mean: f64 = ds.labels.iter().map(|&l| l as f64).sum::<f64>() / n;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let beta = &path.coefficients[li];
            let residual: Vec<f64> = (0..ds.n_rows())
                .map(|i| {
                    let fit: f64 = (0..ds.n_features())
                        .map(|j| ds.rows[i][j] * beta[j])
                        .sum();
                    ds.labels[i] as f64 - y_mean - fit
                })
                .collect();
            for j in 0..ds.n_features() {
                let grad: f64 = ds
                    .column(j)
                    .iter()
                    .zip(&residual)
                    .map(|(&x, &r)| x * r)
                    .sum::<f64>()
                    / n;
                if beta[j] == 0.0 {
                    assert!(
                        grad.abs() <= lambda + 1e-6,
                        "KKT violated at lambda {lambda} feature {j}: |{grad}|"
                    );
                }
            }
        }
    }

    #[test]
    fn lasso_rejects_non_descending_grid() {
        let ds = regression_dataset();
        assert!(lasso_path(&ds, &[0.1, 0.1]).is_err());
        assert!(lasso_path(&ds, &[0.1, 0.5]).is_err());
    }
}
