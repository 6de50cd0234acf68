//! Linear discriminant analysis (pooled covariance) and L2-regularized
//! logistic regression solved by damped Newton iterations.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    pub mean_negative: Vec<f64>,
    pub mean_positive: Vec<f64>,
    /// Pooled covariance inverse, row-major m x m.
    pub pooled_inverse: Vec<Vec<f64>>,
    pub log_prior_negative: f64,
    pub log_prior_positive: f64,
}

impl LdaModel {
    pub fn input_dim(&self) -> usize {
        self.mean_positive.len()
    }

    /// Posterior of the positive class from the two discriminants.
    pub fn score(&self, row: &[f64]) -> f64 {
        let d_pos = self.discriminant(row, &self.mean_positive, self.log_prior_positive);
        let d_neg = self.discriminant(row, &self.mean_negative, self.log_prior_negative);
        sigmoid(d_pos - d_neg)
    }

    fn discriminant(&self, row: &[f64], mean: &[f64], log_prior: f64) -> f64 {
        let m = mean.len();
        // x' S^-1 mu - mu' S^-1 mu / 2 + log prior
        let mut s_inv_mu = vec![0.0; m];
        for r in 0..m {
            for c in 0..m {
                s_inv_mu[r] += self.pooled_inverse[r][c] * mean[c];
            }
        }
        let x_term: f64 = row.iter().zip(&s_inv_mu).map(|(&x, &v)| x * v).sum();
        let mu_term: f64 = mean.iter().zip(&s_inv_mu).map(|(&mu, &v)| mu * v).sum();
        x_term - 0.5 * mu_term + log_prior
    }
}

pub fn train_lda(dataset: &Dataset) -> Result<LdaModel> {
    let m = dataset.n_features();
    let n = dataset.n_rows();
    let mut means = [vec![0.0; m], vec![0.0; m]];
    let mut counts = [0usize; 2];
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        counts[label as usize] += 1;
        for (j, &v) in row.iter().enumerate() {
            means[label as usize][j] += v;
        }
    }
    for c in 0..2 {
        for v in &mut means[c] {
            *v /= counts[c] as f64;
        }
    }

    let mut pooled = DMatrix::zeros(m, m);
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        let mean = &means[label as usize];
        for r in 0..m {
            let dr = row[r] - mean[r];
            for c in r..m {
                pooled[(r, c)] += dr * (row[c] - mean[c]);
            }
        }
    }
    let denom = (n - 2).max(1) as f64;
    for r in 0..m {
        for c in r..m {
            let v = pooled[(r, c)] / denom;
            pooled[(r, c)] = v;
            pooled[(c, r)] = v;
        }
    }

    let inverse = invert_spd_with_ridge(pooled)?;
    let pooled_inverse = (0..m)
        .map(|r| (0..m).map(|c| inverse[(r, c)]).collect())
        .collect();
    Ok(LdaModel {
        mean_negative: means[0].clone(),
        mean_positive: means[1].clone(),
        pooled_inverse,
        log_prior_negative: (counts[0] as f64 / n as f64).ln(),
        log_prior_positive: (counts[1] as f64 / n as f64).ln(),
    })
}

/// Cholesky inverse, adding ridge 1e-6 * trace/m when singular.
fn invert_spd_with_ridge(mut s: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = s.nrows();
    if let Some(chol) = Cholesky::new(s.clone()) {
        return Ok(chol.inverse());
    }
    let ridge = 1e-6 * (s.trace() / m as f64).max(f64::MIN_POSITIVE);
    for d in 0..m {
        s[(d, d)] += ridge;
    }
    Cholesky::new(s)
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("pooled covariance not invertible after ridge".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(row)
            .map(|(&w, &x)| w * x)
            .sum::<f64>()
            + self.intercept;
        sigmoid(z)
    }
}

/// Maximum likelihood with an L2 penalty on the weights (intercept exempt),
/// solved by Newton steps with halving on objective increase. Converges when
/// the gradient norm drops below 1e-8.
pub fn train_logistic(dataset: &Dataset, l2: f64) -> Result<LogisticModel> {
    let n = dataset.n_rows();
    let m = dataset.n_features();
    // Design with intercept in the last column.
    let x = DMatrix::from_fn(n, m + 1, |i, j| if j == m { 1.0 } else { dataset.rows[i][j] });
    let y = DVector::from_fn(n, |i, _| dataset.labels[i] as f64);
    let mut w = DVector::zeros(m + 1);

    let objective = |w: &DVector<f64>| -> f64 {
        let z = &x * w;
        let mut nll = 0.0;
        for i in 0..n {
            // log(1 + e^z) - y z, computed stably.
            let zi = z[i];
            nll += zi.max(0.0) + (1.0 + (-zi.abs()).exp()).ln() - y[i] * zi;
        }
        let penalty: f64 = (0..m).map(|j| w[j] * w[j]).sum::<f64>();
        nll / n as f64 + 0.5 * l2 * penalty
    };

    let mut current = objective(&w);
    for _iter in 0..100 {
        let z = &x * &w;
        let p = z.map(sigmoid);
        let mut grad = x.transpose() * (&p - &y) / n as f64;
        for j in 0..m {
            grad[j] += l2 * w[j];
        }
        if grad.norm() < 1e-8 {
            break;
        }
        // Hessian: X' diag(p(1-p)) X / n + l2 I (intercept unpenalized).
        let mut hessian = DMatrix::zeros(m + 1, m + 1);
        for i in 0..n {
            let wgt = (p[i] * (1.0 - p[i])).max(1e-12) / n as f64;
            for r in 0..m + 1 {
                let xr = x[(i, r)] * wgt;
                for c in r..m + 1 {
                    hessian[(r, c)] += xr * x[(i, c)];
                }
            }
        }
        for r in 0..m + 1 {
            for c in r + 1..m + 1 {
                hessian[(c, r)] = hessian[(r, c)];
            }
        }
        for j in 0..m {
            hessian[(j, j)] += l2;
        }
        hessian[(m, m)] += 1e-12;

        let step = match Cholesky::new(hessian) {
            Some(chol) => chol.solve(&grad),
            None => grad.clone(),
        };
        // Damped update: halve until the objective does not increase.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &w - &step * scale;
            let obj = objective(&trial);
            if obj <= current {
                w = trial;
                current = obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged("logistic weights not finite".into()));
    }
    Ok(LogisticModel {
        weights: (0..m).map(|j| w[j]).collect(),
        intercept: w[m],
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let m = rows[0].len();
        let names = (0..m).map(|i| format!("f{i}")).collect();
        Dataset::new(rows, labels, names).unwrap()
    }

    #[test]
    fn logistic_zero_weights_scores_half() {
        let model = LogisticModel {
            weights: vec![0.0, 0.0],
            intercept: 0.0,
        };
        assert_eq!(model.score(&[3.0, -4.0]), 0.5);
    }

    #[test]
    fn logistic_converges_on_separable_two_points() {
        // Regularization keeps the weights bounded despite separability.
        let ds = data(vec![vec![-1.0], vec![1.0]], vec![0, 1]);
        let model = train_logistic(&ds, 0.1).unwrap();
        assert!(model.weights[0].is_finite());
        assert!(model.score(&[1.0]) > 0.5);
        assert!(model.score(&[-1.0]) < 0.5);
    }

    #[test]
    fn lda_boundary_is_perpendicular_bisector_for_spherical_classes() {
        // Equal-covariance spherical blobs around (-2,0) and (2,0) with
        // balanced priors: the boundary is x = 0 within tolerance.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        // Isotropic offsets: equal x/y variance, zero cross-correlation.
        let offsets = [
            (0.4, 0.0),
            (-0.4, 0.0),
            (0.0, 0.4),
            (0.0, -0.4),
            (0.3, 0.3),
            (-0.3, -0.3),
            (0.3, -0.3),
            (-0.3, 0.3),
        ];
        for center in [(-2.0, 0.0, 0u8), (2.0, 0.0, 1u8)] {
            for &(dx, dy) in &offsets {
                rows.push(vec![center.0 + dx, center.1 + dy]);
                labels.push(center.2);
            }
        }
        let model = train_lda(&data(rows, labels)).unwrap();
        // Scan for the sign flip of the score along the x axis.
        for y_probe in [-0.5, 0.0, 0.5] {
            let mut lo = -1.0;
            let mut hi = 1.0;
            assert!(model.score(&[lo, y_probe]) < 0.5);
            assert!(model.score(&[hi, y_probe]) > 0.5);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if model.score(&[mid, y_probe]) < 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let boundary = 0.5 * (lo + hi);
            assert!(boundary.abs() < 1e-3, "boundary at x={boundary}");
        }
    }

    #[test]
    fn lda_handles_singular_pooled_covariance() {
        // Second feature duplicates the first: pooled covariance singular.
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.2, 0.2],
            vec![1.0, 1.0],
            vec![1.2, 1.2],
        ];
        let model = train_lda(&data(rows, vec![0, 0, 1, 1])).unwrap();
        assert!(model.score(&[1.1, 1.1]) > 0.5);
        assert!(model.score(&[0.1, 0.1]) < 0.5);
    }
}
