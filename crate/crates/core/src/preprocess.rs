//! Outlier elimination by squared Mahalanobis distance against a chi-square
//! threshold, and class rebalancing by density-based synthetic minority
//! over-sampling (DBSCAN clusters on the minority class, synthetic rows as
//! convex combinations of cluster mates).

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FAILURE};
use crate::error::{Error, Result};
use crate::rng;

pub use crate::stats::chi_square_quantile;

/// Sample variance-covariance matrix with singularity handling.
#[derive(Debug, Clone)]
pub struct ScatterMatrix {
    /// m x m symmetric sample covariance, ridge already added if any.
    pub s: DMatrix<f64>,
    pub inverse_ok: bool,
    /// Ridge added to the diagonal (0 when the raw matrix factorized cleanly).
    pub ridge: f64,
    /// Column means of the dataset the matrix was computed from.
    pub mean: DVector<f64>,
}

/// Outcome of one outlier-elimination pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutlierReport {
    pub distances: Vec<f64>,
    pub threshold: f64,
    pub flagged: Vec<usize>,
    pub regularization: f64,
}

/// Density-based over-sampling settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub target_minority_ratio: f64,
    pub neighbors: usize,
    /// DBSCAN radius; `None` selects the median k-th neighbor distance.
    pub dbscan_eps: Option<f64>,
    pub dbscan_min_pts: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            target_minority_ratio: 0.4,
            neighbors: 5,
            dbscan_eps: None,
            dbscan_min_pts: 5,
            seed: 0,
        }
    }
}

/// What the over-sampler actually did.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteReport {
    pub synthetic_rows: usize,
    pub clusters: usize,
    /// Set when the minority class was too sparse to cluster and plain
    /// nearest-neighbor interpolation was used instead.
    pub used_fallback: bool,
}

/// Computes the sample covariance (n-1 denominator). If the matrix fails to
/// factorize or its condition estimate exceeds 1e12, a ridge is escalated
/// through {1e-8, 1e-6, 1e-4, 1e-2} * trace(S)/m until the Cholesky
/// factorization succeeds.
pub fn scatter_matrix(dataset: &Dataset) -> Result<ScatterMatrix> {
    let n = dataset.n_rows();
    let m = dataset.n_features();
    if n < 2 {
        return Err(Error::InvalidInput("scatter matrix requires n >= 2".into()));
    }
    let mut mean = DVector::zeros(m);
    for row in &dataset.rows {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    mean /= n as f64;

    let mut s = DMatrix::zeros(m, m);
    for row in &dataset.rows {
        for r in 0..m {
            let dr = row[r] - mean[r];
            for c in r..m {
                s[(r, c)] += dr * (row[c] - mean[c]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for r in 0..m {
        for c in r..m {
            let v = s[(r, c)] / denom;
            s[(r, c)] = v;
            s[(c, r)] = v;
        }
    }

    let trace_scale = s.trace() / m as f64;
    let mut ridge = 0.0;
    let mut inverse_ok = cholesky_well_conditioned(&s);
    if !inverse_ok {
        for &lambda in &[1e-8, 1e-6, 1e-4, 1e-2] {
            let candidate = lambda * trace_scale.max(f64::MIN_POSITIVE);
            let mut ridged = s.clone();
            for d in 0..m {
                ridged[(d, d)] += candidate;
            }
            if Cholesky::new(ridged).is_some() {
                ridge = candidate;
                inverse_ok = true;
                break;
            }
        }
        if inverse_ok {
            for d in 0..m {
                s[(d, d)] += ridge;
            }
        }
    }

    Ok(ScatterMatrix {
        s,
        inverse_ok,
        ridge,
        mean,
    })
}

/// Cholesky succeeds and the squared pivot ratio stays below 1e12.
fn cholesky_well_conditioned(s: &DMatrix<f64>) -> bool {
    match Cholesky::new(s.clone()) {
        None => false,
        Some(chol) => {
            let l = chol.l();
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for d in 0..l.nrows() {
                let p = l[(d, d)];
                lo = lo.min(p);
                hi = hi.max(p);
            }
            lo > 0.0 && (hi / lo).powi(2) <= 1e12
        }
    }
}

/// Squared Mahalanobis distance of each observation from the dataset mean.
pub fn mahalanobis_distances(dataset: &Dataset, scatter: &ScatterMatrix) -> Result<Vec<f64>> {
    if !scatter.inverse_ok {
        return Err(Error::Singular(
            "scatter matrix could not be factorized".into(),
        ));
    }
    let m = dataset.n_features();
    if scatter.s.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: scatter.s.nrows(),
            actual: m,
        });
    }
    let chol = Cholesky::new(scatter.s.clone())
        .ok_or_else(|| Error::Singular("scatter matrix lost positive definiteness".into()))?;
    let distances = dataset
        .rows
        .iter()
        .map(|row| {
            let diff = DVector::from_iterator(m, row.iter().zip(scatter.mean.iter()).map(|(&v, &mu)| v - mu));
            let solved = chol.solve(&diff);
            (diff.dot(&solved)).max(0.0)
        })
        .collect();
    Ok(distances)
}

/// Removes rows whose squared Mahalanobis distance exceeds the chi-square
/// quantile with df = m. Strictly-greater comparison; applied once.
pub fn remove_outliers(dataset: &Dataset, alpha_quantile: f64) -> Result<(Dataset, OutlierReport)> {
    let scatter = scatter_matrix(dataset)?;
    let distances = mahalanobis_distances(dataset, &scatter)?;
    let threshold = chi_square_quantile(dataset.n_features(), alpha_quantile)?;
    let flagged: Vec<usize> = distances
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| (d > threshold).then_some(i))
        .collect();
    if flagged.len() == dataset.n_rows() {
        return Err(Error::InvalidInput(
            "every row flagged as an outlier; check feature scaling".into(),
        ));
    }
    let keep: Vec<usize> = (0..dataset.n_rows()).filter(|i| !flagged.contains(i)).collect();
    let cleaned = dataset.subset_rows(&keep);
    Ok((
        cleaned,
        OutlierReport {
            distances,
            threshold,
            flagged,
            regularization: scatter.ridge,
        },
    ))
}

/// Appends synthetic minority (Failure) rows until minority/total reaches the
/// target ratio. Each synthetic row is a convex combination of two minority
/// rows from the same DBSCAN density cluster; when the minority class cannot
/// be clustered the generator falls back to nearest-neighbor interpolation.
pub fn dbsmote_oversample(dataset: &Dataset, config: &SmoteConfig) -> Result<(Dataset, SmoteReport)> {
    if !(0.0 < config.target_minority_ratio && config.target_minority_ratio <= 1.0) {
        return Err(Error::InvalidConfig(
            "target_minority_ratio must be in (0,1]".into(),
        ));
    }
    let minority_idx: Vec<usize> = (0..dataset.n_rows())
        .filter(|&i| dataset.labels[i] == FAILURE)
        .collect();
    let minority = minority_idx.len();
    let majority = dataset.n_rows() - minority;
    if minority < 2 {
        return Err(Error::InvalidInput(
            "minority class needs >= 2 members to interpolate".into(),
        ));
    }

    // Rows to add so minority/(minority + added + majority) >= target,
    // capped so the minority never outnumbers the majority. The epsilon
    // guards ceil against float noise on exact ratios.
    let t = config.target_minority_ratio.min(0.5);
    let desired = (t * majority as f64 / (1.0 - t) - 1e-9).ceil() as usize;
    let to_add = desired.saturating_sub(minority).min(majority.saturating_sub(minority));
    if to_add == 0 {
        return Ok((
            dataset.clone(),
            SmoteReport {
                synthetic_rows: 0,
                clusters: 0,
                used_fallback: false,
            },
        ));
    }

    let points: Vec<&Vec<f64>> = minority_idx.iter().map(|&i| &dataset.rows[i]).collect();
    let mut rng = rng::stream(config.seed, &[rng::label::SMOTE]);

    // Cluster the minority class; clusters need >= 2 members to interpolate.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    if minority >= config.dbscan_min_pts {
        let eps = match config.dbscan_eps {
            Some(e) if e > 0.0 => e,
            Some(_) => return Err(Error::InvalidConfig("dbscan_eps must be > 0".into())),
            None => median_kth_neighbor_distance(&points, config.dbscan_min_pts),
        };
        clusters = dbscan(&points, eps, config.dbscan_min_pts)
            .into_iter()
            .filter(|c| c.len() >= 2)
            .collect();
    }
    let used_fallback = clusters.is_empty();

    let mut synthetic = Vec::with_capacity(to_add);
    if used_fallback {
        // Plain SMOTE: interpolate toward one of the k nearest minority rows.
        let k = config.neighbors.max(1).min(minority - 1);
        for _ in 0..to_add {
            let a = rng.gen_range(0..points.len());
            let neighbors = nearest_neighbors(&points, a, k);
            let b = neighbors[rng.gen_range(0..neighbors.len())];
            synthetic.push(interpolate(points[a], points[b], rng.gen::<f64>()));
        }
    } else {
        // Pick clusters proportionally to size, then two distinct mates.
        let weights: Vec<usize> = clusters.iter().map(|c| c.len()).collect();
        let total: usize = weights.iter().sum();
        for _ in 0..to_add {
            let mut pick = rng.gen_range(0..total);
            let mut ci = 0;
            for (i, &w) in weights.iter().enumerate() {
                if pick < w {
                    ci = i;
                    break;
                }
                pick -= w;
            }
            let cluster = &clusters[ci];
            let pair = sample_two(&mut rng, cluster.len());
            synthetic.push(interpolate(
                points[cluster[pair.0]],
                points[cluster[pair.1]],
                rng.gen::<f64>(),
            ));
        }
    }

    let mut rows = dataset.rows.clone();
    let mut labels = dataset.labels.clone();
    let mut missing = dataset.missing_mask.clone();
    let m = dataset.n_features();
    for s in synthetic {
        rows.push(s);
        labels.push(FAILURE);
        missing.push(vec![false; m]);
    }
    let out = Dataset::with_missing_mask(rows, labels, dataset.feature_names.clone(), missing)?;
    Ok((
        out,
        SmoteReport {
            synthetic_rows: to_add,
            clusters: clusters.len(),
            used_fallback,
        },
    ))
}

fn sample_two(rng: &mut impl Rng, n: usize) -> (usize, usize) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

fn interpolate(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn nearest_neighbors(points: &[&Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut dist: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (j, euclidean(points[i], p)))
        .collect();
    dist.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    dist.into_iter().take(k).map(|(j, _)| j).collect()
}

/// Median k-th nearest-neighbor distance, the standard eps heuristic.
fn median_kth_neighbor_distance(points: &[&Vec<f64>], k: usize) -> f64 {
    let k = k.max(1).min(points.len() - 1);
    let mut kth: Vec<f64> = (0..points.len())
        .map(|i| {
            let mut d: Vec<f64> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| euclidean(points[i], points[j]))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d[k - 1]
        })
        .collect();
    kth.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = kth.len();
    let med = if n % 2 == 1 {
        kth[n / 2]
    } else {
        0.5 * (kth[n / 2 - 1] + kth[n / 2])
    };
    if med > 0.0 {
        med
    } else {
        1e-12
    }
}

/// Plain DBSCAN over a small point set; returns clusters of point indices
/// (noise points are omitted).
fn dbscan(points: &[&Vec<f64>], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    const UNVISITED: i32 = -2;
    const NOISE: i32 = -1;
    let n = points.len();
    let mut assignment = vec![UNVISITED; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| j != i && euclidean(points[i], points[j]) <= eps)
            .collect()
    };

    for i in 0..n {
        if assignment[i] != UNVISITED {
            continue;
        }
        let seed_neighbors = neighbors(i);
        if seed_neighbors.len() + 1 < min_pts {
            assignment[i] = NOISE;
            continue;
        }
        let cluster_id = clusters.len() as i32;
        clusters.push(vec![i]);
        assignment[i] = cluster_id;
        let mut queue = seed_neighbors;
        while let Some(j) = queue.pop() {
            if assignment[j] == NOISE {
                assignment[j] = cluster_id;
                clusters[cluster_id as usize].push(j);
                continue;
            }
            if assignment[j] != UNVISITED {
                continue;
            }
            assignment[j] = cluster_id;
            clusters[cluster_id as usize].push(j);
            let nb = neighbors(j);
            if nb.len() + 1 >= min_pts {
                queue.extend(nb);
            }
        }
    }
    clusters
}
