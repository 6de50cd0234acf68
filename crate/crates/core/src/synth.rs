//! Deterministic synthetic dataset generators used by the test suite, the
//! benchmarks and the demo pipelines: standard-normal clouds, planted-feature
//! classification problems, and a sensor-flavored generator that mimics the
//! raw SECOM layout (row/column counts, class imbalance, NaN missingness) so
//! the full pipeline can run when the real files are not on disk.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::rng;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// n rows of m independent standard-normal features, labels alternating.
pub fn standard_normal(n: usize, m: usize, seed: u64) -> Dataset {
    let mut r = rng::stream(seed, &[101]);
    let rows = (0..n)
        .map(|_| (0..m).map(|_| normal(&mut r)).collect())
        .collect();
    let labels = (0..n).map(|i| (i % 2) as u8).collect();
    let names = (0..m).map(|j| format!("f{j:03}")).collect();
    Dataset::new(rows, labels, names).unwrap()
}

/// A planted-feature classification problem: `informative` features drive the
/// label through a nonlinear rule, the rest are pure noise. The informative
/// indices are spread across the feature range.
pub struct PlantedProblem {
    pub dataset: Dataset,
    pub informative: Vec<usize>,
}

pub fn planted_features(
    n: usize,
    m: usize,
    informative: usize,
    label_noise: f64,
    seed: u64,
) -> PlantedProblem {
    assert!(informative >= 2 && informative <= m);
    let mut r = rng::stream(seed, &[102]);
    let stride = m / informative;
    let planted: Vec<usize> = (0..informative).map(|k| k * stride).collect();

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..m).map(|_| normal(&mut r)).collect();
        // Nonlinear boundary over the planted coordinates: a signed linear
        // part plus a pairwise interaction, so univariate filters see signal
        // but the optimum needs the full set.
        let lin: f64 = planted
            .iter()
            .enumerate()
            .map(|(k, &j)| if k % 2 == 0 { row[j] } else { -row[j] })
            .sum();
        let inter = row[planted[0]] * row[planted[1]];
        let score = lin + 0.8 * inter;
        let mut label = (score > 0.0) as u8;
        if r.gen::<f64>() < label_noise {
            label ^= 1;
        }
        rows.push(row);
        labels.push(label);
    }
    let names = (0..m).map(|j| format!("f{j:03}")).collect();
    PlantedProblem {
        dataset: Dataset::new(rows, labels, names).unwrap(),
        informative: planted,
    }
}

/// Writes a dataset in the raw SECOM wire format (whitespace-separated
/// features with literal NaN, labels file with `<±1> <timestamp>` records).
pub fn write_secom_format(
    dataset: &Dataset,
    features_path: &std::path::Path,
    labels_path: &std::path::Path,
) -> std::io::Result<()> {
    use std::io::Write;
    let mut feat = std::io::BufWriter::new(std::fs::File::create(features_path)?);
    for (row, missing) in dataset.rows.iter().zip(&dataset.missing_mask) {
        let line: Vec<String> = row
            .iter()
            .zip(missing)
            .map(|(&v, &miss)| {
                if miss || v.is_nan() {
                    "NaN".to_string()
                } else {
                    format!("{v:.4}")
                }
            })
            .collect();
        writeln!(feat, "{}", line.join(" "))?;
    }
    let mut lab = std::io::BufWriter::new(std::fs::File::create(labels_path)?);
    for (i, &label) in dataset.labels.iter().enumerate() {
        // Success (1) is encoded -1 in the raw files, Failure (0) is +1.
        let raw = if label == 1 { "-1" } else { "1" };
        writeln!(lab, "{raw} \"19/07/2008 {:02}:{:02}:00\"", i / 60 % 24, i % 60)?;
    }
    Ok(())
}

/// SECOM-shaped sensor data: defaults to 1567 rows, 590 features and 104
/// failures. A small set of sensor groups carries the fault signal (linear
/// effects plus one interaction); the remainder is drifting noise, some
/// columns duplicated or constant, and cells go missing at rates that rise
/// sharply for a block of flaky sensors.
pub struct SensorProblem {
    pub dataset: Dataset,
    pub informative: Vec<usize>,
}

pub fn secom_like(n: usize, m: usize, failures: usize, seed: u64) -> SensorProblem {
    assert!(failures >= 2 && failures < n / 2);
    let mut r = rng::stream(seed, &[103]);

    // Two kinds of fault signal: sensors with a moderate mean shift that a
    // univariate filter can rank, and sign-coupled sensor pairs whose
    // marginals stay centered (invisible to per-feature statistics, real
    // signal for a joint model).
    let mut shifted: Vec<usize> = (0..8).map(|k| (7 + k * 67) % m).collect();
    shifted.sort_unstable();
    shifted.dedup();
    let mut paired: Vec<usize> = (0..4).map(|k| (19 + k * 73) % m).collect();
    paired.sort_unstable();
    paired.dedup();
    paired.retain(|j| !shifted.contains(j));
    let mut informative = shifted.clone();
    informative.extend(&paired);
    informative.sort_unstable();

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let is_failure = i % (n / failures) == 0 && (i / (n / failures)) < failures;
        let label = if is_failure { 0u8 } else { 1u8 };
        let mut row: Vec<f64> = (0..m).map(|_| normal(&mut r)).collect();
        if is_failure {
            for (k, &j) in shifted.iter().enumerate() {
                let direction = if k % 2 == 0 { 1.0 } else { -1.0 };
                row[j] += direction * (0.8 + 0.1 * (k % 3) as f64);
            }
            // Couple each pair's signs; the product carries the fault.
            for pair in paired.chunks(2) {
                if let [a, b] = *pair {
                    row[b] = row[a].signum() * row[b].abs();
                }
            }
        }
        // Sensor scale/offset diversity.
        for (j, v) in row.iter_mut().enumerate() {
            let scale = 1.0 + (j % 7) as f64 * 3.0;
            let offset = (j % 11) as f64 * 10.0;
            *v = *v * scale + offset;
        }
        rows.push(row);
        labels.push(label);
    }

    // Column pathologies: constants, duplicates.
    for j in (13..m).step_by(97) {
        for row in rows.iter_mut() {
            row[j] = 3.75;
        }
    }
    for j in (29..m).step_by(83) {
        if j + 1 < m {
            for row in rows.iter_mut() {
                row[j + 1] = row[j];
            }
        }
    }

    // Missingness: light everywhere, heavy on a flaky block. Informative
    // columns stay below the default drop threshold.
    let informative_set: std::collections::HashSet<usize> = informative.iter().copied().collect();
    for row in rows.iter_mut() {
        for j in 0..m {
            let rate = if (200..230).contains(&j) && !informative_set.contains(&j) {
                0.55
            } else if informative_set.contains(&j) {
                0.02
            } else {
                0.06
            };
            if r.gen::<f64>() < rate {
                row[j] = f64::NAN;
            }
        }
    }

    let names = (0..m).map(|j| format!("f{j:03}")).collect();
    SensorProblem {
        dataset: Dataset::new(rows, labels, names).unwrap(),
        informative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::univariate_scores;
    use crate::dataset::{impute_missing, load_secom, ImputePolicy, FAILURE};

    #[test]
    fn planted_features_show_univariate_signal() {
        let problem = planted_features(400, 30, 5, 0.05, 3);
        let imputed = impute_missing(&problem.dataset, ImputePolicy::ColumnMean).unwrap();
        let scores = univariate_scores(&imputed).unwrap();
        // Every informative feature should outrank the median noise feature.
        let mut noise_f: Vec<f64> = (0..30)
            .filter(|j| !problem.informative.contains(j))
            .map(|j| scores.statistic[j])
            .collect();
        noise_f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median_noise = noise_f[noise_f.len() / 2];
        let mut strong = 0;
        for &j in &problem.informative {
            if scores.statistic[j] > median_noise {
                strong += 1;
            }
        }
        assert!(strong >= 4, "only {strong}/5 informative features rank above noise");
    }

    #[test]
    fn secom_like_matches_published_shape() {
        let problem = secom_like(1567, 590, 104, 0);
        assert_eq!(problem.dataset.n_rows(), 1567);
        assert_eq!(problem.dataset.n_features(), 590);
        assert_eq!(problem.dataset.count_label(FAILURE), 104);
        assert!(problem.dataset.has_missing());
    }

    #[test]
    fn secom_format_roundtrip_through_loader() {
        let problem = secom_like(60, 25, 8, 5);
        let dir = tempfile::tempdir().unwrap();
        let feats = dir.path().join("secom.data");
        let labels = dir.path().join("secom_labels.data");
        write_secom_format(&problem.dataset, &feats, &labels).unwrap();
        let loaded = load_secom(&feats, &labels).unwrap();
        assert_eq!(loaded.n_rows(), 60);
        assert_eq!(loaded.n_features(), 25);
        assert_eq!(loaded.labels, problem.dataset.labels);
        assert_eq!(loaded.missing_mask, problem.dataset.missing_mask);
    }

    /// Cell-wise equality treating NaN == NaN (plain `==` fails on missing
    /// cells).
    fn same_dataset(a: &Dataset, b: &Dataset) -> bool {
        a.labels == b.labels
            && a.feature_names == b.feature_names
            && a.missing_mask == b.missing_mask
            && a.rows.len() == b.rows.len()
            && a.rows.iter().zip(&b.rows).all(|(ra, rb)| {
                ra.iter()
                    .zip(rb)
                    .all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
            })
    }

    #[test]
    fn generators_are_deterministic() {
        let a = secom_like(100, 40, 10, 9);
        let b = secom_like(100, 40, 10, 9);
        assert!(same_dataset(&a.dataset, &b.dataset));
        let p = planted_features(50, 20, 4, 0.1, 2);
        let q = planted_features(50, 20, 4, 0.1, 2);
        assert!(same_dataset(&p.dataset, &q.dataset));
    }
}
