//! Tabular sensor datasets: loading (SECOM raw format and generic CSV),
//! missing-value imputation, standardization, stratified splitting and
//! column projection.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Label value for the Failure class (failed production run).
pub const FAILURE: u8 = 0;
/// Label value for the Success class (normal production run).
pub const SUCCESS: u8 = 1;

/// Binary chromosome marking which features are selected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionMask(pub Vec<bool>);

impl SelectionMask {
    pub fn all_ones(m: usize) -> Self {
        SelectionMask(vec![true; m])
    }

    pub fn from_indices(m: usize, indices: &[usize]) -> Self {
        let mut mask = vec![false; m];
        for &i in indices {
            mask[i] = true;
        }
        SelectionMask(mask)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of selected features.
    pub fn count_selected(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of selected features, ascending.
    pub fn selected_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// An n x m observation matrix with binary labels and a missing-value mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub missing_mask: Vec<Vec<bool>>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        let missing = rows
            .iter()
            .map(|r| r.iter().map(|v| v.is_nan()).collect())
            .collect();
        Self::with_missing_mask(rows, labels, feature_names, missing)
    }

    pub fn with_missing_mask(
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        missing_mask: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let m = feature_names.len();
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        for row in &rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: row.len(),
                });
            }
        }
        if missing_mask.len() != rows.len() || missing_mask.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("missing mask shape mismatch".into()));
        }
        if labels.iter().any(|&l| l != 0 && l != 1) {
            return Err(Error::InvalidInput("labels must be 0 or 1".into()));
        }
        Ok(Dataset {
            rows,
            labels,
            feature_names,
            missing_mask,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn has_missing(&self) -> bool {
        self.missing_mask.iter().any(|r| r.iter().any(|&b| b))
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Values of one feature column (may contain NaN before imputation).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Dataset restricted to the given row indices (cloned, order preserved).
    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            missing_mask: indices
                .iter()
                .map(|&i| self.missing_mask[i].clone())
                .collect(),
        }
    }
}

/// Per-feature standardization parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// Features whose sample variance was zero (left at 0 after scaling).
    pub zero_variance: Vec<usize>,
}

/// Train/test split specification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.train_fraction && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must be in (0,1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Missing-value handling policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum ImputePolicy {
    ColumnMean,
    ColumnMedian,
    /// Drop features whose missing fraction exceeds the threshold, then
    /// mean-impute the remainder.
    DropFeature { threshold: f64 },
}

impl Default for ImputePolicy {
    fn default() -> Self {
        // SECOM has heavily missing columns; dropping past 40% keeps the
        // feature count close to the full instrument set.
        ImputePolicy::DropFeature { threshold: 0.4 }
    }
}

/// Loads the SECOM raw file pair: whitespace-separated features with literal
/// "NaN" for missing cells, and a labels file with one `<±1> <timestamp>`
/// record per row. Label -1 (pass) maps to Success=1, +1 (fail) to Failure=0.
pub fn load_secom(features_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let feat_text = read_to_string(features_path)?;
    let label_text = read_to_string(labels_path)?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in feat_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let v = if tok.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: features_path.display().to_string(),
                    line: lineno + 1,
                    message: format!("non-numeric token {tok:?}"),
                })?
            };
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    path: features_path.display().to_string(),
                    line: lineno + 1,
                    message: format!("expected {w} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty features file {}",
            features_path.display()
        )));
    }

    let mut labels = Vec::new();
    for (lineno, line) in label_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap();
        let label = match first {
            "-1" => SUCCESS,
            "1" | "+1" => FAILURE,
            other => {
                return Err(Error::Parse {
                    path: labels_path.display().to_string(),
                    line: lineno + 1,
                    message: format!("expected -1 or +1 label, found {other:?}"),
                })
            }
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty labels file {}",
            labels_path.display()
        )));
    }
    if labels.len() != rows.len() {
        return Err(Error::InvalidInput(format!(
            "row count mismatch: {} feature rows vs {} labels",
            rows.len(),
            labels.len()
        )));
    }

    let m = width.unwrap();
    let names = (0..m).map(|i| format!("f{i:03}")).collect();
    Dataset::new(rows, labels, names)
}

/// Loads a generic RFC-4180 CSV with a header row. The label column must
/// contain exactly two distinct values; the lexicographically smaller value
/// maps to 0 unless an explicit `(value, label)` mapping is given. Empty
/// cells are marked missing.
pub fn load_csv(
    path: &Path,
    label_column: &str,
    label_mapping: Option<&[(String, u8)]>,
) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("missing header: {e}")))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::InvalidInput(format!("label column {label_column:?} not in header"))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (recno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: recno + 2,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: recno + 2,
                message: format!("ragged row: {} fields, header has {}", record.len(), headers.len()),
            });
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v = if field.trim().is_empty() {
                f64::NAN
            } else {
                field.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: recno + 2,
                    message: format!("non-numeric cell {field:?}"),
                })?
            };
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("no data rows".into()));
    }

    let distinct: BTreeSet<&String> = raw_labels.iter().collect();
    if distinct.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "label column must have exactly 2 distinct values, found {}",
            distinct.len()
        )));
    }
    let labels: Vec<u8> = match label_mapping {
        Some(mapping) => raw_labels
            .iter()
            .map(|raw| {
                mapping
                    .iter()
                    .find(|(v, _)| v == raw)
                    .map(|&(_, l)| l)
                    .ok_or_else(|| Error::InvalidInput(format!("unmapped label value {raw:?}")))
            })
            .collect::<Result<_>>()?,
        None => {
            // BTreeSet iterates in lexicographic order.
            let smaller = *distinct.iter().next().unwrap();
            raw_labels
                .iter()
                .map(|raw| if raw == smaller { 0 } else { 1 })
                .collect()
        }
    };

    Dataset::new(rows, labels, feature_names)
}

/// Removes all missing values under the given policy.
pub fn impute_missing(dataset: &Dataset, policy: ImputePolicy) -> Result<Dataset> {
    let (kept, fill_fn): (Vec<usize>, fn(&[f64]) -> f64) = match policy {
        ImputePolicy::ColumnMean => ((0..dataset.n_features()).collect(), mean_of),
        ImputePolicy::ColumnMedian => ((0..dataset.n_features()).collect(), median_of),
        ImputePolicy::DropFeature { threshold } => {
            let n = dataset.n_rows() as f64;
            let kept = (0..dataset.n_features())
                .filter(|&j| {
                    let missing = dataset.missing_mask.iter().filter(|r| r[j]).count();
                    missing as f64 / n <= threshold
                })
                .collect();
            (kept, mean_of)
        }
    };
    if kept.is_empty() {
        return Err(Error::InvalidInput(
            "all features exceed the missing threshold".into(),
        ));
    }

    // Per kept column, the fill value from observed entries.
    let mut fills = Vec::with_capacity(kept.len());
    for &j in &kept {
        let observed: Vec<f64> = dataset
            .rows
            .iter()
            .zip(&dataset.missing_mask)
            .filter(|(_, miss)| !miss[j])
            .map(|(row, _)| row[j])
            .collect();
        if observed.is_empty() {
            return Err(Error::InvalidInput(format!(
                "feature {:?} is entirely missing",
                dataset.feature_names[j]
            )));
        }
        fills.push(fill_fn(&observed));
    }

    let rows = dataset
        .rows
        .iter()
        .zip(&dataset.missing_mask)
        .map(|(row, miss)| {
            kept.iter()
                .zip(&fills)
                .map(|(&j, &fill)| if miss[j] { fill } else { row[j] })
                .collect()
        })
        .collect();
    let names = kept
        .iter()
        .map(|&j| dataset.feature_names[j].clone())
        .collect();
    let mask = vec![vec![false; kept.len()]; dataset.n_rows()];
    Dataset::with_missing_mask(rows, dataset.labels.clone(), names, mask)
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median_of(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Centers each feature to mean 0 and scales to sample standard deviation 1
/// (n-1 denominator). Zero-variance features are left at 0 and flagged.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, ScalingParams)> {
    if dataset.has_missing() {
        return Err(Error::InvalidInput(
            "standardize requires an imputed dataset".into(),
        ));
    }
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::InvalidInput("standardize requires n >= 2".into()));
    }
    let m = dataset.n_features();
    let mut mean = vec![0.0; m];
    for row in &dataset.rows {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    for v in &mut mean {
        *v /= n as f64;
    }
    let mut var = vec![0.0; m];
    for row in &dataset.rows {
        for (j, &v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    let mut std_dev = vec![0.0; m];
    let mut zero_variance = Vec::new();
    for j in 0..m {
        let s = (var[j] / (n - 1) as f64).sqrt();
        if s > 0.0 {
            std_dev[j] = s;
        } else {
            std_dev[j] = 0.0;
            zero_variance.push(j);
        }
    }

    let rows = dataset
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if std_dev[j] > 0.0 {
                        (v - mean[j]) / std_dev[j]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let scaled = Dataset::with_missing_mask(
        rows,
        dataset.labels.clone(),
        dataset.feature_names.clone(),
        dataset.missing_mask.clone(),
    )?;
    Ok((
        scaled,
        ScalingParams {
            mean,
            std_dev,
            zero_variance,
        },
    ))
}

/// Applies previously fitted scaling parameters to another dataset.
pub fn apply_scaling(dataset: &Dataset, params: &ScalingParams) -> Result<Dataset> {
    if dataset.n_features() != params.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: params.mean.len(),
            actual: dataset.n_features(),
        });
    }
    let rows = dataset
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if params.std_dev[j] > 0.0 {
                        (v - params.mean[j]) / params.std_dev[j]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Dataset::with_missing_mask(
        rows,
        dataset.labels.clone(),
        dataset.feature_names.clone(),
        dataset.missing_mask.clone(),
    )
}

/// Splits into train/test partitions. Under stratification each class is
/// shuffled separately and the train side takes ceil(n_c * fraction) rows;
/// the split errors if either side would be empty or a class with >= 2
/// members would vanish from one side.
pub fn stratified_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::InvalidInput("split requires n >= 2".into()));
    }
    let mut rng = rng::stream(spec.seed, &[rng::label::SPLIT]);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();

    if spec.stratified {
        for class in [FAILURE, SUCCESS] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| dataset.labels[i] == class).collect();
            if idx.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "class {class} has 0 members; cannot stratify"
                )));
            }
            idx.shuffle(&mut rng);
            let n_c = idx.len();
            let take = (n_c as f64 * spec.train_fraction).ceil() as usize;
            if n_c >= 2 && (take == 0 || take == n_c) {
                return Err(Error::InvalidInput(format!(
                    "train_fraction {} leaves class {class} absent from one partition",
                    spec.train_fraction
                )));
            }
            train_idx.extend_from_slice(&idx[..take]);
            test_idx.extend_from_slice(&idx[take..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let take = (n as f64 * spec.train_fraction).ceil() as usize;
        if take == 0 || take == n {
            return Err(Error::InvalidInput(format!(
                "train_fraction {} leaves an empty partition",
                spec.train_fraction
            )));
        }
        train_idx.extend_from_slice(&idx[..take]);
        test_idx.extend_from_slice(&idx[take..]);
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::InvalidInput("split produced an empty partition".into()));
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((dataset.subset_rows(&train_idx), dataset.subset_rows(&test_idx)))
}

/// Keeps exactly the features where the mask is 1, order preserved.
pub fn project(dataset: &Dataset, mask: &SelectionMask) -> Result<Dataset> {
    if mask.len() != dataset.n_features() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_features(),
            actual: mask.len(),
        });
    }
    let indices = mask.selected_indices();
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    let rows = dataset
        .rows
        .iter()
        .map(|row| indices.iter().map(|&j| row[j]).collect())
        .collect();
    let names = indices
        .iter()
        .map(|&j| dataset.feature_names[j].clone())
        .collect();
    let mask_rows = dataset
        .missing_mask
        .iter()
        .map(|row| indices.iter().map(|&j| row[j]).collect())
        .collect();
    Dataset::with_missing_mask(rows, dataset.labels.clone(), names, mask_rows)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn small(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let m = rows[0].len();
        let names = (0..m).map(|i| format!("f{i}")).collect();
        Dataset::new(rows, labels, names).unwrap()
    }

    #[test]
    fn secom_format_parses_nan_and_label_convention() {
        let feats = write_temp("1.0 NaN 3.5\n2.0 2.5 NaN\n0.5 1.0 2.0\n");
        let labels = write_temp("-1 \"19/07/2008 11:55:00\"\n1 \"19/07/2008 12:32:00\"\n-1 \"19/07/2008 13:17:00\"\n");
        let ds = load_secom(feats.path(), labels.path()).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.labels, vec![SUCCESS, FAILURE, SUCCESS]);
        assert!(ds.missing_mask[0][1] && ds.missing_mask[1][2]);
        assert!(!ds.missing_mask[0][0]);
    }

    #[test]
    fn secom_row_count_mismatch_rejected() {
        let feats = write_temp("1.0 2.0\n3.0 4.0\n");
        let labels = write_temp("-1 ts\n");
        assert!(load_secom(feats.path(), labels.path()).is_err());
    }

    #[test]
    fn secom_non_numeric_token_rejected() {
        let feats = write_temp("1.0 oops\n");
        let labels = write_temp("-1 ts\n");
        assert!(load_secom(feats.path(), labels.path()).is_err());
    }

    #[test]
    fn secom_empty_file_rejected() {
        let feats = write_temp("");
        let labels = write_temp("-1 ts\n");
        assert!(load_secom(feats.path(), labels.path()).is_err());
    }

    #[test]
    fn csv_maps_lexicographically_smaller_label_to_zero() {
        let f = write_temp("x,y,status\n1.0,2.0,b\n3.0,4.0,a\n5.0,6.0,b\n");
        let ds = load_csv(f.path(), "status", None).unwrap();
        assert_eq!(ds.labels, vec![1, 0, 1]);
        assert_eq!(ds.feature_names, vec!["x", "y"]);
    }

    #[test]
    fn csv_empty_cell_marked_missing() {
        let f = write_temp("x,y,status\n1.0,,a\n3.0,4.0,b\n");
        let ds = load_csv(f.path(), "status", None).unwrap();
        assert!(ds.missing_mask[0][1]);
        assert!(ds.rows[0][1].is_nan());
    }

    #[test]
    fn csv_header_only_rejected() {
        let f = write_temp("x,y,status\n");
        let err = load_csv(f.path(), "status", None).unwrap_err();
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn csv_three_label_values_rejected() {
        let f = write_temp("x,status\n1,a\n2,b\n3,c\n");
        assert!(load_csv(f.path(), "status", None).is_err());
    }

    #[test]
    fn mean_impute_fills_observed_average() {
        let ds = small(
            vec![vec![1.0], vec![f64::NAN], vec![3.0]],
            vec![0, 1, 1],
        );
        let out = impute_missing(&ds, ImputePolicy::ColumnMean).unwrap();
        assert_eq!(out.rows[1][0], 2.0);
        assert!(!out.has_missing());
    }

    #[test]
    fn drop_feature_removes_heavily_missing_column() {
        let ds = small(
            vec![
                vec![1.0, f64::NAN],
                vec![2.0, f64::NAN],
                vec![3.0, f64::NAN],
                vec![4.0, 1.0],
                vec![5.0, 2.0],
            ],
            vec![0, 1, 1, 1, 0],
        );
        // Column 1 is 60% missing.
        let out = impute_missing(&ds, ImputePolicy::DropFeature { threshold: 0.5 }).unwrap();
        assert_eq!(out.n_features(), 1);
        assert_eq!(out.feature_names, vec!["f0"]);
    }

    #[test]
    fn fully_observed_dataset_unchanged_by_imputation() {
        let ds = small(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![0, 1]);
        let out = impute_missing(&ds, ImputePolicy::ColumnMean).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn entirely_missing_feature_rejected_under_mean() {
        let ds = small(vec![vec![f64::NAN], vec![f64::NAN]], vec![0, 1]);
        assert!(impute_missing(&ds, ImputePolicy::ColumnMean).is_err());
    }

    #[test]
    fn median_impute_uses_middle_value() {
        let ds = small(
            vec![vec![1.0], vec![f64::NAN], vec![10.0], vec![2.0]],
            vec![0, 1, 1, 0],
        );
        let out = impute_missing(&ds, ImputePolicy::ColumnMedian).unwrap();
        assert_eq!(out.rows[1][0], 2.0);
    }

    #[test]
    fn standardize_gives_unit_sample_sd() {
        let ds = small(vec![vec![2.0], vec![4.0]], vec![0, 1]);
        let (out, params) = standardize(&ds).unwrap();
        // Sample sd of {2,4} is sqrt(2); scaled values are +-1/sqrt(2).
        let inv = 1.0 / 2f64.sqrt();
        assert!((out.rows[0][0] + inv).abs() < 1e-12);
        assert!((out.rows[1][0] - inv).abs() < 1e-12);
        assert!((params.mean[0] - 3.0).abs() < 1e-12);
        assert!((params.std_dev[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn standardize_flags_constant_column() {
        let ds = small(vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]], vec![0, 1, 1]);
        let (out, params) = standardize(&ds).unwrap();
        assert_eq!(params.zero_variance, vec![0]);
        assert!(out.rows.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn standardize_is_idempotent() {
        let ds = small(
            vec![vec![1.0, -2.0], vec![4.0, 0.5], vec![-3.0, 9.0], vec![0.0, 4.0]],
            vec![0, 1, 1, 0],
        );
        let (once, _) = standardize(&ds).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        for (a, b) in once.rows.iter().flatten().zip(twice.rows.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stratified_split_matches_class_arithmetic() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f64]);
            labels.push(if i < 8 { SUCCESS } else { FAILURE });
        }
        let ds = small(rows, labels);
        let spec = SplitSpec {
            train_fraction: 0.5,
            stratified: true,
            seed: 11,
        };
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        assert_eq!(train.count_label(SUCCESS), 4);
        assert_eq!(train.count_label(FAILURE), 1);
        assert_eq!(test.count_label(SUCCESS), 4);
        assert_eq!(test.count_label(FAILURE), 1);
    }

    #[test]
    fn split_deterministic_and_exhaustive() {
        let ds = small(
            (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect(),
            (0..20).map(|i| if i % 4 == 0 { 0 } else { 1 }).collect(),
        );
        let spec = SplitSpec {
            train_fraction: 0.7,
            stratified: true,
            seed: 5,
        };
        let (tr1, te1) = stratified_split(&ds, &spec).unwrap();
        let (tr2, te2) = stratified_split(&ds, &spec).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);

        // Union of both sides recovers the dataset as a multiset of rows.
        let mut all: Vec<Vec<f64>> = tr1.rows.iter().chain(te1.rows.iter()).cloned().collect();
        let mut orig = ds.rows.clone();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        orig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, orig);
    }

    #[test]
    fn extreme_fraction_errors_rather_than_emptying_test() {
        let ds = small(
            (0..10).map(|i| vec![i as f64]).collect(),
            (0..10).map(|i| if i < 8 { 1 } else { 0 }).collect(),
        );
        let spec = SplitSpec {
            train_fraction: 0.99,
            stratified: true,
            seed: 1,
        };
        assert!(stratified_split(&ds, &spec).is_err());
    }

    #[test]
    fn single_class_dataset_cannot_stratify() {
        let ds = small(vec![vec![1.0], vec![2.0]], vec![1, 1]);
        let spec = SplitSpec {
            train_fraction: 0.5,
            stratified: true,
            seed: 1,
        };
        assert!(stratified_split(&ds, &spec).is_err());
    }

    #[test]
    fn project_keeps_masked_columns_in_order() {
        let ds = small(
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]],
            vec![0, 1],
        );
        let mask = SelectionMask(vec![false, false, false, true]);
        let out = project(&ds, &mask).unwrap();
        assert_eq!(out.rows, vec![vec![4.0], vec![8.0]]);
        assert_eq!(out.feature_names, vec!["f3"]);

        let full = project(&ds, &SelectionMask::all_ones(4)).unwrap();
        assert_eq!(full, ds);
    }

    #[test]
    fn project_rejects_empty_mask() {
        let ds = small(vec![vec![1.0, 2.0]], vec![1]);
        let err = project(&ds, &SelectionMask(vec![false, false])).unwrap_err();
        assert!(matches!(err, Error::EmptySelection));
    }

    #[test]
    fn pipeline_composition_preserves_row_count() {
        let ds = small(
            vec![
                vec![1.0, f64::NAN, 3.0],
                vec![2.0, 5.0, f64::NAN],
                vec![3.0, 6.0, 9.0],
                vec![4.0, 7.0, 12.0],
            ],
            vec![0, 1, 1, 0],
        );
        let imputed = impute_missing(&ds, ImputePolicy::default()).unwrap();
        let (scaled, _) = standardize(&imputed).unwrap();
        let projected = project(&scaled, &SelectionMask::all_ones(scaled.n_features())).unwrap();
        assert_eq!(projected.n_rows(), ds.n_rows());
    }
}
