//! Tabular datasets: CSV loading, synthetic Gaussian blobs, standardization,
//! and the train/test and labeled/unlabeled carving used by the benchmark.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::randgen::RngStream;

/// Feature matrix with binary labels (1 = anomaly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("f{}", j + 1)).collect();
        Self::with_names(name, names, features, labels)
    }

    pub fn with_names(
        name: impl Into<String>,
        feature_names: Vec<String>,
        features: Matrix,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                actual: labels.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: features.cols(),
                actual: feature_names.len(),
            });
        }
        if let Some(pos) = labels.iter().position(|&l| l > 1) {
            return Err(Error::BadLabel {
                row: pos + 1,
                value: labels[pos].to_string(),
            });
        }
        if !features.all_finite() {
            return Err(Error::Data("feature matrix contains non-finite values".into()));
        }
        Ok(Dataset {
            name: name.into(),
            feature_names,
            features,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Row indices carrying `label`, ascending.
    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Benchmark datasets need both classes and at least two rows.
    pub fn check_benchmark_ready(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(Error::Data(format!("dataset `{}` has fewer than 2 rows", self.name)));
        }
        let anomalies = self.anomaly_count();
        if anomalies == 0 || anomalies == self.n() {
            return Err(Error::Data(format!(
                "dataset `{}` must contain both normal and anomalous rows",
                self.name
            )));
        }
        Ok(())
    }
}

/// Reads a headered CSV where `label_column` holds 0/1 and every other
/// column is numeric. Rows keep file order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let parse_err = |e: csv::Error| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    };

    let headers = reader.headers().map_err(parse_err)?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::Data(format!("no `{label_column}` column in {}", path.display())))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.trim().to_owned())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Data(format!(
            "{} has no feature columns besides `{label_column}`",
            path.display()
        )));
    }

    let mut features = Matrix::empty(feature_names.len());
    let mut labels = Vec::new();
    let mut row_buf = Vec::with_capacity(feature_names.len());
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(parse_err)?;
        // data rows are numbered from 1, header excluded
        let row = r + 1;
        row_buf.clear();
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if j == label_idx {
                let label = match cell {
                    "0" | "0.0" => 0,
                    "1" | "1.0" => 1,
                    _ => {
                        return Err(Error::BadLabel {
                            row,
                            value: cell.to_owned(),
                        })
                    }
                };
                labels.push(label);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row,
                    column: headers.get(j).unwrap_or("?").trim().to_owned(),
                    value: cell.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        row,
                        column: headers.get(j).unwrap_or("?").trim().to_owned(),
                        value: cell.to_owned(),
                    });
                }
                row_buf.push(v);
            }
        }
        features.push_row(&row_buf)?;
    }

    let name = path
        .file_stem()
        .map_or_else(|| "dataset".to_owned(), |s| s.to_string_lossy().into_owned());
    Dataset::with_names(name, feature_names, features, labels)
}

/// Writes a dataset in the same schema `load_csv` reads, label column last.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let to_err = |e: csv::Error| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    };
    let mut header = dataset.feature_names.clone();
    header.push("label".into());
    w.write_record(&header).map_err(to_err)?;
    for (row, label) in dataset.features.iter_rows().zip(&dataset.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-feature affine transform fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Sample standard deviations (denominator `n - 1`).
    pub stds: Vec<f64>,
    /// Delta degrees of freedom used for `stds`; always 1.
    pub ddof: usize,
}

/// Columns with a standard deviation below this are only centred.
pub const DEGENERATE_STD: f64 = 1e-12;

impl Standardizer {
    pub fn fit(features: &Matrix) -> Result<Self> {
        let n = features.rows();
        if n < 2 {
            return Err(Error::Data("standardization needs at least 2 rows".into()));
        }
        let d = features.cols();
        let mut means = vec![0.0; d];
        for row in features.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut stds = vec![0.0; d];
        for row in features.iter_rows() {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / (n - 1) as f64).sqrt();
        }
        Ok(Standardizer { means, stds, ddof: 1 })
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                actual: features.cols(),
            });
        }
        let mut out = features.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                let centred = *v - self.means[j];
                *v = if self.stds[j] < DEGENERATE_STD {
                    0.0
                } else {
                    centred / self.stds[j]
                };
            }
        }
        Ok(out)
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        Ok(Dataset {
            features: self.transform(&dataset.features)?,
            ..dataset.clone()
        })
    }
}

/// Standardizes every column to sample mean 0 and sample std 1.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, Standardizer)> {
    let s = Standardizer::fit(&dataset.features)?;
    Ok((s.apply(dataset)?, s))
}

/// One isotropic Gaussian blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub center: Vec<f64>,
    pub std: f64,
    pub count: usize,
    pub label: u8,
}

/// Samples blobs then shuffles rows, all from the `synthetic` stream.
pub fn make_synthetic_clusters(spec: &[ClusterSpec], seed: u64) -> Result<Dataset> {
    let first = spec
        .first()
        .ok_or_else(|| Error::Config("synthetic spec has no clusters".into()))?;
    let d = first.center.len();
    if d == 0 {
        return Err(Error::Config("cluster centers must have at least one coordinate".into()));
    }
    for (i, c) in spec.iter().enumerate() {
        if c.center.len() != d {
            return Err(Error::Config(format!(
                "cluster {i} has dimension {}, expected {d}",
                c.center.len()
            )));
        }
        if c.count == 0 {
            return Err(Error::Config(format!("cluster {i} has count 0")));
        }
        if !(c.std >= 0.0 && c.std.is_finite()) {
            return Err(Error::Config(format!("cluster {i} has invalid std {}", c.std)));
        }
        if c.label > 1 {
            return Err(Error::Config(format!("cluster {i} has label {}", c.label)));
        }
        if c.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("cluster {i} has a non-finite center")));
        }
    }

    let mut rng = RngStream::new(seed, "synthetic");
    let mut rows: Vec<(Vec<f64>, u8)> = Vec::with_capacity(spec.iter().map(|c| c.count).sum());
    for c in spec {
        for _ in 0..c.count {
            let row = c
                .center
                .iter()
                .map(|&m| if c.std == 0.0 { m } else { m + c.std * rng.standard_normal() })
                .collect();
            rows.push((row, c.label));
        }
    }
    rng.shuffle(&mut rows);

    let mut features = Matrix::empty(d);
    let mut labels = Vec::with_capacity(rows.len());
    for (row, label) in rows {
        features.push_row(&row)?;
        labels.push(label);
    }
    Dataset::new("synthetic", features, labels)
}

/// Normal blob at the origin flanked by two anomaly types at `(±10, 0)`.
pub fn two_cluster_layout() -> Vec<ClusterSpec> {
    vec![
        ClusterSpec { center: vec![0.0, 0.0], std: 1.0, count: 500, label: 0 },
        ClusterSpec { center: vec![-10.0, 0.0], std: 0.5, count: 25, label: 1 },
        ClusterSpec { center: vec![10.0, 0.0], std: 0.5, count: 25, label: 1 },
    ]
}

/// Unlabeled blob at the origin ringed by three anomaly clusters.
pub fn ring_layout() -> Vec<ClusterSpec> {
    vec![
        ClusterSpec { center: vec![0.0, 0.0], std: 1.0, count: 300, label: 0 },
        ClusterSpec { center: vec![0.0, 6.0], std: 0.6, count: 20, label: 1 },
        ClusterSpec { center: vec![-5.2, -3.0], std: 0.6, count: 20, label: 1 },
        ClusterSpec { center: vec![5.2, -3.0], std: 0.6, count: 20, label: 1 },
    ]
}

/// Stratified row assignment. Returns ascending `(train, test)` indices.
pub fn split_indices(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = RngStream::new(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [0u8, 1] {
        let mut idx = dataset.indices_of(label);
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "class {label} has {} member(s); stratification needs at least 2",
                idx.len()
            )));
        }
        rng.shuffle(&mut idx);
        let take = ((train_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..take]);
        test.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified train/test split preserving per-class proportions.
pub fn split_train_test(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset, train_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// The labeled anomalies, unlabeled pool and test set of one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub labeled_anomalies: Matrix,
    pub unlabeled_pool: Matrix,
    pub test_features: Matrix,
    pub test_labels: Vec<u8>,
    pub labeled_ratio: f64,
    pub pollution_ratio: f64,
    pub seed: u64,
    /// Train-row indices behind each labeled anomaly.
    pub labeled_indices: Vec<usize>,
    /// Train-row indices behind each unlabeled row (normals first, then injected anomalies).
    pub unlabeled_indices: Vec<usize>,
    /// Residual anomalies dropped because `pollution_ratio < 1`.
    pub discarded_indices: Vec<usize>,
    /// Hidden ground truth for the unlabeled pool.
    pub unlabeled_truth: Vec<u8>,
}

impl SplitPlan {
    /// Number of anomalies injected into the unlabeled pool.
    pub fn injected(&self) -> usize {
        self.unlabeled_truth.iter().filter(|&&l| l == 1).count()
    }
}

/// Number of labeled anomalies for ratio `rho` out of `count`: rounded up, at least one.
pub fn labeled_count(rho: f64, count: usize) -> usize {
    // tolerate products like 0.07 * 100 = 7.000000000000001
    let raw = rho * count as f64;
    let snapped = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw.ceil() };
    (snapped as usize).clamp(1, count)
}

/// Splits training data into labeled anomalies `A` and the unlabeled pool `H`.
///
/// `A` holds `ceil(rho * anomalies)` randomly chosen anomalies. Of the
/// remaining anomalies, `round(gamma * residual)` join `H` (treated as normal)
/// and the rest are dropped. All training normals go to `H`.
pub fn carve_split(train: &Dataset, test: &Dataset, rho: f64, gamma: f64, seed: u64) -> Result<SplitPlan> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Config(format!("labeled ratio must lie in (0, 1], got {rho}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("pollution ratio must lie in [0, 1], got {gamma}")));
    }
    if test.d() != train.d() {
        return Err(Error::DimensionMismatch {
            expected: train.d(),
            actual: test.d(),
        });
    }
    let mut anomalies = train.indices_of(1);
    if anomalies.is_empty() {
        return Err(Error::Data("training split contains no anomalies".into()));
    }
    let normals = train.indices_of(0);

    let mut rng = RngStream::new(seed, "carve");
    rng.shuffle(&mut anomalies);
    let n_labeled = labeled_count(rho, anomalies.len());
    let (labeled, residual) = anomalies.split_at(n_labeled);
    let n_injected = (gamma * residual.len() as f64).round() as usize;
    let (injected, discarded) = residual.split_at(n_injected);

    let mut unlabeled_indices = normals.clone();
    unlabeled_indices.extend_from_slice(injected);
    let mut unlabeled_truth = vec![0u8; normals.len()];
    unlabeled_truth.extend(std::iter::repeat_n(1u8, injected.len()));

    Ok(SplitPlan {
        labeled_anomalies: train.features.select_rows(labeled),
        unlabeled_pool: train.features.select_rows(&unlabeled_indices),
        test_features: test.features.clone(),
        test_labels: test.labels.clone(),
        labeled_ratio: rho,
        pollution_ratio: gamma,
        seed,
        labeled_indices: labeled.to_vec(),
        unlabeled_indices,
        discarded_indices: discarded.to_vec(),
        unlabeled_truth,
    })
}

/// Checks that the three index sets of a plan partition `0..n` without repeats.
pub fn plan_is_partition(plan: &SplitPlan, n: usize) -> bool {
    let all: Vec<usize> = plan
        .labeled_indices
        .iter()
        .chain(&plan.unlabeled_indices)
        .chain(&plan.discarded_indices)
        .copied()
        .collect();
    let unique: HashSet<usize> = all.iter().copied().collect();
    all.len() == n && unique.len() == n && all.iter().all(|&i| i < n)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn labeled(n_normal: usize, n_anom: usize) -> Dataset {
        let n = n_normal + n_anom;
        let feats = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut labels = vec![0u8; n_normal];
        labels.extend(vec![1u8; n_anom]);
        Dataset::new("t", feats, labels).unwrap()
    }

    #[test]
    fn load_small_csv() {
        let f = write_tmp("f1,f2,label\n0,0,0\n1,1,1\n2,2,0\n");
        let ds = load_csv(f.path(), "label").unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.features.row(2), &[2.0, 2.0]);
        assert_eq!(ds.feature_names, vec!["f1", "f2"]);
    }

    #[test]
    fn label_outside_binary_names_row() {
        let f = write_tmp("f1,label\n0,0\n1,2\n");
        match load_csv(f.path(), "label") {
            Err(Error::BadLabel { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let f = write_tmp("a,b,label\n0,x,0\n");
        match load_csv(f.path(), "label") {
            Err(Error::NonNumeric { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_and_label_only_file() {
        assert!(matches!(load_csv("/nonexistent/x.csv", "label"), Err(Error::Io { .. })));
        let f = write_tmp("label\n0\n1\n");
        assert!(matches!(load_csv(f.path(), "label"), Err(Error::Data(_))));
    }

    #[test]
    fn wide_export_counts_features() {
        let header: Vec<String> = (0..46).map(|j| format!("x{j}")).chain(["label".into()]).collect();
        let mut body = header.join(",") + "\n";
        for r in 0..4 {
            let row: Vec<String> = (0..46).map(|j| format!("{}", r * j)).chain([format!("{}", r % 2)]).collect();
            body += &(row.join(",") + "\n");
        }
        let f = write_tmp(&body);
        let ds = load_csv(f.path(), "label").unwrap();
        assert_eq!(ds.d(), header.len() - 1);
        assert_eq!(ds.d(), 46);
    }

    #[test]
    fn standardize_two_values_uses_sample_std() {
        let ds = Dataset::new("s", Matrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap(), vec![0, 1]).unwrap();
        let (out, rec) = standardize(&ds).unwrap();
        assert_eq!(rec.ddof, 1);
        assert_abs_diff_eq!(rec.means[0], 2.0);
        assert_abs_diff_eq!(rec.stds[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.features.get(0, 0), -1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.features.get(1, 0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn constant_column_goes_to_zero() {
        let ds = Dataset::new("c", Matrix::from_vec(3, 1, vec![5.0; 3]).unwrap(), vec![0, 1, 0]).unwrap();
        let (out, _) = standardize(&ds).unwrap();
        assert_eq!(out.features.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_needs_two_rows() {
        let ds = Dataset::new("c", Matrix::from_vec(1, 1, vec![5.0]).unwrap(), vec![0]).unwrap();
        assert!(standardize(&ds).is_err());
    }

    proptest! {
        #[test]
        fn standardize_is_idempotent(values in prop::collection::vec(-1e3f64..1e3, 6..40)) {
            let n = values.len() / 2;
            let feats = Matrix::from_vec(n, 2, values[..2 * n].to_vec()).unwrap();
            let ds = Dataset::new("p", feats, vec![0; n]).unwrap();
            let (once, _) = standardize(&ds).unwrap();
            let (twice, _) = standardize(&once).unwrap();
            for (a, b) in once.features.as_slice().iter().zip(twice.features.as_slice()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn carve_partitions_training_rows(
            n_normal in 1usize..60,
            n_anom in 1usize..40,
            rho in 0.001f64..=1.0,
            gamma in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let train = labeled(n_normal, n_anom);
            let plan = carve_split(&train, &train, rho, gamma, seed).unwrap();
            prop_assert!(plan_is_partition(&plan, train.n()));
            prop_assert!(!plan.labeled_indices.is_empty());
            let residual = n_anom - plan.labeled_indices.len();
            prop_assert_eq!(plan.injected(), (gamma * residual as f64).round() as usize);
            prop_assert_eq!(plan.unlabeled_pool.rows(), n_normal + plan.injected());
            prop_assert!(plan.labeled_indices.iter().all(|&i| train.labels[i] == 1));
        }
    }

    #[test]
    fn synthetic_zero_std_gives_copies() {
        let spec = [ClusterSpec { center: vec![0.0, 0.0], std: 0.0, count: 3, label: 0 }];
        let ds = make_synthetic_clusters(&spec, 1).unwrap();
        assert_eq!(ds.n(), 3);
        assert!(ds.features.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synthetic_two_cluster_counts_and_determinism() {
        let a = make_synthetic_clusters(&two_cluster_layout(), 9).unwrap();
        let b = make_synthetic_clusters(&two_cluster_layout(), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 550);
        assert_eq!(a.anomaly_count(), 50);
        let c = make_synthetic_clusters(&two_cluster_layout(), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_rejects_bad_specs() {
        assert!(make_synthetic_clusters(&[], 0).is_err());
        let bad = [ClusterSpec { center: vec![0.0], std: -1.0, count: 1, label: 0 }];
        assert!(make_synthetic_clusters(&bad, 0).is_err());
        let bad = [ClusterSpec { center: vec![0.0], std: 1.0, count: 0, label: 0 }];
        assert!(make_synthetic_clusters(&bad, 0).is_err());
    }

    #[test]
    fn split_small_dataset() {
        let ds = labeled(8, 2);
        let (train, test) = split_train_test(&ds, 0.7, 3).unwrap();
        assert_eq!(train.n(), 7);
        assert_eq!(test.n(), 3);
        assert!((1..=2).contains(&train.anomaly_count()));
    }

    #[test]
    fn split_seeds_change_rows_not_counts() {
        let ds = labeled(80, 20);
        let (a_tr, a_te) = split_indices(&ds, 0.7, 1).unwrap();
        let (b_tr, _) = split_indices(&ds, 0.7, 2).unwrap();
        assert_ne!(a_tr, b_tr);
        assert_eq!(a_tr.len(), b_tr.len());
        assert_eq!(a_tr.len(), 70);
        assert_eq!(a_te.len(), 30);
        let overlap: HashSet<_> = a_tr.iter().filter(|i| a_te.contains(i)).collect();
        assert!(overlap.is_empty());
    }

    #[test]
    fn split_rejects_singleton_class_and_bad_fraction() {
        assert!(split_train_test(&labeled(8, 1), 0.7, 0).is_err());
        assert!(split_train_test(&labeled(8, 2), 1.0, 0).is_err());
        assert!(split_train_test(&labeled(8, 2), 0.0, 0).is_err());
    }

    #[test]
    fn carve_default_and_pollution_cases() {
        let train = labeled(900, 100);
        let full = carve_split(&train, &train, 0.01, 1.0, 4).unwrap();
        assert_eq!(full.labeled_anomalies.rows(), 1);
        assert_eq!(full.unlabeled_pool.rows(), 999);

        let clean = carve_split(&train, &train, 0.01, 0.0, 4).unwrap();
        assert_eq!(clean.labeled_anomalies.rows(), 1);
        assert_eq!(clean.unlabeled_pool.rows(), 900);
        assert_eq!(clean.discarded_indices.len(), 99);

        for gamma in [0.0, 0.5, 1.0] {
            let all = carve_split(&train, &train, 1.0, gamma, 4).unwrap();
            assert_eq!(all.labeled_anomalies.rows(), 100);
            assert_eq!(all.unlabeled_pool.rows(), 900);
        }
    }

    #[test]
    fn carve_rejects_bad_inputs() {
        let train = labeled(10, 3);
        assert!(carve_split(&train, &train, 0.0, 1.0, 0).is_err());
        assert!(carve_split(&train, &train, 0.1, 1.5, 0).is_err());
        let normals_only = labeled(10, 0);
        assert!(matches!(
            carve_split(&normals_only, &normals_only, 0.1, 1.0, 0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn labeled_count_rounds_up() {
        assert_eq!(labeled_count(0.01, 100), 1);
        assert_eq!(labeled_count(0.01, 35), 1);
        assert_eq!(labeled_count(0.05, 35), 2);
        assert_eq!(labeled_count(0.07, 100), 7);
        assert_eq!(labeled_count(1.0, 35), 35);
    }
}
