//! Benchmark orchestration.
//!
//! A run is one *cell*: dataset × generator × detector × labeled ratio ×
//! pollution ratio × multiplier × seed. [`run_experiment`] executes the
//! pipeline for one cell: stratified split, standardization on the training
//! rows, labeled/unlabeled carving, generation of `M · |A|` pseudo-anomalies,
//! detector fit, AUCROC on the test rows. [`run_sweep`] expands a config into
//! its Cartesian grid and runs the cells (in parallel), appending each result
//! to `results.jsonl` so an interrupted sweep resumes where it stopped.
//!
//! The module also hosts the geometry studies on synthetic blobs: intrusion
//! of generated rows into the normal region, detector score grids and a PCA
//! projection export.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{generate, GeneratorConfig, GeneratorKind, PseudoAnomalySet};
use crate::dataset::{
    carve_split, load_csv, make_synthetic_clusters, ring_layout, split_train_test, two_cluster_layout,
    ClusterSpec, Dataset, SplitPlan, Standardizer,
};
use crate::detect::{fit, DetectorConfig, DetectorKind, FittedDetector, TrainingData};
use crate::error::{Error, Result};
use crate::knn::NeighborIndex;
use crate::matrix::{euclidean, Matrix};
use crate::metrics::{aggregate, auc_roc, Aggregate, EvalResult};
use crate::randgen::RngStream;

/// Built-in synthetic layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Normal blob at the origin, anomaly blobs at `(±10, 0)`.
    TwoCluster,
    /// Unlabeled blob ringed by three anomaly blobs.
    Ring,
}

impl Preset {
    pub fn clusters(self) -> Vec<ClusterSpec> {
        match self {
            Preset::TwoCluster => two_cluster_layout(),
            Preset::Ring => ring_layout(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::TwoCluster => "two_cluster",
            Preset::Ring => "ring",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
    },
    Synthetic {
        clusters: Vec<ClusterSpec>,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        name: Option<String>,
    },
    Preset {
        preset: Preset,
        #[serde(default)]
        seed: u64,
    },
}

fn default_label_column() -> String {
    "label".into()
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, label_column } => load_csv(path, label_column),
            DatasetSource::Synthetic { clusters, seed, name } => {
                let mut ds = make_synthetic_clusters(clusters, *seed)?;
                if let Some(name) = name {
                    ds.name = name.clone();
                }
                Ok(ds)
            }
            DatasetSource::Preset { preset, seed } => {
                let mut ds = make_synthetic_clusters(&preset.clusters(), *seed)?;
                ds.name = preset.name().to_owned();
                Ok(ds)
            }
        }
    }
}

fn default_train_fraction() -> f64 {
    0.7
}
fn default_labeled_ratios() -> Vec<f64> {
    vec![0.01, 0.05, 0.10]
}
fn default_pollution_ratios() -> Vec<f64> {
    vec![1.0]
}
fn default_generators() -> Vec<GeneratorConfig> {
    [
        GeneratorKind::None,
        GeneratorKind::Mixup,
        GeneratorKind::Cutout,
        GeneratorKind::Cutmix,
        GeneratorKind::Gaussian,
        GeneratorKind::NngMix,
    ]
    .into_iter()
    .map(GeneratorConfig::new)
    .collect()
}
fn default_multipliers() -> Vec<usize> {
    vec![10]
}
fn default_detectors() -> Vec<DetectorConfig> {
    [DetectorKind::KnnScore, DetectorKind::Logistic, DetectorKind::Sadlite]
        .into_iter()
        .map(DetectorConfig::new)
        .collect()
}
fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}
fn default_true() -> bool {
    true
}

/// Grid description read from the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_labeled_ratios")]
    pub labeled_ratios: Vec<f64>,
    #[serde(default = "default_pollution_ratios")]
    pub pollution_ratios: Vec<f64>,
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorConfig>,
    /// Overrides each generator's own multiplier.
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<usize>,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        ExperimentConfig {
            dataset,
            train_fraction: default_train_fraction(),
            labeled_ratios: default_labeled_ratios(),
            pollution_ratios: default_pollution_ratios(),
            generators: default_generators(),
            multipliers: default_multipliers(),
            detectors: default_detectors(),
            seeds: default_seeds(),
            standardize: true,
            output_dir: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("labeled_ratios", self.labeled_ratios.is_empty()),
            ("pollution_ratios", self.pollution_ratios.is_empty()),
            ("generators", self.generators.is_empty()),
            ("multipliers", self.multipliers.is_empty()),
            ("detectors", self.detectors.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("`{name}` must not be empty")));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if let Some(r) = self.labeled_ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::Config(format!("labeled ratio {r} outside (0, 1]")));
        }
        if let Some(g) = self.pollution_ratios.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::Config(format!("pollution ratio {g} outside [0, 1]")));
        }
        for g in &self.generators {
            g.validate()?;
        }
        for d in &self.detectors {
            d.validate()?;
        }
        Ok(())
    }

    /// All cells in grid order (ratio, pollution, generator, multiplier,
    /// detector, seed). Baseline cells appear once regardless of multipliers.
    pub fn cells(&self, dataset: &Dataset) -> Vec<Cell> {
        let mut seen = std::collections::HashSet::new();
        let mut cells = Vec::new();
        for &rho in &self.labeled_ratios {
            for &gamma in &self.pollution_ratios {
                for g in &self.generators {
                    for &m in &self.multipliers {
                        for det in &self.detectors {
                            for &seed in &self.seeds {
                                let cell = Cell {
                                    dataset: dataset.name.clone(),
                                    dataset_shape: (dataset.n(), dataset.d()),
                                    generator: canonical_generator(&g.clone().with_multiplier(m)),
                                    detector: det.clone(),
                                    labeled_ratio: rho,
                                    pollution_ratio: gamma,
                                    train_fraction: self.train_fraction,
                                    standardize: self.standardize,
                                    seed,
                                };
                                if seen.insert((cell.fingerprint(), seed)) {
                                    cells.push(cell);
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

/// `none` and `M = 0` both mean "no augmentation".
fn canonical_generator(g: &GeneratorConfig) -> GeneratorConfig {
    if g.kind == GeneratorKind::None || g.multiplier == 0 {
        GeneratorConfig::new(GeneratorKind::None).with_multiplier(0)
    } else {
        g.clone()
    }
}

/// One point of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub dataset_shape: (usize, usize),
    pub generator: GeneratorConfig,
    pub detector: DetectorConfig,
    pub labeled_ratio: f64,
    pub pollution_ratio: f64,
    pub train_fraction: f64,
    pub standardize: bool,
    pub seed: u64,
}

impl Cell {
    /// Stable hash of everything except the seed.
    pub fn fingerprint(&self) -> String {
        let key = serde_json::json!({
            "dataset": self.dataset,
            "shape": [self.dataset_shape.0, self.dataset_shape.1],
            "generator": canonical_generator(&self.generator),
            "detector": self.detector,
            "labeled_ratio": self.labeled_ratio,
            "pollution_ratio": self.pollution_ratio,
            "train_fraction": self.train_fraction,
            "standardize": self.standardize,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub generator: String,
    pub detector: String,
    pub labeled_ratio: f64,
    pub pollution_ratio: f64,
    pub multiplier: usize,
    pub seed: u64,
    pub auc: f64,
    pub fingerprint: String,
    /// Labeled anomalies, unlabeled rows, generated rows.
    pub sizes: (usize, usize, usize),
}

impl ResultRow {
    pub fn eval(&self) -> EvalResult {
        EvalResult {
            auc: self.auc,
            fingerprint: self.fingerprint.clone(),
            seed: self.seed,
        }
    }
}

/// Everything one cell produced, for callers that want more than the AUC.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub plan: SplitPlan,
    pub generated: PseudoAnomalySet,
    pub model: FittedDetector,
    pub test_scores: Vec<f64>,
    pub row: ResultRow,
}

/// Runs the pipeline for one cell and keeps the intermediate products.
pub fn run_cell(cell: &Cell, dataset: &Dataset) -> Result<RunArtifacts> {
    let (train, test) = split_train_test(dataset, cell.train_fraction, cell.seed).map_err(|e| e.in_stage("split"))?;
    let (train, test) = if cell.standardize {
        let s = Standardizer::fit(&train.features).map_err(|e| e.in_stage("standardize"))?;
        (
            s.apply(&train).map_err(|e| e.in_stage("standardize"))?,
            s.apply(&test).map_err(|e| e.in_stage("standardize"))?,
        )
    } else {
        (train, test)
    };
    let plan = carve_split(&train, &test, cell.labeled_ratio, cell.pollution_ratio, cell.seed)
        .map_err(|e| e.in_stage("carve"))?;

    let gen_cfg = canonical_generator(&cell.generator);
    let n = gen_cfg.target_rows(plan.labeled_anomalies.rows());
    let mut rng = RngStream::new(cell.seed, &format!("generate/{}", gen_cfg.kind));
    let generated = generate(&plan.labeled_anomalies, &plan.unlabeled_pool, &gen_cfg, n, &mut rng)
        .map_err(|e| e.in_stage("generate"))?;

    let data = TrainingData::new(&plan.labeled_anomalies, &generated.samples, &plan.unlabeled_pool)
        .map_err(|e| e.in_stage("fit"))?;
    let model = fit(&cell.detector, &data).map_err(|e| e.in_stage("fit"))?;
    let scores = model.score(&plan.test_features).map_err(|e| e.in_stage("score"))?;
    let auc = auc_roc(scores.as_slice(), &plan.test_labels).map_err(|e| e.in_stage("evaluate"))?;

    let row = ResultRow {
        dataset: cell.dataset.clone(),
        generator: gen_cfg.label(),
        detector: cell.detector.kind.name().to_owned(),
        labeled_ratio: cell.labeled_ratio,
        pollution_ratio: cell.pollution_ratio,
        multiplier: gen_cfg.multiplier,
        seed: cell.seed,
        auc,
        fingerprint: cell.fingerprint(),
        sizes: (plan.labeled_anomalies.rows(), plan.unlabeled_pool.rows(), generated.len()),
    };
    Ok(RunArtifacts {
        plan,
        generated,
        model,
        test_scores: scores.0,
        row,
    })
}

/// Single-cell evaluation.
pub fn run_experiment(cell: &Cell, dataset: &Dataset) -> Result<EvalResult> {
    Ok(run_cell(cell, dataset)?.row.eval())
}

/// Aggregate over the seeds of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub generator: String,
    pub detector: String,
    pub labeled_ratio: f64,
    pub pollution_ratio: f64,
    pub multiplier: usize,
    pub fingerprint: String,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Rows in grid order.
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    /// Cells found in an existing results file and not re-run.
    pub reused: usize,
    pub computed: usize,
}

pub const RESULTS_JSONL: &str = "results.jsonl";
pub const RESULTS_CSV: &str = "results.csv";
pub const AGGREGATES_JSON: &str = "aggregates.json";

/// Runs every grid cell not already present in `out_dir/results.jsonl`.
///
/// `jobs` caps the worker threads (0 = rayon default). Rows are appended to
/// the JSON-lines log as they finish; `results.csv` and `aggregates.json`
/// are rewritten in grid order at the end.
pub fn run_sweep(config: &ExperimentConfig, out_dir: Option<&Path>, jobs: usize) -> Result<SweepOutcome> {
    config.validate()?;
    let dataset = config.dataset.load()?;
    dataset.check_benchmark_ready()?;
    let cells = config.cells(&dataset);

    let mut existing: HashMap<(String, u64), ResultRow> = HashMap::new();
    let log = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(RESULTS_JSONL);
            for row in read_results_log(&path)? {
                existing.insert((row.fingerprint.clone(), row.seed), row);
            }
            Some(Mutex::new(open_log(&path)?))
        }
        None => None,
    };

    let pending: Vec<&Cell> = cells
        .iter()
        .filter(|c| !existing.contains_key(&(c.fingerprint(), c.seed)))
        .collect();
    let reused = cells.len() - pending.len();

    let work = || -> Vec<Result<ResultRow>> {
        pending
            .par_iter()
            .map(|cell| {
                let row = run_cell(cell, &dataset)?.row;
                if let Some(log) = &log {
                    let line = serde_json::to_string(&row).map_err(|e| Error::Numeric(e.to_string()))?;
                    let mut f = log.lock().unwrap_or_else(|p| p.into_inner());
                    writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| Error::io(RESULTS_JSONL, e))?;
                }
                Ok(row)
            })
            .collect()
    };
    let results = if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?
            .install(work)
    } else {
        work()
    };
    let computed = results.len();
    for r in results {
        let row = r?;
        existing.insert((row.fingerprint.clone(), row.seed), row);
    }

    let rows: Vec<ResultRow> = cells
        .iter()
        .filter_map(|c| existing.get(&(c.fingerprint(), c.seed)).cloned())
        .collect();
    let aggregates = aggregate_rows(&rows)?;

    if let Some(dir) = out_dir {
        write_results_csv(&rows, &dir.join(RESULTS_CSV))?;
        write_json(&dir.join(AGGREGATES_JSON), &aggregates)?;
    }
    Ok(SweepOutcome {
        rows,
        aggregates,
        reused,
        computed,
    })
}

/// Groups rows by fingerprint (first-appearance order) and aggregates seeds.
pub fn aggregate_rows(rows: &[ResultRow]) -> Result<Vec<AggregateRow>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let g = groups.entry(&r.fingerprint).or_default();
        if g.is_empty() {
            order.push(&r.fingerprint);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|fp| {
            let group = &groups[fp];
            let first = group[0];
            let evals: Vec<EvalResult> = group.iter().map(|r| r.eval()).collect();
            Ok(AggregateRow {
                dataset: first.dataset.clone(),
                generator: first.generator.clone(),
                detector: first.detector.clone(),
                labeled_ratio: first.labeled_ratio,
                pollution_ratio: first.pollution_ratio,
                multiplier: first.multiplier,
                fingerprint: fp.to_owned(),
                aggregate: aggregate(&evals)?,
            })
        })
        .collect()
}

/// Reads a results log, skipping a torn final line from an interrupted run.
pub fn read_results_log(path: &Path) -> Result<Vec<ResultRow>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(row) = serde_json::from_str::<ResultRow>(&line) {
            rows.push(row);
        }
    }
    Ok(rows)
}

fn open_log(path: &Path) -> Result<File> {
    let mut f = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let len = f.metadata().map_err(|e| Error::io(path, e))?.len();
    if len > 0 {
        let mut last = [0u8; 1];
        f.seek(SeekFrom::End(-1)).map_err(|e| Error::io(path, e))?;
        f.read_exact(&mut last).map_err(|e| Error::io(path, e))?;
        if last[0] != b'\n' {
            f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(f)
}

/// `dataset,generator,detector,rho,gamma,M,seed,auc`.
pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    };
    w.write_record(["dataset", "generator", "detector", "rho", "gamma", "M", "seed", "auc"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.generator.clone(),
            r.detector.clone(),
            r.labeled_ratio.to_string(),
            r.pollution_ratio.to_string(),
            r.multiplier.to_string(),
            r.seed.to_string(),
            r.auc.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
        _ => Error::io(path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Intrusion of generated rows into the normal region

/// Region treated as "normal" when counting intrusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Points whose k-th nearest unlabeled neighbor is no farther than the
    /// `tau` quantile of the unlabeled rows' own k-th neighbor distances.
    KnnQuantile { k: usize, tau: f64 },
}

impl Region {
    /// Ball around the first normal cluster with radius twice its std.
    pub fn default_for(clusters: &[ClusterSpec]) -> Result<Region> {
        let normal = clusters
            .iter()
            .find(|c| c.label == 0)
            .ok_or_else(|| Error::Config("no normal cluster in synthetic spec".into()))?;
        Ok(Region::Ball {
            center: normal.center.clone(),
            radius: 2.0 * normal.std,
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Region::Ball { radius, .. } if radius.is_nan() || *radius <= 0.0 => {
                Err(Error::Config(format!("region radius must be positive, got {radius}")))
            }
            Region::KnnQuantile { k, tau } if *k == 0 || !(*tau > 0.0 && *tau <= 1.0) => {
                Err(Error::Config(format!("invalid knn region k={k}, tau={tau}")))
            }
            _ => Ok(()),
        }
    }
}

/// Region resolved against one unlabeled pool.
enum RegionTest {
    Ball { center: Vec<f64>, radius: f64 },
    Knn { index: NeighborIndex, k: usize, threshold: f64 },
}

impl RegionTest {
    fn new(region: &Region, unlabeled: &Matrix) -> Result<Self> {
        match region {
            Region::Ball { center, radius } => {
                if center.len() != unlabeled.cols() {
                    return Err(Error::DimensionMismatch {
                        expected: unlabeled.cols(),
                        actual: center.len(),
                    });
                }
                Ok(RegionTest::Ball {
                    center: center.clone(),
                    radius: *radius,
                })
            }
            Region::KnnQuantile { k, tau } => {
                if unlabeled.rows() <= *k {
                    return Err(Error::Data(format!(
                        "knn region needs more than k = {k} unlabeled rows"
                    )));
                }
                let index = NeighborIndex::build(unlabeled.clone())?;
                // k + 1 because every row is its own nearest neighbor
                let mut own = unlabeled
                    .iter_rows()
                    .map(|r| index.kth_distance(r, k + 1, false))
                    .collect::<Result<Vec<_>>>()?;
                own.sort_by(f64::total_cmp);
                let rank = ((tau * own.len() as f64).ceil() as usize).clamp(1, own.len());
                Ok(RegionTest::Knn {
                    index,
                    k: *k,
                    threshold: own[rank - 1],
                })
            }
        }
    }

    fn contains(&self, x: &[f64]) -> Result<bool> {
        match self {
            RegionTest::Ball { center, radius } => Ok(euclidean(x, center) <= *radius),
            RegionTest::Knn { index, k, threshold } => Ok(index.kth_distance(x, *k, false)? <= *threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrusionEntry {
    pub generator: String,
    pub kind: GeneratorKind,
    /// Fraction of generated rows inside the region, per seed.
    pub fractions: Vec<f64>,
    pub inside: Vec<usize>,
    pub mean_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrusionReport {
    pub region: Region,
    pub rows_per_seed: usize,
    pub seeds: Vec<u64>,
    pub entries: Vec<IntrusionEntry>,
}

impl IntrusionReport {
    pub fn entry(&self, kind: GeneratorKind) -> Option<&IntrusionEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }
}

/// For each seed: sample the synthetic layout, treat all anomalies as
/// labeled and all normals as unlabeled, generate `rows` pseudo-anomalies per
/// generator and count those landing inside `region` (raw coordinates).
pub fn measure_intrusion(
    generators: &[GeneratorConfig],
    clusters: &[ClusterSpec],
    region: &Region,
    rows: usize,
    seeds: &[u64],
) -> Result<IntrusionReport> {
    region.validate()?;
    if generators.is_empty() || seeds.is_empty() {
        return Err(Error::Config("intrusion needs at least one generator and one seed".into()));
    }
    if let Some(g) = generators.iter().find(|g| g.kind == GeneratorKind::None) {
        return Err(Error::Config(format!("`{}` generates nothing to measure", g.kind)));
    }
    let mut entries: Vec<IntrusionEntry> = generators
        .iter()
        .map(|g| IntrusionEntry {
            generator: g.label(),
            kind: g.kind,
            fractions: Vec::new(),
            inside: Vec::new(),
            mean_fraction: 0.0,
        })
        .collect();
    for &seed in seeds {
        let ds = make_synthetic_clusters(clusters, seed)?;
        let labeled = ds.features.select_rows(&ds.indices_of(1));
        let unlabeled = ds.features.select_rows(&ds.indices_of(0));
        if labeled.is_empty() || unlabeled.is_empty() {
            return Err(Error::Config("synthetic spec needs anomaly and normal clusters".into()));
        }
        let test = RegionTest::new(region, &unlabeled)?;
        for (g, entry) in generators.iter().zip(entries.iter_mut()) {
            let mut rng = RngStream::new(seed, &format!("intrusion/{}", g.kind));
            let set = generate(&labeled, &unlabeled, g, rows, &mut rng)?;
            let mut inside = 0;
            for r in set.samples.iter_rows() {
                if test.contains(r)? {
                    inside += 1;
                }
            }
            entry.inside.push(inside);
            entry.fractions.push(inside as f64 / rows.max(1) as f64);
        }
    }
    for e in &mut entries {
        e.mean_fraction = e.fractions.iter().sum::<f64>() / e.fractions.len() as f64;
    }
    Ok(IntrusionReport {
        region: region.clone(),
        rows_per_seed: rows,
        seeds: seeds.to_vec(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Score grids and projections

/// `[x_min, x_max, y_min, y_max]`.
pub type Bounds = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Scores a regular `nx × ny` mesh, x varying fastest.
pub fn score_grid(model: &FittedDetector, bounds: Bounds, resolution: (usize, usize)) -> Result<Vec<GridPoint>> {
    if model.dim() != 2 {
        return Err(Error::Data(format!("score grid needs a 2-D model, got d = {}", model.dim())));
    }
    let (nx, ny) = resolution;
    if nx == 0 || ny == 0 {
        return Err(Error::Config("grid resolution must be positive".into()));
    }
    if !(bounds[0] < bounds[1] && bounds[2] < bounds[3]) || bounds.iter().any(|b| !b.is_finite()) {
        return Err(Error::Config(format!("invalid grid bounds {bounds:?}")));
    }
    let xs = axis(bounds[0], bounds[1], nx);
    let ys = axis(bounds[2], bounds[3], ny);
    let mut mesh = Matrix::empty(2);
    for &y in &ys {
        for &x in &xs {
            mesh.push_row(&[x, y])?;
        }
    }
    let scores = model.score(&mesh)?;
    Ok(mesh
        .iter_rows()
        .zip(scores.as_slice())
        .map(|(p, &score)| GridPoint { x: p[0], y: p[1], score })
        .collect())
}

/// Writes `x,y,score` rows for external plotting.
pub fn export_score_grid(
    model: &FittedDetector,
    bounds: Bounds,
    resolution: (usize, usize),
    path: &Path,
) -> Result<Vec<GridPoint>> {
    let grid = score_grid(model, bounds, resolution)?;
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    };
    w.write_record(["x", "y", "score"]).map_err(err)?;
    for p in &grid {
        w.write_record([p.x.to_string(), p.y.to_string(), p.score.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(grid)
}

/// Top-two principal components of a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub mean: Vec<f64>,
    /// Unit component vectors, each of length `d`; the second is all zeros when `d < 2`.
    pub components: [Vec<f64>; 2],
    /// Covariance eigenvalues (denominator `n - 1`), descending.
    pub eigenvalues: Vec<f64>,
    /// `n × 2` projected coordinates.
    pub coords: Matrix,
}

/// Eigendecomposition of the sample covariance; each component's
/// largest-magnitude entry is made positive.
pub fn pca_project(points: &Matrix) -> Result<Projection> {
    let n = points.rows();
    let d = points.cols();
    if n < 2 {
        return Err(Error::Data("projection needs at least 2 rows".into()));
    }
    if d == 0 {
        return Err(Error::Data("projection needs at least one feature".into()));
    }
    let mut mean = vec![0.0; d];
    for r in points.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centred = DMatrix::from_fn(n, d, |i, j| points.get(i, j) - mean[j]);
    let cov = (centred.transpose() * &centred) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let component = |rank: usize| -> Vec<f64> {
        let Some(&col) = order.get(rank) else {
            return vec![0.0; d];
        };
        let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let components = [component(0), component(1)];

    let mut coords = Matrix::zeros(n, 2);
    for i in 0..n {
        let row = centred.row(i);
        for (k, comp) in components.iter().enumerate() {
            coords.set(i, k, row.iter().zip(comp).map(|(x, c)| x * c).sum());
        }
    }
    Ok(Projection {
        mean,
        components,
        eigenvalues,
        coords,
    })
}

/// Writes `pc1,pc2,label`.
pub fn export_projection(points: &Matrix, labels: &[u8], path: &Path) -> Result<Projection> {
    if labels.len() != points.rows() {
        return Err(Error::DimensionMismatch {
            expected: points.rows(),
            actual: labels.len(),
        });
    }
    let proj = pca_project(points)?;
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    };
    w.write_record(["pc1", "pc2", "label"]).map_err(err)?;
    for (r, l) in proj.coords.iter_rows().zip(labels) {
        w.write_record([r[0].to_string(), r[1].to_string(), l.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(proj)
}

// ---------------------------------------------------------------------------
// Configs for the standalone CLI subcommands

fn default_generate_ratio() -> f64 {
    0.01
}

/// `generate`: carve one dataset and emit pseudo-anomalies with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_generate_ratio")]
    pub labeled_ratio: f64,
    #[serde(default = "default_pollution")]
    pub pollution_ratio: f64,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_pollution() -> f64 {
    1.0
}

/// Provenance document written next to the generated rows.
#[derive(Debug, Clone, Serialize)]
pub struct GenerateOutput {
    pub generator: GeneratorConfig,
    pub seed: u64,
    /// Row indices (into the input dataset) of the labeled anomalies.
    pub labeled_indices: Vec<usize>,
    pub unlabeled_indices: Vec<usize>,
    #[serde(skip)]
    pub samples: Dataset,
    pub provenance: Vec<crate::augment::Provenance>,
}

/// The whole dataset plays the training role; nothing is held out.
pub fn run_generate(cfg: &GenerateConfig) -> Result<GenerateOutput> {
    cfg.generator.validate()?;
    let ds = cfg.dataset.load()?;
    let ds = if cfg.standardize { Standardizer::fit(&ds.features)?.apply(&ds)? } else { ds };
    let holdout = ds.subset(&[]);
    let plan = carve_split(&ds, &holdout, cfg.labeled_ratio, cfg.pollution_ratio, cfg.seed)
        .map_err(|e| e.in_stage("carve"))?;
    let g = canonical_generator(&cfg.generator);
    let n = g.target_rows(plan.labeled_anomalies.rows());
    let mut rng = RngStream::new(cfg.seed, &format!("generate/{}", g.kind));
    let set = generate(&plan.labeled_anomalies, &plan.unlabeled_pool, &g, n, &mut rng)
        .map_err(|e| e.in_stage("generate"))?;
    let mut samples = set.to_dataset(ds.feature_names.clone())?;
    samples.name = format!("{}_{}", ds.name, g.kind);
    Ok(GenerateOutput {
        generator: g,
        seed: cfg.seed,
        labeled_indices: plan.labeled_indices.clone(),
        unlabeled_indices: plan.unlabeled_indices.clone(),
        samples,
        provenance: set.provenance,
    })
}

fn default_intrusion_generators() -> Vec<GeneratorConfig> {
    [
        GeneratorKind::NngMix,
        GeneratorKind::Mixup,
        GeneratorKind::MixupAll,
        GeneratorKind::Gaussian,
        GeneratorKind::Cutout,
        GeneratorKind::Cutmix,
        GeneratorKind::NngNoGn,
    ]
    .into_iter()
    .map(GeneratorConfig::new)
    .collect()
}
fn default_intrusion_rows() -> usize {
    10_000
}

/// `intrusion`: geometry study on synthetic blobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrusionConfig {
    #[serde(default = "two_cluster_layout")]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default = "default_intrusion_generators")]
    pub generators: Vec<GeneratorConfig>,
    /// Defaults to the ball of radius 2·std around the normal cluster.
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default = "default_intrusion_rows")]
    pub rows: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl Default for IntrusionConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

pub fn run_intrusion(cfg: &IntrusionConfig) -> Result<IntrusionReport> {
    let region = match &cfg.region {
        Some(r) => r.clone(),
        None => Region::default_for(&cfg.clusters)?,
    };
    measure_intrusion(&cfg.generators, &cfg.clusters, &region, cfg.rows, &cfg.seeds)
}

fn default_grid_detector() -> DetectorConfig {
    DetectorConfig::new(DetectorKind::Sadlite)
}
fn default_resolution() -> (usize, usize) {
    (100, 100)
}

/// `grid`: fit a detector on a 2-D synthetic layout (all anomalies labeled,
/// all normals unlabeled) and score a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "ring_layout")]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Optional augmentation before fitting.
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default = "default_grid_detector")]
    pub detector: DetectorConfig,
    /// Defaults to the data bounding box padded by one unit.
    #[serde(default)]
    pub bounds: Option<Bounds>,
    #[serde(default = "default_resolution")]
    pub resolution: (usize, usize),
}

impl Default for GridConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

pub struct GridRun {
    pub dataset: Dataset,
    pub model: FittedDetector,
    pub bounds: Bounds,
    pub grid: Vec<GridPoint>,
}

pub fn run_grid(cfg: &GridConfig, path: Option<&Path>) -> Result<GridRun> {
    let ds = make_synthetic_clusters(&cfg.clusters, cfg.seed)?;
    if ds.d() != 2 {
        return Err(Error::Data(format!("score grid needs 2-D clusters, got d = {}", ds.d())));
    }
    let labeled = ds.features.select_rows(&ds.indices_of(1));
    let unlabeled = ds.features.select_rows(&ds.indices_of(0));
    let generated = match &cfg.generator {
        Some(g) => {
            let g = canonical_generator(g);
            let mut rng = RngStream::new(cfg.seed, &format!("generate/{}", g.kind));
            generate(&labeled, &unlabeled, &g, g.target_rows(labeled.rows()), &mut rng)?.samples
        }
        None => Matrix::empty(2),
    };
    let data = TrainingData::new(&labeled, &generated, &unlabeled)?;
    let model = fit(&cfg.detector, &data)?;
    let bounds = match cfg.bounds {
        Some(b) => b,
        None => {
            let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
            for r in ds.features.iter_rows() {
                b = [b[0].min(r[0]), b[1].max(r[0]), b[2].min(r[1]), b[3].max(r[1])];
            }
            [b[0] - 1.0, b[1] + 1.0, b[2] - 1.0, b[3] + 1.0]
        }
    };
    let grid = match path {
        Some(p) => export_score_grid(&model, bounds, cfg.resolution, p)?,
        None => score_grid(&model, bounds, cfg.resolution)?,
    };
    Ok(GridRun {
        dataset: ds,
        model,
        bounds,
        grid,
    })
}
