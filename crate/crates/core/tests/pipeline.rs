//! End-to-end behaviour of the benchmark pipeline through the public API.

use std::fs;

use nngmix::augment::{GeneratorConfig, GeneratorKind};
use nngmix::dataset::{load_csv, make_synthetic_clusters, ring_layout, write_csv, ClusterSpec};
use nngmix::detect::{DetectorConfig, DetectorKind};
use nngmix::harness::{
    aggregate_rows, read_results_log, run_cell, run_experiment, run_generate, run_grid, run_intrusion, run_sweep,
    DatasetSource, ExperimentConfig, GenerateConfig, GridConfig, IntrusionConfig, Preset, Region, AGGREGATES_JSON,
    RESULTS_CSV, RESULTS_JSONL,
};
use nngmix::Error;

fn preset(p: Preset) -> DatasetSource {
    DatasetSource::Preset { preset: p, seed: 0 }
}

fn small_grid() -> ExperimentConfig {
    ExperimentConfig {
        labeled_ratios: vec![0.01],
        generators: vec![GeneratorConfig::new(GeneratorKind::NngMix)],
        multipliers: vec![1, 5, 10],
        detectors: vec![DetectorConfig::new(DetectorKind::Sadlite)],
        seeds: (0..5).collect(),
        ..ExperimentConfig::new(preset(Preset::TwoCluster))
    }
}

#[test]
fn sweep_counts_rows_and_aggregates() {
    let out = run_sweep(&small_grid(), None, 0).unwrap();
    assert_eq!(out.rows.len(), 15);
    assert_eq!(out.aggregates.len(), 3);
    assert!(out.aggregates.iter().all(|a| a.aggregate.n_seeds == 5));
}

#[test]
fn aggregates_recompute_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&small_grid(), Some(dir.path()), 2).unwrap();
    let logged = read_results_log(&dir.path().join(RESULTS_JSONL)).unwrap();
    assert_eq!(logged.len(), out.rows.len());
    let again = aggregate_rows(&out.rows).unwrap();
    assert_eq!(again, out.aggregates);
    let on_disk: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(AGGREGATES_JSON)).unwrap()).unwrap();
    assert_eq!(on_disk.as_array().unwrap().len(), 3);
}

#[test]
fn results_table_is_identical_across_runs_and_thread_counts() {
    let mut cfg = small_grid();
    cfg.detectors.push(DetectorConfig::new(DetectorKind::Logistic));
    cfg.generators.push(GeneratorConfig::new(GeneratorKind::Cutmix));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep(&cfg, Some(a.path()), 1).unwrap();
    run_sweep(&cfg, Some(b.path()), 4).unwrap();
    assert_eq!(
        fs::read(a.path().join(RESULTS_CSV)).unwrap(),
        fs::read(b.path().join(RESULTS_CSV)).unwrap()
    );
}

#[test]
fn interrupted_sweep_only_completes_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_grid();
    let full = run_sweep(&cfg, Some(dir.path()), 0).unwrap();
    let log = dir.path().join(RESULTS_JSONL);
    let text = fs::read_to_string(&log).unwrap();
    let kept: Vec<&str> = text.lines().take(6).collect();
    fs::write(&log, kept.join("\n") + "\n").unwrap();

    let resumed = run_sweep(&cfg, Some(dir.path()), 0).unwrap();
    assert_eq!(resumed.reused, 6);
    assert_eq!(resumed.computed, 9);
    assert_eq!(resumed.rows, full.rows);
}

#[test]
fn baseline_equivalence_across_detectors() {
    let cfg = small_grid();
    let ds = cfg.dataset.load().unwrap();
    let mut cell = cfg.cells(&ds)[0].clone();
    for kind in [DetectorKind::KnnScore, DetectorKind::Logistic, DetectorKind::Sadlite] {
        cell.detector = DetectorConfig::new(kind);
        cell.generator = GeneratorConfig::new(GeneratorKind::None);
        let none = run_experiment(&cell, &ds).unwrap();
        cell.generator = GeneratorConfig::new(GeneratorKind::Mixup).with_multiplier(0);
        assert_eq!(run_experiment(&cell, &ds).unwrap(), none);
    }
}

#[test]
fn standardization_uses_training_statistics() {
    let cfg = small_grid();
    let ds = cfg.dataset.load().unwrap();
    let cell = cfg.cells(&ds)[0].clone();
    let art = run_cell(&cell, &ds).unwrap();
    let train = art.plan.labeled_anomalies.vstack(&art.plan.unlabeled_pool).unwrap();
    // discarded residual anomalies are absent at gamma = 1, so the training
    // rows are exactly A ∪ H and must be centered
    assert_eq!(art.plan.discarded_indices.len(), 0);
    for j in 0..train.cols() {
        let mean: f64 = train.iter_rows().map(|r| r[j]).sum::<f64>() / train.rows() as f64;
        assert!(mean.abs() < 1e-9, "column {j} mean {mean}");
    }
}

#[test]
fn csv_round_trip_feeds_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let ds = make_synthetic_clusters(&ring_layout(), 11).unwrap();
    let path = dir.path().join("ring.csv");
    write_csv(&ds, &path).unwrap();
    assert_eq!(load_csv(&path, "label").unwrap().features, ds.features);

    let cfg = ExperimentConfig {
        dataset: DatasetSource::Csv {
            path: path.clone(),
            label_column: "label".into(),
        },
        seeds: vec![0],
        ..small_grid()
    };
    let out = run_sweep(&cfg, None, 0).unwrap();
    assert!(out.rows.iter().all(|r| r.dataset == "ring" && (0.0..=1.0).contains(&r.auc)));
}

#[test]
fn data_errors_surface_with_stage_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one_class.csv");
    fs::write(&path, "a,b,label\n1,2,0\n3,4,0\n5,6,0\n").unwrap();
    let cfg = ExperimentConfig {
        dataset: DatasetSource::Csv {
            path,
            label_column: "label".into(),
        },
        ..small_grid()
    };
    let err = run_sweep(&cfg, None, 0).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");

    let missing = ExperimentConfig::from_json_file(dir.path().join("nope.json")).unwrap_err();
    assert!(matches!(missing, Error::Config(_)));
}

#[test]
fn generate_emits_multiplier_times_labeled_rows() {
    let cfg = GenerateConfig {
        dataset: preset(Preset::TwoCluster),
        labeled_ratio: 0.1,
        pollution_ratio: 1.0,
        standardize: false,
        generator: GeneratorConfig::new(GeneratorKind::NngMix).with_multiplier(4),
        seed: 3,
    };
    let out = run_generate(&cfg).unwrap();
    // 50 anomalies, ceil(0.1 * 50) = 5 labeled
    assert_eq!(out.labeled_indices.len(), 5);
    assert_eq!(out.samples.n(), 20);
    assert_eq!(out.provenance.len(), 20);
    assert!(out.samples.labels.iter().all(|&l| l == 1));
    assert_eq!(run_generate(&cfg).unwrap().samples, out.samples);
}

#[test]
fn intrusion_ordering_per_seed() {
    let cfg = IntrusionConfig {
        generators: [GeneratorKind::NngMix, GeneratorKind::Mixup, GeneratorKind::MixupAll]
            .map(GeneratorConfig::new)
            .to_vec(),
        rows: 5000,
        ..IntrusionConfig::default()
    };
    for region in [None, Some(Region::KnnQuantile { k: 10, tau: 0.95 })] {
        let report = run_intrusion(&IntrusionConfig {
            region,
            ..cfg.clone()
        })
        .unwrap();
        let f = |i: usize| &report.entries[i].fractions;
        for s in 0..report.seeds.len() {
            assert!(f(0)[s] < f(2)[s], "{report:?}");
            // H-pool partners sit on the rim of H, inside the data-driven
            // contour, so the mixup comparison only holds for the ball
            if matches!(report.region, Region::Ball { .. }) {
                assert!(f(0)[s] < f(1)[s] && f(1)[s] < f(2)[s], "{report:?}");
            }
        }
        assert!(report.entries.iter().flat_map(|e| &e.fractions).all(|x| (0.0..=1.0).contains(x)));
    }
}

#[test]
fn sadlite_score_grid_encloses_unlabeled_cluster() {
    let cfg = GridConfig {
        resolution: (41, 41),
        ..GridConfig::default()
    };
    let run = run_grid(&cfg, None).unwrap();
    let h = run.dataset.features.select_rows(&run.dataset.indices_of(0));
    let a = run.dataset.features.select_rows(&run.dataset.indices_of(1));
    let sh = run.model.score(&h).unwrap().0;
    let sa = run.model.score(&a).unwrap().0;
    // decision level halfway between the typical unlabeled and anomaly scores
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let level = 0.5 * (median(sh) + median(sa));
    let (nx, ny) = cfg.resolution;
    let at = |i: usize, j: usize| run.grid[j * nx + i].score - level;
    let border = (0..nx).flat_map(|i| [(i, 0), (i, ny - 1)]).chain((0..ny).flat_map(|j| [(0, j), (nx - 1, j)]));
    let positive_border = border.clone().filter(|&(i, j)| at(i, j) > 0.0).count();
    assert_eq!(positive_border, border.count(), "boundary must close around the unlabeled blob");
    // the mesh cell nearest the unlabeled center is inside
    let (ci, cj) = (0..nx)
        .flat_map(|i| (0..ny).map(move |j| (i, j)))
        .min_by(|&(i, j), &(k, l)| {
            let d = |p: &nngmix::harness::GridPoint| p.x.hypot(p.y);
            d(&run.grid[j * nx + i]).total_cmp(&d(&run.grid[l * nx + k]))
        })
        .unwrap();
    assert!(at(ci, cj) < 0.0);
    assert!(run.grid.iter().all(|p| p.score.is_finite()));
}

#[test]
fn score_grid_rejects_non_planar_data() {
    let cfg = GridConfig {
        clusters: vec![
            ClusterSpec {
                center: vec![0.0; 3],
                std: 1.0,
                count: 30,
                label: 0,
            },
            ClusterSpec {
                center: vec![5.0; 3],
                std: 1.0,
                count: 5,
                label: 1,
            },
        ],
        ..GridConfig::default()
    };
    assert!(matches!(run_grid(&cfg, None), Err(Error::Data(_))));
}
