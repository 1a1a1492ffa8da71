//! Pseudo-anomaly generators.
//!
//! Every generator draws from the labeled anomalies `A` (and, for the
//! neighbor-based and union variants, the unlabeled pool `H`) and returns
//! rows that are all labeled anomalous. Rows are produced sequentially from a
//! single [`RngStream`], so a fixed seed reproduces the whole set including
//! its provenance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::knn::NeighborIndex;
use crate::matrix::Matrix;
use crate::randgen::{NoiseSpec, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// No augmentation; the baseline.
    None,
    Mixup,
    Cutout,
    Cutmix,
    Gaussian,
    NngMix,
    /// Mixup of an anomaly with any row of `A ∪ H`, no neighbors, no noise.
    MixupAll,
    /// Nearest-neighbor mixup with the noise turned off.
    NngNoGn,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 8] = [
        GeneratorKind::None,
        GeneratorKind::Mixup,
        GeneratorKind::Cutout,
        GeneratorKind::Cutmix,
        GeneratorKind::Gaussian,
        GeneratorKind::NngMix,
        GeneratorKind::MixupAll,
        GeneratorKind::NngNoGn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::None => "none",
            GeneratorKind::Mixup => "mixup",
            GeneratorKind::Cutout => "cutout",
            GeneratorKind::Cutmix => "cutmix",
            GeneratorKind::Gaussian => "gaussian",
            GeneratorKind::NngMix => "nng_mix",
            GeneratorKind::MixupAll => "mixup_all",
            GeneratorKind::NngNoGn => "nng_no_gn",
        }
    }

    /// Whether the generator reads the unlabeled pool.
    pub fn uses_unlabeled(self) -> bool {
        matches!(
            self,
            GeneratorKind::NngMix | GeneratorKind::MixupAll | GeneratorKind::NngNoGn
        )
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_alpha() -> f64 {
    0.2
}
fn default_k() -> usize {
    10
}
fn default_sigma() -> f64 {
    0.01
}
fn default_mask_range() -> (f64, f64) {
    (0.1, 0.3)
}
fn default_mask_runs() -> usize {
    1
}
fn default_multiplier() -> usize {
    10
}

/// Which augmenter to run and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Beta(alpha, alpha) mixing weight shape.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Neighbor pool size.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Gaussian noise standard deviation.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Range of the masked fraction for cutout / cutmix.
    #[serde(default = "default_mask_range")]
    pub mask_ratio_range: (f64, f64),
    /// Contiguous masked runs per row.
    #[serde(default = "default_mask_runs")]
    pub mask_runs: usize,
    /// Generated rows per labeled anomaly.
    #[serde(default = "default_multiplier")]
    pub multiplier: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::new(GeneratorKind::NngMix)
    }
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind) -> Self {
        GeneratorConfig {
            kind,
            alpha: default_alpha(),
            k: default_k(),
            sigma: default_sigma(),
            mask_ratio_range: default_mask_range(),
            mask_runs: default_mask_runs(),
            multiplier: default_multiplier(),
        }
    }

    pub fn with_multiplier(mut self, m: usize) -> Self {
        self.multiplier = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        NoiseSpec::new(self.sigma)?;
        let (low, high) = self.mask_ratio_range;
        if !(low > 0.0 && low < high && high < 1.0) {
            return Err(Error::Config(format!(
                "mask ratio range must satisfy 0 < low < high < 1, got ({low}, {high})"
            )));
        }
        if self.mask_runs == 0 {
            return Err(Error::Config("mask_runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Rows to generate for `labeled` anomalies: `multiplier * labeled`.
    pub fn target_rows(&self, labeled: usize) -> usize {
        if self.kind == GeneratorKind::None {
            0
        } else {
            self.multiplier * labeled
        }
    }

    /// Short name including only the hyperparameters the kind reads.
    pub fn label(&self) -> String {
        let (low, high) = self.mask_ratio_range;
        match self.kind {
            GeneratorKind::None => "none".into(),
            GeneratorKind::Mixup | GeneratorKind::MixupAll => {
                format!("{}(alpha={})", self.kind, self.alpha)
            }
            GeneratorKind::Cutout | GeneratorKind::Cutmix => {
                if self.mask_runs == 1 {
                    format!("{}(mask={low}..{high})", self.kind)
                } else {
                    format!("{}(mask={low}..{high};runs={})", self.kind, self.mask_runs)
                }
            }
            GeneratorKind::Gaussian => format!("gaussian(sigma={})", self.sigma),
            GeneratorKind::NngMix => {
                format!("nng_mix(alpha={};k={};sigma={})", self.alpha, self.k, self.sigma)
            }
            GeneratorKind::NngNoGn => format!("nng_no_gn(alpha={};k={})", self.alpha, self.k),
        }
    }
}

/// Where a mixing partner came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Labeled,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partner {
    pub source: Source,
    pub index: usize,
}

/// Neighbor pool selected for one nearest-neighbor mixup row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolChoice {
    Labeled,
    Unlabeled,
    /// The labeled pool was drawn but had no candidate other than the anchor.
    UnlabeledFallback,
}

/// Half-open run `[start, start + len)` of masked feature positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRun {
    pub start: usize,
    pub len: usize,
}

/// How one generated row was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: GeneratorKind,
    /// Row of `A` used as the anchor.
    pub parent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<Partner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mask: Vec<MaskRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PoolChoice>,
    /// Candidate partner rows (indices into `A` or `H` per `pool`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pool_indices: Vec<usize>,
}

impl Provenance {
    fn anchor(kind: GeneratorKind, parent: usize) -> Self {
        Provenance {
            kind,
            parent,
            partner: None,
            lambda: None,
            mask: Vec::new(),
            pool: None,
            pool_indices: Vec::new(),
        }
    }
}

/// Generated rows; every row is labeled anomalous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoAnomalySet {
    pub samples: Matrix,
    pub provenance: Vec<Provenance>,
}

impl PseudoAnomalySet {
    pub fn empty(d: usize) -> Self {
        PseudoAnomalySet {
            samples: Matrix::empty(d),
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        vec![1; self.len()]
    }

    pub fn to_dataset(&self, feature_names: Vec<String>) -> Result<Dataset> {
        Dataset::with_names("generated", feature_names, self.samples.clone(), self.labels())
    }
}

/// `lambda * a1 + (1 - lambda) * a2`.
pub fn mix(a1: &[f64], a2: &[f64], lambda: f64) -> Vec<f64> {
    a1.iter()
        .zip(a2)
        .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
        .collect()
}

/// Zeroes the masked runs of `row`.
pub fn apply_cutout(row: &[f64], runs: &[MaskRun]) -> Vec<f64> {
    let mut out = row.to_vec();
    for r in runs {
        out[r.start..r.start + r.len].fill(0.0);
    }
    out
}

/// Copies `a1`, overwriting the masked runs with the matching slice of `a2`.
pub fn splice(a1: &[f64], a2: &[f64], runs: &[MaskRun]) -> Vec<f64> {
    let mut out = a1.to_vec();
    for r in runs {
        out[r.start..r.start + r.len].copy_from_slice(&a2[r.start..r.start + r.len]);
    }
    out
}

/// Run length for masked fraction `ratio` over `d` features, clamped to `[1, d]`.
pub fn run_length(ratio: f64, d: usize) -> usize {
    ((ratio * d as f64).round() as usize).clamp(1, d)
}

fn sample_mask(d: usize, config: &GeneratorConfig, rng: &mut RngStream) -> Vec<MaskRun> {
    let (low, high) = config.mask_ratio_range;
    (0..config.mask_runs)
        .map(|_| {
            let len = run_length(rng.uniform_range(low, high), d);
            let start = rng.index(d - len + 1);
            MaskRun { start, len }
        })
        .collect()
}

fn require_rows(m: &Matrix, what: &str) -> Result<()> {
    if m.is_empty() {
        Err(Error::Data(format!("{what} is empty")))
    } else {
        Ok(())
    }
}

fn finish(samples: Matrix, provenance: Vec<Provenance>) -> Result<PseudoAnomalySet> {
    if !samples.all_finite() {
        return Err(Error::Numeric("generated sample is not finite".into()));
    }
    Ok(PseudoAnomalySet { samples, provenance })
}

/// Runs the generator named by `config.kind` for exactly `n` rows.
pub fn generate(
    labeled: &Matrix,
    unlabeled: &Matrix,
    config: &GeneratorConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<PseudoAnomalySet> {
    config.validate()?;
    if config.kind == GeneratorKind::None || n == 0 {
        return Ok(PseudoAnomalySet::empty(labeled.cols()));
    }
    match config.kind {
        GeneratorKind::None => unreachable!(),
        GeneratorKind::Mixup => gen_mixup(labeled, config, n, rng),
        GeneratorKind::Cutout => gen_cutout(labeled, config, n, rng),
        GeneratorKind::Cutmix => gen_cutmix(labeled, config, n, rng),
        GeneratorKind::Gaussian => gen_gaussian(labeled, config, n, rng),
        GeneratorKind::NngMix => gen_nng_mix(labeled, unlabeled, config, n, rng),
        GeneratorKind::MixupAll | GeneratorKind::NngNoGn => gen_ablation(labeled, unlabeled, config, n, rng),
    }
}

/// Mixup restricted to pairs of labeled anomalies (drawn with replacement).
pub fn gen_mixup(labeled: &Matrix, config: &GeneratorConfig, n: usize, rng: &mut RngStream) -> Result<PseudoAnomalySet> {
    require_rows(labeled, "labeled anomaly set")?;
    let mut samples = Matrix::empty(labeled.cols());
    let mut prov = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.index(labeled.rows());
        let j = rng.index(labeled.rows());
        let lambda = rng.beta(config.alpha)?;
        samples.push_row(&mix(labeled.row(i), labeled.row(j), lambda))?;
        prov.push(Provenance {
            partner: Some(Partner { source: Source::Labeled, index: j }),
            lambda: Some(lambda),
            ..Provenance::anchor(GeneratorKind::Mixup, i)
        });
    }
    finish(samples, prov)
}

/// Zeroes one contiguous run of features per row.
pub fn gen_cutout(labeled: &Matrix, config: &GeneratorConfig, n: usize, rng: &mut RngStream) -> Result<PseudoAnomalySet> {
    require_rows(labeled, "labeled anomaly set")?;
    let d = labeled.cols();
    if d == 0 {
        return Err(Error::Data("rows have no features".into()));
    }
    let mut samples = Matrix::empty(d);
    let mut prov = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.index(labeled.rows());
        let mask = sample_mask(d, config, rng);
        samples.push_row(&apply_cutout(labeled.row(i), &mask))?;
        prov.push(Provenance {
            mask,
            ..Provenance::anchor(GeneratorKind::Cutout, i)
        });
    }
    finish(samples, prov)
}

/// Splices a contiguous run of a second anomaly into the first.
pub fn gen_cutmix(labeled: &Matrix, config: &GeneratorConfig, n: usize, rng: &mut RngStream) -> Result<PseudoAnomalySet> {
    require_rows(labeled, "labeled anomaly set")?;
    let d = labeled.cols();
    if d == 0 {
        return Err(Error::Data("rows have no features".into()));
    }
    let mut samples = Matrix::empty(d);
    let mut prov = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.index(labeled.rows());
        let j = rng.index(labeled.rows());
        let mask = sample_mask(d, config, rng);
        samples.push_row(&splice(labeled.row(i), labeled.row(j), &mask))?;
        prov.push(Provenance {
            partner: Some(Partner { source: Source::Labeled, index: j }),
            mask,
            ..Provenance::anchor(GeneratorKind::Cutmix, i)
        });
    }
    finish(samples, prov)
}

/// Adds isotropic Gaussian noise to a labeled anomaly.
pub fn gen_gaussian(labeled: &Matrix, config: &GeneratorConfig, n: usize, rng: &mut RngStream) -> Result<PseudoAnomalySet> {
    require_rows(labeled, "labeled anomaly set")?;
    let noise = NoiseSpec::new(config.sigma)?;
    let d = labeled.cols();
    let mut samples = Matrix::empty(d);
    let mut prov = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.index(labeled.rows());
        let eps = rng.gaussian_vec(d, noise);
        let row: Vec<f64> = labeled.row(i).iter().zip(&eps).map(|(a, e)| a + e).collect();
        samples.push_row(&row)?;
        prov.push(Provenance::anchor(GeneratorKind::Gaussian, i));
    }
    finish(samples, prov)
}

/// Per-anchor neighbor pools, computed on first use.
struct NeighborPools<'a> {
    labeled: &'a Matrix,
    k: usize,
    labeled_index: NeighborIndex,
    unlabeled_index: NeighborIndex,
    labeled_pools: Vec<Option<Vec<usize>>>,
    unlabeled_pools: Vec<Option<Vec<usize>>>,
}

impl<'a> NeighborPools<'a> {
    fn new(labeled: &'a Matrix, unlabeled: &Matrix, k: usize) -> Result<Self> {
        Ok(NeighborPools {
            labeled,
            k,
            labeled_index: NeighborIndex::build(labeled.clone())?,
            unlabeled_index: NeighborIndex::build(unlabeled.clone())?,
            labeled_pools: vec![None; labeled.rows()],
            unlabeled_pools: vec![None; labeled.rows()],
        })
    }

    fn labeled_pool(&mut self, anchor: usize) -> Result<&[usize]> {
        if self.labeled_pools[anchor].is_none() {
            let hits = self.labeled_index.query(self.labeled.row(anchor), self.k, true)?;
            self.labeled_pools[anchor] = Some(hits.into_iter().map(|h| h.index).collect());
        }
        Ok(self.labeled_pools[anchor].as_deref().unwrap_or(&[]))
    }

    fn unlabeled_pool(&mut self, anchor: usize) -> Result<&[usize]> {
        if self.unlabeled_pools[anchor].is_none() {
            let hits = self.unlabeled_index.query(self.labeled.row(anchor), self.k, false)?;
            self.unlabeled_pools[anchor] = Some(hits.into_iter().map(|h| h.index).collect());
        }
        Ok(self.unlabeled_pools[anchor].as_deref().unwrap_or(&[]))
    }
}

fn check_pair(labeled: &Matrix, unlabeled: &Matrix) -> Result<()> {
    require_rows(labeled, "labeled anomaly set")?;
    require_rows(unlabeled, "unlabeled pool")?;
    if labeled.cols() != unlabeled.cols() {
        return Err(Error::DimensionMismatch {
            expected: labeled.cols(),
            actual: unlabeled.cols(),
        });
    }
    Ok(())
}

/// Nearest-neighbor Gaussian mixup.
///
/// Per row: draw an anchor from `A`; with probability one half (`u > 0.5`)
/// take its `k` nearest other anomalies as the partner pool, otherwise its
/// `k` nearest unlabeled rows; draw a partner uniformly from the pool; add
/// independent `N(0, sigma²)` noise to both; mix with `lambda ~ Beta(alpha, alpha)`.
pub fn gen_nng_mix(
    labeled: &Matrix,
    unlabeled: &Matrix,
    config: &GeneratorConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<PseudoAnomalySet> {
    nng_mix_with_kind(labeled, unlabeled, config, config.sigma, GeneratorKind::NngMix, n, rng)
}

fn nng_mix_with_kind(
    labeled: &Matrix,
    unlabeled: &Matrix,
    config: &GeneratorConfig,
    sigma: f64,
    kind: GeneratorKind,
    n: usize,
    rng: &mut RngStream,
) -> Result<PseudoAnomalySet> {
    check_pair(labeled, unlabeled)?;
    let noise = NoiseSpec::new(sigma)?;
    let d = labeled.cols();
    let mut pools = NeighborPools::new(labeled, unlabeled, config.k)?;
    let mut samples = Matrix::empty(d);
    let mut prov = Vec::with_capacity(n);

    for _ in 0..n {
        let anchor = rng.index(labeled.rows());
        let mut choice = if rng.uniform() > 0.5 {
            PoolChoice::Labeled
        } else {
            PoolChoice::Unlabeled
        };
        if choice == PoolChoice::Labeled && pools.labeled_pool(anchor)?.is_empty() {
            choice = PoolChoice::UnlabeledFallback;
        }
        let (pool, source) = match choice {
            PoolChoice::Labeled => (pools.labeled_pool(anchor)?.to_vec(), Source::Labeled),
            _ => (pools.unlabeled_pool(anchor)?.to_vec(), Source::Unlabeled),
        };
        let partner = pool[rng.index(pool.len())];
        let partner_row = match source {
            Source::Labeled => labeled.row(partner),
            Source::Unlabeled => unlabeled.row(partner),
        };

        let eps1 = rng.gaussian_vec(d, noise);
        let eps2 = rng.gaussian_vec(d, noise);
        let a1: Vec<f64> = labeled.row(anchor).iter().zip(&eps1).map(|(x, e)| x + e).collect();
        let a2: Vec<f64> = partner_row.iter().zip(&eps2).map(|(x, e)| x + e).collect();
        let lambda = rng.beta(config.alpha)?;
        samples.push_row(&mix(&a1, &a2, lambda))?;
        prov.push(Provenance {
            partner: Some(Partner { source, index: partner }),
            lambda: Some(lambda),
            pool: Some(choice),
            pool_indices: pool,
            ..Provenance::anchor(kind, anchor)
        });
    }
    finish(samples, prov)
}

/// Ablations of nearest-neighbor mixup: `mixup_all` (no neighbor pools, no
/// noise, partner uniform over `A ∪ H`) and `nng_no_gn` (noise off).
pub fn gen_ablation(
    labeled: &Matrix,
    unlabeled: &Matrix,
    config: &GeneratorConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<PseudoAnomalySet> {
    match config.kind {
        GeneratorKind::NngNoGn => {
            nng_mix_with_kind(labeled, unlabeled, config, 0.0, GeneratorKind::NngNoGn, n, rng)
        }
        GeneratorKind::MixupAll => {
            check_pair(labeled, unlabeled)?;
            let total = labeled.rows() + unlabeled.rows();
            let mut samples = Matrix::empty(labeled.cols());
            let mut prov = Vec::with_capacity(n);
            for _ in 0..n {
                let anchor = rng.index(labeled.rows());
                let j = rng.index(total);
                let partner = if j < labeled.rows() {
                    Partner { source: Source::Labeled, index: j }
                } else {
                    Partner { source: Source::Unlabeled, index: j - labeled.rows() }
                };
                let partner_row = match partner.source {
                    Source::Labeled => labeled.row(partner.index),
                    Source::Unlabeled => unlabeled.row(partner.index),
                };
                let lambda = rng.beta(config.alpha)?;
                samples.push_row(&mix(labeled.row(anchor), partner_row, lambda))?;
                prov.push(Provenance {
                    partner: Some(partner),
                    lambda: Some(lambda),
                    ..Provenance::anchor(GeneratorKind::MixupAll, anchor)
                });
            }
            finish(samples, prov)
        }
        other => Err(Error::Config(format!("`{other}` is not an ablation generator"))),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::dataset::{make_synthetic_clusters, two_cluster_layout};
    use crate::matrix::euclidean;

    fn grid(n: usize, d: usize) -> Matrix {
        Matrix::from_vec(n, d, (0..n * d).map(|v| v as f64 * 0.37 - 3.0).collect()).unwrap()
    }

    fn two_clusters() -> (Matrix, Matrix) {
        let ds = make_synthetic_clusters(&two_cluster_layout(), 17).unwrap();
        (
            ds.features.select_rows(&ds.indices_of(1)),
            ds.features.select_rows(&ds.indices_of(0)),
        )
    }

    #[test]
    fn mix_arithmetic() {
        let d = mix(&[0.0, 0.0], &[1.0, 1.0], 0.3);
        assert_abs_diff_eq!(d[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn cutout_mask_arithmetic() {
        let row: Vec<f64> = (1..=10).map(f64::from).collect();
        let len = run_length(0.3, 10);
        assert_eq!(len, 3);
        let out = apply_cutout(&row, &[MaskRun { start: 2, len }]);
        assert_eq!(out, vec![1.0, 2.0, 0.0, 0.0, 0.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
    }

    #[test]
    fn cutout_single_feature_is_zeroed() {
        let a = Matrix::from_rows(&[[4.0]]).unwrap();
        let mut rng = RngStream::new(0, "t");
        let out = gen_cutout(&a, &GeneratorConfig::new(GeneratorKind::Cutout), 20, &mut rng).unwrap();
        assert!(out.samples.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cutmix_splice_arithmetic() {
        let out = splice(&[1.0; 4], &[9.0; 4], &[MaskRun { start: 1, len: 2 }]);
        assert_eq!(out, vec![1.0, 9.0, 9.0, 1.0]);
    }

    #[test]
    fn cutmix_coordinates_come_from_parents() {
        let a = grid(7, 12);
        let mut rng = RngStream::new(2, "t");
        let out = gen_cutmix(&a, &GeneratorConfig::new(GeneratorKind::Cutmix), 300, &mut rng).unwrap();
        for (row, p) in out.samples.iter_rows().zip(&out.provenance) {
            let a1 = a.row(p.parent);
            let a2 = a.row(p.partner.unwrap().index);
            for j in 0..row.len() {
                assert!(row[j] == a1[j] || row[j] == a2[j]);
            }
            assert_eq!(row, splice(a1, a2, &p.mask).as_slice());
        }
        // a1 == a2 leaves the row untouched
        let single = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let out = gen_cutmix(&single, &GeneratorConfig::new(GeneratorKind::Cutmix), 10, &mut rng).unwrap();
        assert!(out.samples.iter_rows().all(|r| r == single.row(0)));
    }

    #[test]
    fn cutout_mean_zeroed_fraction() {
        // d = 10: run length is 1, 2, 3 with probability 1/4, 1/2, 1/4
        let a = Matrix::from_rows(&[[1.0; 10]]).unwrap();
        let mut rng = RngStream::new(5, "t");
        let out = gen_cutout(&a, &GeneratorConfig::new(GeneratorKind::Cutout), 10_000, &mut rng).unwrap();
        let zeroed = out.samples.as_slice().iter().filter(|&&v| v == 0.0).count() as f64;
        let frac = zeroed / (10.0 * 10_000.0);
        assert!((0.18..=0.22).contains(&frac), "{frac}");
    }

    #[test]
    fn mixup_with_one_anomaly_copies_it() {
        let a = Matrix::from_rows(&[[1.5, -2.0, 0.25]]).unwrap();
        let mut rng = RngStream::new(3, "t");
        let out = gen_mixup(&a, &GeneratorConfig::new(GeneratorKind::Mixup), 50, &mut rng).unwrap();
        for row in out.samples.iter_rows() {
            for (x, y) in row.iter().zip(a.row(0)) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    }

    /// Andrew's monotone chain; counter-clockwise hull.
    fn hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut p = points.to_vec();
        p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &q in &p {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
                lower.pop();
            }
            lower.push(q);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &q in p.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
                upper.pop();
            }
            upper.push(q);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        lower
    }

    #[test]
    fn mixup_stays_in_convex_hull() {
        let mut rng = RngStream::new(8, "pts");
        let pts: Vec<[f64; 2]> = (0..12).map(|_| [rng.standard_normal() * 3.0, rng.standard_normal()]).collect();
        let a = Matrix::from_rows(&pts).unwrap();
        let h = hull(&pts);
        let out = gen_mixup(&a, &GeneratorConfig::new(GeneratorKind::Mixup), 2000, &mut rng).unwrap();
        for row in out.samples.iter_rows() {
            let q = [row[0], row[1]];
            for w in 0..h.len() {
                let e = cross(h[w], h[(w + 1) % h.len()], q);
                assert!(e >= -1e-9, "point {q:?} outside hull");
            }
        }
    }

    #[test]
    fn gaussian_zero_sigma_copies_parents() {
        let a = grid(5, 3);
        let cfg = GeneratorConfig { sigma: 0.0, ..GeneratorConfig::new(GeneratorKind::Gaussian) };
        let mut rng = RngStream::new(1, "t");
        let out = gen_gaussian(&a, &cfg, 40, &mut rng).unwrap();
        for (row, p) in out.samples.iter_rows().zip(&out.provenance) {
            assert_eq!(row, a.row(p.parent));
        }
    }

    #[test]
    fn gaussian_deviation_matches_half_normal_mean() {
        let a = Matrix::from_rows(&[[0.5, -1.0]]).unwrap();
        let cfg = GeneratorConfig::new(GeneratorKind::Gaussian);
        let mut rng = RngStream::new(12, "t");
        let out = gen_gaussian(&a, &cfg, 50_000, &mut rng).unwrap();
        let devs: Vec<f64> = out
            .samples
            .iter_rows()
            .flat_map(|r| r.iter().zip(a.row(0)).map(|(x, y)| x - y).collect::<Vec<_>>())
            .collect();
        let n = devs.len() as f64;
        let mean_abs = devs.iter().map(|e| e.abs()).sum::<f64>() / n;
        assert!((0.0079..=0.0081).contains(&mean_abs), "{mean_abs}");
        let mean = devs.iter().sum::<f64>() / n;
        let sd = (devs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 0.01).abs() < 2e-4, "{sd}");
    }

    #[test]
    fn nng_mix_segment_arithmetic() {
        let a = Matrix::from_rows(&[[10.0, 0.0]]).unwrap();
        let h = Matrix::from_rows(&[[2.0, 0.0]]).unwrap();
        assert_eq!(mix(a.row(0), h.row(0), 0.5), vec![6.0, 0.0]);
        let cfg = GeneratorConfig { sigma: 0.0, ..GeneratorConfig::default() };
        let mut rng = RngStream::new(4, "t");
        let out = gen_nng_mix(&a, &h, &cfg, 100, &mut rng).unwrap();
        for (row, p) in out.samples.iter_rows().zip(&out.provenance) {
            // the lone anomaly has no labeled neighbor, so every row mixes with H
            assert_ne!(p.pool, Some(PoolChoice::Labeled));
            let lambda = p.lambda.unwrap();
            assert_abs_diff_eq!(row[0], 10.0 * lambda + 2.0 * (1.0 - lambda), epsilon = 1e-12);
            assert_eq!(row[1], 0.0);
        }
        assert!(out.provenance.iter().any(|p| p.pool == Some(PoolChoice::UnlabeledFallback)));
    }

    #[test]
    fn nng_mix_labeled_pool_reduces_to_neighbor_mixup() {
        let a = grid(6, 2);
        let h = grid(3, 2);
        let cfg = GeneratorConfig { sigma: 0.0, k: a.rows() - 1, ..GeneratorConfig::default() };
        let mut rng = RngStream::new(6, "t");
        let out = gen_nng_mix(&a, &h, &cfg, 400, &mut rng).unwrap();
        for (row, p) in out.samples.iter_rows().zip(&out.provenance) {
            if p.pool == Some(PoolChoice::Labeled) {
                let partner = p.partner.unwrap();
                assert_eq!(partner.source, Source::Labeled);
                assert_ne!(partner.index, p.parent);
                let expect = mix(a.row(p.parent), a.row(partner.index), p.lambda.unwrap());
                assert_eq!(row, expect.as_slice());
            }
        }
    }

    #[test]
    fn nng_mix_pools_stay_inside_clusters() {
        let (a, h) = two_clusters();
        let cfg = GeneratorConfig::default();
        let mut rng = RngStream::new(9, "t");
        let out = gen_nng_mix(&a, &h, &cfg, 500, &mut rng).unwrap();
        for (row, p) in out.samples.iter_rows().zip(&out.provenance) {
            if p.pool == Some(PoolChoice::Labeled) {
                let anchor = a.row(p.parent);
                let partner = a.row(p.partner.unwrap().index);
                assert_eq!(anchor[0].signum(), partner[0].signum());
                assert!(euclidean(row, &[0.0, 0.0]) > 2.0);
            }
        }
    }

    #[test]
    fn nng_no_gn_hits_parents_at_extreme_lambda() {
        let (a, h) = two_clusters();
        let cfg = GeneratorConfig::new(GeneratorKind::NngNoGn);
        let mut rng = RngStream::new(10, "t");
        let out = gen_ablation(&a, &h, &cfg, 2000, &mut rng).unwrap();
        for (row, p) in out.samples.iter_rows().zip(&out.provenance) {
            let partner = p.partner.unwrap();
            let other = match partner.source {
                Source::Labeled => a.row(partner.index),
                Source::Unlabeled => h.row(partner.index),
            };
            let lambda = p.lambda.unwrap();
            if lambda == 1.0 {
                assert_eq!(row, a.row(p.parent));
            } else if lambda == 0.0 {
                assert_eq!(row, other);
            }
            assert_eq!(row, mix(a.row(p.parent), other, lambda).as_slice());
        }
    }

    #[test]
    fn mixup_all_midpoint_with_unlabeled_partner() {
        let (a, h) = two_clusters();
        let cfg = GeneratorConfig::new(GeneratorKind::MixupAll);
        let mut rng = RngStream::new(11, "t");
        let out = gen_ablation(&a, &h, &cfg, 500, &mut rng).unwrap();
        let from_h = out
            .provenance
            .iter()
            .filter(|p| p.partner.unwrap().source == Source::Unlabeled)
            .count();
        assert!(from_h > 400);
        let mid = mix(a.row(0), h.row(0), 0.5);
        assert_abs_diff_eq!(mid[0], (a.get(0, 0) + h.get(0, 0)) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn every_generator_honours_count_and_label() {
        let (a, h) = two_clusters();
        for kind in GeneratorKind::ALL {
            let cfg = GeneratorConfig::new(kind).with_multiplier(3);
            let n = cfg.target_rows(a.rows());
            let mut rng = RngStream::new(1, "t");
            let out = generate(&a, &h, &cfg, n, &mut rng).unwrap();
            assert_eq!(out.len(), n, "{kind}");
            assert_eq!(out.provenance.len(), n);
            assert!(out.labels().iter().all(|&l| l == 1));
            if kind == GeneratorKind::None {
                assert!(out.is_empty());
            } else {
                assert_eq!(n, 3 * a.rows());
            }
        }
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let a = grid(3, 2);
        let empty = Matrix::empty(2);
        let mut rng = RngStream::new(0, "t");
        for kind in [GeneratorKind::Mixup, GeneratorKind::Cutout, GeneratorKind::Cutmix, GeneratorKind::Gaussian] {
            assert!(generate(&empty, &a, &GeneratorConfig::new(kind), 5, &mut rng).is_err());
        }
        for kind in [GeneratorKind::NngMix, GeneratorKind::MixupAll, GeneratorKind::NngNoGn] {
            assert!(generate(&a, &empty, &GeneratorConfig::new(kind), 5, &mut rng).is_err());
            assert!(generate(&empty, &a, &GeneratorConfig::new(kind), 5, &mut rng).is_err());
        }
    }

    #[test]
    fn config_validation_and_defaults() {
        let cfg: GeneratorConfig = serde_json::from_str(r#"{"kind":"nng_mix"}"#).unwrap();
        assert_eq!(cfg, GeneratorConfig::default());
        assert_eq!((cfg.alpha, cfg.k, cfg.sigma), (0.2, 10, 0.01));
        assert_eq!(cfg.mask_ratio_range, (0.1, 0.3));
        let bad = GeneratorConfig { mask_ratio_range: (0.3, 0.1), ..cfg.clone() };
        assert!(bad.validate().is_err());
        let bad = GeneratorConfig { alpha: 0.0, ..cfg.clone() };
        assert!(bad.validate().is_err());
        let bad = GeneratorConfig { k: 0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, h) = two_clusters();
        for kind in GeneratorKind::ALL {
            let cfg = GeneratorConfig::new(kind);
            let run = || generate(&a, &h, &cfg, 200, &mut RngStream::new(42, "t")).unwrap();
            assert_eq!(run(), run());
        }
    }
}
