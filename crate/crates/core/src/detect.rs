//! Small anomaly detectors trained on labeled anomalies (plus generated
//! ones) against the unlabeled pool. Higher scores are more anomalous.
//!
//! * `knn_score`: distance to the k-th nearest unlabeled row; ignores labels.
//! * `logistic`: linear logit, full-batch gradient descent on L2-penalized
//!   cross-entropy.
//! * `sadlite`: linear embedding `Wx` pulled toward a frozen center for
//!   unlabeled rows and pushed away (inverse squared distance) for anomalies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::NeighborIndex;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    KnnScore,
    Logistic,
    Sadlite,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::KnnScore => "knn_score",
            DetectorKind::Logistic => "logistic",
            DetectorKind::Sadlite => "sadlite",
        }
    }
}

fn default_k_score() -> usize {
    5
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    300
}
fn default_l2() -> f64 {
    1e-3
}
fn default_eta() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    #[serde(default = "default_k_score")]
    pub k_score: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_l2")]
    pub l2: f64,
    /// Weight of the anomaly repulsion term (sadlite).
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Guard added to squared distances in the repulsion term (sadlite).
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind) -> Self {
        DetectorConfig {
            kind,
            k_score: default_k_score(),
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            l2: default_l2(),
            eta: default_eta(),
            eps: default_eps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DetectorKind::KnnScore => {
                if self.k_score == 0 {
                    return Err(Error::Config("k_score must be at least 1".into()));
                }
            }
            DetectorKind::Logistic | DetectorKind::Sadlite => {
                if self.epochs == 0 {
                    return Err(Error::Config("epochs must be at least 1".into()));
                }
                if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                    return Err(Error::Config("learning_rate must be positive".into()));
                }
                if !(self.l2 >= 0.0 && self.l2.is_finite()) {
                    return Err(Error::Config("l2 must be non-negative".into()));
                }
                if self.kind == DetectorKind::Sadlite {
                    if !(self.eps > 0.0 && self.eps.is_finite()) {
                        return Err(Error::Config("eps must be positive".into()));
                    }
                    if !(self.eta >= 0.0 && self.eta.is_finite()) {
                        return Err(Error::Config("eta must be non-negative".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.kind {
            DetectorKind::KnnScore => format!("knn_score(k={})", self.k_score),
            DetectorKind::Logistic => format!(
                "logistic(lr={};epochs={};l2={})",
                self.learning_rate, self.epochs, self.l2
            ),
            DetectorKind::Sadlite => format!(
                "sadlite(lr={};epochs={};l2={};eta={};eps={})",
                self.learning_rate, self.epochs, self.l2, self.eta, self.eps
            ),
        }
    }
}

/// Training rows: anomalies (`A ∪ D`, label 1) and the unlabeled pool (label 0).
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub anomalies: Matrix,
    pub unlabeled: Matrix,
}

impl TrainingData {
    /// Stacks labeled and generated anomalies.
    pub fn new(labeled: &Matrix, generated: &Matrix, unlabeled: &Matrix) -> Result<Self> {
        Ok(TrainingData {
            anomalies: labeled.vstack(generated)?,
            unlabeled: unlabeled.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.unlabeled.cols()
    }

    fn check_dims(&self) -> Result<()> {
        if !self.anomalies.is_empty() && self.anomalies.cols() != self.unlabeled.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.unlabeled.cols(),
                actual: self.anomalies.cols(),
            });
        }
        Ok(())
    }
}

/// Scores aligned with the scored rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScores(pub Vec<f64>);

impl AnomalyScores {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn checked(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("detector produced a non-finite score".into()));
        }
        Ok(AnomalyScores(scores))
    }
}

/// A trained detector.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedDetector {
    KnnScore(KnnScorer),
    Logistic(LogisticModel),
    Sadlite(SadliteModel),
}

impl FittedDetector {
    pub fn score(&self, x: &Matrix) -> Result<AnomalyScores> {
        match self {
            FittedDetector::KnnScore(m) => m.score(x),
            FittedDetector::Logistic(m) => m.score(x),
            FittedDetector::Sadlite(m) => m.score(x),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FittedDetector::KnnScore(m) => m.index.dim(),
            FittedDetector::Logistic(m) => m.weights.len(),
            FittedDetector::Sadlite(m) => m.center.len(),
        }
    }

    /// Parameters as JSON for inspection.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))
    }
}

/// Fits the detector named by `config.kind`.
pub fn fit(config: &DetectorConfig, data: &TrainingData) -> Result<FittedDetector> {
    config.validate()?;
    data.check_dims()?;
    match config.kind {
        DetectorKind::KnnScore => Ok(FittedDetector::KnnScore(fit_knn_score(&data.unlabeled, config.k_score)?)),
        DetectorKind::Logistic => Ok(FittedDetector::Logistic(fit_logistic(data, config)?)),
        DetectorKind::Sadlite => Ok(FittedDetector::Sadlite(fit_sadlite(data, config)?)),
    }
}

fn check_scoring_dim(expected: usize, x: &Matrix) -> Result<()> {
    if x.cols() != expected && !x.is_empty() {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.cols(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// kNN distance score

#[derive(Debug, Clone)]
pub struct KnnScorer {
    index: NeighborIndex,
    k: usize,
}

impl Serialize for KnnScorer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("KnnScorer", 2)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("reference_rows", &self.index.len())?;
        st.end()
    }
}

pub fn fit_knn_score(unlabeled: &Matrix, k: usize) -> Result<KnnScorer> {
    if k == 0 {
        return Err(Error::Config("k_score must be at least 1".into()));
    }
    if unlabeled.rows() < k {
        return Err(Error::Data(format!(
            "unlabeled pool has {} rows, fewer than k_score = {k}",
            unlabeled.rows()
        )));
    }
    Ok(KnnScorer {
        index: NeighborIndex::build(unlabeled.clone())?,
        k,
    })
}

impl KnnScorer {
    pub fn score(&self, x: &Matrix) -> Result<AnomalyScores> {
        check_scoring_dim(self.index.dim(), x)?;
        let scores = x
            .iter_rows()
            .map(|row| self.index.kth_distance(row, self.k, false))
            .collect::<Result<Vec<_>>>()?;
        AnomalyScores::checked(scores)
    }
}

// ---------------------------------------------------------------------------
// Logistic regression

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training loss before each update, then the final loss.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Labeled design for the logistic objective.
pub struct LogisticProblem<'a> {
    pub data: &'a TrainingData,
    pub l2: f64,
}

impl LogisticProblem<'_> {
    fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.data
            .anomalies
            .iter_rows()
            .map(|r| (r, 1.0))
            .chain(self.data.unlabeled.iter_rows().map(|r| (r, 0.0)))
    }

    fn n(&self) -> usize {
        self.data.anomalies.rows() + self.data.unlabeled.rows()
    }

    /// Mean cross-entropy plus `l2 / 2 * |w|²`. `params` is `[w..., b]`.
    pub fn loss(&self, params: &[f64]) -> f64 {
        let (w, b) = params.split_at(params.len() - 1);
        let b = b[0];
        let ce: f64 = self
            .rows()
            .map(|(x, y)| {
                let z = dot(w, x) + b;
                softplus(z) - y * z
            })
            .sum();
        ce / self.n() as f64 + 0.5 * self.l2 * dot(w, w)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let (w, b) = params.split_at(params.len() - 1);
        let b = b[0];
        let mut grad = vec![0.0; params.len()];
        for (x, y) in self.rows() {
            let r = sigmoid(dot(w, x) + b) - y;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += r * xi;
            }
            *grad.last_mut().unwrap() += r;
        }
        let n = self.n() as f64;
        for (j, g) in grad.iter_mut().enumerate() {
            *g /= n;
            if j < w.len() {
                *g += self.l2 * w[j];
            }
        }
        grad
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Zero-initialised full-batch gradient descent for `config.epochs` steps.
pub fn fit_logistic(data: &TrainingData, config: &DetectorConfig) -> Result<LogisticModel> {
    if data.anomalies.is_empty() || data.unlabeled.is_empty() {
        return Err(Error::Data(
            "logistic detector needs at least one anomaly and one unlabeled row".into(),
        ));
    }
    data.check_dims()?;
    let problem = LogisticProblem { data, l2: config.l2 };
    let mut params = vec![0.0; data.dim() + 1];
    let mut history = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let loss = problem.loss(&params);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(loss);
        let grad = problem.gradient(&params);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    let last = problem.loss(&params);
    if !last.is_finite() {
        return Err(Error::Divergence { epoch: config.epochs });
    }
    history.push(last);
    let bias = params.pop().unwrap_or(0.0);
    Ok(LogisticModel {
        weights: params,
        bias,
        loss_history: history,
    })
}

impl LogisticModel {
    /// Logit `w·x + b`.
    pub fn score(&self, x: &Matrix) -> Result<AnomalyScores> {
        check_scoring_dim(self.weights.len(), x)?;
        AnomalyScores::checked(x.iter_rows().map(|r| dot(&self.weights, r) + self.bias).collect())
    }
}

// ---------------------------------------------------------------------------
// One-class compaction with anomaly repulsion

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SadliteModel {
    /// Row-major `d × d` embedding.
    pub weights: Vec<f64>,
    pub center: Vec<f64>,
    pub loss_history: Vec<f64>,
}

/// Objective of the linear one-class model with a frozen center.
pub struct SadliteProblem<'a> {
    pub data: &'a TrainingData,
    pub center: &'a [f64],
    pub eta: f64,
    pub eps: f64,
    pub l2: f64,
}

fn embed_residual(w: &[f64], x: &[f64], c: &[f64]) -> Vec<f64> {
    let d = c.len();
    (0..d).map(|i| dot(&w[i * d..(i + 1) * d], x) - c[i]).collect()
}

impl SadliteProblem<'_> {
    /// `mean_H |Wx - c|² + eta * mean_A 1 / (|Wx - c|² + eps) + l2 / 2 * |W|²`.
    pub fn loss(&self, w: &[f64]) -> f64 {
        let h = &self.data.unlabeled;
        let compact: f64 = h
            .iter_rows()
            .map(|x| {
                let r = embed_residual(w, x, self.center);
                dot(&r, &r)
            })
            .sum::<f64>()
            / h.rows() as f64;
        let a = &self.data.anomalies;
        let repel = if a.is_empty() || self.eta == 0.0 {
            0.0
        } else {
            a.iter_rows()
                .map(|x| {
                    let r = embed_residual(w, x, self.center);
                    1.0 / (dot(&r, &r) + self.eps)
                })
                .sum::<f64>()
                / a.rows() as f64
        };
        compact + self.eta * repel + 0.5 * self.l2 * dot(w, w)
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let d = self.center.len();
        let mut grad: Vec<f64> = w.iter().map(|wi| self.l2 * wi).collect();
        let h = &self.data.unlabeled;
        let scale_h = 2.0 / h.rows() as f64;
        for x in h.iter_rows() {
            let r = embed_residual(w, x, self.center);
            for i in 0..d {
                for j in 0..d {
                    grad[i * d + j] += scale_h * r[i] * x[j];
                }
            }
        }
        let a = &self.data.anomalies;
        if !a.is_empty() && self.eta != 0.0 {
            let scale_a = 2.0 * self.eta / a.rows() as f64;
            for x in a.iter_rows() {
                let r = embed_residual(w, x, self.center);
                let s = dot(&r, &r) + self.eps;
                let coef = scale_a / (s * s);
                for i in 0..d {
                    for j in 0..d {
                        grad[i * d + j] -= coef * r[i] * x[j];
                    }
                }
            }
        }
        grad
    }
}

/// Identity-initialised embedding; the center is the mean of the unlabeled
/// rows under the initial embedding and stays fixed during training.
pub fn fit_sadlite(data: &TrainingData, config: &DetectorConfig) -> Result<SadliteModel> {
    let h = &data.unlabeled;
    if h.rows() < 2 {
        return Err(Error::Data("sadlite needs at least 2 unlabeled rows".into()));
    }
    data.check_dims()?;
    let d = h.cols();
    let mut center = vec![0.0; d];
    for x in h.iter_rows() {
        for (c, v) in center.iter_mut().zip(x) {
            *c += v;
        }
    }
    for c in &mut center {
        *c /= h.rows() as f64;
    }
    let mut w = vec![0.0; d * d];
    for i in 0..d {
        w[i * d + i] = 1.0;
    }
    let problem = SadliteProblem {
        data,
        center: &center,
        eta: config.eta,
        eps: config.eps,
        l2: config.l2,
    };
    let mut history = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let loss = problem.loss(&w);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(loss);
        let grad = problem.gradient(&w);
        for (p, g) in w.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    let last = problem.loss(&w);
    if !last.is_finite() {
        return Err(Error::Divergence { epoch: config.epochs });
    }
    history.push(last);
    Ok(SadliteModel {
        weights: w,
        center,
        loss_history: history,
    })
}

impl SadliteModel {
    /// Squared distance of the embedded row from the center.
    pub fn score(&self, x: &Matrix) -> Result<AnomalyScores> {
        check_scoring_dim(self.center.len(), x)?;
        AnomalyScores::checked(
            x.iter_rows()
                .map(|row| {
                    let r = embed_residual(&self.weights, row, &self.center);
                    dot(&r, &r)
                })
                .collect(),
        )
    }
}
