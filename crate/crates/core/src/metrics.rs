//! AUCROC and multi-seed aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area under the ROC curve via the Mann–Whitney statistic.
///
/// Ties between a positive and a negative count one half. One sort, then
/// average ranks per tie group.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("scores must be finite".into()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Data(format!("label {l} is not 0 or 1")));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Data("AUCROC needs both classes present".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // twice the rank sum of positives keeps half-ranks integral
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, average (start + 1 + end) / 2
        let doubled_avg = (start + 1 + end) as u128;
        let group_pos = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u128;
        doubled_rank_sum += doubled_avg * group_pos;
        start = end;
    }
    let p = positives as u128;
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2.0 * positives as f64 * negatives as f64))
}

/// One scored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auc: f64,
    /// Stable hash of the run configuration, seed excluded.
    pub fingerprint: String,
    pub seed: u64,
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_auc: f64,
    pub std_auc: f64,
    pub n_seeds: usize,
}

pub fn aggregate(results: &[EvalResult]) -> Result<Aggregate> {
    let first = results
        .first()
        .ok_or_else(|| Error::Data("cannot aggregate an empty result list".into()))?;
    if let Some(other) = results.iter().find(|r| r.fingerprint != first.fingerprint) {
        return Err(Error::Data(format!(
            "mixed fingerprints in aggregate: {} vs {}",
            first.fingerprint, other.fingerprint
        )));
    }
    let aucs: Vec<f64> = results.iter().map(|r| r.auc).collect();
    let (mean_auc, std_auc) = mean_std(&aucs);
    Ok(Aggregate {
        mean_auc,
        std_auc,
        n_seeds: results.len(),
    })
}

/// Sample mean and `(n - 1)`-denominator standard deviation; std is 0 for one value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
