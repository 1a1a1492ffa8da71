//! Seeded samplers shared by every generator and by the harness.
//!
//! All randomness flows through [`RngStream`], a ChaCha8 generator whose
//! 64-bit seed comes from the caller and whose ChaCha stream id is derived
//! from a text label (FNV-1a). Two streams with the same seed but different
//! labels are independent; the same `(seed, label)` pair always replays the
//! same sequence on every platform.
//!
//! Stream labels used by the crate:
//!
//! | label                | consumer                                  |
//! |----------------------|-------------------------------------------|
//! | `synthetic`          | [`crate::dataset::make_synthetic_clusters`] |
//! | `split`              | [`crate::dataset::split_train_test`]      |
//! | `carve`              | [`crate::dataset::carve_split`]           |
//! | `generate/<kind>`    | [`crate::augment::generate`] via harness  |
//! | `intrusion/<kind>`   | [`crate::harness::measure_intrusion`]     |

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled, seeded pseudo-random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    label: String,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a(label.as_bytes()));
        RngStream {
            rng,
            label: label.to_owned(),
        }
    }

    /// Substream for one parallel task of an operation.
    pub fn for_task(seed: u64, label: &str, task: u64) -> Self {
        Self::new(seed, &format!("{label}#{task}"))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in `[low, high)`.
    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.rng.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `d` i.i.d. `N(0, sigma²)` components. `sigma == 0` returns zeros
    /// without consuming the stream.
    pub fn gaussian_vec(&mut self, d: usize, noise: NoiseSpec) -> Vec<f64> {
        if noise.sigma() == 0.0 {
            return vec![0.0; d];
        }
        (0..d)
            .map(|_| noise.sigma() * self.standard_normal())
            .collect()
    }

    /// `Gamma(shape, 1)` by Marsaglia–Tsang; shapes below one are boosted to
    /// `shape + 1` and corrected by `U^(1/shape)`.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let boosted = self.gamma_large(shape + 1.0);
            // U in (0, 1] so the power correction never returns exactly zero
            let u = 1.0 - self.uniform();
            return boosted * u.powf(1.0 / shape);
        }
        self.gamma_large(shape)
    }

    fn gamma_large(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u > 0.0 && u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Symmetric `Beta(alpha, alpha)` draw via two Gamma variates.
    pub fn beta(&mut self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "Beta shape must be positive and finite, got {alpha}"
            )));
        }
        loop {
            let g1 = self.gamma(alpha);
            let g2 = self.gamma(alpha);
            let total = g1 + g2;
            if total > 0.0 && total.is_finite() {
                return Ok(g1 / total);
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }
}

/// Standard deviation of additive Gaussian noise, in standardized feature units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseSpec(f64);

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma >= 0.0 && sigma.is_finite() {
            Ok(NoiseSpec(sigma))
        } else {
            Err(Error::Config(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )))
        }
    }

    pub fn sigma(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for NoiseSpec {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        NoiseSpec::new(v)
    }
}

impl From<NoiseSpec> for f64 {
    fn from(n: NoiseSpec) -> f64 {
        n.0
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
