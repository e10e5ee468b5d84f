//! Deterministic random source shared by every stochastic law.
//!
//! All randomness in a run goes through [`RngState`]. The generator is
//! ChaCha8, which produces identical streams on every platform, so a seed plus
//! the sequence of draw requests determines every value bit for bit. Each draw
//! bumps a counter and can optionally be appended to a log for run traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probabilities must sum to one within this tolerance.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DrawError {
    #[error("cannot draw from an empty range")]
    EmptyRange,
    #[error("range has {values} values but distribution has {weights} weights")]
    LengthMismatch { values: usize, weights: usize },
    #[error("invalid probability {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("all weights are zero")]
    ZeroWeights,
    #[error("invalid interval [{lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// What a single draw produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawValue {
    Index(usize),
    Real(f64),
}

/// One entry of the draw log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub seq: u64,
    /// The raw uniform variate in `[0, 1)` the draw consumed.
    pub uniform: f64,
    pub value: DrawValue,
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer).
///
/// Used to derive per-trial and per-object substreams that are independent of
/// how trials or engines are scheduled.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
    draws: u64,
    log: Option<Vec<DrawRecord>>,
}

impl PartialEq for RngState {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.draws == other.draws && self.rng == other.rng
    }
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
            log: None,
        }
    }

    /// Independent stream `index` derived from `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::from_seed(derive_seed(seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Start recording every draw.
    pub fn enable_log(&mut self) {
        if self.log.is_none() {
            self.log = Some(Vec::new());
        }
    }

    pub fn is_logging(&self) -> bool {
        self.log.is_some()
    }

    /// Takes the records logged since the last call.
    pub fn take_log(&mut self) -> Vec<DrawRecord> {
        match self.log.as_mut() {
            Some(log) => std::mem::take(log),
            None => Vec::new(),
        }
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn record(&mut self, uniform: f64, value: DrawValue) {
        if let Some(log) = self.log.as_mut() {
            log.push(DrawRecord {
                seq: self.draws,
                uniform,
                value,
            });
        }
        self.draws += 1;
    }

    /// Draws an index from a discrete distribution that must already sum to 1.
    pub fn draw_discrete(&mut self, probabilities: &[f64]) -> Result<usize, DrawError> {
        validate_probabilities(probabilities)?;
        Ok(self.sample_index(probabilities, 1.0))
    }

    /// Draws an index with probability proportional to `weights`.
    pub fn draw_weighted(&mut self, weights: &[f64]) -> Result<usize, DrawError> {
        if weights.is_empty() {
            return Err(DrawError::EmptyRange);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DrawError::InvalidWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DrawError::ZeroWeights);
        }
        Ok(self.sample_index(weights, total))
    }

    /// `true` with probability `p`.
    pub fn draw_bernoulli(&mut self, p: f64) -> Result<bool, DrawError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DrawError::InvalidWeight { index: 0, value: p });
        }
        Ok(self.draw_discrete(&[p, 1.0 - p])? == 0)
    }

    /// Uniform real in `[lo, hi)`; `lo == hi` is the degenerate single point.
    pub fn draw_uniform(&mut self, lo: f64, hi: f64) -> Result<f64, DrawError> {
        if !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(DrawError::InvalidInterval { lo, hi });
        }
        let u = self.uniform();
        let value = if hi == lo { lo } else { lo + (hi - lo) * u };
        self.record(u, DrawValue::Real(value));
        Ok(value)
    }

    fn sample_index(&mut self, weights: &[f64], total: f64) -> usize {
        let u = self.uniform();
        let target = u * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            chosen = Some(i);
            if target < acc {
                break;
            }
        }
        // Rounding can leave `target` just above the accumulated sum; the last
        // positive-weight index is then the right answer.
        let index = chosen.expect("validated: at least one positive weight");
        self.record(u, DrawValue::Index(index));
        index
    }
}

fn validate_probabilities(probabilities: &[f64]) -> Result<(), DrawError> {
    if probabilities.is_empty() {
        return Err(DrawError::EmptyRange);
    }
    for (index, &value) in probabilities.iter().enumerate() {
        if !value.is_finite() || !(0.0..=1.0 + DISTRIBUTION_TOLERANCE).contains(&value) {
            return Err(DrawError::InvalidWeight { index, value });
        }
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(DrawError::NotNormalized { sum });
    }
    Ok(())
}

/// Draws one element of `values` according to `probabilities`.
pub fn random_draw<T: Clone>(
    values: &[T],
    probabilities: &[f64],
    rng: &mut RngState,
) -> Result<T, DrawError> {
    if values.is_empty() {
        return Err(DrawError::EmptyRange);
    }
    if values.len() != probabilities.len() {
        return Err(DrawError::LengthMismatch {
            values: values.len(),
            weights: probabilities.len(),
        });
    }
    let index = rng.draw_discrete(probabilities)?;
    Ok(values[index].clone())
}
