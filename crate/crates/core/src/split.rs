//! Sequence-level train/validation/test splitting.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("need at least {min} sequences to split, got {got}")]
    TooFewSequences { min: usize, got: usize },
    #[error("split ratios must be non-negative and sum to 1, got {0}, {1}, {2}")]
    BadRatios(f64, f64, f64),
}

pub const MIN_SEQUENCES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.8, val: 0.1, test: 0.1, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), SplitError> {
        let r = [self.train, self.val, self.test];
        let ok = r.iter().all(|v| v.is_finite() && *v >= 0.0)
            && libm::fabs(r.iter().sum::<f64>() - 1.0) <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(SplitError::BadRatios(self.train, self.val, self.test))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Shuffles whole items (sequences) with a seeded ChaCha8 stream and cuts the
/// result by ratio. Train and validation sizes are rounded; test takes the
/// remainder, so each size is within one item of its exact share.
pub fn split<T>(mut items: Vec<T>, spec: &SplitSpec) -> Result<Splits<T>, SplitError> {
    spec.validate()?;
    let n = items.len();
    if n < MIN_SEQUENCES {
        return Err(SplitError::TooFewSequences { min: MIN_SEQUENCES, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    items.shuffle(&mut rng);
    let n_train = (libm::round(n as f64 * spec.train) as usize).min(n);
    let n_val = (libm::round(n as f64 * spec.val) as usize).min(n - n_train);
    let mut rest = items.split_off(n_train);
    let test = rest.split_off(n_val);
    Ok(Splits { train: items, val: rest, test })
}
