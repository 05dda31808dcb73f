//! Deterministic dataset partitioning.
//!
//! Splitting happens at scenario granularity, never per frame: consecutive
//! frames of one recording are strongly correlated, so shuffling frames
//! across splits would leak the test set into training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub test: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 1.0,
            test: 0.0,
            validation: 0.0,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<(), RunError> {
        let parts = [self.train, self.test, self.validation];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(RunError::Config(format!(
                "split fractions must each lie in [0, 1], got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(RunError::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Index lists of one partition; disjoint and covering, each sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Shuffles `0..count` with the seed and cuts it at the rounded fraction
/// boundaries: train first, then test, validation takes the remainder.
pub fn split_dataset(
    count: usize,
    fractions: &SplitFractions,
    seed: u64,
) -> Result<Split, RunError> {
    fractions.validate()?;
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = (((count as f64) * fractions.train).round() as usize).min(count);
    let n_test = (((count as f64) * fractions.test).round() as usize).min(count - n_train);

    let mut train: Vec<usize> = order[..n_train].to_vec();
    let mut test: Vec<usize> = order[n_train..n_train + n_test].to_vec();
    let mut validation: Vec<usize> = order[n_train + n_test..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    validation.sort_unstable();
    Ok(Split {
        train,
        test,
        validation,
    })
}
