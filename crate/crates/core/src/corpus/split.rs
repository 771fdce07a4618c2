use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Dataset};

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

/// Seeded partition by dialog. Train and dev sizes are `round(ratio × n)`;
/// test receives the remainder.
pub fn split(data: &Dataset, ratios: [f64; 3], seed: u64) -> Result<Split, CorpusError> {
    if data.is_empty() {
        return Err(CorpusError::Empty);
    }
    if ratios.iter().any(|r| *r < 0.0 || !r.is_finite()) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidArgument(format!("split ratios {ratios:?} must be nonnegative and sum to 1")));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_dev = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
    let pick = |idx: &[usize]| Dataset::new(idx.iter().map(|&i| data.dialogs[i].clone()).collect());
    Ok(Split {
        train: pick(&order[..n_train]),
        dev: pick(&order[n_train..n_train + n_dev]),
        test: pick(&order[n_train + n_dev..]),
    })
}
