//! Seeded packet loss and reordering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StreamError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpairConfig {
    pub drop_probability: f64,
    /// Largest distance a packet may move later in the sequence.
    pub reorder_window: usize,
    pub seed: u64,
}

impl Default for ImpairConfig {
    fn default() -> Self {
        ImpairConfig { drop_probability: 0.0, reorder_window: 0, seed: 0 }
    }
}

/// Drops each packet independently, then reorders the survivors by sorting
/// on `index + uniform(0..=window)`. Ties keep their original order.
pub fn impair<T>(packets: Vec<T>, cfg: &ImpairConfig) -> Result<Vec<T>, StreamError> {
    if !(0.0..=1.0).contains(&cfg.drop_probability) {
        return Err(StreamError::InvalidParameter(format!(
            "drop probability {} outside [0, 1]",
            cfg.drop_probability
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut keyed: Vec<(usize, T)> = packets
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let drop = rng.random_bool(cfg.drop_probability);
            let jitter = rng.random_range(0..=cfg.reorder_window);
            (!drop).then_some((i + jitter, p))
        })
        .collect();
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, p)| p).collect())
}
