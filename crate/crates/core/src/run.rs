//! Pieces shared by the classical and quantum run engines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How a sampled run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// A terminal node was reached.
    Converged,
    /// `max_steps` transitions were taken without reaching a terminal node.
    StepLimitExhausted,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::StepLimitExhausted => "step-limit-exhausted",
        }
    }
}

/// Platform-independent generator for a given seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse-CDF choice over `weights` in their given order.
///
/// Zero weights are never chosen. `u` is scaled by the total weight so that
/// slightly sub-normalized lists still select something.
pub fn choose_index(weights: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cumulative += w;
        last_positive = Some(i);
        if u < cumulative {
            return Some(i);
        }
    }
    last_positive
}
