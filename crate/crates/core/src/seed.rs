//! Counter-based seed derivation.
//!
//! Every experiment takes one root seed. Trial `i` draws from its own ChaCha
//! stream, so results do not depend on how trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ExperimentRng = ChaCha8Rng;

/// Generator for trial `trial` of the experiment rooted at `root`.
pub fn trial_rng(root: u64, trial: u64) -> ExperimentRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(trial);
    rng
}

/// Deterministic sub-seed, for APIs that take a seed rather than a generator.
pub fn derive_seed(root: u64, trial: u64) -> u64 {
    use rand::RngCore;
    trial_rng(root, trial).next_u64()
}
