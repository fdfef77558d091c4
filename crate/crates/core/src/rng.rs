//! Keyed random streams.
//!
//! Every Monte-Carlo draw is taken from a ChaCha8 stream selected by
//! `(master_seed, trial, lane)`, so the outcome of a trial does not depend on
//! how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Lane reserved for the channel realisation of a trial.
pub const PROFILE_LANE: u64 = 0;

/// First lane used for noise; SNR point `i` uses `NOISE_LANE + i`.
pub const NOISE_LANE: u64 = 1;

/// Generator for one `(trial, lane)` pair under `master_seed`.
pub fn stream(master_seed: u64, trial: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((trial << 16) ^ lane);
    rng
}
