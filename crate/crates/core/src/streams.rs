//! Deterministic per-trial random streams.
//!
//! Every random quantity in a trial comes from a ChaCha8 stream whose key is
//! derived from `(master_seed, purpose)` and whose 64-bit stream id is the
//! trial index. Within the damage stream, the `k`-th draw belongs to line
//! ordinal `k`. The result of a trial is therefore fixed by
//! `(master_seed, trial_index)` alone, whatever order or thread it runs on,
//! and two network configurations with the same line list see the same
//! uniforms line by line (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DAMAGE: u64 = 0x6461_6d61_6765_0001;
const ASSESSMENT: u64 = 0x6173_7365_7373_0002;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn keyed_stream(master_seed: u64, purpose: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = master_seed ^ purpose;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Random streams owned by one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    pub master_seed: u64,
    pub trial: u64,
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        TrialStreams { master_seed, trial }
    }

    /// Uniforms for line failure draws, one per line in ordinal order.
    pub fn damage(&self) -> ChaCha8Rng {
        keyed_stream(self.master_seed, DAMAGE, self.trial)
    }

    /// Uniforms for the damage-assessment multiplier.
    pub fn assessment(&self) -> ChaCha8Rng {
        keyed_stream(self.master_seed, ASSESSMENT, self.trial)
    }
}
