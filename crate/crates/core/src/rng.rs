//! Seeded random streams used for initial conditions and conditioning
//! vectors.
//!
//! The construction is fixed so that a seed determines a sample in any
//! language:
//!
//! * a stream seeded with `s` is xoshiro256** whose 256-bit state is four
//!   consecutive outputs of SplitMix64 started at state `s` (little-endian);
//! * a unit real is `(next_u64 >> 11) * 2^-53`, i.e. uniform on `[0, 1)`
//!   with a 53-bit mantissa;
//! * child seeds are `mix(mix(master ^ tag) ^ index)` where `mix(x)` is the
//!   first SplitMix64 output from state `x`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};

/// Identifier recorded in dataset manifests.
pub const ALGORITHM_ID: &str = "xoshiro256starstar-splitmix64-v1";

/// Tag for streams that sample initial conditions.
pub const TAG_INITIAL: u64 = 0x1c1c_0000_0000_0001;
/// Tag for streams that sample conditioning vectors.
pub const TAG_CONDITIONING: u64 = 0xc0c0_0000_0000_0002;

const UNIT_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

fn mix(x: u64) -> u64 {
    SplitMix64::from_seed(x.to_le_bytes()).next_u64()
}

/// Derives the seed of child stream `index` of `master` under `tag`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    mix(mix(master ^ tag) ^ index)
}

pub struct Stream {
    rng: Xoshiro256StarStar,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut expand = SplitMix64::from_seed(seed.to_le_bytes());
        let mut state = [0u8; 32];
        for chunk in state.chunks_exact_mut(8) {
            chunk.copy_from_slice(&expand.next_u64().to_le_bytes());
        }
        Self {
            rng: Xoshiro256StarStar::from_seed(state),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT_SCALE
    }

    /// Uniform on `[2^-53, 1)`: the unit draw with zero replaced by the
    /// smallest positive value of the 53-bit lattice.
    pub fn next_open_unit(&mut self) -> f64 {
        let u = self.next_unit();
        if u == 0.0 {
            UNIT_SCALE
        } else {
            u
        }
    }

    /// Uniform integer in `lo..=hi`, computed as `lo + floor(u * (hi - lo + 1))`.
    pub fn next_int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        let span = (hi - lo + 1) as f64;
        lo + ((self.next_unit() * span) as usize).min(hi - lo)
    }
}
