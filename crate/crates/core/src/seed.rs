//! Stable seed derivation.
//!
//! Every stochastic stage derives its stream from a master seed plus a path of
//! labels and indices, so that parallel work reduces deterministically and the
//! result does not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Builder for derived seeds: `SeedPath::new(master).label("trial").index(7).seed()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPath(u64);

impl SeedPath {
    pub fn new(master: u64) -> Self {
        SeedPath(splitmix64(master))
    }

    pub fn label(self, label: &str) -> Self {
        SeedPath(splitmix64(self.0 ^ fnv1a(label.as_bytes())))
    }

    pub fn index(self, i: u64) -> Self {
        SeedPath(splitmix64(self.0 ^ splitmix64(i.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> Rng {
        Rng::seed_from_u64(self.0)
    }
}

/// Seed for trial `trial` of document `doc_id` under `master`.
pub fn trial_seed(master: u64, doc_id: &str, trial: u64) -> u64 {
    SeedPath::new(master).label(doc_id).index(trial).seed()
}
