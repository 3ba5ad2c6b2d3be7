//! Input encodings: GATE (mesh-colors features), the multi-resolution hash
//! grid baseline, and one-blob encoding for directions.

mod gate;
mod hashgrid;
mod oneblob;

pub use gate::{gate_backward, gate_encode, init_features, FeatureStore, GradientRecords};
pub use hashgrid::{hash_index, HashGrid, HashGridConfig, HASH_PRIMES};
pub use oneblob::{dir_to_spherical, oneblob_encode, oneblob_encode_wrapped};

use std::hash::{BuildHasherDefault, Hasher};

/// Multiplicative hasher for `u32` slot keys.
#[derive(Default, Clone, Copy)]
pub struct SlotHasher(u64);

impl Hasher for SlotHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ b as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        }
    }

    #[inline]
    fn write_u32(&mut self, n: u32) {
        self.0 = (n as u64 ^ 0x5bd1_e995).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
}

pub type SlotMap<V> = std::collections::HashMap<u32, V, BuildHasherDefault<SlotHasher>>;
