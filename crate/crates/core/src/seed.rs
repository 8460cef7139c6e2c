//! Labeled seed derivation.
//!
//! A single master seed fans out into independent substreams. Every derived
//! seed depends only on the master seed, a label, and a list of integer
//! coordinates, so the order in which records are processed never changes
//! what any record sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn derive(master: u64, label: &str, coords: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ label_hash(label));
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c));
    }
    h
}

pub fn rng(master: u64, label: &str, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, label, coords))
}
