//! Keyed random substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream whose key
//! is a hash of the master seed and a path of integer labels (purpose tag,
//! replicate index, coordinate index, ...). A stream therefore depends only on
//! its position in the computation, never on which worker thread reaches it
//! first, so parallel and sequential runs produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used for all simulation and resampling work.
pub type StreamRng = ChaCha8Rng;

/// Purpose tags keeping unrelated consumers of one master seed apart.
pub mod tag {
    pub const BOOT_REPLICATE: u64 = 0x424f_4f54;
    pub const COORDINATE: u64 = 0x434f_4f52;
    pub const GLOBAL_REPLICATE: u64 = 0x474c_4f42;
    pub const PERMUTATION: u64 = 0x5045_524d;
    pub const DATASET: u64 = 0x4441_5441;
    pub const MEAN_BASELINE: u64 = 0x4d45_414e;
    pub const ARE: u64 = 0x4152_4521;
    pub const EXPERIMENT: u64 = 0x4558_5052;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a label path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

/// Opens the stream addressed by `(seed, path)`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    let key = derive_seed(seed, path);
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(key.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
