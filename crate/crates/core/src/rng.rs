//! Keyed deterministic random streams.
//!
//! Every random quantity in the toolkit is drawn from a ChaCha stream whose
//! 256-bit key is the tuple `(seed, purpose, a, b)`. Streams are independent
//! of evaluation order, so a parallel map over draw indices reproduces the
//! sequential result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Domain separation tags for the different consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Baseline = 1,
    Noise = 2,
    Subsample = 3,
    Confusion = 4,
    CasePick = 5,
    VoteStream = 6,
    Profiles = 7,
    CaseSignal = 8,
    Shuffle = 9,
    Split = 10,
}

pub type StreamRng = ChaCha12Rng;

/// Opens the stream keyed by `(seed, purpose, a, b)`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Child seed for `(seed, purpose, a, b)`.
pub fn derive(seed: u64, purpose: Purpose, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    stream(seed, purpose, a, b).next_u64()
}

/// SplitMix64 finalizer, used to derive child seeds from a root seed.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
