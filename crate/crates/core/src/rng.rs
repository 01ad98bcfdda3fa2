//! Seeded random streams.
//!
//! All randomness in the crate comes from ChaCha20 (`rand_chacha::ChaCha20Rng`)
//! seeded through `SeedableRng::seed_from_u64`, which expands the 64-bit seed
//! into the 256-bit key with the PCG32 procedure documented by `rand_core`.
//! Both are portable and platform independent.
//!
//! Standard normal variates are produced by the Box-Muller transform on two
//! consecutive 64-bit outputs `a`, `b`:
//!
//! ```text
//! u1 = ((a >> 11) + 1) * 2^-53        in (0, 1]
//! u2 =  (b >> 11)      * 2^-53        in [0, 1)
//! r  = sqrt(-2 ln u1)
//! z0 = r cos(2 pi u2),  z1 = r sin(2 pi u2)
//! ```
//!
//! `z0` is returned first, then `z1`, then the next pair is drawn.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type SeededRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Mixes a master seed with a stream index (SplitMix64 finalizer), used to
/// give independent substreams to parallel work items.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Standard normal generator on top of a ChaCha20 stream.
pub struct NormalStream<R: RngCore = SeededRng> {
    rng: R,
    spare: Option<f64>,
}

impl NormalStream<SeededRng> {
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seeded(seed))
    }
}

impl<R: RngCore> NormalStream<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = ((a >> 11) + 1) as f64 * INV_2_53;
        let u2 = (b >> 11) as f64 * INV_2_53;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}
