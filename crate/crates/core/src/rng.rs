//! Seeded random stream shared by a run.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Single-owner random stream. Counts how many domain points were drawn
/// through it so the candidate budget of a run can be audited.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha8Rng,
    domain_draws: u64,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            domain_draws: 0,
        }
    }

    /// Independent stream `stream` of the generator seeded with `seed`.
    /// Used for per-probe and per-pixel tie breaking.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            domain_draws: 0,
        }
    }

    pub fn domain_draws(&self) -> u64 {
        self.domain_draws
    }

    pub(crate) fn note_domain_draw(&mut self) {
        self.domain_draws += 1;
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.inner.try_fill_bytes(dest)
    }
}

/// splitmix64 finalizer; cheap deterministic hashing of indices and seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
