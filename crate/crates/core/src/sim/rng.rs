//! Seeded randomness for simulation runs.
//!
//! Every stream is a PCG-XSL-RR 128/64 (MCG variant) generator from
//! `rand_pcg`, seeded through `SeedableRng::seed_from_u64`. Both algorithms
//! are fixed and documented upstream, so a `(seed, stream)` pair yields the
//! same sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::timing::{Time, TimeInterval};

/// Independent streams so that server-side choices never perturb the
/// samples a client draws (paired comparisons rely on this).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stream {
    Server,
    Client(usize),
    Gates,
}

impl Stream {
    fn salt(self) -> u64 {
        match self {
            Stream::Server => 0x5e57_0000_0000_0001,
            Stream::Gates => 0x6a7e_0000_0000_0002,
            Stream::Client(i) => 0xc11e_0000_0000_0000 ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: Pcg64Mcg,
}

impl SimRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        Self { inner: Pcg64Mcg::seed_from_u64(seed ^ stream.salt()) }
    }

    /// Uniform integer in `[iv.lo, iv.hi]`.
    pub fn uniform(&mut self, iv: TimeInterval) -> Time {
        if iv.is_point() {
            return iv.lo();
        }
        self.inner.gen_range(iv.lo()..=iv.hi())
    }

    pub fn below(&mut self, n: usize) -> usize {
        if n <= 1 {
            return 0;
        }
        self.inner.gen_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.inner.gen::<bool>()
    }
}
