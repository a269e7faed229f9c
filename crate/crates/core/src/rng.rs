//! Seeded, independent random streams.
//!
//! Each stochastic consumer draws from its own ChaCha stream derived from the
//! run seed and a fixed stream id, so adding draws in one consumer never shifts
//! the values another consumer sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::link::LinkId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Drop(LinkId),
    Delay(LinkId),
    FdiRandom(LinkId),
    LoadAlterRandom,
    ConsumptionNoise,
    SyntheticConsumption,
}

impl StreamId {
    fn index(self) -> u64 {
        let link = |l: LinkId| match l {
            LinkId::S2c => 0,
            LinkId::C2b => 1,
            LinkId::B2cStatus => 2,
        };
        match self {
            StreamId::Drop(l) => 0x10 + link(l),
            StreamId::Delay(l) => 0x20 + link(l),
            StreamId::FdiRandom(l) => 0x30 + link(l),
            StreamId::LoadAlterRandom => 0x40,
            StreamId::ConsumptionNoise => 0x50,
            StreamId::SyntheticConsumption => 0x60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(id.index());
        RngStream { seed, id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform in `[lo, hi]`. A degenerate interval returns `lo` but still
    /// consumes a draw so the stream position only depends on the call count.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit();
        if hi <= lo {
            lo
        } else {
            lo + (hi - lo) * u
        }
    }

    /// Bernoulli trial. Always consumes exactly one draw.
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
