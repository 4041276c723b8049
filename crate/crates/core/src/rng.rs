//! Counter-based sampling streams.
//!
//! Every random draw is addressed by `(seed, stage tag, sample index)`, so a
//! sample's value never depends on how the index range is split among
//! workers. Floating sums over samples are reduced in fixed-size blocks,
//! in index order, for the same reason.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Block length of the ordered reductions in [`ordered_sum`].
pub const REDUCTION_BLOCK: usize = 4096;

/// Stage tags keep independent parts of one experiment on disjoint streams.
pub mod tags {
    pub const DEVIATION: u64 = 0x6465_7669;
    pub const LEMMA: u64 = 0x6c65_6d6d;
    pub const FLOW: u64 = 0x666c_6f77;
    pub const SPACE_AVERAGE: u64 = 0x7370_6176;
    pub const LIPSCHITZ: u64 = 0x6c69_7073;
}

#[derive(Clone)]
pub struct SampleStream {
    base: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64, tag: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&tag.to_le_bytes());
        Self {
            base: ChaCha8Rng::from_seed(key),
        }
    }

    /// Generator dedicated to one sample index.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }

    /// `d` uniform draws in `[0, 1)` for sample `index`.
    pub fn unit(&self, index: u64, out: &mut [f64]) {
        let mut rng = self.rng(index);
        for v in out.iter_mut() {
            *v = rng.random::<f64>();
        }
    }
}

/// Sum of `f(i)` for `i in 0..count`, bit-identical for any rayon pool size.
pub fn ordered_sum<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = count.div_ceil(REDUCTION_BLOCK);
    let partial: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCTION_BLOCK;
            let hi = (lo + REDUCTION_BLOCK).min(count);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}
