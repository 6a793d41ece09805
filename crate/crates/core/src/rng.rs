//! Reproducible random streams.
//!
//! Every replication owns an [`RngStream`] identified by `(seed, stream)`.
//! Edge decisions use [`EdgeUniforms`], a counter-based generator keyed by
//! the unordered vertex-id pair, so that coupled graphs built over the same
//! vertex ids see the same uniform for the same pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream for replication `index`, distinct from every other child
    /// of this stream and from the parent.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: mix64(self.stream ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    /// Independent stream for a named purpose (e.g. "direct" vs "reweight").
    pub fn labelled(&self, label: &str) -> RngStream {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        RngStream {
            seed: mix64(self.seed ^ h),
            stream: self.stream,
        }
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based uniforms `Z_{ij}` for unordered vertex-id pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeUniforms {
    key: u64,
}

impl EdgeUniforms {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    pub fn from_rng<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        Self { key: rng.gen() }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Uniform in `[0, 1)`, symmetric in `(a, b)`.
    #[inline]
    pub fn uniform(&self, a: u64, b: u64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let h = mix64(mix64(self.key ^ mix64(lo)) ^ hi.rotate_left(17));
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
