//! Deterministic normal streams keyed by `(seed, component, rep)`.
//!
//! Each key selects an independent ChaCha8 keystream; the draw index is the
//! position within that keystream. The same key always yields the same draws,
//! whichever thread consumes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Which model innovation a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Signal = 0,
    Noise = 1,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal stream for one `(seed, component, rep, channel)` key.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, component: u64, rep: u64, channel: Channel) -> Self {
        let mut key = [0u8; 32];
        let words = [
            splitmix64(seed),
            splitmix64(seed ^ splitmix64(component.wrapping_add(1))),
            splitmix64(seed ^ splitmix64(rep.wrapping_add(0x5151_5151))),
            splitmix64(component.rotate_left(32) ^ rep),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(channel as u64);
        Self { rng }
    }

    pub fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// `len` draws scaled by `std_dev`.
    pub fn normals(&mut self, len: usize, std_dev: f64) -> Vec<f64> {
        (0..len).map(|_| std_dev * self.next_normal()).collect()
    }
}
