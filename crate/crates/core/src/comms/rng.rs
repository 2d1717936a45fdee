//! Counter-based random streams.
//!
//! A draw is a pure function of `(seed, link, iteration, element, purpose)`,
//! so results do not depend on the order in which links or elements are
//! processed.

use rand::rand_core::impls;
use rand::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a sequence of words into one well-mixed key.
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |h, &w| mix64(h ^ mix64(w.wrapping_add(GOLDEN))))
}

/// What a draw is used for; distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Noise = 1,
    BadTrigger = 2,
    BadMagnitude = 3,
    Loss = 4,
}

/// A short RNG stream for one `(element, purpose)` of one link iteration.
#[derive(Debug, Clone)]
pub struct KeyedRng {
    key: u64,
    counter: u64,
}

impl KeyedRng {
    pub fn new(key: u64) -> Self {
        KeyedRng { key, counter: 0 }
    }
}

impl RngCore for KeyedRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

/// All draws of one link in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    pub seed: u64,
    pub link: u64,
    pub iteration: u64,
}

impl Stream {
    pub fn new(seed: u64, link: u64, iteration: u64) -> Self {
        Stream { seed, link, iteration }
    }

    pub fn rng(&self, element: u64, purpose: Purpose) -> KeyedRng {
        KeyedRng::new(hash_words(&[self.seed, self.link, self.iteration, element, purpose as u64]))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&self, element: u64, purpose: Purpose) -> f64 {
        (self.rng(element, purpose).next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
