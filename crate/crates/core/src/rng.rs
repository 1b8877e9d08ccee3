//! Portable counter-based pseudo-random scheme.
//!
//! Everything random in this crate (logit tables, start tokens, sampling
//! draws) comes from the functions below, so results are reproducible
//! bit-for-bit from seeds alone. The scheme is SplitMix64 used in
//! counter mode:
//!
//! ```text
//! GOLDEN = 0x9E3779B97F4A7C15
//! mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            return z ^ (z >> 31)                       (all arithmetic mod 2^64)
//! derive(key, word) = mix64(key ^ mix64(word + GOLDEN))
//! draw(key, n)      = mix64(key + (n + 1) * GOLDEN)      n = 0, 1, 2, ...
//! uniform(bits)     = (bits >> 11) * 2^-53               in [0, 1)
//! normal(key, n)    = sqrt(-2 ln(1 - uniform(draw(key, 2n))))
//!                     * cos(2 pi uniform(draw(key, 2n + 1)))
//! ```
//!
//! `draw(key, n)` equals the `n + 1`-th output of a SplitMix64 generator
//! seeded with `key`.

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags keep the streams of unrelated uses apart.
pub(crate) mod domain {
    pub const MODEL: u64 = 0x6d6f_6465_6c00_0001;
    pub const TEXT: u64 = 0x7465_7874_0000_0002;
    pub const SAMPLING: u64 = 0x7361_6d70_6c65_0003;
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive(key: u64, word: u64) -> u64 {
    mix64(key ^ mix64(word.wrapping_add(GOLDEN)))
}

#[inline]
pub fn draw(key: u64, counter: u64) -> u64 {
    mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[inline]
pub fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal deviate number `index` of stream `key` (Box-Muller,
/// cosine branch only).
pub fn normal(key: u64, index: u64) -> f64 {
    let u1 = 1.0 - to_unit(draw(key, 2 * index));
    let u2 = to_unit(draw(key, 2 * index + 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sequential view of one stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw(self.key, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    pub fn draws_consumed(&self) -> u64 {
        self.counter
    }
}
