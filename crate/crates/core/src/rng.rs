//! Reproducible random streams on top of ChaCha8.
//!
//! One 64-bit seed keys every stream. ChaCha's 64-bit stream id selects an
//! independent sequence, and its block counter makes every draw addressable:
//!
//! | domain             | stream id                     |
//! |--------------------|-------------------------------|
//! | Brownian path `p`  | `p`                           |
//! | Player 1 wealth `i`| `2^63 + i`                    |
//! | Player 2 wealth `i`| `2^63 + 2^62 + i`             |
//!
//! Within a path stream, the normal for `(step, asset)` is draw number
//! `step * n + asset`, and draw `k` consumes exactly two `u64` words starting
//! at word position `4 k` (ChaCha words are 32-bit). Results therefore do not
//! depend on how paths are scheduled across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const PLAYER_ONE_BASE: u64 = 1 << 63;
const PLAYER_TWO_BASE: u64 = (1 << 63) | (1 << 62);
const WORDS_PER_DRAW: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Path,
    PlayerOneWealth,
    PlayerTwoWealth,
}

impl Domain {
    fn stream_id(self, index: u64) -> u64 {
        assert!(index < 1 << 62, "stream index out of range");
        match self {
            Domain::Path => index,
            Domain::PlayerOneWealth => PLAYER_ONE_BASE | index,
            Domain::PlayerTwoWealth => PLAYER_TWO_BASE | index,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(domain.stream_id(index));
        Self { rng }
    }

    /// Positions the stream at draw `k`.
    pub fn seek(&mut self, draw: u64) {
        self.rng.set_word_pos(draw as u128 * WORDS_PER_DRAW);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// One draw: a uniform from the first word of the pair, the second word
    /// is discarded so that every draw has the same width.
    pub fn uniform_draw(&mut self) -> f64 {
        let u = self.uniform();
        self.rng.next_u64();
        u
    }

    /// Standard normal by Box-Muller (cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
