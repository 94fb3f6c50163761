//! Counter-based Gaussian noise.
//!
//! Every forcing direction owns an independent ChaCha8 stream selected by
//! `(seed, stream)`; step `s` of that stream always consumes key-stream words
//! `4s .. 4s + 4`, so the normal drawn at `(seed, stream, step)` does not
//! depend on how runs are scheduled and can be regenerated by seeking.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS_PER_STEP: u128 = 4;

#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Positions the stream so the next draw is the one for `step`.
    pub fn seek(&mut self, step: u64) {
        self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
    }

    /// Standard normal via Box-Muller; exactly two 64-bit words per draw.
    pub fn next_normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Random access to the normal at `(seed, stream, step)`.
    pub fn normal_at(seed: u64, stream: u64, step: u64) -> f64 {
        let mut s = Self::new(seed, stream);
        s.seek(step);
        s.next_normal()
    }
}

/// Brownian increments `dW^k ~ N(0, dt)` for `count` independent directions.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    streams: Vec<GaussianStream>,
    sqrt_dt: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, count: usize, dt: f64) -> Self {
        Self {
            streams: (0..count as u64).map(|k| GaussianStream::new(seed, k)).collect(),
            sqrt_dt: dt.sqrt(),
        }
    }

    pub fn count(&self) -> usize {
        self.streams.len()
    }

    pub fn next_increments(&mut self, out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(self.streams.iter_mut()) {
            *o = self.sqrt_dt * s.next_normal();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_matches_random_access() {
        let mut s = GaussianStream::new(7, 3);
        for step in 0..50 {
            assert_eq!(s.next_normal(), GaussianStream::normal_at(7, 3, step));
        }
    }

    #[test]
    fn streams_differ() {
        let a = GaussianStream::normal_at(1, 0, 0);
        let b = GaussianStream::normal_at(1, 1, 0);
        let c = GaussianStream::normal_at(2, 0, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn moments_are_standard() {
        let mut s = GaussianStream::new(11, 0);
        let n = 200_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = s.next_normal();
            m1 += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        let n = n as f64;
        assert!((m1 / n).abs() < 0.01);
        assert!((m2 / n - 1.0).abs() < 0.015);
        assert!((m4 / n - 3.0).abs() < 0.08);
    }
}
