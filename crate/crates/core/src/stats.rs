//! Seeded randomness and binomial confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gf::{Elem, Field};

/// The generator used everywhere; one independent stream per trial.
pub type TrialRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_elem(fs: &Field, rng: &mut impl Rng) -> Elem {
    Elem(rng.gen_range(0..fs.q()) as u8)
}

pub fn random_vec(fs: &Field, len: usize, rng: &mut impl Rng) -> Vec<Elem> {
    (0..len).map(|_| random_elem(fs, rng)).collect()
}

pub fn random_nonzero_vec(fs: &Field, len: usize, rng: &mut impl Rng) -> Vec<Elem> {
    loop {
        let v = random_vec(fs, len, rng);
        if v.iter().any(|x| !x.is_zero()) {
            return v;
        }
    }
}

const Z95: f64 = 1.959963984540054;

/// A success count with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Proportion {
        let rate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Proportion {
            successes,
            trials,
            rate,
            ci: wilson_halfwidth(successes, trials),
        }
    }
}

pub fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_value() {
        // 50/100: halfwidth ≈ 0.0962
        assert!((wilson_halfwidth(50, 100) - 0.0962).abs() < 1e-3);
        assert!(wilson_halfwidth(0, 100) > 0.0);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream_rng(7, 0).gen();
        let b: u64 = stream_rng(7, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, stream_rng(7, 0).gen::<u64>());
    }
}
