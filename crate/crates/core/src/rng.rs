//! Counter-based Gaussian variates.
//!
//! Stream `s` under seed `seed` is the ChaCha8 keystream with key derived
//! from `seed` and stream number `s`, mapped to `N(0, 1)` by the ziggurat
//! method. Every stream is a pure function of `(seed, s)`, independent of
//! which thread reads it or in what order streams are visited.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Sequential reader over one stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Next `N(0, 1)` variate.
    #[inline]
    pub fn next_standard(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let draw = |seed, stream| {
            let mut s = NormalStream::new(seed, stream);
            (0..33).map(|_| s.next_standard().to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42, 7), draw(42, 7));
        assert_ne!(draw(42, 7), draw(42, 8));
        assert_ne!(draw(42, 7), draw(43, 7));
    }

    #[test]
    fn moments_are_standard_normal() {
        let mut s = NormalStream::new(2024, 3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.next_standard()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let kurt = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let nf = n as f64;
        assert!(mean.abs() < 4.0 / nf.sqrt(), "{mean}");
        assert!((var - 1.0).abs() < 4.0 * (2.0 / nf).sqrt(), "{var}");
        assert!((kurt - 3.0).abs() < 4.0 * (96.0 / nf).sqrt(), "{kurt}");
    }

    #[test]
    fn tail_frequencies_match() {
        let mut s = NormalStream::new(9, 0);
        let n = 400_000;
        let beyond = (0..n).filter(|_| s.next_standard().abs() > 2.5).count() as f64 / n as f64;
        // P(|Z| > 2.5) = 0.012419
        let p = 0.012419;
        assert!((beyond - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{beyond}");
    }
}
