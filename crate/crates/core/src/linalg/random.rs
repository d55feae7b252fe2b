use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Matrix;

/// Seed for the Gaussian generator.
///
/// Streams come from ChaCha8 (a counter-based generator) keyed by
/// `ChaCha8Rng::seed_from_u64(seed)`; normal deviates use the ziggurat
/// transform of `rand_distr::StandardNormal`. Identical seeds give identical
/// streams within this implementation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent child seed for sub-stream `stream` (SplitMix64 finalizer).
    pub fn derive(self, stream: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// `rows × cols` matrix of i.i.d. standard normal entries, filled column-major.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: RngSeed) -> Matrix {
    let mut rng = seed.rng();
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Matrix::from_vec(rows, cols, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let a = gaussian_matrix(7, 3, RngSeed(42));
        let b = gaussian_matrix(7, 3, RngSeed(42));
        assert_eq!(a.shape(), (7, 3));
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn seeds_differ() {
        let a = gaussian_matrix(100, 1, RngSeed(1));
        let b = gaussian_matrix(100, 1, RngSeed(2));
        assert!(a.iter().zip(b.iter()).any(|(x, y)| x != y));
        assert_ne!(RngSeed(5).derive(0), RngSeed(5).derive(1));
        assert_ne!(RngSeed(5).derive(0), RngSeed(6).derive(0));
    }

    #[test]
    fn sample_moments() {
        let g = gaussian_matrix(1000, 1000, RngSeed(7));
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        let var = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.01, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }
}
