//! Seeded randomness shared by the harness, the benchmarks and the tests.

use ndarray::Array3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::swsft::{coeff_index, SpinCoefficients};

pub type SwirlRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SwirlRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-variance circular complex Gaussian.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random coefficients with every admissible `(l, m)` populated.
pub fn random_coefficients<R: rand::Rng + ?Sized>(
    rng: &mut R,
    batch: usize,
    spins: &[i32],
    band_limit: usize,
) -> SpinCoefficients {
    let mut data = Array3::zeros((batch, spins.len(), band_limit * band_limit));
    for b in 0..batch {
        for (c, &s) in spins.iter().enumerate() {
            for l in s.unsigned_abs() as usize..band_limit {
                let li = l as i64;
                for m in -li..=li {
                    data[[b, c, coeff_index(l, m)]] = complex_normal(rng);
                }
            }
        }
    }
    SpinCoefficients::new(data, spins.to_vec(), band_limit).expect("generated coefficients are valid")
}
