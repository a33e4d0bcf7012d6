use ndarray::{s, Array3};

use crate::error::{Error, Result};
use crate::swsft::SpinCoefficients;

/// Keeps degrees below `new_band_limit`.
pub fn spectral_pool(coeffs: &SpinCoefficients, new_band_limit: usize) -> Result<SpinCoefficients> {
    let band_limit = coeffs.band_limit();
    if new_band_limit == 0 || new_band_limit > band_limit {
        return Err(Error::InvalidBandLimit(new_band_limit as i64));
    }
    if let Some(&spin) = coeffs.spins().iter().find(|s| (s.unsigned_abs() as usize) >= new_band_limit) {
        return Err(Error::UnsupportedSpin { spin, band_limit: new_band_limit });
    }
    let data = coeffs.data().slice(s![.., .., ..new_band_limit * new_band_limit]).to_owned();
    SpinCoefficients::new(data, coeffs.spins().to_vec(), new_band_limit)
}

/// Zero-pads degrees up to `new_band_limit`.
pub fn spectral_unpool(coeffs: &SpinCoefficients, new_band_limit: usize) -> Result<SpinCoefficients> {
    let band_limit = coeffs.band_limit();
    if new_band_limit < band_limit {
        return Err(Error::InvalidBandLimit(new_band_limit as i64));
    }
    let (b, c, k) = coeffs.data().dim();
    let mut data = Array3::zeros((b, c, new_band_limit * new_band_limit));
    data.slice_mut(s![.., .., ..k]).assign(coeffs.data());
    SpinCoefficients::new(data, coeffs.spins().to_vec(), new_band_limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_coefficients, seeded};

    #[test]
    fn pool_identity_and_projection() {
        let x = random_coefficients(&mut seeded(1), 2, &[0, 1], 8);
        assert_eq!(spectral_pool(&x, 8).unwrap(), x);
        let p = spectral_unpool(&spectral_pool(&x, 4).unwrap(), 8).unwrap();
        for l in 0..8usize {
            for m in -(l as i64)..=l as i64 {
                let expect = if l < 4 { x.get(1, 1, l, m) } else { 0.0.into() };
                assert_eq!(p.get(1, 1, l, m), expect);
            }
        }
        let pp = spectral_unpool(&spectral_pool(&p, 4).unwrap(), 8).unwrap();
        assert_eq!(p, pp);
    }

    #[test]
    fn unpool_then_pool() {
        let x = random_coefficients(&mut seeded(2), 1, &[0, -2], 5);
        assert_eq!(spectral_unpool(&x, 5).unwrap(), x);
        assert_eq!(spectral_pool(&spectral_unpool(&x, 9).unwrap(), 5).unwrap(), x);
    }

    #[test]
    fn errors() {
        let x = random_coefficients(&mut seeded(3), 1, &[0, 3], 8);
        assert!(spectral_pool(&x, 9).is_err());
        assert!(spectral_pool(&x, 0).is_err());
        assert!(matches!(spectral_pool(&x, 2), Err(Error::UnsupportedSpin { spin: 3, .. })));
        assert!(spectral_pool(&x, 3).is_err());
        assert!(spectral_pool(&x, 4).is_ok());
        assert!(spectral_unpool(&x, 7).is_err());
    }
}
