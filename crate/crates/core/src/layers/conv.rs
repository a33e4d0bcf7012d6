use ndarray::{Array3, Array5};
use num_complex::Complex64;
use rand::Rng;

use super::FeatureLayout;
use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::swsft::{coeff_index, SpinCoefficients};

/// Per-degree spectral filter taps `w[s_in, s_out, c_in, c_out, l]`.
///
/// Spherical convolution acts on each `(l, m)` independently, so a filter is a
/// set of complex taps per degree; taps below `max(|s_in|, |s_out|)` are kept
/// at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    input: FeatureLayout,
    output: FeatureLayout,
    band_limit: usize,
    weights: Array5<Complex64>,
}

impl FilterBank {
    /// Taps below each spin pair's floor are cleared.
    pub fn new(input: FeatureLayout, output: FeatureLayout, band_limit: usize, mut weights: Array5<Complex64>) -> Result<Self> {
        let expected = (
            input.spins.len(),
            output.spins.len(),
            input.channels_per_spin,
            output.channels_per_spin,
            band_limit,
        );
        if weights.dim() != expected {
            return Err(Error::ShapeMismatch(format!("filter taps {:?}, expected {expected:?}", weights.dim())));
        }
        for (si, s_in) in input.spins.iter().enumerate() {
            for (so, s_out) in output.spins.iter().enumerate() {
                let floor = (s_in.unsigned_abs().max(s_out.unsigned_abs()) as usize).min(band_limit);
                weights.slice_mut(ndarray::s![si, so, .., .., ..floor]).fill(Complex64::new(0.0, 0.0));
            }
        }
        Ok(Self { input, output, band_limit, weights })
    }

    /// Complex Gaussian taps scaled by `1 / sqrt(fan_in * L)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, input: FeatureLayout, output: FeatureLayout, band_limit: usize) -> Result<Self> {
        let fan_in = input.total_channels();
        let scale = 1.0 / ((fan_in * band_limit) as f64).sqrt();
        let shape = (input.spins.len(), output.spins.len(), input.channels_per_spin, output.channels_per_spin, band_limit);
        let weights = Array5::from_shape_simple_fn(shape, || complex_normal(rng) * scale);
        Self::new(input, output, band_limit, weights)
    }

    /// All-ones taps between matching spin and channel indices.
    pub fn identity(layout: FeatureLayout, band_limit: usize) -> Result<Self> {
        let (s, c) = (layout.spins.len(), layout.channels_per_spin);
        let weights = Array5::from_shape_fn((s, s, c, c, band_limit), |(si, so, ci, co, _)| {
            Complex64::new(if si == so && ci == co { 1.0 } else { 0.0 }, 0.0)
        });
        Self::new(layout.clone(), layout, band_limit, weights)
    }

    /// Degree-independent taps `w[s_in, s_out, c_in, c_out]` (a spectral 1x1 convolution).
    pub fn one_tap(input: FeatureLayout, output: FeatureLayout, band_limit: usize, taps: &ndarray::Array4<Complex64>) -> Result<Self> {
        let (a, b, c, d) = taps.dim();
        let weights = Array5::from_shape_fn((a, b, c, d, band_limit), |(si, so, ci, co, _)| taps[[si, so, ci, co]]);
        Self::new(input, output, band_limit, weights)
    }

    pub fn zeros(input: FeatureLayout, output: FeatureLayout, band_limit: usize) -> Result<Self> {
        let shape = (input.spins.len(), output.spins.len(), input.channels_per_spin, output.channels_per_spin, band_limit);
        Self::new(input, output, band_limit, Array5::zeros(shape))
    }

    pub fn input(&self) -> &FeatureLayout {
        &self.input
    }

    pub fn output(&self) -> &FeatureLayout {
        &self.output
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn weights(&self) -> &Array5<Complex64> {
        &self.weights
    }

    pub fn tap(&self, si: usize, so: usize, ci: usize, co: usize, l: usize) -> Complex64 {
        self.weights[[si, so, ci, co, l]]
    }
}

/// `out[s_out, c_out, l, m] = sum_{s_in, c_in} x[s_in, c_in, l, m] w[s_in, s_out, c_in, c_out, l]`.
pub fn spectral_conv(coeffs: &SpinCoefficients, bank: &FilterBank) -> Result<SpinCoefficients> {
    if coeffs.band_limit() != bank.band_limit {
        return Err(Error::SignatureMismatch(format!(
            "coefficients at band limit {} but filter at {}",
            coeffs.band_limit(),
            bank.band_limit
        )));
    }
    bank.input.check(coeffs.spins(), "spectral_conv input")?;
    let band_limit = bank.band_limit;
    let (c_in, c_out) = (bank.input.channels_per_spin, bank.output.channels_per_spin);
    let out_spins = bank.output.channel_spins();
    let batch = coeffs.batch();
    let mut out = Array3::zeros((batch, out_spins.len(), band_limit * band_limit));
    let data = coeffs.data();
    for b in 0..batch {
        for (so, &s_out) in bank.output.spins.iter().enumerate() {
            for co in 0..c_out {
                let oc = so * c_out + co;
                for l in s_out.unsigned_abs() as usize..band_limit {
                    let li = l as i64;
                    for si in 0..bank.input.spins.len() {
                        for ci in 0..c_in {
                            let w = bank.weights[[si, so, ci, co, l]];
                            if w == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            let ic = si * c_in + ci;
                            for m in -li..=li {
                                let idx = coeff_index(l, m);
                                out[[b, oc, idx]] += data[[b, ic, idx]] * w;
                            }
                        }
                    }
                }
            }
        }
    }
    SpinCoefficients::new(out, out_spins, band_limit)
}
