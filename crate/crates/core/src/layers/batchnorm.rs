use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::swsft::SpinCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Train,
    Eval,
}

/// Per-channel statistics and affine parameters for spectral batch norm.
///
/// `bias` is the value the output function takes on average; it only
/// applies to spin-0 channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormState {
    running_variance: Option<Vec<f64>>,
    pub scale: Vec<f64>,
    pub bias: Vec<Complex64>,
    momentum: f64,
    epsilon: f64,
}

impl BatchNormState {
    pub const DEFAULT_EPSILON: f64 = 1e-5;
    pub const DEFAULT_MOMENTUM: f64 = 0.9;

    pub fn new(channels: usize) -> Self {
        Self {
            running_variance: None,
            scale: vec![1.0; channels],
            bias: vec![Complex64::new(0.0, 0.0); channels],
            momentum: Self::DEFAULT_MOMENTUM,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn with_hyperparameters(channels: usize, momentum: f64, epsilon: f64) -> Result<Self> {
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(Error::InvalidParameter(format!("momentum {momentum} outside (0, 1)")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
        }
        Ok(Self { momentum, epsilon, ..Self::new(channels) })
    }

    /// Frozen statistics, for evaluation.
    pub fn with_running_variance(mut self, variance: Vec<f64>) -> Result<Self> {
        if variance.len() != self.scale.len() {
            return Err(Error::ShapeMismatch(format!("{} variances for {} channels", variance.len(), self.scale.len())));
        }
        if variance.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidParameter("running variance must be nonnegative".into()));
        }
        self.running_variance = Some(variance);
        Ok(self)
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }

    pub fn running_variance(&self) -> Option<&[f64]> {
        self.running_variance.as_deref()
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Batch-mean of the per-channel variance, computed from coefficients.
///
/// By Parseval this is the spatial variance of each function around its mean
/// over the sphere (normalized by the area `4 pi`).
pub fn spectral_variance(coeffs: &SpinCoefficients) -> Array1<f64> {
    let (batch, channels, _) = coeffs.data().dim();
    let data = coeffs.data();
    Array1::from_shape_fn(channels, |c| {
        let mut total = 0.0;
        for b in 0..batch {
            // index 0 is the (0, 0) mean slot; it is zero anyway for nonzero spins
            total += data.slice(ndarray::s![b, c, 1..]).iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        if batch == 0 {
            0.0
        } else {
            total / (4.0 * PI * batch as f64)
        }
    })
}

pub fn spectral_batch_norm(coeffs: &SpinCoefficients, state: &BatchNormState, mode: NormMode) -> Result<(SpinCoefficients, BatchNormState)> {
    let channels = coeffs.channels();
    if state.channels() != channels {
        return Err(Error::ShapeMismatch(format!("batch norm state for {} channels, input has {channels}", state.channels())));
    }
    let mut next = state.clone();
    let variance: Vec<f64> = match mode {
        NormMode::Train => {
            if coeffs.batch() == 0 {
                return Err(Error::InvalidParameter("train mode needs a nonempty batch".into()));
            }
            let batch_var = spectral_variance(coeffs).to_vec();
            next.running_variance = Some(match &state.running_variance {
                None => batch_var.clone(),
                Some(run) => run.iter().zip(&batch_var).map(|(r, v)| state.momentum * r + (1.0 - state.momentum) * v).collect(),
            });
            batch_var
        }
        NormMode::Eval => state.running_variance.clone().ok_or(Error::UninitializedStatistics)?,
    };
    let mut data = coeffs.data().clone();
    let root = (4.0 * PI).sqrt();
    for (c, &spin) in coeffs.spins().iter().enumerate() {
        let factor = state.scale[c] / (variance[c] + state.epsilon).sqrt();
        let mut lane = data.slice_mut(ndarray::s![.., c, ..]);
        lane.mapv_inplace(|v| v * factor);
        if spin == 0 {
            lane.column_mut(0).fill(state.bias[c] * root);
        }
    }
    Ok((SpinCoefficients::from_parts_unchecked(data, coeffs.spins().to_vec(), coeffs.band_limit()), next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_coefficients, seeded};

    #[test]
    fn constant_maps_to_bias() {
        let mut x = SpinCoefficients::zeros(1, vec![0], 4).unwrap();
        x.set(0, 0, 0, 0, Complex64::new(3.0 * (4.0 * PI).sqrt(), 0.0)).unwrap();
        let mut state = BatchNormState::new(1);
        state.bias[0] = Complex64::new(0.25, -1.0);
        let (y, next) = spectral_batch_norm(&x, &state, NormMode::Train).unwrap();
        assert_eq!(next.running_variance(), Some(&[0.0][..]));
        let mean = y.get(0, 0, 0, 0) / (4.0 * PI).sqrt();
        assert!((mean - state.bias[0]).norm() < 1e-15);
        assert!(y.data().iter().skip(1).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn unit_variance_output() {
        let x = random_coefficients(&mut seeded(1), 4, &[0, 1, 0], 8);
        let (y, _) = spectral_batch_norm(&x, &BatchNormState::new(3), NormMode::Train).unwrap();
        for v in spectral_variance(&y).iter() {
            assert!((v - 1.0).abs() < 1e-3, "variance {v}");
        }
        assert_eq!(y.get(2, 0, 0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn running_statistics() {
        let x = random_coefficients(&mut seeded(2), 2, &[0], 4);
        let y = random_coefficients(&mut seeded(3), 2, &[0], 4);
        let state = BatchNormState::with_hyperparameters(1, 0.5, 1e-5).unwrap();
        assert!(matches!(spectral_batch_norm(&x, &state, NormMode::Eval), Err(Error::UninitializedStatistics)));
        let (_, s1) = spectral_batch_norm(&x, &state, NormMode::Train).unwrap();
        let (_, s2) = spectral_batch_norm(&y, &s1, NormMode::Train).unwrap();
        let (vx, vy) = (spectral_variance(&x)[0], spectral_variance(&y)[0]);
        assert!((s2.running_variance().unwrap()[0] - 0.5 * (vx + vy)).abs() < 1e-14);
        let (_, s3) = spectral_batch_norm(&x, &s2, NormMode::Eval).unwrap();
        assert_eq!(s3, s2);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(BatchNormState::with_hyperparameters(1, 1.0, 1e-5).is_err());
        assert!(BatchNormState::with_hyperparameters(1, 0.5, 0.0).is_err());
        assert!(BatchNormState::new(2).with_running_variance(vec![-1.0, 1.0]).is_err());
    }
}
