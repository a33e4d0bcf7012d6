use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::swsft::SpinSignal;

/// Parameters of the phase-collapse nonlinearity
/// `x0 <- W1 x0 + W2 |x| + b`, applied at every grid sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCollapse {
    w1: Array2<Complex64>,
    w2: Array2<f64>,
    bias: Array1<Complex64>,
}

impl PhaseCollapse {
    /// `w1` is C0 x C0, `w2` is C0 x (all channels), `bias` has length C0.
    pub fn new(w1: Array2<Complex64>, w2: Array2<f64>, bias: Array1<Complex64>) -> Result<Self> {
        let c0 = w1.nrows();
        if w1.ncols() != c0 || w2.nrows() != c0 || bias.len() != c0 {
            return Err(Error::ShapeMismatch(format!(
                "phase collapse parameters W1 {:?}, W2 {:?}, b {}",
                w1.dim(),
                w2.dim(),
                bias.len()
            )));
        }
        Ok(Self { w1, w2, bias })
    }

    pub fn identity(spin_zero: usize, total: usize) -> Self {
        let w1 = Array2::from_shape_fn((spin_zero, spin_zero), |(i, j)| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        Self { w1, w2: Array2::zeros((spin_zero, total)), bias: Array1::zeros(spin_zero) }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, spin_zero: usize, total: usize) -> Self {
        let s1 = 1.0 / (spin_zero.max(1) as f64).sqrt();
        let s2 = 1.0 / (total.max(1) as f64).sqrt();
        let w1 = Array2::from_shape_simple_fn((spin_zero, spin_zero), || complex_normal(rng) * s1);
        let w2 = Array2::from_shape_simple_fn((spin_zero, total), || rng.random_range(-1.0..1.0) * s2);
        let bias = Array1::from_shape_simple_fn(spin_zero, || complex_normal(rng) * 0.1);
        Self { w1, w2, bias }
    }

    pub fn spin_zero_channels(&self) -> usize {
        self.w1.nrows()
    }

    pub fn total_channels(&self) -> usize {
        self.w2.ncols()
    }

    pub fn w1(&self) -> &Array2<Complex64> {
        &self.w1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn bias(&self) -> &Array1<Complex64> {
        &self.bias
    }

    pub fn apply(&self, signal: &SpinSignal) -> Result<SpinSignal> {
        phase_collapse(signal, self)
    }
}

/// Replaces the spin-0 channels pointwise and passes all other channels through untouched.
pub fn phase_collapse(signal: &SpinSignal, params: &PhaseCollapse) -> Result<SpinSignal> {
    let zero: Vec<usize> = signal.spins().iter().enumerate().filter(|(_, &s)| s == 0).map(|(i, _)| i).collect();
    if zero.len() != params.spin_zero_channels() || signal.channels() != params.total_channels() {
        return Err(Error::ShapeMismatch(format!(
            "phase collapse expects {} spin-0 of {} channels, signal has {} of {}",
            params.spin_zero_channels(),
            params.total_channels(),
            zero.len(),
            signal.channels()
        )));
    }
    let mut out = signal.samples().clone();
    let src = signal.samples();
    let n = signal.n();
    let total = signal.channels();
    out.axis_iter_mut(ndarray::Axis(0)).into_par_iter().enumerate().for_each(|(b, mut ob)| {
        let mut modulus = vec![0.0; total];
        let mut x0 = vec![Complex64::new(0.0, 0.0); zero.len()];
        for j in 0..n {
            for k in 0..n {
                for c in 0..total {
                    modulus[c] = src[[b, c, j, k]].norm();
                }
                for (i, &c) in zero.iter().enumerate() {
                    x0[i] = src[[b, c, j, k]];
                }
                for (r, &c) in zero.iter().enumerate() {
                    let mut acc = params.bias[r];
                    for (i, v) in x0.iter().enumerate() {
                        acc += params.w1[[r, i]] * v;
                    }
                    for (q, m) in modulus.iter().enumerate() {
                        acc += params.w2[[r, q]] * m;
                    }
                    ob[[c, j, k]] = acc;
                }
            }
        }
    });
    SpinSignal::new(out, signal.spins().to_vec())
}
