//! Two-dimensional discrete Fourier transforms with two interchangeable
//! backends: explicit DFT matrices applied by matrix multiplication, and
//! `rustfft`.
//!
//! Analysis: `X[a, b] = sum_{j,k} x[j, k] e^{-2 pi i (a j / R + b k / C)}`.
//! Synthesis is the inverse and carries the `1 / (R C)` factor.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::swsft::FourierBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Analysis,
    Synthesis,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Analysis => -1.0,
            Direction::Synthesis => 1.0,
        }
    }
}

/// `exp(sign 2 pi i r c / size)` with the exponent reduced modulo `size` so
/// large products keep full precision.
pub fn twiddle(size: usize, r: i64, c: i64, sign: f64) -> Complex64 {
    let k = (r * c).rem_euclid(size as i64);
    Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / size as f64)
}

/// Square DFT matrix `W[r, c] = exp(sign 2 pi i r c / size)`.
pub fn dft_matrix(size: usize, direction: Direction) -> Array2<Complex64> {
    let sign = direction.sign();
    Array2::from_shape_fn((size, size), |(r, c)| twiddle(size, r as i64, c as i64, sign))
}

/// Reusable 2D FFT plan for one array shape.
#[derive(Clone)]
pub struct Fft2d {
    rows: usize,
    cols: usize,
    forward_rows: Arc<dyn Fft<f64>>,
    forward_cols: Arc<dyn Fft<f64>>,
    inverse_rows: Arc<dyn Fft<f64>>,
    inverse_cols: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("rows", &self.rows).field("cols", &self.cols).finish()
    }
}

impl Fft2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            forward_rows: planner.plan_fft(rows, FftDirection::Forward),
            forward_cols: planner.plan_fft(cols, FftDirection::Forward),
            inverse_rows: planner.plan_fft(rows, FftDirection::Inverse),
            inverse_cols: planner.plan_fft(cols, FftDirection::Inverse),
        }
    }

    /// Unnormalized transform in place; `data` is row-major `rows x cols`.
    fn process(&self, data: &mut Array2<Complex64>, direction: Direction) {
        assert_eq!(data.dim(), (self.rows, self.cols), "array shape does not match the plan");
        let (along_cols, along_rows) = match direction {
            Direction::Analysis => (&self.forward_cols, &self.forward_rows),
            Direction::Synthesis => (&self.inverse_cols, &self.inverse_rows),
        };
        for mut row in data.axis_iter_mut(Axis(0)) {
            match row.as_slice_mut() {
                Some(slice) => along_cols.process(slice),
                None => {
                    let mut buf = row.to_vec();
                    along_cols.process(&mut buf);
                    row.assign(&ndarray::ArrayView1::from(&buf));
                }
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.rows];
        for mut col in data.axis_iter_mut(Axis(1)) {
            for (dst, src) in column.iter_mut().zip(col.iter()) {
                *dst = *src;
            }
            along_rows.process(&mut column);
            for (dst, src) in col.iter_mut().zip(&column) {
                *dst = *src;
            }
        }
    }

    pub fn transform(&self, input: ArrayView2<'_, Complex64>, direction: Direction) -> Array2<Complex64> {
        let mut data = input.to_owned();
        self.process(&mut data, direction);
        if direction == Direction::Synthesis {
            let scale = 1.0 / (self.rows * self.cols) as f64;
            data.mapv_inplace(|v| v * scale);
        }
        data
    }
}

/// Standard 2D DFT of `input` with the chosen backend.
pub fn fourier_2d(input: ArrayView2<'_, Complex64>, direction: Direction, backend: FourierBackend) -> Array2<Complex64> {
    let (rows, cols) = input.dim();
    match backend {
        FourierBackend::DftMatrix => {
            let left = dft_matrix(rows, direction);
            let right = dft_matrix(cols, direction);
            let mut out = left.dot(&input).dot(&right);
            if direction == Direction::Synthesis {
                let scale = 1.0 / (rows * cols) as f64;
                out.mapv_inplace(|v| v * scale);
            }
            out
        }
        FourierBackend::Fft => Fft2d::new(rows, cols).transform(input, direction),
    }
}
