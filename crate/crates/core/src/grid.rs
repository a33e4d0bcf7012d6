//! Equiangular sampling of the sphere, its extension to the torus, and the
//! colatitude quadrature weights used by the forward transform.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use ndarray::{s, Array2, Array4, ArrayView2, ArrayViewMut2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::swsft::SpinSignal;

static PARITY_FAULT: AtomicBool = AtomicBool::new(false);

/// Flips the spin-parity sign used by the torus extension. Exists only so the
/// verification suite can prove that it detects a broken extension.
#[doc(hidden)]
pub fn inject_parity_fault(enabled: bool) {
    PARITY_FAULT.store(enabled, Ordering::SeqCst);
}

/// `n x n` equiangular grid with pole-free colatitudes
/// `theta_j = pi (2j + 1) / (2n)` and longitudes `phi_k = 2 pi k / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    n: usize,
    colatitudes: Vec<f64>,
    longitudes: Vec<f64>,
}

impl SphericalGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidResolution(n as i64));
        }
        let colatitudes = (0..n).map(|j| colatitude(n, j)).collect();
        let longitudes = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        Ok(Self { n, colatitudes, longitudes })
    }

    /// Grid whose band limit is `band_limit` (`n = 2 L`).
    pub fn for_band_limit(band_limit: usize) -> Result<Self> {
        if band_limit == 0 {
            return Err(Error::InvalidBandLimit(0));
        }
        Self::new(2 * band_limit)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band_limit(&self) -> usize {
        self.n / 2
    }

    pub fn colatitudes(&self) -> &[f64] {
        &self.colatitudes
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.longitudes
    }

    /// Colatitudes of the doubled (torus) axis; rows `n..2n` lie in `(pi, 2 pi)`.
    pub fn torus_colatitudes(&self) -> Vec<f64> {
        (0..2 * self.n).map(|j| colatitude(self.n, j)).collect()
    }
}

/// Checked constructor mirroring the CLI `resolution` key.
pub fn make_grid(n: i64) -> Result<SphericalGrid> {
    if n <= 0 {
        return Err(Error::InvalidResolution(n));
    }
    SphericalGrid::new(n as usize)
}

fn colatitude(n: usize, j: usize) -> f64 {
    PI * (2 * j + 1) as f64 / (2 * n) as f64
}

fn parity(spin: i32) -> f64 {
    let sign = if spin.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    if PARITY_FAULT.load(Ordering::Relaxed) {
        -sign
    } else {
        sign
    }
}

/// Writes the reflected half of the torus: `out[j, k] = (-1)^s f[n-1-j, k + n/2]`,
/// which realizes `f_ext(2 pi - theta, phi + pi) = (-1)^s f(theta, phi)`.
///
/// The map is an involution, so reflecting twice returns the input exactly.
pub fn reflect_rows(samples: ArrayView2<'_, Complex64>, spin: i32, mut out: ArrayViewMut2<'_, Complex64>) {
    let n = samples.nrows();
    let half = n / 2;
    let sign = parity(spin);
    for j in 0..n {
        let src = samples.row(n - 1 - j);
        let mut dst = out.row_mut(j);
        for k in 0..n {
            dst[k] = src[(k + half) % n] * sign;
        }
    }
}

/// Extends one channel to the `2n x n` torus.
pub fn extend_channel(samples: ArrayView2<'_, Complex64>, spin: i32) -> Array2<Complex64> {
    let n = samples.nrows();
    let mut ext = Array2::zeros((2 * n, n));
    ext.slice_mut(s![..n, ..]).assign(&samples);
    reflect_rows(samples, spin, ext.slice_mut(s![n.., ..]));
    ext
}

/// Extends every channel of `signal` to the torus; output shape `(B, C, 2n, n)`.
pub fn extend_to_torus(signal: &SpinSignal, grid: &SphericalGrid) -> Result<Array4<Complex64>> {
    if signal.n() != grid.n() {
        return Err(Error::ShapeMismatch(format!(
            "signal sampled at n={} but grid has n={}",
            signal.n(),
            grid.n()
        )));
    }
    let (b, c, n, _) = signal.samples().dim();
    let mut out = Array4::zeros((b, c, 2 * n, n));
    for (src_b, mut dst_b) in signal.samples().axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        for (ci, (src, mut dst)) in src_b.axis_iter(Axis(0)).zip(dst_b.axis_iter_mut(Axis(0))).enumerate() {
            dst.slice_mut(s![..n, ..]).assign(&src);
            reflect_rows(src, signal.spins()[ci], dst.slice_mut(s![n.., ..]));
        }
    }
    Ok(out)
}

/// Colatitude-frequency weights `w(p) = int_0^pi e^{i p theta} sin(theta) d theta`.
///
/// Combined with a torus Fourier analysis they give
/// `I_{m'm} = 2 pi sum_{m''} w(m'' - m') F_{m''m}`, exact whenever the extended
/// function is a trigonometric polynomial of degree below `n` in colatitude.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    n: usize,
    max_offset: i64,
    values: Vec<Complex64>,
}

impl QuadratureWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest `|p|` tabulated.
    pub fn max_offset(&self) -> i64 {
        self.max_offset
    }

    pub fn weight(&self, p: i64) -> Complex64 {
        assert!(p.abs() <= self.max_offset, "weight offset {p} out of range");
        self.values[(p + self.max_offset) as usize]
    }
}

/// Closed form of `int_0^pi e^{i p theta} sin(theta) d theta`.
pub fn colatitude_weight(p: i64) -> Complex64 {
    match p {
        1 => Complex64::new(0.0, PI / 2.0),
        -1 => Complex64::new(0.0, -PI / 2.0),
        p if p % 2 == 0 => Complex64::new(2.0 / (1.0 - (p * p) as f64), 0.0),
        _ => Complex64::new(0.0, 0.0),
    }
}

pub fn quadrature_weights(grid: &SphericalGrid) -> QuadratureWeights {
    let n = grid.n();
    let max_offset = (n + grid.band_limit()) as i64;
    let values = (-max_offset..=max_offset).map(colatitude_weight).collect();
    QuadratureWeights { n, max_offset, values }
}

/// Integral over the sphere of a spin-0 function sampled on `grid`, computed
/// through the torus pipeline (the `I_{00}` inner product).
///
/// Exact for integrands of degree below `2 L - 1`, e.g. products of two
/// band-limited functions.
pub fn integrate(grid: &SphericalGrid, samples: ArrayView2<'_, Complex64>) -> Result<Complex64> {
    let n = grid.n();
    if samples.dim() != (n, n) {
        return Err(Error::ShapeMismatch(format!("expected {n}x{n} samples, found {:?}", samples.dim())));
    }
    // Longitude mean of each torus row; the reflected rows of a spin-0 function
    // share the means of their mirror rows.
    let means: Vec<Complex64> = samples.rows().into_iter().map(|r| r.sum() / n as f64).collect();
    let torus_means: Vec<Complex64> = (0..2 * n).map(|j| if j < n { means[j] } else { means[2 * n - 1 - j] }).collect();
    let thetas = grid.torus_colatitudes();
    let mut total = Complex64::new(0.0, 0.0);
    for p in -(n as i64 - 1)..(n as i64) {
        let coeff: Complex64 = torus_means
            .iter()
            .zip(&thetas)
            .map(|(v, t)| v * Complex64::from_polar(1.0, -(p as f64) * t))
            .sum::<Complex64>()
            / (2 * n) as f64;
        total += coeff * colatitude_weight(p);
    }
    Ok(total * 2.0 * PI)
}
