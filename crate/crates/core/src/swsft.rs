//! Forward and inverse spin-weighted spherical Fourier transforms.
//!
//! Forward, for spin `s` and degree `l`:
//!
//! ```text
//! f_lm = (-1)^s i^(m+s) sqrt((2l+1)/4pi) sum_{m'} Delta^l_{m'm} Delta^l_{m',-s} I_{m'm}
//! ```
//!
//! where `I_{m'm} = int f e^{-i m' theta} e^{-i m phi} dOmega` comes from the
//! torus extension and a 2D Fourier analysis. The inverse evaluates
//! `f(theta, phi) = sum_{m'm} e^{i m' theta} e^{i m phi} G_{m'm}` with
//!
//! ```text
//! G_{m'm} = (-1)^s i^(m+s) sum_l sqrt((2l+1)/4pi) Delta^l_{-m',-s} Delta^l_{-m',m} f_lm.
//! ```
//!
//! The reduced path folds the `m'` sums with the Wigner symmetries
//! (`J_{m'm} = I_{m'm} + (-1)^{m+s} I_{-m',m}` forward, and
//! `G_{-m',m} = (-1)^{m+s} G_{m'm}` inverse); the full path does not.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, Array3, Array4, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{twiddle, Direction, Fft2d};
use crate::grid::{colatitude_weight, extend_channel, SphericalGrid};
use crate::wigner::WignerTables;

/// Position of `(l, m)` in a degree-major coefficient vector.
#[inline]
pub fn coeff_index(l: usize, m: i64) -> usize {
    (l as i64 * l as i64 + l as i64 + m) as usize
}

#[inline]
fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_spins(spins: &[i32], band_limit: usize) -> Result<()> {
    match spins.iter().find(|s| s.unsigned_abs() as usize >= band_limit) {
        Some(&spin) => Err(Error::UnsupportedSpin { spin, band_limit }),
        None => Ok(()),
    }
}

/// Batched multi-channel samples on an `n x n` grid, shape `(B, C, n, n)`,
/// with one spin weight per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSignal {
    samples: Array4<Complex64>,
    spins: Vec<i32>,
}

impl SpinSignal {
    pub fn new(samples: Array4<Complex64>, spins: Vec<i32>) -> Result<Self> {
        let (_, c, rows, cols) = samples.dim();
        if c != spins.len() {
            return Err(Error::ShapeMismatch(format!("{c} channels but {} spins", spins.len())));
        }
        if rows != cols {
            return Err(Error::ShapeMismatch(format!("grid must be square, found {rows}x{cols}")));
        }
        if rows < 2 || rows % 2 != 0 {
            return Err(Error::InvalidResolution(rows as i64));
        }
        check_spins(&spins, rows / 2)?;
        Ok(Self { samples, spins })
    }

    pub fn zeros(batch: usize, spins: Vec<i32>, n: usize) -> Result<Self> {
        Self::new(Array4::zeros((batch, spins.len(), n, n)), spins)
    }

    pub fn batch(&self) -> usize {
        self.samples.dim().0
    }

    pub fn channels(&self) -> usize {
        self.spins.len()
    }

    pub fn n(&self) -> usize {
        self.samples.dim().2
    }

    pub fn band_limit(&self) -> usize {
        self.n() / 2
    }

    pub fn spins(&self) -> &[i32] {
        &self.spins
    }

    pub fn samples(&self) -> &Array4<Complex64> {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut Array4<Complex64> {
        &mut self.samples
    }

    pub fn into_samples(self) -> Array4<Complex64> {
        self.samples
    }

    pub fn channel(&self, b: usize, c: usize) -> ArrayView2<'_, Complex64> {
        self.samples.slice(s![b, c, .., ..])
    }
}

/// Ragged `(l, m)` coefficients, stored as `(B, C, L^2)` with `(l, m)` at
/// `l^2 + l + m`. Entries with `l < |s|` are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinCoefficients {
    data: Array3<Complex64>,
    spins: Vec<i32>,
    band_limit: usize,
}

impl SpinCoefficients {
    pub fn new(data: Array3<Complex64>, spins: Vec<i32>, band_limit: usize) -> Result<Self> {
        if band_limit == 0 {
            return Err(Error::InvalidBandLimit(0));
        }
        let (_, c, len) = data.dim();
        if c != spins.len() {
            return Err(Error::ShapeMismatch(format!("{c} channels but {} spins", spins.len())));
        }
        if len != band_limit * band_limit {
            return Err(Error::ShapeMismatch(format!(
                "band limit {band_limit} needs {} coefficients per channel, found {len}",
                band_limit * band_limit
            )));
        }
        check_spins(&spins, band_limit)?;
        for (ci, &s) in spins.iter().enumerate() {
            let below = (s.unsigned_abs() as usize).pow(2);
            if data.slice(s![.., ci, ..below]).iter().any(|v| *v != Complex64::new(0.0, 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "channel {ci} (spin {s}) has nonzero coefficients below degree {}",
                    s.abs()
                )));
            }
        }
        Ok(Self { data, spins, band_limit })
    }

    pub fn zeros(batch: usize, spins: Vec<i32>, band_limit: usize) -> Result<Self> {
        let c = spins.len();
        Self::new(Array3::zeros((batch, c, band_limit * band_limit)), spins, band_limit)
    }

    pub(crate) fn from_parts_unchecked(data: Array3<Complex64>, spins: Vec<i32>, band_limit: usize) -> Self {
        Self { data, spins, band_limit }
    }

    pub fn batch(&self) -> usize {
        self.data.dim().0
    }

    pub fn channels(&self) -> usize {
        self.spins.len()
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn spins(&self) -> &[i32] {
        &self.spins
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array3<Complex64> {
        self.data
    }

    pub fn get(&self, b: usize, c: usize, l: usize, m: i64) -> Complex64 {
        self.data[[b, c, coeff_index(l, m)]]
    }

    /// Sets one coefficient; writes below the spin floor are rejected.
    pub fn set(&mut self, b: usize, c: usize, l: usize, m: i64, value: Complex64) -> Result<()> {
        if l >= self.band_limit || m.unsigned_abs() as usize > l {
            return Err(Error::InvalidParameter(format!("(l={l}, m={m}) outside band limit {}", self.band_limit)));
        }
        if (l as i64) < self.spins[c].abs() as i64 {
            return Err(Error::InvalidParameter(format!("degree {l} below spin {}", self.spins[c])));
        }
        self.data[[b, c, coeff_index(l, m)]] = value;
        Ok(())
    }

    /// Mutable access for layers that preserve the spin-floor invariant.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &SpinCoefficients) -> f64 {
        assert_eq!(self.data.dim(), other.data.dim(), "coefficient shapes differ");
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn diff_norm(&self, other: &SpinCoefficients) -> f64 {
        assert_eq!(self.data.dim(), other.data.dim(), "coefficient shapes differ");
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FourierBackend {
    #[default]
    DftMatrix,
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryPath {
    Reduced,
    #[default]
    Full,
}

impl FromStr for FourierBackend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dft" | "dft_matrix" => Ok(Self::DftMatrix),
            "fft" => Ok(Self::Fft),
            other => Err(Error::Config(format!("unknown backend '{other}' (expected dft or fft)"))),
        }
    }
}

impl FromStr for SymmetryPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduced" => Ok(Self::Reduced),
            "full" => Ok(Self::Full),
            other => Err(Error::Config(format!("unknown path '{other}' (expected reduced or full)"))),
        }
    }
}

impl fmt::Display for FourierBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DftMatrix => "dft",
            Self::Fft => "fft",
        })
    }
}

impl fmt::Display for SymmetryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reduced => "reduced",
            Self::Full => "full",
        })
    }
}

/// Computation path; every combination yields the same coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct TransformConfig {
    pub fourier_backend: FourierBackend,
    pub symmetry_path: SymmetryPath,
}

impl TransformConfig {
    pub fn new(fourier_backend: FourierBackend, symmetry_path: SymmetryPath) -> Self {
        Self { fourier_backend, symmetry_path }
    }

    pub fn all() -> [TransformConfig; 4] {
        use FourierBackend::*;
        use SymmetryPath::*;
        [
            Self::new(DftMatrix, Full),
            Self::new(DftMatrix, Reduced),
            Self::new(Fft, Full),
            Self::new(Fft, Reduced),
        ]
    }
}

enum Plan {
    Dft {
        /// `(2L-1) x 2n`: colatitude analysis with the quadrature weights folded in.
        analysis_theta: Array2<Complex64>,
        /// `n x (2L-1)`
        analysis_phi: Array2<Complex64>,
        /// `n x (2L-1)`
        synthesis_theta: Array2<Complex64>,
        /// `(2L-1) x n`
        synthesis_phi: Array2<Complex64>,
    },
    Fft {
        fft: Fft2d,
        /// `(2L-1) x (2n-1)`: `2 pi w(m'' - m')`.
        weights: Array2<Complex64>,
    },
}

/// Transform plan for one grid: DFT matrices or FFT plans are built once and
/// shared by every channel of every call.
pub struct Transformer<'a> {
    grid: SphericalGrid,
    tables: &'a WignerTables,
    config: TransformConfig,
    plan: Plan,
}

fn weight_matrix(n: usize, band_limit: usize) -> Array2<Complex64> {
    let width = 2 * band_limit - 1;
    let lmax = band_limit as i64 - 1;
    Array2::from_shape_fn((width, 2 * n - 1), |(r, c)| {
        let mp = r as i64 - lmax;
        let mpp = c as i64 - (n as i64 - 1);
        colatitude_weight(mpp - mp) * (2.0 * PI)
    })
}

impl<'a> Transformer<'a> {
    pub fn new(grid: &SphericalGrid, tables: &'a WignerTables, config: TransformConfig) -> Result<Self> {
        let band_limit = grid.band_limit();
        if tables.band_limit() < band_limit {
            return Err(Error::BandLimitMismatch { expected: band_limit, found: tables.band_limit() });
        }
        let n = grid.n();
        let width = 2 * band_limit - 1;
        let lmax = band_limit as i64 - 1;
        let plan = match config.fourier_backend {
            FourierBackend::DftMatrix => {
                // e^{-i m'' theta_j} with theta_j = 2 pi (2j+1) / (4n).
                let torus = Array2::from_shape_fn((2 * n - 1, 2 * n), |(r, j)| {
                    let mpp = r as i64 - (n as i64 - 1);
                    twiddle(4 * n, mpp, 2 * j as i64 + 1, -1.0) / (2 * n) as f64
                });
                let analysis_theta = weight_matrix(n, band_limit).dot(&torus);
                let analysis_phi = Array2::from_shape_fn((n, width), |(k, c)| {
                    twiddle(n, c as i64 - lmax, k as i64, -1.0) / n as f64
                });
                let synthesis_theta =
                    Array2::from_shape_fn((n, width), |(j, c)| twiddle(4 * n, c as i64 - lmax, 2 * j as i64 + 1, 1.0));
                let synthesis_phi = Array2::from_shape_fn((width, n), |(c, k)| twiddle(n, c as i64 - lmax, k as i64, 1.0));
                Plan::Dft { analysis_theta, analysis_phi, synthesis_theta, synthesis_phi }
            }
            FourierBackend::Fft => Plan::Fft { fft: Fft2d::new(2 * n, n), weights: weight_matrix(n, band_limit) },
        };
        Ok(Self { grid: grid.clone(), tables, config, plan })
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn config(&self) -> TransformConfig {
        self.config
    }

    pub fn band_limit(&self) -> usize {
        self.grid.band_limit()
    }

    fn check_signal(&self, signal: &SpinSignal) -> Result<()> {
        if signal.n() != self.grid.n() {
            return Err(Error::BandLimitMismatch { expected: self.band_limit(), found: signal.band_limit() });
        }
        check_spins(signal.spins(), self.band_limit())
    }

    /// Torus inner products `I_{m'm}` for `|m'|, |m| < L`, one `(2L-1) x (2L-1)`
    /// matrix per `(batch, channel)` in row-major order.
    pub fn inner_products(&self, signal: &SpinSignal) -> Result<Vec<Array2<Complex64>>> {
        self.check_signal(signal)?;
        let channels = signal.channels();
        let n = self.grid.n();
        let band_limit = self.band_limit();
        let lmax = band_limit as i64 - 1;
        let jobs: Vec<(usize, usize)> = (0..signal.batch()).flat_map(|b| (0..channels).map(move |c| (b, c))).collect();
        Ok(jobs
            .into_par_iter()
            .map(|(b, c)| {
                let ext = extend_channel(signal.channel(b, c), signal.spins()[c]);
                match &self.plan {
                    Plan::Dft { analysis_theta, analysis_phi, .. } => analysis_theta.dot(&ext.dot(analysis_phi)),
                    Plan::Fft { fft, weights } => {
                        let spectrum = fft.transform(ext.view(), Direction::Analysis);
                        let scale = 1.0 / (2 * n * n) as f64;
                        let folded = Array2::from_shape_fn((2 * n - 1, 2 * band_limit - 1), |(r, col)| {
                            let mpp = r as i64 - (n as i64 - 1);
                            let m = col as i64 - lmax;
                            let row = mpp.rem_euclid(2 * n as i64) as usize;
                            let column = m.rem_euclid(n as i64) as usize;
                            spectrum[[row, column]] * twiddle(4 * n, mpp, 1, -1.0) * scale
                        });
                        weights.dot(&folded)
                    }
                }
            })
            .collect())
    }

    /// Full forward transform at the grid band limit.
    pub fn forward(&self, signal: &SpinSignal) -> Result<SpinCoefficients> {
        self.forward_truncated(signal, self.band_limit())
    }

    /// Forward transform that only computes degrees `l < out_band_limit`
    /// (spectral pooling folded into the analysis).
    pub fn forward_truncated(&self, signal: &SpinSignal, out_band_limit: usize) -> Result<SpinCoefficients> {
        if out_band_limit == 0 || out_band_limit > self.band_limit() {
            return Err(Error::InvalidBandLimit(out_band_limit as i64));
        }
        check_spins(signal.spins(), out_band_limit)?;
        let inner = self.inner_products(signal)?;
        let channels = signal.channels();
        let spins = signal.spins();
        let band_limit = self.band_limit();
        let lmax = band_limit as i64 - 1;
        let reduced = self.config.symmetry_path == SymmetryPath::Reduced;

        // Reduced path: J_{m'm} for m' >= 0, stored in rows 0..L.
        let folded: Vec<Array2<Complex64>> = if reduced {
            inner
                .par_iter()
                .enumerate()
                .map(|(idx, i_mat)| {
                    let s = spins[idx % channels] as i64;
                    Array2::from_shape_fn((band_limit, 2 * band_limit - 1), |(mp, col)| {
                        let m = col as i64 - lmax;
                        let pos = i_mat[[(mp as i64 + lmax) as usize, col]];
                        if mp == 0 {
                            pos
                        } else {
                            pos + i_mat[[(lmax - mp as i64) as usize, col]] * parity(m + s)
                        }
                    })
                })
                .collect()
        } else {
            Vec::new()
        };

        let mut out = vec![vec![Complex64::new(0.0, 0.0); out_band_limit * out_band_limit]; inner.len()];
        for l in 0..out_band_limit {
            let li = l as i64;
            let delta = self.tables.delta_matrix(l);
            let alpha = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
            out.par_iter_mut().enumerate().for_each(|(idx, coeffs)| {
                let s = spins[idx % channels] as i64;
                if li < s.abs() {
                    return;
                }
                let spin_col = (li - s) as usize;
                for m in -li..=li {
                    let col = (m + lmax) as usize;
                    let mc = (m + li) as usize;
                    let acc: Complex64 = if reduced {
                        let j_mat = &folded[idx];
                        (0..=l).map(|mp| j_mat[[mp, col]] * (delta[[mp + l, mc]] * delta[[mp + l, spin_col]])).sum()
                    } else {
                        let i_mat = &inner[idx];
                        (-li..=li)
                            .map(|mp| {
                                let r = (mp + li) as usize;
                                i_mat[[(mp + lmax) as usize, col]] * (delta[[r, mc]] * delta[[r, spin_col]])
                            })
                            .sum()
                    };
                    coeffs[coeff_index(l, m)] = acc * i_pow(m + s) * (parity(s) * alpha);
                }
            });
        }
        let batch = signal.batch();
        let flat: Vec<Complex64> = out.into_iter().flatten().collect();
        let data = Array3::from_shape_vec((batch, channels, out_band_limit * out_band_limit), flat)
            .expect("coefficient buffer has the declared shape");
        Ok(SpinCoefficients::from_parts_unchecked(data, spins.to_vec(), out_band_limit))
    }

    /// `G_{m'm}` for every `(batch, channel)`, shape `(2L-1) x (2L-1)`.
    pub fn synthesis_coefficients(&self, coeffs: &SpinCoefficients) -> Result<Vec<Array2<Complex64>>> {
        let band_limit = self.band_limit();
        if coeffs.band_limit() != band_limit {
            return Err(Error::BandLimitMismatch { expected: band_limit, found: coeffs.band_limit() });
        }
        let channels = coeffs.channels();
        let spins = coeffs.spins();
        let lmax = band_limit as i64 - 1;
        let width = 2 * band_limit - 1;
        let reduced = self.config.symmetry_path == SymmetryPath::Reduced;
        let mut g = vec![Array2::<Complex64>::zeros((width, width)); coeffs.batch() * channels];
        for l in 0..band_limit {
            let li = l as i64;
            let delta = self.tables.delta_matrix(l);
            let alpha = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
            g.par_iter_mut().enumerate().for_each(|(idx, g_mat)| {
                let (b, c) = (idx / channels, idx % channels);
                let s = spins[c] as i64;
                if li < s.abs() {
                    return;
                }
                let row = coeffs.data.slice(s![b, c, ..]);
                let spin_col = (li - s) as usize;
                let mp_start = if reduced { 0 } else { -li };
                for mp in mp_start..=li {
                    let r = (li - mp) as usize; // row of -m'
                    let left = delta[[r, spin_col]] * alpha;
                    for m in -li..=li {
                        let value = row[coeff_index(l, m)];
                        g_mat[[(mp + lmax) as usize, (m + lmax) as usize]] += value * (left * delta[[r, (m + li) as usize]]);
                    }
                }
            });
        }
        g.par_iter_mut().enumerate().for_each(|(idx, g_mat)| {
            let s = spins[idx % channels] as i64;
            for col in 0..width {
                let m = col as i64 - lmax;
                let phase = i_pow(m + s) * parity(s);
                for mp in 0..=lmax {
                    let r = (mp + lmax) as usize;
                    g_mat[[r, col]] *= phase;
                    if reduced && mp > 0 {
                        g_mat[[(lmax - mp) as usize, col]] = g_mat[[r, col]] * parity(m + s);
                    } else if !reduced && mp > 0 {
                        g_mat[[(lmax - mp) as usize, col]] *= phase;
                    }
                }
            }
        });
        Ok(g)
    }

    /// Evaluates the band-limited series at arbitrary `(theta, phi)` points,
    /// shape `(B, C, points)`.
    pub fn evaluate(&self, coeffs: &SpinCoefficients, points: &[(f64, f64)]) -> Result<Array3<Complex64>> {
        let g = self.synthesis_coefficients(coeffs)?;
        let lmax = self.band_limit() as i64 - 1;
        let width = 2 * self.band_limit() - 1;
        let channels = coeffs.channels();
        let theta = Array2::from_shape_fn((points.len(), width), |(p, r)| Complex64::from_polar(1.0, (r as i64 - lmax) as f64 * points[p].0));
        let phi = Array2::from_shape_fn((points.len(), width), |(p, c)| Complex64::from_polar(1.0, (c as i64 - lmax) as f64 * points[p].1));
        let values: Vec<Vec<Complex64>> = g
            .par_iter()
            .map(|g_mat| {
                let partial = theta.dot(g_mat);
                (0..points.len()).map(|p| partial.row(p).dot(&phi.row(p))).collect()
            })
            .collect();
        let mut out = Array3::zeros((coeffs.batch(), channels, points.len()));
        for (idx, v) in values.into_iter().enumerate() {
            out.slice_mut(s![idx / channels, idx % channels, ..]).assign(&Array1::from(v));
        }
        Ok(out)
    }

    pub fn inverse(&self, coeffs: &SpinCoefficients) -> Result<SpinSignal> {
        let g = self.synthesis_coefficients(coeffs)?;
        let n = self.grid.n();
        let band_limit = self.band_limit();
        let lmax = band_limit as i64 - 1;
        let channels = coeffs.channels();
        let planes: Vec<Array2<Complex64>> = g
            .par_iter()
            .map(|g_mat| match &self.plan {
                Plan::Dft { synthesis_theta, synthesis_phi, .. } => synthesis_theta.dot(g_mat).dot(synthesis_phi),
                Plan::Fft { fft, .. } => {
                    let mut spectrum = Array2::zeros((2 * n, n));
                    let scale = (2 * n * n) as f64;
                    for ((r, col), v) in g_mat.indexed_iter() {
                        let mp = r as i64 - lmax;
                        let m = col as i64 - lmax;
                        spectrum[[mp.rem_euclid(2 * n as i64) as usize, m.rem_euclid(n as i64) as usize]] =
                            v * twiddle(4 * n, mp, 1, 1.0) * scale;
                    }
                    fft.transform(spectrum.view(), Direction::Synthesis).slice(s![..n, ..]).to_owned()
                }
            })
            .collect();
        let mut samples = Array4::zeros((coeffs.batch(), channels, n, n));
        for (idx, plane) in planes.into_iter().enumerate() {
            samples.slice_mut(s![idx / channels, idx % channels, .., ..]).assign(&plane);
        }
        SpinSignal::new(samples, coeffs.spins().to_vec())
    }
}

/// One-shot forward transform; builds a [`Transformer`] for the signal's grid.
pub fn forward(signal: &SpinSignal, tables: &WignerTables, config: TransformConfig) -> Result<SpinCoefficients> {
    if tables.band_limit() != signal.band_limit() {
        return Err(Error::BandLimitMismatch { expected: signal.band_limit(), found: tables.band_limit() });
    }
    let grid = SphericalGrid::new(signal.n())?;
    Transformer::new(&grid, tables, config)?.forward(signal)
}

/// One-shot inverse transform onto the `2L x 2L` grid.
pub fn inverse(coeffs: &SpinCoefficients, tables: &WignerTables, config: TransformConfig) -> Result<SpinSignal> {
    if tables.band_limit() != coeffs.band_limit() {
        return Err(Error::BandLimitMismatch { expected: coeffs.band_limit(), found: tables.band_limit() });
    }
    let grid = SphericalGrid::for_band_limit(coeffs.band_limit())?;
    Transformer::new(&grid, tables, config)?.inverse(coeffs)
}
