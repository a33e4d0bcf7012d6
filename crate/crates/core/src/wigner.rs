//! Wigner `d(pi/2)` tables for the transforms and full rotation matrices for
//! the equivariance harness.
//!
//! Conventions: `d^l_{m'm}(beta) = <l m'| exp(-i beta J_y) |l m>` with the
//! Condon-Shortley phase, ZYZ Euler angles for active rotations, and
//! `D^l_{m'm}(alpha, beta, gamma) = e^{-i m' alpha} d^l_{m'm}(beta) e^{-i m gamma}`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest band limit whose tables are built by [`WignerTables::new`].
pub const MAX_BAND_LIMIT: usize = 2048;

/// `Delta^l_{m'm} = d^l_{m'm}(pi/2)` for every degree `l < L`.
///
/// Only the fundamental wedge `0 <= m <= m' <= l` is stored; the other entries
/// follow from
/// `Delta_{m'm} = (-1)^{m'-m} Delta_{mm'}`,
/// `Delta_{m',-m} = (-1)^{l+m'} Delta_{m'm}` and
/// `Delta_{-m',m} = (-1)^{l+m} Delta_{m'm}`.
#[derive(Debug, Clone)]
pub struct WignerTables {
    band_limit: usize,
    offsets: Vec<usize>,
    wedge: Vec<f64>,
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn wedge_index(mp: usize, m: usize) -> usize {
    mp * (mp + 1) / 2 + m
}

impl WignerTables {
    /// Builds the tables with the Trapani-Navaza recursions: the edge row
    /// `Delta^l_{l,m}` from `Delta^{l-1}_{l-1,m-1}`, then the three-term
    /// recursion in the first index, run from `m' = l` down to `m' = m` so
    /// that it always moves towards growing values.
    pub fn new(band_limit: usize) -> Result<Self> {
        if band_limit == 0 || band_limit > MAX_BAND_LIMIT {
            return Err(Error::InvalidBandLimit(band_limit as i64));
        }
        let mut offsets = Vec::with_capacity(band_limit);
        let mut total = 0;
        for l in 0..band_limit {
            offsets.push(total);
            total += (l + 1) * (l + 2) / 2;
        }
        let mut wedge = vec![0.0; total];
        wedge[0] = 1.0;
        let mut edge_prev = vec![1.0];
        for l in 1..band_limit {
            let lf = l as f64;
            let mut edge = vec![0.0; l + 1];
            edge[0] = -((2.0 * lf - 1.0) / (2.0 * lf)).sqrt() * edge_prev[0];
            for m in 1..=l {
                let mf = m as f64;
                edge[m] = (lf * (2.0 * lf - 1.0) / (2.0 * (lf + mf) * (lf + mf - 1.0))).sqrt() * edge_prev[m - 1];
            }
            let base = offsets[l];
            for m in 0..=l {
                let mf = m as f64;
                let mut upper = 0.0;
                let mut current = edge[m];
                wedge[base + wedge_index(l, m)] = current;
                for mp in (m + 1..=l).rev() {
                    let mpf = mp as f64;
                    let a = ((lf - mpf) * (lf + mpf + 1.0)).sqrt();
                    let b = ((lf + mpf) * (lf - mpf + 1.0)).sqrt();
                    let lower = (2.0 * mf * current - a * upper) / b;
                    wedge[base + wedge_index(mp - 1, m)] = lower;
                    upper = current;
                    current = lower;
                }
            }
            edge_prev = edge;
        }
        Ok(Self { band_limit, offsets, wedge })
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    /// `Delta^l_{mp,m}`; panics when an index is out of range.
    pub fn delta(&self, l: usize, mp: i64, m: i64) -> f64 {
        let li = l as i64;
        assert!(l < self.band_limit && mp.abs() <= li && m.abs() <= li, "delta index out of range");
        let mut factor = 1.0;
        let (mut a, mut b) = (mp, m);
        if a < 0 {
            factor *= sign(li + b);
            a = -a;
        }
        if b < 0 {
            factor *= sign(li + a);
            b = -b;
        }
        if b > a {
            factor *= sign(a - b);
            std::mem::swap(&mut a, &mut b);
        }
        factor * self.wedge[self.offsets[l] + wedge_index(a as usize, b as usize)]
    }

    /// Dense `(2l+1) x (2l+1)` matrix, row `m' + l`, column `m + l`.
    pub fn delta_matrix(&self, l: usize) -> Array2<f64> {
        let li = l as i64;
        Array2::from_shape_fn((2 * l + 1, 2 * l + 1), |(r, c)| self.delta(l, r as i64 - li, c as i64 - li))
    }

    /// `d^l(beta)` from the factorization
    /// `d^l_{m'm}(beta) = sum_k Delta_{k m'} Delta_{k m} Re(i^{m'-m} e^{-i k beta})`.
    pub fn d_matrix(&self, l: usize, beta: f64) -> Array2<f64> {
        let delta = self.delta_matrix(l);
        let li = l as i64;
        let size = 2 * l + 1;
        let mut out = Array2::zeros((size, size));
        for r in 0..size {
            for c in 0..size {
                let mp = r as i64 - li;
                let m = c as i64 - li;
                let shift = (mp - m) as f64 * PI / 2.0;
                let mut acc = 0.0;
                for k in 0..size {
                    let kf = k as i64 - li;
                    acc += delta[[k, r]] * delta[[k, c]] * (shift - kf as f64 * beta).cos();
                }
                out[[r, c]] = acc;
            }
        }
        out
    }

    /// `D^l(rot)`, row `m' + l`, column `m + l`.
    pub fn rotation_matrix(&self, l: usize, rot: &Rotation) -> Array2<Complex64> {
        let d = self.d_matrix(l, rot.beta);
        let li = l as i64;
        Array2::from_shape_fn(d.dim(), |(r, c)| {
            let mp = (r as i64 - li) as f64;
            let m = (c as i64 - li) as f64;
            Complex64::from_polar(d[[r, c]], -mp * rot.alpha - m * rot.gamma)
        })
    }
}

/// Precomputes `Delta` tables for band limit `L`.
pub fn compute_delta(band_limit: usize) -> Result<WignerTables> {
    WignerTables::new(band_limit)
}

/// `d^l(beta)` as a dense real matrix.
pub fn wigner_d(l: usize, beta: f64) -> Array2<f64> {
    WignerTables::new(l + 1).expect("degree within supported range").d_matrix(l, beta)
}

/// `D^l(rot)` as a dense unitary matrix.
#[allow(non_snake_case)]
pub fn wigner_D(l: usize, rot: &Rotation) -> Array2<Complex64> {
    WignerTables::new(l + 1).expect("degree within supported range").rotation_matrix(l, rot)
}

/// Active rotation `Rz(alpha) Ry(beta) Rz(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rotation {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub type Matrix3 = [[f64; 3]; 3];

fn rz(a: f64) -> Matrix3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn ry(a: f64) -> Matrix3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn matmul3(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParameter("rotation angles must be finite".into()));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: -self.gamma, beta: -self.beta, gamma: -self.alpha }
    }

    pub fn matrix(&self) -> Matrix3 {
        matmul3(&matmul3(&rz(self.alpha), &ry(self.beta)), &rz(self.gamma))
    }

    /// ZYZ angles of a proper rotation matrix, with `beta` in `[0, pi]`.
    pub fn from_matrix(r: &Matrix3) -> Self {
        let beta = r[2][2].clamp(-1.0, 1.0).acos();
        let sb = beta.sin();
        if sb > 1e-12 {
            Self { alpha: r[1][2].atan2(r[0][2]), beta, gamma: r[2][1].atan2(-r[2][0]) }
        } else if r[2][2] > 0.0 {
            Self { alpha: r[1][0].atan2(r[0][0]), beta: 0.0, gamma: 0.0 }
        } else {
            Self { alpha: (-r[1][0]).atan2(-r[0][0]), beta: PI, gamma: 0.0 }
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Self {
        Self::from_matrix(&matmul3(&self.matrix(), &other.matrix()))
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.matrix();
        [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
    }

    /// Haar-uniform rotation from a uniform unit quaternion.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        let (w, x, y, z) = (
            a * (2.0 * PI * u2).sin(),
            a * (2.0 * PI * u2).cos(),
            b * (2.0 * PI * u3).sin(),
            b * (2.0 * PI * u3).cos(),
        );
        let m = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ];
        Self::from_matrix(&m)
    }
}
