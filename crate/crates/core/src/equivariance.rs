//! Spectral rotation of coefficients and the equivariance-error harness.

use std::io::Write;

use ndarray::{s, Array1, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SphericalGrid;
use crate::layers::{phase_collapse, spectral_batch_norm, spectral_conv, BatchNormState, FilterBank, NormMode, PhaseCollapse, ResidualBlock};
use crate::rng::seeded;
use crate::swsft::{coeff_index, SpinCoefficients, TransformConfig, Transformer};
use crate::wigner::{Rotation, WignerTables};

/// Applies `D^l(rot)` to every degree block of every channel.
pub fn rotate_coefficients(coeffs: &SpinCoefficients, rot: &Rotation, tables: &WignerTables) -> Result<SpinCoefficients> {
    let band_limit = coeffs.band_limit();
    if tables.band_limit() < band_limit {
        return Err(Error::BandLimitMismatch { expected: band_limit, found: tables.band_limit() });
    }
    let (batch, channels, len) = coeffs.data().dim();
    let mut out = Array3::zeros((batch, channels, len));
    let blocks: Vec<_> = (0..band_limit).into_par_iter().map(|l| tables.rotation_matrix(l, rot)).collect();
    let data = coeffs.data();
    for (l, d) in blocks.iter().enumerate() {
        let lo = coeff_index(l, -(l as i64));
        let hi = lo + 2 * l + 1;
        for b in 0..batch {
            for c in 0..channels {
                let v = data.slice(s![b, c, lo..hi]);
                out.slice_mut(s![b, c, lo..hi]).assign(&d.dot(&v));
            }
        }
    }
    SpinCoefficients::new(out, coeffs.spins().to_vec(), band_limit)
}

/// Rotates a batch of coefficients by each rotation in turn.
pub fn rotate_all(coeffs: &SpinCoefficients, rotations: &[Rotation], tables: &WignerTables) -> Result<Vec<SpinCoefficients>> {
    rotations.iter().map(|r| rotate_coefficients(coeffs, r, tables)).collect()
}

/// Uniformly distributed rotations from a fixed seed.
pub fn sample_rotations(count: usize, seed: u64) -> Vec<Rotation> {
    let mut rng = seeded(seed);
    (0..count).map(|_| Rotation::random(&mut rng)).collect()
}

/// A layer viewed as a map between coefficient sets.
pub trait SpectralMap: Sync {
    fn name(&self) -> String;
    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients>;
}

/// Identity map, the harness baseline.
pub struct Identity;

impl SpectralMap for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        Ok(coeffs.clone())
    }
}

pub struct Conv<'a>(pub &'a FilterBank);

impl SpectralMap for Conv<'_> {
    fn name(&self) -> String {
        "spectral_conv".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        spectral_conv(coeffs, self.0)
    }
}

/// Batch norm in eval mode (frozen statistics).
pub struct FrozenBatchNorm<'a>(pub &'a BatchNormState);

impl SpectralMap for FrozenBatchNorm<'_> {
    fn name(&self) -> String {
        "spectral_batch_norm".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        Ok(spectral_batch_norm(coeffs, self.0, NormMode::Eval)?.0)
    }
}

pub struct Pool(pub usize);

impl SpectralMap for Pool {
    fn name(&self) -> String {
        "spectral_pool".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        crate::layers::spectral_pool(coeffs, self.0)
    }
}

pub struct Unpool(pub usize);

impl SpectralMap for Unpool {
    fn name(&self) -> String {
        "spectral_unpool".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        crate::layers::spectral_unpool(coeffs, self.0)
    }
}

/// Phase collapse sandwiched between synthesis and analysis on the grid for
/// the input band limit.
pub struct Collapse<'a> {
    pub params: &'a PhaseCollapse,
    pub tables: &'a WignerTables,
    pub config: TransformConfig,
}

impl SpectralMap for Collapse<'_> {
    fn name(&self) -> String {
        "phase_collapse".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        let grid = SphericalGrid::for_band_limit(coeffs.band_limit())?;
        let t = Transformer::new(&grid, self.tables, self.config)?;
        t.forward(&phase_collapse(&t.inverse(coeffs)?, self.params)?)
    }
}

pub struct Residual<'a> {
    pub block: &'a ResidualBlock,
    pub tables: &'a WignerTables,
    pub config: TransformConfig,
}

impl SpectralMap for Residual<'_> {
    fn name(&self) -> String {
        "residual_block".into()
    }

    fn apply(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        self.block.forward_coefficients(coeffs, self.tables, self.config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub layer: String,
    pub band_limit: usize,
    pub rotations: usize,
    /// `None` when the layer output is identically zero.
    pub max_relative_error: Option<f64>,
    pub mean_relative_error: Option<f64>,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub errors: Vec<f64>,
}

impl EquivarianceReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error.is_some_and(|e| e <= tolerance)
    }
}

/// `||layer(R x) - R layer(x)|| / ||layer(x)||` for each rotation.
pub fn equivariance_error(
    layer: &dyn SpectralMap,
    input: &SpinCoefficients,
    rotations: &[Rotation],
    tables: &WignerTables,
) -> Result<EquivarianceReport> {
    let reference = layer.apply(input)?;
    let scale = reference.norm();
    let errors: Vec<f64> = rotations
        .par_iter()
        .map(|rot| {
            let lhs = layer.apply(&rotate_coefficients(input, rot, tables)?)?;
            let rhs = rotate_coefficients(&reference, rot, tables)?;
            if lhs.data().dim() != rhs.data().dim() {
                return Err(Error::ShapeMismatch("layer output shape depends on the rotation".into()));
            }
            Ok(lhs.diff_norm(&rhs))
        })
        .collect::<Result<_>>()?;
    let defined = scale > 0.0 && !rotations.is_empty();
    let relative: Vec<f64> = if scale > 0.0 { errors.iter().map(|e| e / scale).collect() } else { Vec::new() };
    Ok(EquivarianceReport {
        layer: layer.name(),
        band_limit: input.band_limit(),
        rotations: rotations.len(),
        max_relative_error: defined.then(|| relative.iter().copied().fold(0.0, f64::max)),
        mean_relative_error: defined.then(|| Array1::from(relative.clone()).mean().unwrap_or(0.0)),
        seed: None,
        errors: relative,
    })
}

/// Seeded variant: rotations are drawn from `seed`.
pub fn equivariance_error_seeded(
    layer: &dyn SpectralMap,
    input: &SpinCoefficients,
    count: usize,
    seed: u64,
    tables: &WignerTables,
) -> Result<EquivarianceReport> {
    let mut report = equivariance_error(layer, input, &sample_rotations(count, seed), tables)?;
    report.seed = Some(seed);
    Ok(report)
}

/// A layer whose output is `sigma(synthesis(pre(x)))` on the grid, with
/// `pre` linear-spectral (possibly containing inner activations) and `sigma`
/// a pointwise phase collapse.
pub trait PointwiseHead: Sync {
    fn name(&self) -> String;
    fn preactivation(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients>;
    fn activation(&self) -> &PhaseCollapse;
}

impl PointwiseHead for Collapse<'_> {
    fn name(&self) -> String {
        "phase_collapse".into()
    }

    fn preactivation(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        Ok(coeffs.clone())
    }

    fn activation(&self) -> &PhaseCollapse {
        self.params
    }
}

impl PointwiseHead for Residual<'_> {
    fn name(&self) -> String {
        "residual_block".into()
    }

    fn preactivation(&self, coeffs: &SpinCoefficients) -> Result<SpinCoefficients> {
        self.block.preactivation(coeffs, self.tables, self.config)
    }

    fn activation(&self) -> &PhaseCollapse {
        &self.block.sigma2
    }
}

fn to_sphere(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn from_sphere(v: [f64; 3]) -> (f64, f64) {
    (v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

/// Equivariance of a spatial-output layer measured on the grid, without
/// re-analyzing its (not band-limited) output.
///
/// The rotated-input side is `sigma(synthesis(pre(R x)))` at the grid points.
/// The rotated-output side evaluates `pre(x)` exactly at `R^-1 p` for every
/// grid point `p` and applies `sigma` there. Spin-0 channels are compared as
/// complex values; nonzero-spin channels by modulus, which is independent of
/// the local frame.
pub fn pointwise_equivariance_error(
    layer: &dyn PointwiseHead,
    input: &SpinCoefficients,
    rotations: &[Rotation],
    tables: &WignerTables,
    config: TransformConfig,
) -> Result<EquivarianceReport> {
    let reference = layer.preactivation(input)?;
    let grid = SphericalGrid::for_band_limit(reference.band_limit())?;
    let t = Transformer::new(&grid, tables, config)?;
    let sigma = layer.activation();
    let base = phase_collapse(&t.inverse(&reference)?, sigma)?;
    let scale = base.samples().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let n = grid.n();
    let spins = reference.spins().to_vec();
    let errors: Vec<f64> = rotations
        .par_iter()
        .map(|rot| {
            let lhs = phase_collapse(&t.inverse(&layer.preactivation(&rotate_coefficients(input, rot, tables)?)?)?, sigma)?;
            let inv = rot.inverse();
            let mut points = Vec::with_capacity(n * n);
            for &theta in grid.colatitudes() {
                for &phi in grid.longitudes() {
                    points.push(from_sphere(inv.apply(to_sphere(theta, phi))));
                }
            }
            let values = t.evaluate(&reference, &points)?;
            let (b, c, _) = values.dim();
            let samples = values.into_shape_with_order((b, c, n, n)).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
            let rhs = phase_collapse(&crate::swsft::SpinSignal::new(samples, spins.clone())?, sigma)?;
            let mut total = 0.0;
            for ((idx, a), r) in lhs.samples().indexed_iter().zip(rhs.samples().iter()) {
                total += if spins[idx.1] == 0 { (a - r).norm_sqr() } else { (a.norm() - r.norm()).powi(2) };
            }
            Ok(total.sqrt())
        })
        .collect::<Result<_>>()?;
    let defined = scale > 0.0 && !rotations.is_empty();
    let relative: Vec<f64> = if scale > 0.0 { errors.iter().map(|e| e / scale).collect() } else { Vec::new() };
    Ok(EquivarianceReport {
        layer: layer.name(),
        band_limit: input.band_limit(),
        rotations: rotations.len(),
        max_relative_error: defined.then(|| relative.iter().copied().fold(0.0, f64::max)),
        mean_relative_error: defined.then(|| Array1::from(relative.clone()).mean().unwrap_or(0.0)),
        seed: None,
        errors: relative,
    })
}

pub const CSV_HEADER: &str = "layer,L,n_rotations,max_rel_err,mean_rel_err,seed";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into())
}

impl EquivarianceReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.layer,
            self.band_limit,
            self.rotations,
            opt(self.max_relative_error.map(|e| format!("{e:.6e}"))),
            opt(self.mean_relative_error.map(|e| format!("{e:.6e}"))),
            opt(self.seed)
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, reports: &[EquivarianceReport]) -> Result<()> {
    writeln!(out, "# swirl-csv v1")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Shorthand used by tests: the maximum error as a plain number, `inf` if undefined.
pub fn max_error(report: &EquivarianceReport) -> f64 {
    report.max_relative_error.unwrap_or(f64::INFINITY)
}
