//! The invariant suite behind `swirl verify`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use ndarray::Array4;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::equivariance::{equivariance_error, pointwise_equivariance_error, sample_rotations, Collapse, Conv, FrozenBatchNorm, Pool, Residual, Unpool};
use crate::error::Result;
use crate::grid::{inject_parity_fault, integrate, SphericalGrid};
use crate::layers::{
    spectral_batch_norm, spectral_pool, spectral_unpool, spectral_variance, BatchNormState, FeatureLayout, FilterBank, NormMode, PhaseCollapse,
    ResidualBlock,
};
use crate::molsph::{calibrate_spread, featurize, parse_xyz, pooled_descriptor, spread, FeaturizerConfig};
use crate::reference::{brute_force_coefficients, synthesize_point, wigner_d_sum};
use crate::rng::{random_coefficients, seeded};
use crate::swsft::{coeff_index, forward, inverse, SpinCoefficients, SpinSignal, SymmetryPath, TransformConfig, Transformer};
use crate::wigner::{Rotation, WignerTables};

pub const WATER_XYZ: &str = "3\nwater\nO 0.000000 0.000000 0.117790\nH 0.000000 0.755453 -0.471161\nH 0.000000 -0.755453 -0.471161\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub band_limit: usize,
    pub metric: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(name: &str, band_limit: usize, metric: f64, threshold: f64) -> Self {
        // NaN never passes
        Self { name: name.into(), band_limit, metric, threshold, pass: metric <= threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Flips the parity sign used by the torus extension.
    Parity,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Only checks whose name contains this substring run.
    pub filter: Option<String>,
    pub fault: Fault,
    pub config: TransformConfig,
}

type Check = (&'static str, fn(&VerifyOptions) -> Result<Vec<CheckRow>>);

const CHECKS: &[Check] = &[
    ("grid/quadrature", grid_quadrature),
    ("grid/oracle", grid_oracle),
    ("wigner/sum_formula", wigner_sum_formula),
    ("wigner/orthogonality", wigner_orthogonality),
    ("swsft/round_trip", swsft_round_trip),
    ("swsft/equivalence", swsft_equivalence),
    ("swsft/g_symmetry", swsft_g_symmetry),
    ("layers/equivariance", layers_equivariance),
    ("layers/batch_norm", layers_batch_norm),
    ("layers/pooling", layers_pooling),
    ("molsph/invariance", molsph_invariance),
    ("molsph/structure", molsph_structure),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every selected check. The parity fault is enabled only for the
/// duration of the run.
pub fn run(options: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let faulty = options.fault == Fault::Parity;
    if faulty {
        inject_parity_fault(true);
    }
    let result = (|| {
        let mut rows = Vec::new();
        for (group, check) in CHECKS {
            let mut produced = check(options)?;
            if let Some(filter) = &options.filter {
                produced.retain(|r| r.name.contains(filter.as_str()) || group.contains(filter.as_str()));
            }
            rows.extend(produced);
        }
        Ok(rows)
    })();
    if faulty {
        inject_parity_fault(false);
    }
    result
}

pub const CSV_HEADER: &str = "name,L,metric,threshold,pass";

pub fn write_csv<W: Write>(mut out: W, rows: &[CheckRow]) -> Result<()> {
    writeln!(out, "# swirl-csv v1")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{:.6e},{:.1e},{}", r.name, r.band_limit, r.metric, r.threshold, r.pass)?;
    }
    Ok(())
}

pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

fn skip(options: &VerifyOptions, name: &str) -> bool {
    options.filter.as_deref().is_some_and(|f| !name.contains(f))
}

/// Grid samples of `f(channel, theta, phi)`.
pub fn sample_on_grid(grid: &SphericalGrid, spins: &[i32], f: impl Fn(usize, f64, f64) -> Complex64) -> Result<SpinSignal> {
    let n = grid.n();
    let samples = Array4::from_shape_fn((1, spins.len(), n, n), |(_, c, j, k)| f(c, grid.colatitudes()[j], grid.longitudes()[k]));
    SpinSignal::new(samples, spins.to_vec())
}

fn relative_diff(a: &SpinCoefficients, b: &SpinCoefficients) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

fn grid_quadrature(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    if skip(o, "grid/quadrature") {
        return Ok(Vec::new());
    }
    let grid = SphericalGrid::new(16)?;
    let one = ndarray::Array2::from_elem((16, 16), Complex64::new(1.0, 0.0));
    let area = integrate(&grid, one.view())?;
    Ok(vec![CheckRow::new("grid/quadrature_area", 8, (area - 4.0 * PI).norm() / (4.0 * PI), 1e-12)])
}

fn grid_oracle(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let band_limit = 8;
    let tables = WignerTables::new(band_limit)?;
    let grid = SphericalGrid::for_band_limit(band_limit)?;
    let mut rows = Vec::new();
    for spin in [-1, 0, 1] {
        let name = format!("grid/oracle_spin{spin}");
        if skip(o, &name) {
            continue;
        }
        let truth = random_coefficients(&mut seeded(o.seed ^ 0x0a), 1, &[spin], band_limit);
        let flat: Vec<Complex64> = truth.data().iter().copied().collect();
        let signal = sample_on_grid(&grid, &[spin], |_, t, p| synthesize_point(&flat, spin, t, p))?;
        let oracle = brute_force_coefficients(|t, p| synthesize_point(&flat, spin, t, p), spin, band_limit, 4);
        let got = Transformer::new(&grid, &tables, o.config)?.forward(&signal)?;
        let scale = oracle.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = got.data().iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        rows.push(CheckRow::new(&name, band_limit, err, 1e-8));
    }
    Ok(rows)
}

fn wigner_sum_formula(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    if skip(o, "wigner/sum_formula") {
        return Ok(Vec::new());
    }
    let tables = WignerTables::new(21)?;
    let beta = seeded(o.seed ^ 0x0b).random_range(0.1..3.0);
    let mut err: f64 = 0.0;
    for l in 0..=20usize {
        let li = l as i64;
        let d = tables.d_matrix(l, beta);
        for mp in -li..=li {
            for m in -li..=li {
                err = err.max((tables.delta(l, mp, m) - wigner_d_sum(l, mp, m, PI / 2.0)).abs());
                err = err.max((d[[(mp + li) as usize, (m + li) as usize]] - wigner_d_sum(l, mp, m, beta)).abs());
            }
        }
    }
    Ok(vec![CheckRow::new("wigner/sum_formula", 21, err, 1e-12)])
}

fn wigner_orthogonality(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    if skip(o, "wigner/orthogonality") {
        return Ok(Vec::new());
    }
    let tables = WignerTables::new(65)?;
    let beta = seeded(o.seed ^ 0x0c).random_range(0.1..3.0);
    let mut err: f64 = 0.0;
    for l in 0..=64usize {
        for d in [tables.delta_matrix(l), tables.d_matrix(l, beta)] {
            let p = d.dot(&d.t());
            for ((i, j), v) in p.indexed_iter() {
                err = err.max((v - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    Ok(vec![CheckRow::new("wigner/orthogonality", 65, err, 1e-12)])
}

fn swsft_round_trip(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for band_limit in [4, 8, 16, 32] {
        let name = format!("swsft/round_trip_L{band_limit}");
        if skip(o, &name) {
            continue;
        }
        let tables = WignerTables::new(band_limit)?;
        let spins: Vec<i32> = (-2..=2).filter(|s: &i32| (s.unsigned_abs() as usize) < band_limit).collect();
        let c = random_coefficients(&mut seeded(o.seed ^ band_limit as u64), 1, &spins, band_limit);
        let back = forward(&inverse(&c, &tables, o.config)?, &tables, o.config)?;
        rows.push(CheckRow::new(&name, band_limit, relative_diff(&back, &c), 1e-10));
    }
    Ok(rows)
}

fn swsft_equivalence(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let band_limit = 16;
    let tables = WignerTables::new(band_limit)?;
    let c = random_coefficients(&mut seeded(o.seed ^ 0x0d), 2, &[-1, 0, 1, 2], band_limit);
    let reference = TransformConfig::default();
    let signal = inverse(&c, &tables, reference)?;
    let base = forward(&signal, &tables, reference)?;
    let mut rows = Vec::new();
    for (name, config) in [
        ("swsft/path_equivalence", TransformConfig { symmetry_path: SymmetryPath::Reduced, ..reference }),
        ("swsft/backend_equivalence", TransformConfig { fourier_backend: crate::swsft::FourierBackend::Fft, ..reference }),
    ] {
        if skip(o, name) {
            continue;
        }
        let f = forward(&signal, &tables, config)?;
        let s = inverse(&c, &tables, config)?;
        let spatial = (s.samples() - signal.samples()).iter().map(|v| v.norm()).fold(0.0, f64::max)
            / signal.samples().iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
        rows.push(CheckRow::new(name, band_limit, relative_diff(&f, &base).max(spatial), 1e-12));
    }
    Ok(rows)
}

/// Largest violation of `G[m', m] = (-1)^(m+s) G[-m', m]` on the full path.
pub fn g_symmetry_error(coeffs: &SpinCoefficients, tables: &WignerTables, config: TransformConfig) -> Result<f64> {
    let band_limit = coeffs.band_limit();
    let grid = SphericalGrid::for_band_limit(band_limit)?;
    let t = Transformer::new(&grid, tables, TransformConfig { symmetry_path: SymmetryPath::Full, ..config })?;
    let g = t.synthesis_coefficients(coeffs)?;
    let lmax = band_limit as i64 - 1;
    let mut err: f64 = 0.0;
    let mut scale: f64 = f64::MIN_POSITIVE;
    for (idx, mat) in g.iter().enumerate() {
        let spin = coeffs.spins()[idx % coeffs.channels()] as i64;
        for mp in -lmax..=lmax {
            for m in -lmax..=lmax {
                let a = mat[[(mp + lmax) as usize, (m + lmax) as usize]];
                let b = mat[[(lmax - mp) as usize, (m + lmax) as usize]];
                let sign = if (m + spin).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                err = err.max((a - b * sign).norm());
                scale = scale.max(a.norm());
            }
        }
    }
    Ok(err / scale)
}

fn swsft_g_symmetry(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    if skip(o, "swsft/g_symmetry") {
        return Ok(Vec::new());
    }
    let tables = WignerTables::new(16)?;
    let c = random_coefficients(&mut seeded(o.seed ^ 0x0e), 1, &[-2, -1, 0, 1, 2], 16);
    Ok(vec![CheckRow::new("swsft/g_symmetry", 16, g_symmetry_error(&c, &tables, o.config)?, 1e-12)])
}

fn layers_equivariance(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let band_limit = 8;
    let tables = WignerTables::new(band_limit)?;
    let layout = FeatureLayout::new(vec![0, 1], 2)?;
    let mut rng = seeded(o.seed ^ 0x0f);
    let x = random_coefficients(&mut rng, 1, &layout.channel_spins(), band_limit);
    let rotations = sample_rotations(10, o.seed);
    let total = layout.total_channels();
    let mut rows = Vec::new();
    let mut push = |name: &str, err: Option<f64>, tol: f64| rows.push(CheckRow::new(name, band_limit, err.unwrap_or(f64::NAN), tol));
    if !skip(o, "layers/conv_equivariance") {
        let bank = FilterBank::random(&mut rng, layout.clone(), layout.clone(), band_limit)?;
        push("layers/conv_equivariance", equivariance_error(&Conv(&bank), &x, &rotations, &tables)?.max_relative_error, 1e-10);
    }
    if !skip(o, "layers/collapse_equivariance") {
        let params = PhaseCollapse::random(&mut rng, 2, total);
        let layer = Collapse { params: &params, tables: &tables, config: o.config };
        push("layers/collapse_equivariance", pointwise_equivariance_error(&layer, &x, &rotations, &tables, o.config)?.max_relative_error, 1e-6);
    }
    if !skip(o, "layers/batch_norm_equivariance") {
        let state = BatchNormState::new(total).with_running_variance(vec![0.7, 1.3, 2.0, 0.4])?;
        push("layers/batch_norm_equivariance", equivariance_error(&FrozenBatchNorm(&state), &x, &rotations, &tables)?.max_relative_error, 1e-6);
    }
    if !skip(o, "layers/pool_equivariance") {
        push("layers/pool_equivariance", equivariance_error(&Pool(4), &x, &rotations, &tables)?.max_relative_error, 1e-6);
        let wide = WignerTables::new(12)?;
        push("layers/unpool_equivariance", equivariance_error(&Unpool(12), &x, &rotations, &wide)?.max_relative_error, 1e-6);
    }
    if !skip(o, "layers/residual_identity_equivariance") {
        let bn = BatchNormState::new(total).with_running_variance(vec![1.0; total])?;
        let block = ResidualBlock::new(
            band_limit,
            None,
            FilterBank::identity(layout.clone(), band_limit)?,
            bn.clone(),
            PhaseCollapse::identity(2, total),
            FilterBank::identity(layout.clone(), band_limit)?,
            bn,
            PhaseCollapse::identity(2, total),
            None,
        )?;
        let layer = Residual { block: &block, tables: &tables, config: o.config };
        push(
            "layers/residual_identity_equivariance",
            pointwise_equivariance_error(&layer, &x, &rotations, &tables, o.config)?.max_relative_error,
            1e-6,
        );
    }
    Ok(rows)
}

/// Batch mean of the spatial variance of each channel, by grid quadrature.
pub fn spatial_variance(signal: &SpinSignal, grid: &SphericalGrid) -> Result<Vec<f64>> {
    let (batch, channels) = (signal.batch(), signal.channels());
    let mut out = vec![0.0; channels];
    for (c, slot) in out.iter_mut().enumerate() {
        for b in 0..batch {
            let plane = signal.channel(b, c);
            let mean = if signal.spins()[c] == 0 { integrate(grid, plane)? / (4.0 * PI) } else { Complex64::new(0.0, 0.0) };
            let centred = plane.mapv(|v| Complex64::new((v - mean).norm_sqr(), 0.0));
            *slot += integrate(grid, centred.view())?.re / (4.0 * PI);
        }
        *slot /= batch as f64;
    }
    Ok(out)
}

fn layers_batch_norm(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let band_limit = 8;
    let tables = WignerTables::new(band_limit)?;
    let spins = [0, 1, 0];
    let x = random_coefficients(&mut seeded(o.seed ^ 0x10), 4, &spins, band_limit);
    let (y, _) = spectral_batch_norm(&x, &BatchNormState::new(3), NormMode::Train)?;
    let var = spectral_variance(&y);
    let mut rows = Vec::new();
    if !skip(o, "layers/batch_norm_variance") {
        let worst = var.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        rows.push(CheckRow::new("layers/batch_norm_variance", band_limit, worst, 1e-2));
    }
    if !skip(o, "layers/batch_norm_parseval") {
        let grid = SphericalGrid::for_band_limit(band_limit)?;
        let spatial = spatial_variance(&inverse(&y, &tables, o.config)?, &grid)?;
        let err = spatial.iter().zip(var.iter()).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
        rows.push(CheckRow::new("layers/batch_norm_parseval", band_limit, err, 1e-6));
    }
    Ok(rows)
}

fn layers_pooling(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    if skip(o, "layers/pool_projection") {
        return Ok(Vec::new());
    }
    let x = random_coefficients(&mut seeded(o.seed ^ 0x11), 1, &[0, 1], 16);
    let p = spectral_unpool(&spectral_pool(&x, 8)?, 16)?;
    let pp = spectral_unpool(&spectral_pool(&p, 8)?, 16)?;
    let identity = spectral_pool(&spectral_unpool(&x, 20)?, 16)?;
    let mut err = p.max_abs_diff(&pp).max(identity.max_abs_diff(&x));
    for l in 8..16usize {
        for m in -(l as i64)..=l as i64 {
            err = err.max(p.data()[[0, 1, coeff_index(l, m)]].norm());
        }
    }
    Ok(vec![CheckRow::new("layers/pool_projection", 16, err, 0.0)])
}

/// Relative spectral equivariance error of the featurizer over `rotations`, at grid `n`.
pub fn featurizer_rotation_error(xyz: &str, n: usize, rotations: &[Rotation]) -> Result<(f64, f64)> {
    let mol = parse_xyz(xyz)?;
    let grid = SphericalGrid::new(n)?;
    let config = FeaturizerConfig::for_molecule(&mol);
    let tables = WignerTables::new(grid.band_limit())?;
    let features = featurize(&mol, &config, &grid)?;
    let base = forward(&features.signal, &tables, TransformConfig::default())?;
    let pooled = pooled_descriptor(&features, &grid)?;
    let pooled_scale = pooled.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (mut spectral, mut invariant): (f64, f64) = (0.0, 0.0);
    for rot in rotations {
        let rotated = featurize(&mol.rotated(rot), &config, &grid)?;
        let got = forward(&rotated.signal, &tables, TransformConfig::default())?;
        let want = crate::equivariance::rotate_coefficients(&base, rot, &tables)?;
        spectral = spectral.max(got.diff_norm(&want) / base.norm());
        let p = pooled_descriptor(&rotated, &grid)?;
        invariant = invariant.max((&p - &pooled).iter().map(|v| v * v).sum::<f64>().sqrt() / pooled_scale);
    }
    Ok((spectral, invariant))
}

fn molsph_invariance(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    if !skip(o, "molsph/translation") {
        let mol = parse_xyz(WATER_XYZ)?;
        let grid = SphericalGrid::new(16)?;
        let config = FeaturizerConfig::for_molecule(&mol);
        let a = featurize(&mol, &config, &grid)?;
        let b = featurize(&mol.translated([0.5, -2.0, 3.25]), &config, &grid)?;
        let err = (a.signal.samples() - b.signal.samples()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        // translation only shifts positions; differences are rounding in r_j - r_i
        rows.push(CheckRow::new("molsph/translation", 8, err, 1e-12));
    }
    if !skip(o, "molsph/rotation") || !skip(o, "molsph/pooled_invariance") {
        let (spectral, pooled) = featurizer_rotation_error(WATER_XYZ, 32, &sample_rotations(5, o.seed))?;
        if !skip(o, "molsph/rotation") {
            rows.push(CheckRow::new("molsph/rotation", 16, spectral, 1e-6));
        }
        if !skip(o, "molsph/pooled_invariance") {
            rows.push(CheckRow::new("molsph/pooled_invariance", 16, pooled, 1e-6));
        }
    }
    Ok(rows)
}

fn molsph_structure(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    if !skip(o, "molsph/spread_calibration") {
        let sigma = calibrate_spread(0.95, FRAC_PI_4)?;
        rows.push(CheckRow::new("molsph/spread_calibration", 0, (spread(FRAC_PI_4, sigma) - 0.05).abs(), 1e-12));
    }
    if !skip(o, "molsph/water_channels") {
        let mol = parse_xyz(WATER_XYZ)?;
        let f = featurize(&mol, &FeaturizerConfig::for_molecule(&mol), &SphericalGrid::new(8)?)?;
        let mismatch = (f.atoms() != 3) as u8 + (f.channels_per_atom() != 4) as u8 + (f.feature_maps() != 12) as u8;
        rows.push(CheckRow::new("molsph/water_channels", 4, mismatch as f64, 0.0));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_group() {
        let rows = run(&VerifyOptions { filter: Some("wigner".into()), ..Default::default() }).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.name.starts_with("wigner/") && r.pass), "{rows:?}");
    }
}
