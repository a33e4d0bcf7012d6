//! Timing harness contrasting Fourier backends and symmetry paths.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SphericalGrid;
use crate::rng::{random_coefficients, seeded};
use crate::swsft::{FourierBackend, SpinSignal, SymmetryPath, TransformConfig, Transformer};
use crate::wigner::WignerTables;

pub const MIN_REPETITIONS: usize = 3;
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-12;
const BENCH_SPINS: [i32; 2] = [0, 1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub resolutions: Vec<usize>,
    pub backends: Vec<FourierBackend>,
    pub paths: Vec<SymmetryPath>,
    pub repetitions: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            resolutions: vec![64, 128, 256],
            backends: vec![FourierBackend::DftMatrix, FourierBackend::Fft],
            paths: vec![SymmetryPath::Reduced, SymmetryPath::Full],
            repetitions: 5,
            warmup: 1,
            seed: 0,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < MIN_REPETITIONS {
            return Err(Error::InvalidParameter(format!("repetitions must be at least {MIN_REPETITIONS}, got {}", self.repetitions)));
        }
        if let Some(&n) = self.resolutions.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(Error::InvalidResolution(n as i64));
        }
        if self.resolutions.is_empty() || self.backends.is_empty() || self.paths.is_empty() {
            return Err(Error::InvalidParameter("bench needs at least one resolution, backend and path".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub backend: FourierBackend,
    pub path: SymmetryPath,
    pub repetitions: usize,
    /// Seconds for one forward plus one inverse transform.
    pub median: Option<f64>,
    pub iqr: Option<f64>,
    /// Largest relative deviation from the dense full-path reference.
    pub cross_check: Option<f64>,
    pub status: String,
}

impl BenchRow {
    pub fn ok(&self) -> bool {
        self.status == "ok" && self.cross_check.is_some_and(|e| e <= CROSS_CHECK_TOLERANCE)
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Rough peak working set of one cell in bytes.
pub fn memory_estimate(n: usize) -> u64 {
    let l = (n / 2) as u64;
    let tables = 8 * (l + 1) * (l + 2) * (l + 3) / 6;
    let plans = 16 * 4 * (2 * l) * (2 * n as u64);
    let per_channel = 16 * (6 * (n as u64).pow(2) + 3 * (2 * l).pow(2));
    tables + plans + per_channel * BENCH_SPINS.len() as u64
}

fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    line.split_whitespace().nth(1)?.parse::<u64>().ok().map(|kb| kb * 1024)
}

/// The input used for every row at resolution `n`.
pub fn bench_input(n: usize, seed: u64, tables: &WignerTables) -> Result<SpinSignal> {
    let band_limit = n / 2;
    let coeffs = random_coefficients(&mut seeded(seed ^ (n as u64).rotate_left(32)), 1, &BENCH_SPINS, band_limit);
    Transformer::new(&SphericalGrid::new(n)?, tables, TransformConfig::default())?.inverse(&coeffs)
}

fn relative(a: &crate::swsft::SpinCoefficients, b: &crate::swsft::SpinCoefficients) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

fn time_cell(spec: &BenchSpec, n: usize, config: TransformConfig, tables: &WignerTables, signal: &SpinSignal) -> Result<(Vec<f64>, f64)> {
    let grid = SphericalGrid::new(n)?;
    let reference = Transformer::new(&grid, tables, TransformConfig::default())?;
    let t = Transformer::new(&grid, tables, config)?;
    let expected = reference.forward(signal)?;
    let coeffs = t.forward(signal)?;
    let back = t.inverse(&coeffs)?;
    let spatial = (back.samples() - reference.inverse(&expected)?.samples()).iter().map(|v| v.norm()).fold(0.0, f64::max)
        / signal.samples().iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let check = relative(&coeffs, &expected).max(spatial);
    for _ in 0..spec.warmup {
        t.inverse(&t.forward(signal)?)?;
    }
    let mut times = Vec::with_capacity(spec.repetitions);
    for _ in 0..spec.repetitions {
        let start = Instant::now();
        let c = t.forward(signal)?;
        std::hint::black_box(t.inverse(&c)?);
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((times, check))
}

pub fn run(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    let available = available_memory();
    for &n in &spec.resolutions {
        let cells: Vec<(FourierBackend, SymmetryPath)> =
            spec.backends.iter().flat_map(|&b| spec.paths.iter().map(move |&p| (b, p))).collect();
        let failed = |status: String| -> Vec<BenchRow> {
            cells
                .iter()
                .map(|&(backend, path)| BenchRow {
                    n,
                    backend,
                    path,
                    repetitions: spec.repetitions,
                    median: None,
                    iqr: None,
                    cross_check: None,
                    status: status.clone(),
                })
                .collect()
        };
        if available.is_some_and(|a| memory_estimate(n) > a / 2) {
            rows.extend(failed(format!("out_of_memory: needs about {} MiB", memory_estimate(n) >> 20)));
            continue;
        }
        let prepared = catch_unwind(AssertUnwindSafe(|| -> Result<_> {
            let tables = WignerTables::new(n / 2)?;
            let input = bench_input(n, spec.seed, &tables)?;
            Ok((tables, input))
        }));
        let (tables, input) = match prepared {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => {
                rows.extend(failed(format!("error: {e}")));
                continue;
            }
            Err(_) => {
                rows.extend(failed("out_of_memory: allocation failed".into()));
                continue;
            }
        };
        // cells run one after another so timings do not interfere
        for &(backend, path) in &cells {
            let config = TransformConfig::new(backend, path);
            let outcome = catch_unwind(AssertUnwindSafe(|| time_cell(spec, n, config, &tables, &input)));
            let mut row = BenchRow {
                n,
                backend,
                path,
                repetitions: spec.repetitions,
                median: None,
                iqr: None,
                cross_check: None,
                status: "ok".into(),
            };
            match outcome {
                Ok(Ok((mut times, check))) => {
                    times.sort_by(f64::total_cmp);
                    row.median = Some(quantile(&times, 0.5));
                    row.iqr = Some(quantile(&times, 0.75) - quantile(&times, 0.25));
                    row.cross_check = Some(check);
                    if check > CROSS_CHECK_TOLERANCE {
                        row.status = "cross_check_failed".into();
                    }
                }
                Ok(Err(e)) => row.status = format!("error: {e}"),
                Err(_) => row.status = "out_of_memory: allocation failed".into(),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "n,L,backend,path,repetitions,median_s,iqr_s,cross_check,status";

pub fn write_csv<W: Write>(mut out: W, rows: &[BenchRow]) -> Result<()> {
    let num = |v: Option<f64>| v.map(|v| format!("{v:.6e}")).unwrap_or_default();
    writeln!(out, "# swirl-csv v1")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.n / 2,
            r.backend,
            r.path,
            r.repetitions,
            num(r.median),
            num(r.iqr),
            num(r.cross_check),
            r.status.replace(',', ";")
        )?;
    }
    Ok(())
}
