//! The `swirl` command line. Exit status: 0 success, 1 a check or
//! cross-check failed, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bench::{self, BenchSpec};
use crate::config::RunConfig;
use crate::container::{Container, Domain};
use crate::error::Error;
use crate::grid::SphericalGrid;
use crate::molsph::{atomic_number, default_spread, featurize, parse_xyz_all, FeaturizerConfig, Molecule, DEFAULT_POWERS};
use crate::swsft::{FourierBackend, SymmetryPath, TransformConfig, Transformer};
use crate::verify::{self, Fault, VerifyOptions};
use crate::wigner::WignerTables;

#[derive(Debug, Parser)]
#[command(name = "swirl", version, about = "Spin-weighted spherical transforms, layers and benchmarks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid resolution n (comma-separated for bench).
    #[arg(long, global = true, value_delimiter = ',')]
    pub resolution: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub backend: Option<Vec<FourierBackend>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub path: Option<Vec<SymmetryPath>>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suite and print one CSV row per check.
    Verify {
        /// Only checks whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Time forward + inverse transforms per resolution, backend and path.
    Bench {
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
    },
    /// Apply the forward or inverse transform to a container file.
    Transform {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "forward")]
        direction: DirectionArg,
    },
    /// Turn XYZ molecules into per-atom spherical feature maps.
    Featurize {
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        /// Element symbols in channel order.
        #[arg(long, value_delimiter = ',')]
        vocabulary: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Inverse,
}

fn overrides(common: &Common, command: &Command) -> RunConfig {
    let mut cfg = RunConfig {
        seed: common.seed,
        resolutions: common.resolution.clone(),
        backends: common.backend.clone(),
        paths: common.path.clone(),
        output: common.output.as_ref().map(|p| p.display().to_string()),
        ..Default::default()
    };
    match command {
        Command::Verify { filter, .. } => cfg.filter = filter.clone(),
        Command::Bench { repetitions, warmup } => {
            cfg.repetitions = *repetitions;
            cfg.warmup = *warmup;
        }
        Command::Featurize { powers, vocabulary, .. } => {
            cfg.powers = powers.clone();
            cfg.vocabulary = vocabulary.clone();
        }
        Command::Transform { .. } => {}
    }
    cfg
}

fn single<T: Copy + std::fmt::Debug>(values: &Option<Vec<T>>, what: &str, default: T) -> anyhow::Result<T> {
    match values.as_deref() {
        None => Ok(default),
        Some([v]) => Ok(*v),
        Some(other) => bail!("this command takes a single {what}, got {other:?}"),
    }
}

fn transform_config(cfg: &RunConfig) -> anyhow::Result<TransformConfig> {
    Ok(TransformConfig::new(
        single(&cfg.backends, "backend", FourierBackend::default())?,
        single(&cfg.paths, "path", SymmetryPath::default())?,
    ))
}

fn emit(cfg: &RunConfig, write: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> anyhow::Result<()> {
    match &cfg.output {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path).with_context(|| format!("cannot create {path}"))?);
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn output_path(cfg: &RunConfig) -> anyhow::Result<&Path> {
    cfg.output.as_deref().map(Path::new).ok_or_else(|| anyhow!("--output is required for binary containers"))
}

fn cmd_verify(cfg: &RunConfig, fault: Option<FaultArg>) -> anyhow::Result<i32> {
    let options = VerifyOptions {
        seed: cfg.seed.unwrap_or(0),
        filter: cfg.filter.clone(),
        fault: match fault {
            Some(FaultArg::Parity) => Fault::Parity,
            None => Fault::None,
        },
        config: transform_config(cfg)?,
    };
    let rows = verify::run(&options)?;
    emit(cfg, |out| verify::write_csv(out, &rows))?;
    Ok(if verify::all_pass(&rows) { 0 } else { 1 })
}

fn cmd_bench(cfg: &RunConfig) -> anyhow::Result<i32> {
    let defaults = BenchSpec::default();
    let spec = BenchSpec {
        resolutions: cfg.resolutions.clone().unwrap_or(defaults.resolutions),
        backends: cfg.backends.clone().unwrap_or(defaults.backends),
        paths: cfg.paths.clone().unwrap_or(defaults.paths),
        repetitions: cfg.repetitions.unwrap_or(defaults.repetitions),
        warmup: cfg.warmup.unwrap_or(defaults.warmup),
        seed: cfg.seed.unwrap_or(defaults.seed),
    };
    spec.validate()?;
    let rows = bench::run(&spec)?;
    emit(cfg, |out| bench::write_csv(out, &rows))?;
    let checks_ok = rows.iter().all(|r| r.status != "cross_check_failed");
    Ok(if checks_ok { 0 } else { 1 })
}

fn cmd_transform(cfg: &RunConfig, input: &Path, direction: DirectionArg) -> anyhow::Result<i32> {
    let container = Container::read_file(input).with_context(|| format!("{}", input.display()))?;
    let config = transform_config(cfg)?;
    let out = match direction {
        DirectionArg::Forward => {
            if container.header.domain == Domain::Spectral {
                return Err(Error::Convention("forward transform needs a spatial container, found a spectral one".into()).into());
            }
            let signal = container.to_signal()?;
            let grid = SphericalGrid::new(signal.n())?;
            let tables = WignerTables::new(grid.band_limit())?;
            let coeffs = Transformer::new(&grid, &tables, config)?.forward(&signal)?;
            let mut out = Container::from_coefficients(&coeffs, Some(grid.n()));
            out.header.extras = container.header.extras.clone();
            out
        }
        DirectionArg::Inverse => {
            if container.header.domain != Domain::Spectral {
                return Err(Error::Convention(format!("inverse transform needs a spectral container, found {:?}", container.header.domain)).into());
            }
            let coeffs = container.to_coefficients()?;
            let default_n = container.header.grid_n.unwrap_or(2 * coeffs.band_limit());
            let n = single(&cfg.resolutions, "resolution", default_n)?;
            let grid = SphericalGrid::new(n)?;
            if grid.band_limit() < coeffs.band_limit() {
                bail!("resolution {n} cannot represent band limit {}", coeffs.band_limit());
            }
            let tables = WignerTables::new(grid.band_limit())?;
            let padded = crate::layers::spectral_unpool(&coeffs, grid.band_limit())?;
            let signal = Transformer::new(&grid, &tables, config)?.inverse(&padded)?;
            let mut out = Container::from_signal(&signal);
            out.header.extras = container.header.extras.clone();
            out
        }
    };
    out.write_file(output_path(cfg)?)?;
    Ok(0)
}

fn vocabulary(cfg: &RunConfig, molecules: &[Molecule]) -> anyhow::Result<Vec<u32>> {
    match &cfg.vocabulary {
        Some(symbols) => symbols
            .iter()
            .map(|s| atomic_number(s).ok_or_else(|| anyhow!("unknown element {s:?} in vocabulary")))
            .collect(),
        None => {
            let mut all: Vec<u32> = molecules.iter().flat_map(|m| m.elements()).collect();
            all.sort_unstable();
            all.dedup();
            Ok(all)
        }
    }
}

fn cmd_featurize(cfg: &RunConfig, input: &Path) -> anyhow::Result<i32> {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let molecules = parse_xyz_all(&text).map_err(|e| match e {
        Error::Parse { line, message } => anyhow!("{}:{line}: {message}", input.display()),
        Error::UnknownElement { line, symbol } => anyhow!("{}:{line}: unknown element {symbol:?}", input.display()),
        other => anyhow!("{}: {other}", input.display()),
    })?;
    if molecules.is_empty() {
        bail!("{}: no molecules found", input.display());
    }
    let config = FeaturizerConfig {
        vocabulary: vocabulary(cfg, &molecules)?,
        powers: cfg.powers.clone().unwrap_or_else(|| DEFAULT_POWERS.to_vec()),
        sigma: default_spread(),
    };
    let n = single(&cfg.resolutions, "resolution", 32)?;
    let grid = SphericalGrid::new(n)?;
    let mut blocks = Vec::new();
    let mut index = Vec::new();
    let mut offset = 0;
    for (k, mol) in molecules.iter().enumerate() {
        let features = featurize(mol, &config, &grid).with_context(|| format!("{}: molecule {}", input.display(), k + 1))?;
        index.push(json!({ "comment": mol.comment, "first_atom": offset, "atoms": mol.len() }));
        offset += mol.len();
        blocks.push(features);
    }
    let views: Vec<_> = blocks.iter().map(|f| f.signal.samples().view()).collect();
    let stacked = ndarray::concatenate(ndarray::Axis(0), &views)?;
    let mut all = blocks.swap_remove(0);
    all.signal = crate::swsft::SpinSignal::new(stacked, all.signal.spins().to_vec())?;
    let mut container = Container::from_features(&all);
    container.header.extras.insert("molecules".into(), json!(index));
    container.write_file(output_path(cfg)?)?;
    Ok(0)
}

/// `threads` from the config wins over `SWIRL_THREADS`.
fn configure_threads(cfg: &RunConfig) -> anyhow::Result<()> {
    let threads = match (cfg.threads, std::env::var("SWIRL_THREADS")) {
        (Some(t), _) => t,
        (None, Ok(value)) => value.parse().with_context(|| format!("SWIRL_THREADS={value:?} is not a thread count"))?,
        (None, Err(_)) => return Ok(()),
    };
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    let file = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = file.merged(overrides(&cli.common, &cli.command));
    configure_threads(&cfg)?;
    match &cli.command {
        Command::Verify { inject_fault, .. } => cmd_verify(&cfg, *inject_fault),
        Command::Bench { .. } => cmd_bench(&cfg),
        Command::Transform { input, direction } => cmd_transform(&cfg, input, *direction),
        Command::Featurize { input, .. } => cmd_featurize(&cfg, input),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("swirl: {e:#}");
            2
        }
    }
}
