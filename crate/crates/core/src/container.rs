//! Binary container: 8-byte magic, little-endian `u64` header length, a JSON
//! header, then the payload as little-endian complex128 (re, im) pairs in
//! row-major order of `shape`.
//!
//! Spectral payloads are ordered `(batch, channel, l, m)` with `m` ascending
//! from `-l`; spatial and feature payloads `(batch, channel, theta, phi)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array3, Array4, Array5};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::layers::{FeatureLayout, FilterBank};
use crate::molsph::MoleculeFeatures;
use crate::swsft::{SpinCoefficients, SpinSignal};

pub const MAGIC: &[u8; 8] = b"SWIRLCT\x01";
pub const FORMAT: &str = "swirl-container";
pub const VERSION: u32 = 1;
/// Harmonic normalization and phase the coefficients refer to.
pub const CONVENTION: &str = "orthonormal-condon-shortley/equiangular-torus";
pub const SPECTRAL_ORDERING: &str = "batch,channel,l,m";
pub const SPATIAL_ORDERING: &str = "batch,channel,theta,phi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Spatial,
    Spectral,
    Features,
    Parameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub domain: Domain,
    pub convention: String,
    pub shape: Vec<usize>,
    pub spins: Vec<i32>,
    pub band_limit: usize,
    pub grid_n: Option<usize>,
    pub ordering: String,
    #[serde(default)]
    pub extras: Map<String, Value>,
}

impl Header {
    fn new(domain: Domain, shape: Vec<usize>, spins: Vec<i32>, band_limit: usize, grid_n: Option<usize>) -> Self {
        let ordering = match domain {
            Domain::Spectral => SPECTRAL_ORDERING,
            Domain::Spatial | Domain::Features => SPATIAL_ORDERING,
            Domain::Parameters => "s_in,s_out,c_in,c_out,l",
        };
        Self {
            format: FORMAT.into(),
            version: VERSION,
            domain,
            convention: CONVENTION.into(),
            shape,
            spins,
            band_limit,
            grid_n,
            ordering: ordering.into(),
            extras: Map::new(),
        }
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: Header,
    pub payload: Vec<Complex64>,
}

impl Container {
    pub fn from_signal(signal: &SpinSignal) -> Self {
        let (b, c, n, _) = signal.samples().dim();
        Self {
            header: Header::new(Domain::Spatial, vec![b, c, n, n], signal.spins().to_vec(), n / 2, Some(n)),
            payload: signal.samples().iter().copied().collect(),
        }
    }

    pub fn from_coefficients(coeffs: &SpinCoefficients, grid_n: Option<usize>) -> Self {
        let (b, c, k) = coeffs.data().dim();
        Self {
            header: Header::new(Domain::Spectral, vec![b, c, k], coeffs.spins().to_vec(), coeffs.band_limit(), grid_n),
            payload: coeffs.data().iter().copied().collect(),
        }
    }

    pub fn from_features(features: &MoleculeFeatures) -> Self {
        let mut out = Self::from_signal(&features.signal);
        out.header.domain = Domain::Features;
        let extras = &mut out.header.extras;
        extras.insert("vocabulary".into(), json!(features.vocabulary));
        extras.insert("powers".into(), json!(features.powers));
        extras.insert("sigma".into(), json!(features.sigma));
        extras.insert("channel_order".into(), json!("type_index * powers + power_index"));
        out
    }

    pub fn from_filter_bank(bank: &FilterBank) -> Self {
        let w = bank.weights();
        let (a, b, c, d, e) = w.dim();
        let mut header = Header::new(Domain::Parameters, vec![a, b, c, d, e], Vec::new(), bank.band_limit(), None);
        header.extras.insert("input".into(), json!(bank.input()));
        header.extras.insert("output".into(), json!(bank.output()));
        Self { header, payload: w.iter().copied().collect() }
    }

    fn expect(&self, domain: Domain) -> Result<()> {
        if self.header.convention != CONVENTION {
            return Err(Error::Convention(format!("container uses convention {:?}, expected {CONVENTION:?}", self.header.convention)));
        }
        if self.header.domain != domain {
            return Err(Error::Convention(format!("expected a {domain:?} container, found {:?}", self.header.domain)));
        }
        Ok(())
    }

    fn shape<const N: usize>(&self) -> Result<[usize; N]> {
        self.header
            .shape
            .clone()
            .try_into()
            .map_err(|_| Error::Container(format!("expected a rank-{N} shape, found {:?}", self.header.shape)))
    }

    /// Spatial or feature containers.
    pub fn to_signal(&self) -> Result<SpinSignal> {
        if self.header.domain == Domain::Features {
            self.expect(Domain::Features)?;
        } else {
            self.expect(Domain::Spatial)?;
        }
        let [b, c, n, m] = self.shape::<4>()?;
        if n != m {
            return Err(Error::Container(format!("spatial payload must be square, found {n} x {m}")));
        }
        let samples = Array4::from_shape_vec((b, c, n, n), self.payload.clone()).map_err(|e| Error::Container(e.to_string()))?;
        SpinSignal::new(samples, self.header.spins.clone())
    }

    pub fn to_coefficients(&self) -> Result<SpinCoefficients> {
        self.expect(Domain::Spectral)?;
        let [b, c, k] = self.shape::<3>()?;
        let data = Array3::from_shape_vec((b, c, k), self.payload.clone()).map_err(|e| Error::Container(e.to_string()))?;
        SpinCoefficients::new(data, self.header.spins.clone(), self.header.band_limit)
    }

    pub fn to_filter_bank(&self) -> Result<FilterBank> {
        self.expect(Domain::Parameters)?;
        let shape = self.shape::<5>()?;
        let layout = |key: &str| -> Result<FeatureLayout> {
            let v = self.header.extras.get(key).ok_or_else(|| Error::Container(format!("missing {key} layout")))?;
            Ok(serde_json::from_value(v.clone())?)
        };
        let weights = Array5::from_shape_vec(shape, self.payload.clone()).map_err(|e| Error::Container(e.to_string()))?;
        FilterBank::new(layout("input")?, layout("output")?, self.header.band_limit, weights)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        if self.payload.len() != self.header.element_count() {
            return Err(Error::Container(format!("payload has {} values for shape {:?}", self.payload.len(), self.header.shape)));
        }
        let header = serde_json::to_vec(&self.header)?;
        out.write_all(MAGIC)?;
        out.write_all(&(header.len() as u64).to_le_bytes())?;
        out.write_all(&header)?;
        let mut buf = Vec::with_capacity(16 * self.payload.len());
        for v in &self.payload {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| Error::Container("file too short for a container".into()))?;
        if &magic != MAGIC {
            return Err(Error::Container("bad magic bytes".into()));
        }
        let mut len = [0u8; 8];
        input.read_exact(&mut len).map_err(|_| Error::Container("truncated header length".into()))?;
        let len = usize::try_from(u64::from_le_bytes(len)).map_err(|_| Error::Container("header too large".into()))?;
        if len > 1 << 26 {
            return Err(Error::Container(format!("implausible header length {len}")));
        }
        let mut header = vec![0u8; len];
        input.read_exact(&mut header).map_err(|_| Error::Container("truncated header".into()))?;
        let header: Header = serde_json::from_slice(&header).map_err(|e| Error::Container(format!("malformed header: {e}")))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(Error::Container(format!("unsupported format {} v{}", header.format, header.version)));
        }
        let count = header.element_count();
        let mut raw = Vec::new();
        input.read_to_end(&mut raw)?;
        if raw.len() != 16 * count {
            return Err(Error::Container(format!("payload has {} bytes, shape {:?} needs {}", raw.len(), header.shape, 16 * count)));
        }
        let payload = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { header, payload })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
