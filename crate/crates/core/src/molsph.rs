//! Molecule-to-sphere featurization: every atom sees its neighbours as
//! Gaussian bumps on a sphere, one channel per (neighbour type, power law).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use ndarray::{Array2, Array4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate, SphericalGrid};
use crate::swsft::SpinSignal;
use crate::wigner::Rotation;

const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn",
    "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Atomic number for a symbol, case-insensitive.
pub fn atomic_number(symbol: &str) -> Option<u32> {
    ELEMENTS.iter().position(|e| e.eq_ignore_ascii_case(symbol)).map(|i| i as u32 + 1)
}

pub fn element_symbol(z: u32) -> Option<&'static str> {
    ELEMENTS.get((z as usize).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: u32,
    /// Angstrom.
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Molecule {
    atoms: Vec<Atom>,
    pub comment: String,
    pub id: Option<String>,
    pub targets: BTreeMap<String, f64>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("a molecule needs at least one atom".into()));
        }
        for a in &atoms {
            if a.z == 0 || a.z as usize > ELEMENTS.len() {
                return Err(Error::UnknownAtomType(a.z));
            }
            if a.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite position {:?}", a.position)));
            }
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i].position == atoms[j].position {
                    return Err(Error::CoincidentAtoms(i, j));
                }
            }
        }
        Ok(Self { atoms, ..Default::default() })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sorted distinct atomic numbers.
    pub fn elements(&self) -> Vec<u32> {
        let mut z: Vec<u32> = self.atoms.iter().map(|a| a.z).collect();
        z.sort_unstable();
        z.dedup();
        z
    }

    pub fn translated(&self, t: [f64; 3]) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            for (p, d) in a.position.iter_mut().zip(t) {
                *p += d;
            }
        }
        out
    }

    /// Rigid rotation of every position about the origin.
    pub fn rotated(&self, rot: &Rotation) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.position = rot.apply(a.position);
        }
        out
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses concatenated XYZ blocks. Blank lines between blocks are skipped.
pub fn parse_xyz_all(text: &str) -> Result<Vec<Molecule>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let count_line = i + 1;
        let count: usize =
            lines[i].trim().parse().map_err(|_| parse_error(count_line, format!("expected an atom count, found {:?}", lines[i].trim())))?;
        if count == 0 {
            return Err(parse_error(count_line, "atom count must be positive"));
        }
        let comment = lines.get(i + 1).ok_or_else(|| parse_error(count_line + 1, "missing comment line"))?.trim().to_string();
        let body = i + 2;
        let available = lines[body.min(lines.len())..].iter().take(count).take_while(|l| !l.trim().is_empty()).count();
        if available < count {
            return Err(parse_error(
                body + available + 1,
                format!("count line says {count} atoms but only {available} atom lines follow"),
            ));
        }
        let mut atoms = Vec::with_capacity(count);
        for (k, line) in lines[body..body + count].iter().enumerate() {
            let number = body + k + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(parse_error(number, format!("expected element and three coordinates, found {:?}", line.trim())));
            }
            let z = match fields[0].parse::<u32>() {
                Ok(z) if element_symbol(z).is_some() => z,
                _ => atomic_number(fields[0]).ok_or_else(|| Error::UnknownElement { line: number, symbol: fields[0].to_string() })?,
            };
            let mut position = [0.0; 3];
            for (axis, field) in fields[1..4].iter().enumerate() {
                position[axis] = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(number, format!("non-numeric coordinate {field:?}")))?;
            }
            atoms.push(Atom { z, position });
        }
        let mut mol = Molecule::new(atoms).map_err(|e| parse_error(count_line, e.to_string()))?;
        mol.comment = comment;
        out.push(mol);
        i = body + count;
    }
    Ok(out)
}

/// Parses a single XYZ block.
pub fn parse_xyz(text: &str) -> Result<Molecule> {
    let mut all = parse_xyz_all(text)?;
    match all.len() {
        0 => Err(parse_error(1, "no molecule found")),
        1 => Ok(all.remove(0)),
        k => Err(parse_error(1, format!("expected one molecule, found {k}"))),
    }
}

/// Width of `g(t) = exp(-t^2 / (2 sigma^2))` such that `g(angle) = 1 - reduction`.
pub fn calibrate_spread(reduction: f64, angle: f64) -> Result<f64> {
    if !(reduction > 0.0 && reduction < 1.0) || !(angle > 0.0 && angle < PI) {
        return Err(Error::InvalidParameter(format!("reduction {reduction} at angle {angle} is outside (0, 1) x (0, pi)")));
    }
    Ok(angle / (-2.0 * (1.0 - reduction).ln()).sqrt())
}

/// 95% reduction at 45 degrees.
pub fn default_spread() -> f64 {
    FRAC_PI_4 / (2.0 * 20f64.ln()).sqrt()
}

pub fn spread(angle: f64, sigma: f64) -> f64 {
    (-angle * angle / (2.0 * sigma * sigma)).exp()
}

pub const DEFAULT_POWERS: [f64; 2] = [2.0, 6.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    /// Atomic numbers in channel order.
    pub vocabulary: Vec<u32>,
    pub powers: Vec<f64>,
    pub sigma: f64,
}

impl FeaturizerConfig {
    pub fn for_molecule(mol: &Molecule) -> Self {
        Self { vocabulary: mol.elements(), powers: DEFAULT_POWERS.to_vec(), sigma: default_spread() }
    }
}

/// One sphere per atom, shape `(N, Z * P, n, n)`; channel `type_index * P + power_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeFeatures {
    pub signal: SpinSignal,
    pub vocabulary: Vec<u32>,
    pub powers: Vec<f64>,
    pub sigma: f64,
}

impl MoleculeFeatures {
    pub fn atoms(&self) -> usize {
        self.signal.batch()
    }

    pub fn channels_per_atom(&self) -> usize {
        self.signal.channels()
    }

    pub fn feature_maps(&self) -> usize {
        self.atoms() * self.channels_per_atom()
    }

    pub fn channel(&self, z: u32, power_index: usize) -> Option<usize> {
        let t = self.vocabulary.iter().position(|&v| v == z)?;
        (power_index < self.powers.len()).then_some(t * self.powers.len() + power_index)
    }
}

fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt().atan2(dot)
}

fn check_config(config: &FeaturizerConfig) -> Result<()> {
    if config.powers.is_empty() {
        return Err(Error::InvalidParameter("at least one power is required".into()));
    }
    if !(config.sigma > 0.0 && config.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("spread {} must be positive", config.sigma)));
    }
    Ok(())
}

fn type_indices(mol: &Molecule, config: &FeaturizerConfig) -> Result<Vec<usize>> {
    mol.atoms
        .iter()
        .map(|a| config.vocabulary.iter().position(|&v| v == a.z).ok_or(Error::UnknownAtomType(a.z)))
        .collect()
}

/// Adds atom `i`'s channels at each unit direction into `out[channel][direction]`.
fn accumulate(mol: &Molecule, config: &FeaturizerConfig, types: &[usize], i: usize, directions: &[[f64; 3]], out: &mut Array2<f64>) -> Result<()> {
    let atoms = &mol.atoms;
    let powers = config.powers.len();
    // canonical neighbour order keeps sums bitwise independent of input order
    let mut neighbours: Vec<usize> = (0..atoms.len()).filter(|&j| j != i).collect();
    neighbours.sort_by(|&a, &b| {
        let (a, b) = (&atoms[a], &atoms[b]);
        a.z.cmp(&b.z).then_with(|| (0..3).map(|k| a.position[k].total_cmp(&b.position[k])).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    });
    for j in neighbours {
        let other = &atoms[j];
        let r: [f64; 3] = std::array::from_fn(|k| other.position[k] - atoms[i].position[k]);
        let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if dist == 0.0 {
            return Err(Error::CoincidentAtoms(i, j));
        }
        let charge = (atoms[i].z * other.z) as f64;
        let amplitudes: Vec<f64> = config.powers.iter().map(|&p| charge / dist.powf(p)).collect();
        for (q, x) in directions.iter().enumerate() {
            let g = spread(angle_between(*x, r), config.sigma);
            for (pi, a) in amplitudes.iter().enumerate() {
                out[[types[j] * powers + pi, q]] += a * g;
            }
        }
    }
    Ok(())
}

/// Channel values of atom `atom` at arbitrary unit directions, shape `(Z * P, directions)`.
pub fn evaluate_features(mol: &Molecule, config: &FeaturizerConfig, atom: usize, directions: &[[f64; 3]]) -> Result<Array2<f64>> {
    check_config(config)?;
    if atom >= mol.len() {
        return Err(Error::InvalidParameter(format!("atom {atom} out of range for {} atoms", mol.len())));
    }
    let types = type_indices(mol, config)?;
    let mut out = Array2::zeros((config.vocabulary.len() * config.powers.len(), directions.len()));
    accumulate(mol, config, &types, atom, directions, &mut out)?;
    Ok(out)
}

pub fn featurize(mol: &Molecule, config: &FeaturizerConfig, grid: &SphericalGrid) -> Result<MoleculeFeatures> {
    check_config(config)?;
    let types = type_indices(mol, config)?;
    let n = grid.n();
    let directions: Vec<[f64; 3]> = grid
        .colatitudes()
        .iter()
        .flat_map(|&t| grid.longitudes().iter().map(move |&p| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]))
        .collect();
    let channels = config.vocabulary.len() * config.powers.len();
    let planes: Vec<Result<Array2<f64>>> = (0..mol.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Array2::<f64>::zeros((channels, n * n));
            accumulate(mol, config, &types, i, &directions, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut samples = Array4::zeros((mol.len(), channels, n, n));
    for (i, plane) in planes.into_iter().enumerate() {
        let plane = plane?;
        for c in 0..channels {
            for q in 0..n * n {
                samples[[i, c, q / n, q % n]] = Complex64::new(plane[[c, q]], 0.0);
            }
        }
    }
    Ok(MoleculeFeatures {
        signal: SpinSignal::new(samples, vec![0; channels])?,
        vocabulary: config.vocabulary.clone(),
        powers: config.powers.clone(),
        sigma: config.sigma,
    })
}

/// Spherical mean of every channel, shape `(N, Z * P)`.
pub fn pooled_descriptor(features: &MoleculeFeatures, grid: &SphericalGrid) -> Result<Array2<f64>> {
    let (atoms, channels) = (features.atoms(), features.channels_per_atom());
    let mut out = Array2::zeros((atoms, channels));
    for i in 0..atoms {
        for c in 0..channels {
            out[[i, c]] = integrate(grid, features.signal.channel(i, c))?.re / (4.0 * PI);
        }
    }
    Ok(out)
}
