//! Spin-weighted spherical Fourier transforms on equiangular grids, the
//! spectral layers of a spin-spherical CNN, an exact rotation harness, and a
//! molecule-to-sphere featurizer.
//!
//! The transform follows the torus method: a spin-`s` function sampled on an
//! `n x n` equiangular grid is extended to the torus, analysed with a 2D
//! Fourier transform (DFT matrices or FFT), and projected onto each degree
//! through Wigner `d(pi/2)` matrices.

pub mod bench;
pub mod cli;
pub mod config;
pub mod container;
pub mod equivariance;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod layers;
pub mod molsph;
pub mod reference;
pub mod rng;
pub mod swsft;
pub mod verify;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::SphericalGrid;
pub use swsft::{FourierBackend, SpinCoefficients, SpinSignal, SymmetryPath, TransformConfig, Transformer};
pub use wigner::{Rotation, WignerTables};

pub use num_complex::Complex64;
