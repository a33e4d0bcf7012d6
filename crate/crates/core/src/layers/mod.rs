//! Spectral layers of a spin-spherical CNN.
//!
//! Multi-spin features use a spin-major channel layout: channel
//! `spin_index * channels_per_spin + c` carries spin `spins[spin_index]`.

mod activation;
mod batchnorm;
mod conv;
mod pooling;
mod residual;

pub use activation::{phase_collapse, PhaseCollapse};
pub use batchnorm::{spectral_batch_norm, spectral_variance, BatchNormState, NormMode};
pub use conv::{spectral_conv, FilterBank};
pub use pooling::{spectral_pool, spectral_unpool};
pub use residual::ResidualBlock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin set and per-spin channel count of a feature map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub spins: Vec<i32>,
    pub channels_per_spin: usize,
}

impl FeatureLayout {
    pub fn new(spins: Vec<i32>, channels_per_spin: usize) -> Result<Self> {
        if spins.is_empty() || channels_per_spin == 0 {
            return Err(Error::InvalidParameter("layout needs at least one spin and one channel".into()));
        }
        let mut seen = spins.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != spins.len() {
            return Err(Error::InvalidParameter(format!("duplicate spins in {spins:?}")));
        }
        Ok(Self { spins, channels_per_spin })
    }

    pub fn total_channels(&self) -> usize {
        self.spins.len() * self.channels_per_spin
    }

    /// Spin of every flattened channel.
    pub fn channel_spins(&self) -> Vec<i32> {
        self.spins.iter().flat_map(|&s| std::iter::repeat_n(s, self.channels_per_spin)).collect()
    }

    pub fn max_abs_spin(&self) -> usize {
        self.spins.iter().map(|s| s.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub(crate) fn check(&self, spins: &[i32], what: &str) -> Result<()> {
        if spins != self.channel_spins().as_slice() {
            return Err(Error::SignatureMismatch(format!(
                "{what}: expected channel spins {:?}, found {spins:?}",
                self.channel_spins()
            )));
        }
        Ok(())
    }
}
