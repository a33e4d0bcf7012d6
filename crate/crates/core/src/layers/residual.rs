use rand::Rng;

use super::{
    phase_collapse, spectral_batch_norm, spectral_conv, spectral_pool, BatchNormState, FeatureLayout, FilterBank, NormMode,
    PhaseCollapse,
};
use crate::error::{Error, Result};
use crate::grid::SphericalGrid;
use crate::swsft::{SpinCoefficients, SpinSignal, TransformConfig, Transformer};
use crate::wigner::WignerTables;

/// Two spectral convolutions with batch norm and phase collapse, added to a
/// skip connection in the spectral domain.
///
/// `x -> FT (-> pool) -> K1 -> BN1 -> IFT -> sigma1 -> FT -> K2 -> BN2 -> (+ skip) -> IFT -> sigma2`
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    input: FeatureLayout,
    output: FeatureLayout,
    input_band_limit: usize,
    output_band_limit: usize,
    pub bank1: FilterBank,
    pub bn1: BatchNormState,
    pub sigma1: PhaseCollapse,
    pub bank2: FilterBank,
    pub bn2: BatchNormState,
    pub sigma2: PhaseCollapse,
    pub projection: Option<FilterBank>,
}

pub(crate) fn spin_zero_count(layout: &FeatureLayout) -> usize {
    layout.spins.iter().filter(|&&s| s == 0).count() * layout.channels_per_spin
}

impl ResidualBlock {
    /// `pool` is the output band limit when the block downsamples.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        input_band_limit: usize,
        pool: Option<usize>,
        bank1: FilterBank,
        bn1: BatchNormState,
        sigma1: PhaseCollapse,
        bank2: FilterBank,
        bn2: BatchNormState,
        sigma2: PhaseCollapse,
        projection: Option<FilterBank>,
    ) -> Result<Self> {
        let input = bank1.input().clone();
        let output = bank1.output().clone();
        let output_band_limit = pool.unwrap_or(input_band_limit);
        if output_band_limit == 0 || output_band_limit > input_band_limit {
            return Err(Error::InvalidBandLimit(output_band_limit as i64));
        }
        let chain = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::SignatureMismatch(what.to_string())) };
        chain(bank1.band_limit() == output_band_limit, "first bank band limit")?;
        chain(bank2.input() == &output && bank2.output() == &output, "second bank must map the block output layout to itself")?;
        chain(bank2.band_limit() == output_band_limit, "second bank band limit")?;
        let total = output.total_channels();
        chain(bn1.channels() == total && bn2.channels() == total, "batch norm channel count")?;
        let zero = spin_zero_count(&output);
        for sigma in [&sigma1, &sigma2] {
            chain(sigma.spin_zero_channels() == zero && sigma.total_channels() == total, "phase collapse shape")?;
        }
        match &projection {
            Some(p) => {
                chain(p.input() == &input && p.output() == &output, "projection layout")?;
                chain(p.band_limit() == output_band_limit, "projection band limit")?;
            }
            None => chain(input == output, "differing input and output layouts need a projection bank")?,
        }
        Ok(Self {
            input,
            output,
            input_band_limit,
            output_band_limit,
            bank1,
            bn1,
            sigma1,
            bank2,
            bn2,
            sigma2,
            projection,
        })
    }

    /// Random banks and activations, unit batch-norm statistics. A random
    /// one-tap projection is added when the layouts differ.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        input: FeatureLayout,
        output: FeatureLayout,
        input_band_limit: usize,
        pool: Option<usize>,
    ) -> Result<Self> {
        let lb = pool.unwrap_or(input_band_limit);
        let total = output.total_channels();
        let zero = spin_zero_count(&output);
        let bank1 = FilterBank::random(rng, input.clone(), output.clone(), lb)?;
        let bank2 = FilterBank::random(rng, output.clone(), output.clone(), lb)?;
        let sigma1 = PhaseCollapse::random(rng, zero, total);
        let sigma2 = PhaseCollapse::random(rng, zero, total);
        let projection = if input != output {
            let taps = ndarray::Array4::from_shape_simple_fn(
                (input.spins.len(), output.spins.len(), input.channels_per_spin, output.channels_per_spin),
                || crate::rng::complex_normal(rng) / (input.total_channels() as f64).sqrt(),
            );
            Some(FilterBank::one_tap(input, output, lb, &taps)?)
        } else {
            None
        };
        let unit = || BatchNormState::new(total).with_running_variance(vec![1.0; total]);
        Self::new(input_band_limit, pool, bank1, unit()?, sigma1, bank2, unit()?, sigma2, projection)
    }

    pub fn input_layout(&self) -> &FeatureLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &FeatureLayout {
        &self.output
    }

    pub fn input_band_limit(&self) -> usize {
        self.input_band_limit
    }

    pub fn output_band_limit(&self) -> usize {
        self.output_band_limit
    }

    /// Coefficients entering the final activation, for input already at the output band limit.
    fn run_linear(
        &self,
        coeffs: SpinCoefficients,
        tables: &WignerTables,
        config: TransformConfig,
        mode: NormMode,
    ) -> Result<(SpinCoefficients, BatchNormState, BatchNormState)> {
        let grid = SphericalGrid::for_band_limit(self.output_band_limit)?;
        let t = Transformer::new(&grid, tables, config)?;
        let skip = match &self.projection {
            Some(p) => spectral_conv(&coeffs, p)?,
            None => coeffs.clone(),
        };
        let h = spectral_conv(&coeffs, &self.bank1)?;
        let (h, bn1) = spectral_batch_norm(&h, &self.bn1, mode)?;
        let u = phase_collapse(&t.inverse(&h)?, &self.sigma1)?;
        let h = spectral_conv(&t.forward(&u)?, &self.bank2)?;
        let (h, bn2) = spectral_batch_norm(&h, &self.bn2, mode)?;
        let sum = SpinCoefficients::new(h.into_data() + skip.data(), skip.spins().to_vec(), self.output_band_limit)?;
        Ok((sum, bn1, bn2))
    }

    fn run(
        &self,
        coeffs: SpinCoefficients,
        tables: &WignerTables,
        config: TransformConfig,
        mode: NormMode,
    ) -> Result<(SpinSignal, BatchNormState, BatchNormState)> {
        let (sum, bn1, bn2) = self.run_linear(coeffs, tables, config, mode)?;
        let grid = SphericalGrid::for_band_limit(self.output_band_limit)?;
        let y = phase_collapse(&Transformer::new(&grid, tables, config)?.inverse(&sum)?, &self.sigma2)?;
        Ok((y, bn1, bn2))
    }

    fn check_coefficients(&self, coeffs: &SpinCoefficients) -> Result<()> {
        if coeffs.band_limit() != self.input_band_limit {
            return Err(Error::BandLimitMismatch { expected: self.input_band_limit, found: coeffs.band_limit() });
        }
        self.input.check(coeffs.spins(), "residual block input")
    }

    /// Eval-mode coefficients just before the final phase collapse.
    pub fn preactivation(&self, coeffs: &SpinCoefficients, tables: &WignerTables, config: TransformConfig) -> Result<SpinCoefficients> {
        self.check_coefficients(coeffs)?;
        Ok(self.run_linear(spectral_pool(coeffs, self.output_band_limit)?, tables, config, NormMode::Eval)?.0)
    }

    fn analyze(&self, signal: &SpinSignal, tables: &WignerTables, config: TransformConfig) -> Result<SpinCoefficients> {
        if signal.band_limit() != self.input_band_limit {
            return Err(Error::BandLimitMismatch { expected: self.input_band_limit, found: signal.band_limit() });
        }
        self.input.check(signal.spins(), "residual block input")?;
        let grid = SphericalGrid::for_band_limit(self.input_band_limit)?;
        Transformer::new(&grid, tables, config)?.forward_truncated(signal, self.output_band_limit)
    }

    /// Eval-mode pass on grid samples; the output lives on the grid for the output band limit.
    pub fn forward(&self, signal: &SpinSignal, tables: &WignerTables, config: TransformConfig) -> Result<SpinSignal> {
        let c = self.analyze(signal, tables, config)?;
        Ok(self.run(c, tables, config, NormMode::Eval)?.0)
    }

    /// Eval-mode pass on coefficients: pools the input, runs the block and
    /// analyzes the activated output.
    pub fn forward_coefficients(&self, coeffs: &SpinCoefficients, tables: &WignerTables, config: TransformConfig) -> Result<SpinCoefficients> {
        self.check_coefficients(coeffs)?;
        let c = spectral_pool(coeffs, self.output_band_limit)?;
        let y = self.run(c, tables, config, NormMode::Eval)?.0;
        let grid = SphericalGrid::for_band_limit(self.output_band_limit)?;
        Transformer::new(&grid, tables, config)?.forward(&y)
    }

    /// Train-mode pass; updates both batch-norm running variances.
    pub fn forward_train(&mut self, signal: &SpinSignal, tables: &WignerTables, config: TransformConfig) -> Result<SpinSignal> {
        let c = self.analyze(signal, tables, config)?;
        let (y, bn1, bn2) = self.run(c, tables, config, NormMode::Train)?;
        self.bn1 = bn1;
        self.bn2 = bn2;
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_coefficients, seeded};
    use crate::swsft::inverse;

    fn layout() -> FeatureLayout {
        FeatureLayout::new(vec![0, 1], 2).unwrap()
    }

    #[test]
    fn zero_banks_reduce_to_skip() {
        let l = layout();
        let total = l.total_channels();
        let sigma = PhaseCollapse::random(&mut seeded(1), 2, total);
        let bn = BatchNormState::new(total).with_running_variance(vec![1.0; total]).unwrap();
        let block = ResidualBlock::new(
            8,
            None,
            FilterBank::zeros(l.clone(), l.clone(), 8).unwrap(),
            bn.clone(),
            PhaseCollapse::random(&mut seeded(2), 2, total),
            FilterBank::zeros(l.clone(), l.clone(), 8).unwrap(),
            bn,
            sigma.clone(),
            None,
        )
        .unwrap();
        let tables = WignerTables::new(8).unwrap();
        let config = TransformConfig::default();
        let x = inverse(&random_coefficients(&mut seeded(3), 2, &l.channel_spins(), 8), &tables, config).unwrap();
        let y = block.forward(&x, &tables, config).unwrap();
        let expect = phase_collapse(&x, &sigma).unwrap();
        let diff = (y.samples() - expect.samples()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn pooled_block_shapes() {
        let input = FeatureLayout::new(vec![0], 1).unwrap();
        let mut rng = seeded(4);
        let block = ResidualBlock::random(&mut rng, input.clone(), layout(), 16, Some(8)).unwrap();
        let tables = WignerTables::new(16).unwrap();
        let x = inverse(&random_coefficients(&mut rng, 1, &[0], 16), &tables, TransformConfig::default()).unwrap();
        let y = block.forward(&x, &tables, TransformConfig::default()).unwrap();
        assert_eq!((y.n(), y.spins()), (16, &[0, 0, 1, 1][..]));
    }

    #[test]
    fn signature_chain_checks() {
        let a = layout();
        let b = FeatureLayout::new(vec![0], 3).unwrap();
        let total = b.total_channels();
        let bn = || BatchNormState::new(total);
        let err = ResidualBlock::new(
            8,
            None,
            FilterBank::zeros(a.clone(), b.clone(), 8).unwrap(),
            bn(),
            PhaseCollapse::identity(3, 3),
            FilterBank::zeros(b.clone(), b.clone(), 8).unwrap(),
            bn(),
            PhaseCollapse::identity(3, 3),
            None,
        );
        assert!(matches!(err, Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn train_updates_statistics() {
        let mut rng = seeded(5);
        let l = layout();
        let mut block = ResidualBlock::random(&mut rng, l.clone(), l.clone(), 6, None).unwrap();
        let tables = WignerTables::new(6).unwrap();
        let x = inverse(&random_coefficients(&mut rng, 3, &l.channel_spins(), 6), &tables, TransformConfig::default()).unwrap();
        let before = block.bn1.clone();
        block.forward_train(&x, &tables, TransformConfig::default()).unwrap();
        assert_ne!(block.bn1, before);
    }
}
