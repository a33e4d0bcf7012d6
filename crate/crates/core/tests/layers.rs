use approx::assert_abs_diff_eq;
use ndarray::{Array2, Array4};
use num_complex::Complex64;
use proptest::prelude::*;

use swirl::layers::{
    phase_collapse, spectral_batch_norm, spectral_conv, spectral_pool, spectral_unpool, spectral_variance, BatchNormState, FeatureLayout,
    FilterBank, NormMode, PhaseCollapse, ResidualBlock,
};
use swirl::reference::synthesize_point;
use swirl::rng::{random_coefficients, seeded};
use swirl::swsft::{coeff_index, forward, inverse};
use swirl::{Error, SphericalGrid, SpinCoefficients, SpinSignal, TransformConfig, Transformer, WignerTables};

fn relative(a: &SpinCoefficients, b: &SpinCoefficients) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

fn unit_bn(channels: usize) -> BatchNormState {
    BatchNormState::new(channels).with_running_variance(vec![1.0; channels]).unwrap()
}

#[test]
fn pooled_synthesis_matches_truncated_series() {
    let x = random_coefficients(&mut seeded(1), 1, &[0, 1], 16);
    let pooled = spectral_pool(&x, 8).unwrap();
    let tables = WignerTables::new(8).unwrap();
    let grid = SphericalGrid::for_band_limit(8).unwrap();
    let got = inverse(&pooled, &tables, TransformConfig::default()).unwrap();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (c, &spin) in x.spins().iter().enumerate() {
        let truncated: Vec<Complex64> = (0..64).map(|i| x.data()[[0, c, i]]).collect();
        for (j, &theta) in grid.colatitudes().iter().enumerate() {
            for (k, &phi) in grid.longitudes().iter().enumerate() {
                let want = synthesize_point(&truncated, spin, theta, phi);
                err = err.max((got.samples()[[0, c, j, k]] - want).norm());
                scale = scale.max(want.norm());
            }
        }
    }
    assert!(err / scale < 1e-12, "{}", err / scale);
}

#[test]
fn unpooled_synthesis_round_trips() {
    let band_limit = 8;
    let x = random_coefficients(&mut seeded(2), 2, &[-1, 0, 2], band_limit);
    let up = spectral_unpool(&x, 2 * band_limit).unwrap();
    let tables = WignerTables::new(2 * band_limit).unwrap();
    let signal = inverse(&up, &tables, TransformConfig::default()).unwrap();
    assert_eq!(signal.n(), 4 * band_limit);
    let back = spectral_pool(&forward(&signal, &tables, TransformConfig::default()).unwrap(), band_limit).unwrap();
    assert!(relative(&back, &x) < 1e-10);
}

#[test]
fn pool_and_unpool_trivial_cases() {
    let x = random_coefficients(&mut seeded(3), 1, &[0, 1], 8);
    assert_eq!(spectral_pool(&x, 8).unwrap(), x);
    assert_eq!(spectral_unpool(&x, 8).unwrap(), x);
    assert_eq!(spectral_pool(&spectral_unpool(&x, 13).unwrap(), 8).unwrap(), x);
    let projected = spectral_unpool(&spectral_pool(&x, 4).unwrap(), 8).unwrap();
    for l in 0..8usize {
        for m in -(l as i64)..=l as i64 {
            let want = if l < 4 { x.get(0, 1, l, m) } else { Complex64::new(0.0, 0.0) };
            assert_eq!(projected.get(0, 1, l, m), want);
        }
    }
    assert!(spectral_pool(&x, 9).is_err());
    assert!(spectral_pool(&x, 0).is_err());
    assert!(spectral_unpool(&x, 7).is_err());
    assert!(matches!(spectral_pool(&x, 1), Err(Error::UnsupportedSpin { .. })));
}

#[test]
fn conv_examples() {
    let layout = FeatureLayout::new(vec![0], 1).unwrap();
    let x = random_coefficients(&mut seeded(4), 1, &[0], 6);
    assert_eq!(spectral_conv(&x, &FilterBank::identity(layout.clone(), 6).unwrap()).unwrap(), x);
    let mut taps = ndarray::Array5::zeros((1, 1, 1, 1, 6));
    taps[[0, 0, 0, 0, 0]] = Complex64::new(1.0, 0.0);
    let low = FilterBank::new(layout.clone(), layout, 6, taps).unwrap();
    let y = spectral_conv(&x, &low).unwrap();
    assert_eq!(y.data()[[0, 0, 0]], x.data()[[0, 0, 0]]);
    assert!(y.data().iter().skip(1).all(|v| v.norm() == 0.0));
}

#[test]
fn conv_rejects_mismatched_signature() {
    let a = FeatureLayout::new(vec![0, 1], 2).unwrap();
    let bank = FilterBank::random(&mut seeded(5), a.clone(), a, 6).unwrap();
    let wrong_spins = random_coefficients(&mut seeded(5), 1, &[0, 0, 1, 2], 6);
    assert!(matches!(spectral_conv(&wrong_spins, &bank), Err(Error::SignatureMismatch(_))));
    let wrong_l = random_coefficients(&mut seeded(5), 1, &[0, 0, 1, 1], 5);
    assert!(spectral_conv(&wrong_l, &bank).is_err());
}

#[test]
fn phase_collapse_identity_and_formula() {
    let tables = WignerTables::new(6).unwrap();
    let spins = vec![0, 0, 1, -1];
    let x = inverse(&random_coefficients(&mut seeded(6), 2, &spins, 6), &tables, TransformConfig::default()).unwrap();
    assert_eq!(phase_collapse(&x, &PhaseCollapse::identity(2, 4)).unwrap(), x);

    let mut rng = seeded(7);
    let params = PhaseCollapse::random(&mut rng, 2, 4);
    let y = phase_collapse(&x, &params).unwrap();
    let (b, j, k) = (1, 3, 5);
    for c in 0..2 {
        let mut want = params.bias()[c];
        for d in 0..2 {
            want += params.w1()[[c, d]] * x.samples()[[b, d, j, k]];
        }
        for d in 0..4 {
            want += params.w2()[[c, d]] * x.samples()[[b, d, j, k]].norm();
        }
        assert_abs_diff_eq!((y.samples()[[b, c, j, k]] - want).norm(), 0.0, epsilon = 1e-13);
    }
    for c in 2..4 {
        assert_eq!(y.channel(0, c), x.channel(0, c));
    }
    assert!(phase_collapse(&x, &PhaseCollapse::identity(1, 4)).is_err());
}

#[test]
fn batch_norm_examples() {
    // unit spectral variance in, scale 1, bias 0
    let x = random_coefficients(&mut seeded(8), 64, &[0, 1], 8);
    let var = spectral_variance(&x);
    let scaled = SpinCoefficients::new(
        ndarray::Array3::from_shape_fn(x.data().dim(), |(b, c, i)| x.data()[[b, c, i]] / var[c].sqrt()),
        x.spins().to_vec(),
        8,
    )
    .unwrap();
    let (y, state) = spectral_batch_norm(&scaled, &BatchNormState::new(2), NormMode::Train).unwrap();
    for v in spectral_variance(&y).iter() {
        assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-4);
    }
    assert!(y.data().outer_iter().all(|b| b[[0, 0]].norm() == 0.0));
    assert!(state.running_variance().is_some());

    // a constant spin-0 field maps to the bias
    let tables = WignerTables::new(8).unwrap();
    let grid = SphericalGrid::for_band_limit(8).unwrap();
    let n = grid.n();
    let constant = SpinSignal::new(Array4::from_elem((3, 1, n, n), Complex64::new(2.5, -1.0)), vec![0]).unwrap();
    let c = forward(&constant, &tables, TransformConfig::default()).unwrap();
    let mut bn = BatchNormState::new(1);
    bn.bias = vec![Complex64::new(0.25, 0.5)];
    let (out, _) = spectral_batch_norm(&c, &bn, NormMode::Train).unwrap();
    let field = inverse(&out, &tables, TransformConfig::default()).unwrap();
    // analysis roundoff in the non-mean slots is amplified by 1/sqrt(epsilon)
    for v in field.samples().iter() {
        assert_abs_diff_eq!((v - Complex64::new(0.25, 0.5)).norm(), 0.0, epsilon = 1e-10);
    }
}

#[test]
fn batch_norm_modes() {
    let x = random_coefficients(&mut seeded(9), 4, &[0, 1], 6);
    assert!(matches!(spectral_batch_norm(&x, &BatchNormState::new(2), NormMode::Eval), Err(Error::UninitializedStatistics)));
    let (_, s1) = spectral_batch_norm(&x, &BatchNormState::new(2), NormMode::Train).unwrap();
    let batch = spectral_variance(&x);
    assert_eq!(s1.running_variance().unwrap(), batch.as_slice().unwrap());
    let doubled = SpinCoefficients::new(x.data().mapv(|v| v * 2.0), x.spins().to_vec(), 6).unwrap();
    let (_, s2) = spectral_batch_norm(&doubled, &s1, NormMode::Train).unwrap();
    for c in 0..2 {
        let want = s1.momentum() * batch[c] + (1.0 - s1.momentum()) * 4.0 * batch[c];
        assert_abs_diff_eq!(s2.running_variance().unwrap()[c], want, epsilon = 1e-12 * want);
    }
    let (e1, same) = spectral_batch_norm(&doubled, &s2, NormMode::Eval).unwrap();
    assert_eq!(same.running_variance(), s2.running_variance());
    let (e2, _) = spectral_batch_norm(&doubled, &s2, NormMode::Eval).unwrap();
    assert_eq!(e1, e2);
    assert!(BatchNormState::with_hyperparameters(2, 1.0, 1e-5).is_err());
    assert!(BatchNormState::new(2).with_running_variance(vec![-1.0, 1.0]).is_err());
}

#[test]
fn residual_block_with_zero_banks_is_the_skip_path() {
    let layout = FeatureLayout::new(vec![0, 1], 2).unwrap();
    let total = layout.total_channels();
    let tables = WignerTables::new(8).unwrap();
    let config = TransformConfig::default();
    let sigma2 = PhaseCollapse::random(&mut seeded(10), 2, total);
    let block = ResidualBlock::new(
        8,
        None,
        FilterBank::zeros(layout.clone(), layout.clone(), 8).unwrap(),
        unit_bn(total),
        PhaseCollapse::identity(2, total),
        FilterBank::zeros(layout.clone(), layout.clone(), 8).unwrap(),
        unit_bn(total),
        sigma2.clone(),
        None,
    )
    .unwrap();
    let x = random_coefficients(&mut seeded(11), 2, &layout.channel_spins(), 8);
    assert_eq!(block.preactivation(&x, &tables, config).unwrap(), x);
    let signal = inverse(&x, &tables, config).unwrap();
    let want = phase_collapse(&inverse(&forward(&signal, &tables, config).unwrap(), &tables, config).unwrap(), &sigma2).unwrap();
    let got = block.forward(&signal, &tables, config).unwrap();
    let err = (got.samples() - want.samples()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(err < 1e-12);
}

#[test]
fn pooled_residual_block_pools_the_skip_path() {
    let input = FeatureLayout::new(vec![0, 1], 1).unwrap();
    let output = FeatureLayout::new(vec![0, 1], 2).unwrap();
    let total = output.total_channels();
    let tables = WignerTables::new(16).unwrap();
    let config = TransformConfig::default();
    let mut rng = seeded(12);
    let taps = Array4::from_shape_simple_fn((2, 2, 1, 2), || swirl::rng::complex_normal(&mut rng));
    let projection = FilterBank::one_tap(input.clone(), output.clone(), 8, &taps).unwrap();
    let zero_main = ResidualBlock::new(
        16,
        Some(8),
        FilterBank::zeros(input.clone(), output.clone(), 8).unwrap(),
        unit_bn(total),
        PhaseCollapse::identity(2, total),
        FilterBank::zeros(output.clone(), output.clone(), 8).unwrap(),
        unit_bn(total),
        PhaseCollapse::identity(2, total),
        Some(projection.clone()),
    )
    .unwrap();
    assert_eq!(zero_main.output_band_limit(), 8);
    let x = random_coefficients(&mut rng, 2, &input.channel_spins(), 16);
    let skip = spectral_conv(&spectral_pool(&x, 8).unwrap(), &projection).unwrap();
    assert_eq!(zero_main.preactivation(&x, &tables, config).unwrap(), skip);

    let block = ResidualBlock::random(&mut rng, input.clone(), output, 16, Some(8)).unwrap();
    let signal = inverse(&x, &tables, config).unwrap();
    let y = block.forward(&signal, &tables, config).unwrap();
    assert_eq!((y.batch(), y.channels(), y.n(), y.band_limit()), (2, total, 16, 8));
    let from_coefficients = block.forward_coefficients(&x, &tables, config).unwrap();
    assert_eq!(from_coefficients.band_limit(), 8);
    let grid = SphericalGrid::for_band_limit(8).unwrap();
    let reanalyzed = Transformer::new(&grid, &tables, config).unwrap().forward(&y).unwrap();
    assert!(relative(&reanalyzed, &from_coefficients) < 1e-12);
}

#[test]
fn residual_block_rejects_broken_chains() {
    let a = FeatureLayout::new(vec![0], 1).unwrap();
    let b = FeatureLayout::new(vec![0], 2).unwrap();
    let result = ResidualBlock::new(
        8,
        None,
        FilterBank::zeros(a.clone(), b.clone(), 8).unwrap(),
        unit_bn(2),
        PhaseCollapse::identity(2, 2),
        FilterBank::zeros(b.clone(), b.clone(), 8).unwrap(),
        unit_bn(2),
        PhaseCollapse::identity(2, 2),
        None,
    );
    assert!(matches!(result, Err(Error::SignatureMismatch(_))));
    assert!(ResidualBlock::random(&mut seeded(0), a.clone(), b.clone(), 8, Some(9)).is_err());
    let block = ResidualBlock::random(&mut seeded(0), a, b, 8, None).unwrap();
    let wrong = random_coefficients(&mut seeded(1), 1, &[0, 0], 8);
    assert!(block.preactivation(&wrong, &WignerTables::new(8).unwrap(), TransformConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conv_is_linear(seed in any::<u64>(), w in -2.0f64..2.0) {
        let layout = FeatureLayout::new(vec![0, 1], 2).unwrap();
        let mut rng = seeded(seed);
        let bank = FilterBank::random(&mut rng, layout.clone(), layout.clone(), 6).unwrap();
        let x = random_coefficients(&mut rng, 1, &layout.channel_spins(), 6);
        let y = random_coefficients(&mut rng, 1, &layout.channel_spins(), 6);
        let combo = SpinCoefficients::new(x.data().mapv(|v| v * w) + y.data(), x.spins().to_vec(), 6).unwrap();
        let lhs = spectral_conv(&combo, &bank).unwrap();
        let rhs = spectral_conv(&x, &bank).unwrap().data().mapv(|v| v * w) + spectral_conv(&y, &bank).unwrap().data();
        let err = (lhs.data() - &rhs).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12 * (1.0 + rhs.iter().map(|v| v.norm()).fold(0.0, f64::max)));
    }

    #[test]
    fn pool_is_idempotent_projection(seed in any::<u64>(), band_limit in 3usize..12, keep in 2usize..12) {
        let keep = keep.min(band_limit);
        let x = random_coefficients(&mut seeded(seed), 1, &[0, 1], band_limit);
        let p = spectral_unpool(&spectral_pool(&x, keep).unwrap(), band_limit).unwrap();
        let pp = spectral_unpool(&spectral_pool(&p, keep).unwrap(), band_limit).unwrap();
        prop_assert_eq!(&p, &pp);
        for l in keep..band_limit {
            prop_assert_eq!(p.data()[[0, 0, coeff_index(l, 0)]], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn frozen_batch_norm_scales_each_channel(seed in any::<u64>(), v0 in 0.1f64..4.0, v1 in 0.1f64..4.0) {
        let x = random_coefficients(&mut seeded(seed), 2, &[0, 2], 6);
        let state = BatchNormState::new(2).with_running_variance(vec![v0, v1]).unwrap();
        let (y, _) = spectral_batch_norm(&x, &state, NormMode::Eval).unwrap();
        let factors = [1.0 / (v0 + state.epsilon()).sqrt(), 1.0 / (v1 + state.epsilon()).sqrt()];
        let expected = Array2::from_shape_fn((2, 36), |(c, i)| if c == 0 && i == 0 { Complex64::new(0.0, 0.0) } else { x.data()[[1, c, i]] * factors[c] });
        let err = (&y.data().slice(ndarray::s![1, .., ..]) - &expected).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-13);
    }
}
