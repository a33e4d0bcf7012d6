use approx::assert_abs_diff_eq;
use ndarray::Array4;
use num_complex::Complex64;
use proptest::prelude::*;

use swirl::equivariance::{rotate_coefficients, sample_rotations};
use swirl::grid::integrate;
use swirl::reference::{scalar_harmonic, spin_harmonic, synthesize_point};
use swirl::rng::{random_coefficients, seeded};
use swirl::swsft::coeff_index;
use swirl::wigner::wigner_d;
use swirl::{Rotation, SphericalGrid, SpinCoefficients, SpinSignal, TransformConfig, Transformer, WignerTables};

fn spins_below(band_limit: usize) -> Vec<i32> {
    (-2..=2).filter(|s: &i32| (s.unsigned_abs() as usize) < band_limit).collect()
}

fn relative(a: &SpinCoefficients, b: &SpinCoefficients) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

fn config_strategy() -> impl Strategy<Value = TransformConfig> {
    (0..4usize).prop_map(|i| TransformConfig::all()[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_is_identity(band_limit in 1usize..14, seed in any::<u64>(), config in config_strategy()) {
        let tables = WignerTables::new(band_limit).unwrap();
        let grid = SphericalGrid::for_band_limit(band_limit).unwrap();
        let c = random_coefficients(&mut seeded(seed), 2, &spins_below(band_limit), band_limit);
        let t = Transformer::new(&grid, &tables, config).unwrap();
        prop_assert!(relative(&t.forward(&t.inverse(&c).unwrap()).unwrap(), &c) < 1e-12);
    }

    #[test]
    fn forward_is_linear(band_limit in 2usize..10, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let tables = WignerTables::new(band_limit).unwrap();
        let grid = SphericalGrid::for_band_limit(band_limit).unwrap();
        let t = Transformer::new(&grid, &tables, TransformConfig::default()).unwrap();
        let spins = vec![0, 1];
        let n = grid.n();
        let mut rng = seeded(seed);
        let mut draw = || {
            let samples = Array4::from_shape_simple_fn((1, 2, n, n), || swirl::rng::complex_normal(&mut rng));
            SpinSignal::new(samples, spins.clone()).unwrap()
        };
        let (x, y) = (draw(), draw());
        let w = Complex64::new(a, b);
        let combo = SpinSignal::new(x.samples().mapv(|v| v * w) + y.samples(), spins.clone()).unwrap();
        let lhs = t.forward(&combo).unwrap();
        let rhs = t.forward(&x).unwrap().data().mapv(|v| v * w) + t.forward(&y).unwrap().data();
        let err = (lhs.data() - &rhs).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12 * (1.0 + w.norm()) * rhs.iter().map(|v| v.norm()).fold(1.0, f64::max));
    }

    #[test]
    fn all_paths_agree(band_limit in 1usize..17, seed in any::<u64>()) {
        let tables = WignerTables::new(band_limit).unwrap();
        let grid = SphericalGrid::for_band_limit(band_limit).unwrap();
        let spins = spins_below(band_limit);
        let n = grid.n();
        let samples = Array4::from_shape_simple_fn((1, spins.len(), n, n), {
            let mut rng = seeded(seed);
            move || swirl::rng::complex_normal(&mut rng)
        });
        let signal = SpinSignal::new(samples, spins).unwrap();
        let reference = Transformer::new(&grid, &tables, TransformConfig::default()).unwrap().forward(&signal).unwrap();
        for config in TransformConfig::all() {
            let got = Transformer::new(&grid, &tables, config).unwrap().forward(&signal).unwrap();
            prop_assert!(relative(&got, &reference) < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_degree_norms(band_limit in 1usize..12, seed in any::<u64>()) {
        let tables = WignerTables::new(band_limit).unwrap();
        let c = random_coefficients(&mut seeded(seed), 1, &spins_below(band_limit), band_limit);
        let rot = sample_rotations(1, seed ^ 1)[0];
        let r = rotate_coefficients(&c, &rot, &tables).unwrap();
        for ch in 0..c.channels() {
            for l in 0..band_limit {
                let li = l as i64;
                let norm = |x: &SpinCoefficients| (-li..=li).map(|m| x.get(0, ch, l, m).norm_sqr()).sum::<f64>();
                prop_assert!((norm(&r) - norm(&c)).abs() < 1e-12 * (1.0 + norm(&c)));
            }
        }
    }

    #[test]
    fn rotation_composition(seed in any::<u64>()) {
        let tables = WignerTables::new(16).unwrap();
        let c = random_coefficients(&mut seeded(seed), 1, &[0, 1, -2], 16);
        let rots = sample_rotations(2, seed);
        let twice = rotate_coefficients(&rotate_coefficients(&c, &rots[1], &tables).unwrap(), &rots[0], &tables).unwrap();
        let once = rotate_coefficients(&c, &rots[0].compose(&rots[1]), &tables).unwrap();
        prop_assert!(relative(&once, &twice) < 1e-10);
        let back = rotate_coefficients(&rotate_coefficients(&c, &rots[0], &tables).unwrap(), &rots[0].inverse(), &tables).unwrap();
        prop_assert!(relative(&back, &c) < 1e-12);
    }

    #[test]
    fn small_d_is_orthogonal(l in 0usize..40, beta in -3.2f64..3.2) {
        let d = wigner_d(l, beta);
        for ((i, j), v) in d.dot(&d.t()).indexed_iter() {
            let identity = if i == j { 1.0 } else { 0.0 };
            prop_assert!((v - identity).abs() < 1e-12);
        }
    }
}

#[test]
fn single_harmonic_analyzes_to_unit_coefficient() {
    let band_limit = 6;
    let tables = WignerTables::new(band_limit).unwrap();
    let grid = SphericalGrid::for_band_limit(band_limit).unwrap();
    let t = Transformer::new(&grid, &tables, TransformConfig::default()).unwrap();
    for spin in [-2, 0, 1] {
        for (l, m) in [(2usize, 1i64), (3, -3), (5, 0)] {
            let n = grid.n();
            let samples = Array4::from_shape_fn((1, 1, n, n), |(_, _, j, k)| spin_harmonic(spin, l, m, grid.colatitudes()[j], grid.longitudes()[k]));
            let c = t.forward(&SpinSignal::new(samples, vec![spin]).unwrap()).unwrap();
            for (idx, v) in c.data().iter().enumerate() {
                let want = if idx == coeff_index(l, m) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v.re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn spin_zero_harmonic_matches_legendre_recurrence() {
    for l in 0..8usize {
        for m in -(l as i64)..=l as i64 {
            for (theta, phi) in [(0.2, 0.5), (1.4, -2.2), (2.8, 3.0)] {
                let a = spin_harmonic(0, l, m, theta, phi);
                let b = scalar_harmonic(l, m, theta, phi);
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13);
                assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-13);
            }
        }
    }
}

#[test]
fn grid_quadrature_examples() {
    let grid = SphericalGrid::new(8).unwrap();
    let n = grid.n();
    let one = ndarray::Array2::from_elem((n, n), Complex64::new(1.0, 0.0));
    assert_abs_diff_eq!(integrate(&grid, one.view()).unwrap().re, 4.0 * std::f64::consts::PI, epsilon = 1e-12);
    let y10 = ndarray::Array2::from_shape_fn((n, n), |(j, k)| scalar_harmonic(1, 0, grid.colatitudes()[j], grid.longitudes()[k]));
    assert_abs_diff_eq!(integrate(&grid, y10.view()).unwrap().re, 0.0, epsilon = 1e-12);
    let sq = y10.mapv(|v| Complex64::new(v.norm_sqr(), 0.0));
    assert_abs_diff_eq!(integrate(&grid, sq.view()).unwrap().re, 1.0, epsilon = 1e-10);
}

#[test]
fn wigner_examples() {
    let tables = WignerTables::new(9).unwrap();
    assert_eq!(tables.delta(0, 0, 0), 1.0);
    assert_abs_diff_eq!(tables.delta(1, 0, 0), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(tables.delta(1, 1, 1), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(tables.delta(1, 1, 0), -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    let d0 = wigner_d(5, 0.0);
    for ((i, j), v) in d0.indexed_iter() {
        assert_abs_diff_eq!(*v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
    }
    let rot = Rotation::new(0.3, 0.7, 1.1).unwrap();
    let product = tables.rotation_matrix(2, &rot).dot(&tables.rotation_matrix(2, &rot.inverse()));
    for ((i, j), v) in product.indexed_iter() {
        assert_abs_diff_eq!(v.re, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn rotated_coefficients_synthesize_the_rotated_function() {
    let band_limit = 6;
    let tables = WignerTables::new(band_limit).unwrap();
    let c = random_coefficients(&mut seeded(11), 1, &[0], band_limit);
    let flat: Vec<Complex64> = c.data().iter().copied().collect();
    for rot in sample_rotations(3, 5) {
        let rotated: Vec<Complex64> = rotate_coefficients(&c, &rot, &tables).unwrap().data().iter().copied().collect();
        let inv = rot.inverse();
        for (theta, phi) in [(0.3f64, 1.0f64), (1.2, -2.0), (2.9, 0.4)] {
            let q = inv.apply([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
            let (tq, pq) = (q[2].clamp(-1.0, 1.0).acos(), q[1].atan2(q[0]));
            let err = (synthesize_point(&rotated, 0, theta, phi) - synthesize_point(&flat, 0, tq, pq)).norm();
            assert!(err < 1e-12, "rotation action mismatch {err}");
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(SphericalGrid::new(7).is_err());
    assert!(SphericalGrid::new(0).is_err());
    assert!(WignerTables::new(0).is_err());
    assert!(SpinCoefficients::zeros(1, vec![3], 3).is_err());
    let tables = WignerTables::new(4).unwrap();
    let big = SphericalGrid::for_band_limit(8).unwrap();
    assert!(Transformer::new(&big, &tables, TransformConfig::default()).is_err());
}
