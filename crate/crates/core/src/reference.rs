//! Slow, independent reference implementations used by the verification
//! suite and the tests: the explicit Wigner `d` sum, spin-weighted harmonics
//! built from it, and dense Gauss-Legendre quadrature of the analysis integral.
//!
//! Nothing here shares code with the fast transform path.

use std::f64::consts::PI;

use num_complex::Complex64;

fn ln_factorial(k: i64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Double-double number `hi + lo`, enough to keep the alternating Wigner sum
/// accurate to well below `1e-12` for `l <= 20`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let hi_sum = Dd::two_sum(s.hi, s.lo + t.hi);
        Dd::two_sum(hi_sum.hi, hi_sum.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Dd::two_sum(p, err + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::from(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::from(q2)).neg());
        let q3 = r.hi / o.hi;
        Dd::two_sum(q1, q2).add(Dd::from(q3))
    }

    fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = Dd::from(self.hi.sqrt());
        // One Newton step doubles the precision.
        x.add(self.add(x.mul(x).neg()).div(x.mul(Dd::from(2.0))))
    }

    fn powi(self, k: u32) -> Dd {
        (0..k).fold(Dd::ONE, |acc, _| acc.mul(self))
    }

    /// Taylor series; intended for `|x| <= pi/2`.
    fn sin_cos(x: f64) -> (Dd, Dd) {
        let x = Dd::from(x);
        let x2 = x.mul(x);
        let (mut sin, mut cos) = (Dd::ZERO, Dd::ZERO);
        let (mut s_term, mut c_term) = (x, Dd::ONE);
        for k in 0..40 {
            sin = sin.add(s_term);
            cos = cos.add(c_term);
            let kf = k as f64;
            s_term = s_term.mul(x2).div(Dd::from(-(2.0 * kf + 2.0) * (2.0 * kf + 3.0)));
            c_term = c_term.mul(x2).div(Dd::from(-(2.0 * kf + 1.0) * (2.0 * kf + 2.0)));
        }
        (sin, cos)
    }
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

fn factorial_dd(k: i64) -> Dd {
    (1..=k).fold(Dd::ONE, |acc, i| acc.mul(Dd::from(i as f64)))
}

/// Wigner's explicit sum for `d^l_{m'm}(beta)`, written with binomials,
///
/// `sqrt((l+m')!(l-m')!/((l+m)!(l-m)!)) sum_k (-1)^{k-m+m'} C(l+m, k) C(l-m, k-m+m') c^{2l+m-m'-2k} s^{2k-m+m'}`
///
/// with `c = cos(beta/2)`, `s = sin(beta/2)`, evaluated in double-double
/// arithmetic. Reliable to `1e-15` for `l <= 20`, `beta` in `[-pi, pi]`.
pub fn wigner_d_sum(l: usize, mp: i64, m: i64, beta: f64) -> f64 {
    let l = l as i64;
    assert!(mp.abs() <= l && m.abs() <= l);
    let (s, c) = Dd::sin_cos(beta / 2.0);
    let ratio = factorial_dd(l + mp).mul(factorial_dd(l - mp)).div(factorial_dd(l + m).mul(factorial_dd(l - m)));
    let k_min = 0.max(m - mp);
    let k_max = (l + m).min(l - mp);
    let mut acc = Dd::ZERO;
    for k in k_min..=k_max {
        let weight = Dd::from(binomial(l + m, k)).mul(Dd::from(binomial(l - m, k - m + mp)));
        let term = weight.mul(c.powi((2 * l + m - mp - 2 * k) as u32)).mul(s.powi((2 * k - m + mp) as u32));
        acc = if (k - m + mp).rem_euclid(2) == 0 { acc.add(term) } else { acc.add(term.neg()) };
    }
    let out = ratio.sqrt().mul(acc);
    out.hi + out.lo
}

/// `sY_lm(theta, phi) = (-1)^s sqrt((2l+1)/4pi) d^l_{m,-s}(theta) e^{i m phi}`.
pub fn spin_harmonic(spin: i32, l: usize, m: i64, theta: f64, phi: f64) -> Complex64 {
    let s = spin as i64;
    if (l as i64) < s.abs() || m.abs() > l as i64 {
        return Complex64::new(0.0, 0.0);
    }
    let sign = if s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    Complex64::from_polar(sign * norm * wigner_d_sum(l, m, -s, theta), m as f64 * phi)
}

/// Orthonormal scalar harmonic from the associated Legendre recurrence
/// (Condon-Shortley phase). Used to cross-check [`spin_harmonic`] at `s = 0`.
pub fn scalar_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Complex64::new(0.0, 0.0);
    }
    let x = theta.cos();
    let sx = theta.sin();
    let mut pmm = 1.0;
    for i in 0..am {
        pmm *= -((2 * i + 1) as f64) * sx;
    }
    let plm = if l == am {
        pmm
    } else {
        let mut p_prev = pmm;
        let mut p = x * (2 * am + 1) as f64 * pmm;
        for ll in am + 2..=l {
            let next = (x * (2 * ll - 1) as f64 * p - (ll + am - 1) as f64 * p_prev) / (ll - am) as f64;
            p_prev = p;
            p = next;
        }
        p
    };
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * (ln_factorial((l - am) as i64) - ln_factorial((l + am) as i64)).exp()).sqrt();
    let positive = Complex64::from_polar(norm * plm, am as f64 * phi);
    if m >= 0 {
        positive
    } else {
        let sign = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
        positive.conj() * sign
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    for i in 0..count {
        let mut x = (PI * (i as f64 + 0.75) / (count as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(count, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(count, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Dense quadrature of `int f conj(sY_lm) dOmega` for every `|s| <= l < L`:
/// Gauss-Legendre in `cos(theta)` and the trapezoid rule in `phi`, both with
/// `oversample * L` nodes (exact for band-limited `f` once `oversample >= 2`).
///
/// Returns coefficients indexed `l^2 + l + m`.
pub fn brute_force_coefficients<F>(f: F, spin: i32, band_limit: usize, oversample: usize) -> Vec<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    let count = oversample * band_limit;
    let (nodes, weights) = gauss_legendre(count);
    let phis: Vec<f64> = (0..count).map(|k| 2.0 * PI * k as f64 / count as f64).collect();
    let thetas: Vec<f64> = nodes.iter().map(|x| x.acos()).collect();
    let samples: Vec<Vec<Complex64>> = thetas.iter().map(|&t| phis.iter().map(|&p| f(t, p)).collect()).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); band_limit * band_limit];
    for l in (spin.unsigned_abs() as usize)..band_limit {
        let li = l as i64;
        for m in -li..=li {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &t) in thetas.iter().enumerate() {
                // The phi dependence of sY is e^{i m phi}; factor it out.
                let radial = spin_harmonic(spin, l, m, t, 0.0).re;
                let row: Complex64 = samples[i]
                    .iter()
                    .zip(&phis)
                    .map(|(v, &p)| v * Complex64::from_polar(1.0, -(m as f64) * p))
                    .sum();
                acc += row * radial * weights[i];
            }
            out[(li * li + li + m) as usize] = acc * (2.0 * PI / count as f64);
        }
    }
    out
}

/// Evaluates `sum_{lm} c_lm sY_lm(theta, phi)` with coefficients indexed `l^2 + l + m`.
pub fn synthesize_point(coeffs: &[Complex64], spin: i32, theta: f64, phi: f64) -> Complex64 {
    let band_limit = (coeffs.len() as f64).sqrt() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in (spin.unsigned_abs() as usize)..band_limit {
        let li = l as i64;
        for m in -li..=li {
            acc += coeffs[(li * li + li + m) as usize] * spin_harmonic(spin, l, m, theta, phi);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_zero_reduces_to_scalar_harmonics() {
        for l in 0..7usize {
            for m in -(l as i64)..=(l as i64) {
                for &(t, p) in &[(0.3, 1.1), (1.7, -0.4), (2.9, 5.0)] {
                    let a = spin_harmonic(0, l, m, t, p);
                    let b = scalar_harmonic(l, m, t, p);
                    assert!((a - b).norm() < 1e-13, "l={l} m={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn explicit_d_known_values() {
        assert!((wigner_d_sum(1, 1, 0, PI / 2.0) + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((wigner_d_sum(1, 0, 0, 0.8) - 0.8f64.cos()).abs() < 1e-15);
        assert!((wigner_d_sum(2, 0, 0, 0.8) - 0.5 * (3.0 * 0.8f64.cos().powi(2) - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((integral - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn harmonics_are_orthonormal_under_brute_force() {
        let c = brute_force_coefficients(|t, p| spin_harmonic(1, 2, -1, t, p), 1, 4, 4);
        for (i, v) in c.iter().enumerate() {
            let expected = if i == 4 + 2 - 1 { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-12, "{i}: {v}");
        }
    }
}
