//! Bernoulli polynomials on `[0,1]` and on arbitrary intervals `[a,b]`,
//! their periodic extensions, and the normalized Fourier basis on `[a,b]`.
//!
//! Coefficients are generated once from the recursion `B_0 = 1`,
//! `B'_t = t B_{t-1}`, `int_0^1 B_t = 0` in exact rational arithmetic, then
//! re-expanded around `x = 1/2` and stored as `f64`. Around the midpoint every
//! `B_t` is either even or odd, so only every other coefficient is non-zero and
//! the reflection symmetry `B_t(1-x) = (-1)^t B_t(x)` holds by construction.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::Ratio;
use twofloat::TwoFloat;

use crate::dd;
use crate::error::{domain_err, Result};

/// Largest degree accepted by the default table. Kernels of smoothness
/// `alpha` use `B_{2 alpha}`, so this caps `alpha` at 8.
pub const DEFAULT_DEGREE_CAP: u32 = 16;

/// A closed interval `[a, b]` with finite `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(domain_err!("interval end points must be finite, got [{a}, {b}]"));
        }
        if a >= b {
            return Err(domain_err!("interval requires a < b, got [{a}, {b}]"));
        }
        Ok(Self { a, b })
    }

    pub const fn unit() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    /// The symmetric interval `[-h, h]`.
    pub fn symmetric(h: f64) -> Result<Self> {
        Self::new(-h, h)
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(domain_err!("x = {x} lies outside [{}, {}]", self.a, self.b))
        }
    }
}

/// Degree of a Bernoulli polynomial, validated against a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BernoulliDegree(u32);

impl BernoulliDegree {
    pub fn new(tau: u32) -> Result<Self> {
        Self::with_cap(tau, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap(tau: u32, cap: u32) -> Result<Self> {
        if tau > cap {
            return Err(domain_err!("Bernoulli degree {tau} exceeds the cap {cap}"));
        }
        Ok(Self(tau))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for BernoulliDegree {
    type Error = crate::error::Error;
    fn try_from(tau: u32) -> Result<Self> {
        Self::new(tau)
    }
}

type Q = Ratio<i128>;

/// Table of Bernoulli polynomial coefficients up to some degree.
#[derive(Debug, Clone)]
pub struct BernoulliTable {
    /// `centered[t][k]` is the coefficient of `u^k` in `B_t(1/2 + u)`.
    centered: Vec<Vec<f64>>,
    /// `centered` in double-double.
    centered_dd: Vec<Vec<TwoFloat>>,
    /// `monomial[t][k]` is the coefficient of `x^k` in `B_t(x)`.
    monomial: Vec<Vec<f64>>,
}

impl BernoulliTable {
    /// Build the table for degrees `0..=cap`. Rational arithmetic in `i128`
    /// stays exact well beyond the default cap; caps above 30 are rejected.
    pub fn new(cap: u32) -> Result<Self> {
        if cap > 30 {
            return Err(domain_err!("Bernoulli table cap {cap} is above 30"));
        }
        let mut exact: Vec<Vec<Q>> = vec![vec![Q::from_integer(1)]];
        for t in 1..=cap as i128 {
            let prev = exact.last().unwrap();
            // antiderivative of t * B_{t-1}
            let mut next = vec![Q::from_integer(0); prev.len() + 1];
            for (k, c) in prev.iter().enumerate() {
                next[k + 1] = c * Q::from_integer(t) / Q::from_integer(k as i128 + 1);
            }
            // fix the constant so that int_0^1 B_t = 0
            let integral: Q = next
                .iter()
                .enumerate()
                .map(|(k, c)| c / Q::from_integer(k as i128 + 1))
                .fold(Q::from_integer(0), |acc, v| acc + v);
            next[0] = -integral;
            exact.push(next);
        }
        let half = Q::new(1, 2);
        let centered_exact: Vec<Vec<Q>> = exact.iter().map(|c| taylor_shift(c, half)).collect();
        let to_f64 = |q: &Q| *q.numer() as f64 / *q.denom() as f64;
        Ok(Self {
            centered: centered_exact.iter().map(|c| c.iter().map(to_f64).collect()).collect(),
            centered_dd: centered_exact
                .iter()
                .map(|c| c.iter().map(|q| dd::ratio(*q.numer(), *q.denom())).collect())
                .collect(),
            monomial: exact.iter().map(|c| c.iter().map(to_f64).collect()).collect(),
        })
    }

    pub fn cap(&self) -> u32 {
        self.centered.len() as u32 - 1
    }

    /// Monomial coefficients of `B_tau`, lowest degree first.
    pub fn monomial_coefficients(&self, tau: u32) -> Option<&[f64]> {
        self.monomial.get(tau as usize).map(Vec::as_slice)
    }

    /// Coefficients of `u^k` in `B_tau(1/2 + u)`, in double-double.
    pub(crate) fn centered_dd(&self, tau: u32) -> &[TwoFloat] {
        &self.centered_dd[tau as usize]
    }

    /// `B_tau(t)` without any range check on `t`.
    #[inline]
    pub fn eval_unchecked(&self, tau: u32, t: f64) -> f64 {
        let c = &self.centered[tau as usize];
        let u = t - 0.5;
        let u2 = u * u;
        // coefficients alternate zero / non-zero by parity of tau
        let start = (tau % 2) as usize;
        let mut acc = 0.0;
        let mut k = c.len() - 1;
        loop {
            acc = acc * u2 + c[k];
            if k < start + 2 {
                break;
            }
            k -= 2;
        }
        if tau % 2 == 1 {
            acc * u
        } else {
            acc
        }
    }
}

fn taylor_shift(c: &[Q], s: Q) -> Vec<Q> {
    // coefficients of p(s + u) in powers of u
    let n = c.len();
    let mut out = vec![Q::from_integer(0); n];
    for (k, ck) in c.iter().enumerate() {
        let mut binom = Q::from_integer(1);
        let mut spow = vec![Q::from_integer(1); k + 1];
        for i in 1..=k {
            spow[i] = spow[i - 1] * s;
        }
        for j in 0..=k {
            // C(k, j) s^{k-j} u^j
            out[j] += ck * binom * spow[k - j];
            binom = binom * Q::from_integer((k - j) as i128) / Q::from_integer(j as i128 + 1);
        }
    }
    out
}

/// The process-wide table for degrees up to [`DEFAULT_DEGREE_CAP`].
pub fn table() -> &'static BernoulliTable {
    static TABLE: OnceLock<BernoulliTable> = OnceLock::new();
    TABLE.get_or_init(|| BernoulliTable::new(DEFAULT_DEGREE_CAP).expect("default cap is valid"))
}

/// `x mod 1` in `[0, 1)`; an exact right end point maps to 0.
#[inline]
pub(crate) fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `B_tau(x)` for `x` in `[0, 1]`.
pub fn bernoulli_poly(tau: BernoulliDegree, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain_err!("bernoulli_poly needs x in [0,1], got {x}"));
    }
    Ok(table().eval_unchecked(tau.get(), x))
}

/// `B^{[a,b]}_tau(x) = (b-a)^(tau-1) B_tau((x-a)/(b-a))` for `x` in `[a, b]`.
pub fn scaled_bernoulli_poly(tau: BernoulliDegree, iv: Interval, x: f64) -> Result<f64> {
    iv.check(x)?;
    Ok(scaled_unchecked(tau.get(), iv, x))
}

#[inline]
pub(crate) fn scaled_unchecked(tau: u32, iv: Interval, x: f64) -> f64 {
    let len = iv.length();
    let t = ((x - iv.a) / len).clamp(0.0, 1.0);
    len.powi(tau as i32 - 1) * table().eval_unchecked(tau, t)
}

/// Periodic Bernoulli polynomial `B~_tau(x) = B_tau(x mod 1)`.
///
/// For `tau = 1` the function jumps at the integers and is left undefined there.
pub fn periodic_bernoulli_poly(tau: BernoulliDegree, x: f64) -> Result<f64> {
    let tau = tau.get();
    if tau == 0 {
        return Err(domain_err!("periodic Bernoulli polynomials need tau >= 1"));
    }
    if !x.is_finite() {
        return Err(domain_err!("periodic_bernoulli_poly got non-finite x"));
    }
    let t = frac(x);
    if tau == 1 && t == 0.0 {
        return Err(domain_err!("B~_1 is undefined at the integer {x}"));
    }
    Ok(table().eval_unchecked(tau, t))
}

/// Periodic scaled Bernoulli polynomial on `[a,b]` (period `b - a`), `tau >= 2`.
pub fn periodic_scaled_bernoulli_poly(tau: BernoulliDegree, iv: Interval, x: f64) -> Result<f64> {
    if tau.get() < 2 {
        return Err(domain_err!(
            "periodic_scaled_bernoulli_poly needs tau >= 2, got {}",
            tau.get()
        ));
    }
    if !x.is_finite() {
        return Err(domain_err!("periodic_scaled_bernoulli_poly got non-finite x"));
    }
    Ok(periodic_scaled_unchecked(tau.get(), iv, x))
}

/// Periodic scaled evaluation for any `tau`; for `tau = 1` the value at the
/// jump is `B_1(0) = -1/2`.
#[inline]
pub(crate) fn periodic_scaled_unchecked(tau: u32, iv: Interval, x: f64) -> f64 {
    let len = iv.length();
    let t = frac((x - iv.a) / len);
    len.powi(tau as i32 - 1) * table().eval_unchecked(tau, t)
}

/// Upper bound `(b-a)^(tau-1) / 2` on `|B^{[a,b]}_tau(x)| / tau!` over `[a,b]`.
pub fn bernoulli_magnitude_bound(tau: BernoulliDegree, iv: Interval) -> Result<f64> {
    if tau.get() == 0 {
        return Err(domain_err!("the magnitude bound holds for tau >= 1"));
    }
    Ok(iv.length().powi(tau.get() as i32 - 1) / 2.0)
}

/// Orthonormal Fourier basis on `[a,b]`:
/// `exp(2 pi i h (x-a)/(b-a)) / sqrt(b-a)`.
pub fn fourier_basis(h: i64, iv: Interval, x: f64) -> Complex64 {
    let len = iv.length();
    Complex64::from_polar(1.0 / len.sqrt(), 2.0 * PI * h as f64 * (x - iv.a) / len)
}

/// `n!` as a float, exact for `n <= 22`.
#[inline]
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deg(t: u32) -> BernoulliDegree {
        BernoulliDegree::new(t).unwrap()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn low_degree_values() {
        assert_relative_eq!(bernoulli_poly(deg(2), 0.0).unwrap(), 1.0 / 6.0, max_relative = 4.0 * f64::EPSILON);
        assert_eq!(bernoulli_poly(deg(1), 0.5).unwrap(), 0.0);
        assert_eq!(bernoulli_poly(deg(3), 0.5).unwrap(), 0.0);
        assert_eq!(bernoulli_poly(deg(0), 0.3).unwrap(), 1.0);
    }

    #[test]
    fn table_matches_known_polynomials() {
        let t = table();
        // B_3(x) = x^3 - 3/2 x^2 + 1/2 x
        assert_eq!(t.monomial_coefficients(3).unwrap(), &[0.0, 0.5, -1.5, 1.0]);
        // Bernoulli numbers B_k(0)
        let numbers = [
            (4, -1.0 / 30.0),
            (6, 1.0 / 42.0),
            (8, -1.0 / 30.0),
            (10, 5.0 / 66.0),
            (12, -691.0 / 2730.0),
            (14, 7.0 / 6.0),
            (16, -3617.0 / 510.0),
        ];
        for (k, b) in numbers {
            assert_relative_eq!(bernoulli_poly(deg(k), 0.0).unwrap(), b, max_relative = 8.0 * f64::EPSILON);
            assert_relative_eq!(bernoulli_poly(deg(k), 1.0).unwrap(), b, max_relative = 8.0 * f64::EPSILON);
        }
        // B_k(1/2) = (2^{1-k} - 1) B_k
        assert_relative_eq!(
            bernoulli_poly(deg(16), 0.5).unwrap(),
            (2f64.powi(-15) - 1.0) * (-3617.0 / 510.0),
            max_relative = 8.0 * f64::EPSILON
        );
    }

    #[test]
    fn degree_and_range_errors() {
        assert!(BernoulliDegree::new(17).is_err());
        assert!(BernoulliDegree::with_cap(20, 24).is_ok());
        assert!(bernoulli_poly(deg(2), 1.5).is_err());
        assert!(bernoulli_poly(deg(2), -0.1).is_err());
        assert!(scaled_bernoulli_poly(deg(2), iv(0.0, 1.0), 1.1).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(BernoulliTable::new(31).is_err());
    }

    #[test]
    fn larger_table_extends_default() {
        let big = BernoulliTable::new(24).unwrap();
        for k in 0..=16 {
            for &x in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
                assert_eq!(big.eval_unchecked(k, x), table().eval_unchecked(k, x));
            }
        }
        // B_20 = -174611/330
        assert_relative_eq!(big.eval_unchecked(20, 0.0), -174611.0 / 330.0, max_relative = 1e-14);
    }

    #[test]
    fn scaled_values() {
        assert_relative_eq!(scaled_bernoulli_poly(deg(0), iv(-2.0, 2.0), 0.3).unwrap(), 0.25);
        assert_eq!(scaled_bernoulli_poly(deg(1), iv(-1.0, 3.0), -1.0).unwrap(), -0.5);
        assert_relative_eq!(
            scaled_bernoulli_poly(deg(2), iv(0.0, 2.0), 1.0).unwrap(),
            -1.0 / 6.0,
            max_relative = 4.0 * f64::EPSILON
        );
    }

    #[test]
    fn periodic_values() {
        assert_relative_eq!(periodic_bernoulli_poly(deg(2), 1.5).unwrap(), -1.0 / 12.0, max_relative = 4.0 * f64::EPSILON);
        assert_relative_eq!(periodic_bernoulli_poly(deg(2), 0.0).unwrap(), 1.0 / 6.0, max_relative = 4.0 * f64::EPSILON);
        assert_relative_eq!(periodic_bernoulli_poly(deg(3), -0.25).unwrap(), -3.0 / 64.0, max_relative = 4.0 * f64::EPSILON);
        assert!(periodic_bernoulli_poly(deg(1), 2.0).is_err());
        assert!(periodic_bernoulli_poly(deg(0), 0.3).is_err());
        assert_relative_eq!(periodic_bernoulli_poly(deg(1), 1.25).unwrap(), -0.25);
        // right end point maps to the left representative
        assert_eq!(periodic_bernoulli_poly(deg(2), 1.0).unwrap(), periodic_bernoulli_poly(deg(2), 0.0).unwrap());
    }

    #[test]
    fn periodic_scaled_values() {
        assert_relative_eq!(
            periodic_scaled_bernoulli_poly(deg(2), iv(0.0, 1.0), 1.5).unwrap(),
            -1.0 / 12.0,
            max_relative = 4.0 * f64::EPSILON
        );
        assert_relative_eq!(
            periodic_scaled_bernoulli_poly(deg(2), iv(0.0, 2.0), 3.0).unwrap(),
            -1.0 / 6.0,
            max_relative = 4.0 * f64::EPSILON
        );
        assert_relative_eq!(
            periodic_scaled_bernoulli_poly(deg(4), iv(-1.0, 1.0), -1.0).unwrap(),
            -8.0 / 30.0,
            max_relative = 4.0 * f64::EPSILON
        );
        assert!(periodic_scaled_bernoulli_poly(deg(1), iv(0.0, 1.0), 0.5).is_err());
    }

    #[test]
    fn magnitude_bound_values() {
        assert_eq!(bernoulli_magnitude_bound(deg(1), iv(0.0, 1.0)).unwrap(), 0.5);
        assert_eq!(bernoulli_magnitude_bound(deg(3), iv(0.0, 2.0)).unwrap(), 2.0);
        assert_eq!(bernoulli_magnitude_bound(deg(2), iv(0.0, 1.0)).unwrap(), 0.5);
        assert!(bernoulli_magnitude_bound(deg(0), iv(0.0, 1.0)).is_err());
    }

    #[test]
    fn fourier_basis_values() {
        let one = fourier_basis(0, iv(0.0, 1.0), 0.7);
        assert_relative_eq!(one.re, 1.0);
        assert_eq!(one.im, 0.0);
        let i = fourier_basis(1, iv(0.0, 1.0), 0.25);
        assert!(i.re.abs() < 1e-15);
        assert_relative_eq!(i.im, 1.0);
        let v = fourier_basis(2, iv(-1.0, 1.0), 0.0);
        assert_relative_eq!(v.re, std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-15);
        assert!(v.im.abs() < 1e-15);
    }
}
