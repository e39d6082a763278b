//! Reproducing kernels of the unanchored Sobolev and Korobov spaces of integer
//! smoothness `alpha`, on the unit cube and on a box, together with the
//! Fourier weights `r_alpha`.
//!
//! The inner-product and norm helpers at the bottom are verification
//! utilities. They evaluate the defining integrals by tensor Gauss–Legendre
//! quadrature and are limited to `d <= 2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bernoulli::{factorial, periodic_scaled_unchecked, scaled_unchecked, table, Interval};
use crate::error::{domain_err, Error, Result};
use crate::lattice::BoxDomain;
use crate::partials::{check_order, multi_indices, MixedPartialOracle};
use crate::quadrature::GaussLegendre;
use crate::sum::KahanSum;

/// Largest smoothness supported; `B_{2 alpha}` must stay within the degree cap.
pub const MAX_ALPHA: u32 = 8;

/// Dominating mixed smoothness `alpha`, an integer in `1..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SmoothnessOrder(u32);

impl SmoothnessOrder {
    pub fn new(alpha: u32) -> Result<Self> {
        if alpha == 0 || alpha > MAX_ALPHA {
            return Err(domain_err!("smoothness alpha must lie in 1..={MAX_ALPHA}, got {alpha}"));
        }
        Ok(Self(alpha))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// `(-1)^(alpha+1)`, the sign in front of `B~_{2 alpha}` in the kernels.
    #[inline]
    pub(crate) fn kernel_sign(self) -> f64 {
        if self.0 % 2 == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

impl TryFrom<u32> for SmoothnessOrder {
    type Error = Error;
    fn try_from(alpha: u32) -> Result<Self> {
        Self::new(alpha)
    }
}

/// `r_alpha(h)`: 1 for `h = 0`, `|2 pi h|^alpha` otherwise.
#[inline]
pub fn r_alpha(alpha: SmoothnessOrder, h: i64) -> f64 {
    if h == 0 {
        1.0
    } else {
        (2.0 * PI * h.unsigned_abs() as f64).powi(alpha.get() as i32)
    }
}

/// Box weight: `sqrt(b-a)` for `h = 0`, `|2 pi h|^alpha / (b-a)^alpha` otherwise.
#[inline]
pub fn r_alpha_box(alpha: SmoothnessOrder, iv: Interval, h: i64) -> f64 {
    if h == 0 {
        iv.length().sqrt()
    } else {
        r_alpha(alpha, h) / iv.length().powi(alpha.get() as i32)
    }
}

/// The weight `r_alpha` or `r_alpha^{[a,b]}` as a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierWeight {
    pub alpha: SmoothnessOrder,
    pub interval: Option<Interval>,
}

impl FourierWeight {
    pub fn eval(&self, h: i64) -> f64 {
        match self.interval {
            Some(iv) => r_alpha_box(self.alpha, iv, h),
            None => r_alpha(self.alpha, h),
        }
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.is_empty() {
        return Err(domain_err!("dimension mismatch: x has {} entries, y has {}", x.len(), y.len()));
    }
    Ok(())
}

fn check_unit(x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(domain_err!("coordinate {v} lies outside [0,1]")),
        None => Ok(()),
    }
}

fn check_box(bx: &BoxDomain, x: &[f64]) -> Result<()> {
    if x.len() != bx.dim() {
        return Err(domain_err!("dimension mismatch: point has {} entries, box has {}", x.len(), bx.dim()));
    }
    if !bx.contains(x) {
        return Err(domain_err!("point {x:?} lies outside the box"));
    }
    Ok(())
}

/// Korobov kernel on the unit cube:
/// `prod_j (1 + (-1)^(alpha+1) B~_{2 alpha}(x_j - y_j) / (2 alpha)!)`.
pub fn korobov_kernel_cube(alpha: SmoothnessOrder, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    check_unit(x)?;
    check_unit(y)?;
    let unit = Interval::unit();
    Ok(x.iter().zip(y).map(|(&xj, &yj)| factor::korobov(alpha, unit, 0, xj, yj)).product())
}

/// Unanchored Sobolev kernel on the unit cube.
pub fn sobolev_kernel_cube(alpha: SmoothnessOrder, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    check_unit(x)?;
    check_unit(y)?;
    let b = table();
    let two_alpha = 2 * alpha.get();
    let norm = factorial(two_alpha);
    Ok(x.iter()
        .zip(y)
        .map(|(&xj, &yj)| {
            let mut v = 1.0;
            for tau in 1..=alpha.get() {
                let f = factorial(tau);
                v += b.eval_unchecked(tau, xj) * b.eval_unchecked(tau, yj) / (f * f);
            }
            v + alpha.kernel_sign() * b.eval_unchecked(two_alpha, crate::bernoulli::frac(xj - yj)) / norm
        })
        .product())
}

/// Korobov kernel on a box.
pub fn korobov_kernel_box(alpha: SmoothnessOrder, bx: &BoxDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    check_box(bx, x)?;
    check_box(bx, y)?;
    Ok(bx
        .intervals()
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&iv, (&xj, &yj))| factor::korobov(alpha, iv, 0, xj, yj))
        .product())
}

/// Unanchored Sobolev kernel on a box.
pub fn sobolev_kernel_box(alpha: SmoothnessOrder, bx: &BoxDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    check_box(bx, x)?;
    check_box(bx, y)?;
    Ok(bx
        .intervals()
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&iv, (&xj, &yj))| factor::sobolev(alpha, iv, 0, xj, yj))
        .product())
}

/// One-dimensional kernel factors and their derivatives in the first argument.
pub mod factor {
    use super::*;

    /// `d^k/dx^k` of the Korobov factor on `iv`.
    pub fn korobov(alpha: SmoothnessOrder, iv: Interval, k: u32, x: f64, y: f64) -> f64 {
        let two_alpha = 2 * alpha.get();
        let constant = if k == 0 { 1.0 / (iv.length() * iv.length()) } else { 0.0 };
        constant
            + alpha.kernel_sign() * periodic_scaled_unchecked(two_alpha - k, iv, x - y + iv.a())
                / factorial(two_alpha - k)
    }

    /// `d^k/dx^k` of the Sobolev factor on `iv`, for `k <= alpha`.
    pub fn sobolev(alpha: SmoothnessOrder, iv: Interval, k: u32, x: f64, y: f64) -> f64 {
        let a = alpha.get();
        let len = iv.length();
        let mut v = if k == 0 { 1.0 / (len * len) } else { 0.0 };
        for tau in k.max(1)..a {
            v += scaled_unchecked(tau - k, iv, x) / factorial(tau - k) * scaled_unchecked(tau, iv, y)
                / factorial(tau);
        }
        if k <= a {
            v += len * scaled_unchecked(a - k, iv, x) / factorial(a - k) * scaled_unchecked(a, iv, y)
                / factorial(a);
        }
        v + alpha.kernel_sign() * periodic_scaled_unchecked(2 * a - k, iv, x - y + iv.a())
            / factorial(2 * a - k)
    }
}

/// Which reproducing kernel a [`KernelSection`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Sobolev,
    Korobov,
}

/// The function `x -> K(x, y)` on a box, with analytic partials in `x`
/// up to order `alpha`.
pub struct KernelSection {
    kind: KernelKind,
    alpha: SmoothnessOrder,
    bx: BoxDomain,
    y: Vec<f64>,
}

impl KernelSection {
    pub fn new(kind: KernelKind, alpha: SmoothnessOrder, bx: BoxDomain, y: Vec<f64>) -> Result<Self> {
        check_box(&bx, &y)?;
        Ok(Self { kind, alpha, bx, y })
    }
}

impl MixedPartialOracle for KernelSection {
    fn dim(&self) -> usize {
        self.bx.dim()
    }

    fn max_order(&self) -> u32 {
        self.alpha.get()
    }

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        check_order(self, tau)?;
        Ok(self
            .bx
            .intervals()
            .iter()
            .enumerate()
            .map(|(j, &iv)| match self.kind {
                KernelKind::Sobolev => factor::sobolev(self.alpha, iv, tau[j], x[j], self.y[j]),
                KernelKind::Korobov => factor::korobov(self.alpha, iv, tau[j], x[j], self.y[j]),
            })
            .product())
    }
}

/// Nodes per axis (and per piece between break points) of the verification
/// quadrature.
pub const INNER_PRODUCT_NODES: usize = 64;

/// Unanchored Sobolev inner product on a box with `d <= 2`, by tensor
/// Gauss–Legendre quadrature. `breaks[j]` lists kinks of either function
/// along axis `j`; pass an empty slice if there are none.
pub fn sobolev_inner_product<F, G>(
    f: &F,
    g: &G,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    breaks: &[Vec<f64>],
) -> Result<f64>
where
    F: MixedPartialOracle + ?Sized,
    G: MixedPartialOracle + ?Sized,
{
    let d = bx.dim();
    if d > 2 {
        return Err(Error::Resource(format!("Sobolev inner product quadrature supports d <= 2, got {d}")));
    }
    if f.dim() != d || g.dim() != d {
        return Err(domain_err!("function dimensions do not match the box"));
    }
    let a = alpha.get();
    for oracle_order in [f.max_order(), g.max_order()] {
        if oracle_order < a {
            return Err(Error::Capability(format!(
                "inner product needs partials of order {a}, only {oracle_order} available"
            )));
        }
    }
    let rule = GaussLegendre::cached(INNER_PRODUCT_NODES);
    let empty: Vec<Vec<f64>> = vec![Vec::new(); d];
    let breaks = if breaks.is_empty() { &empty[..] } else { breaks };
    let pieces: Vec<Vec<(f64, f64)>> = (0..d).map(|j| split(bx.intervals()[j], &breaks[j])).collect();

    // integral over the axes in `axes` of h(x) with the remaining coordinates
    // fixed from `x`
    let integrate_axes = |axes: &[usize], x: &mut Vec<f64>, h: &dyn Fn(&[f64]) -> Result<f64>| -> Result<f64> {
        fn rec(
            rule: &GaussLegendre,
            pieces: &[Vec<(f64, f64)>],
            axes: &[usize],
            x: &mut Vec<f64>,
            h: &dyn Fn(&[f64]) -> Result<f64>,
        ) -> Result<f64> {
            let Some((&j, rest)) = axes.split_first() else {
                return h(x);
            };
            let mut acc = KahanSum::new();
            for &(lo, hi) in &pieces[j] {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    x[j] = mid + half * t;
                    acc.add(half * w * rec(rule, pieces, rest, x, h)?);
                }
            }
            Ok(acc.value())
        }
        rec(&rule, &pieces, axes, x, h)
    };

    let mut total = KahanSum::new();
    for tau in multi_indices(d, a) {
        let outer: Vec<usize> = (0..d).filter(|&j| tau[j] == a).collect();
        let inner: Vec<usize> = (0..d).filter(|&j| tau[j] != a).collect();
        let mut x = vec![0.0; d];
        let tau_ref = &tau;
        let inner_ref = &inner;
        let term = integrate_axes(&outer, &mut x, &|xo: &[f64]| {
            let mut xi = xo.to_vec();
            let fi = integrate_axes(inner_ref, &mut xi, &|p: &[f64]| f.partial(tau_ref, p))?;
            let gi = integrate_axes(inner_ref, &mut xi, &|p: &[f64]| g.partial(tau_ref, p))?;
            Ok(fi * gi)
        })?;
        total.add(term);
    }
    Ok(total.value())
}

fn split(iv: Interval, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts = vec![iv.a()];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| iv.a() < b && b < iv.b()).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(iv.b());
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Sobolev norm on a box (`d <= 2`).
pub fn sobolev_norm<F: MixedPartialOracle + ?Sized>(
    f: &F,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    breaks: &[Vec<f64>],
) -> Result<f64> {
    Ok(sobolev_inner_product(f, f, alpha, bx, breaks)?.max(0.0).sqrt())
}

/// Largest Sobolev norm over a finite family of boxes: a computable stand-in
/// for the supremum over all boxes.
pub fn sobolev_norm_over_boxes<F: MixedPartialOracle + ?Sized>(
    f: &F,
    alpha: SmoothnessOrder,
    boxes: &[BoxDomain],
    breaks: &[Vec<f64>],
) -> Result<f64> {
    let mut best = 0.0f64;
    for bx in boxes {
        best = best.max(sobolev_norm(f, alpha, bx, breaks)?);
    }
    Ok(best)
}

/// Squared Korobov norm on a box from Fourier coefficients
/// `coeff(h) = <f, phi_h>`, truncated to `|h_j| <= cutoff` (`d <= 2`).
///
/// Returns `(sum, tail_estimate)`. The tail estimate is the contribution of
/// the outer shell `cutoff/2 < max_j |h_j| <= cutoff`, which approximates the
/// omitted remainder when the summands decay like `|h|^{-2}` or faster.
pub fn korobov_norm_sq_fourier<C>(
    coeff: C,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    cutoff: i64,
) -> Result<(f64, f64)>
where
    C: Fn(&[i64]) -> Complex64,
{
    let d = bx.dim();
    if d > 2 {
        return Err(Error::Resource(format!("Fourier norm supports d <= 2, got {d}")));
    }
    let weight = |h: &[i64]| -> f64 {
        bx.intervals().iter().zip(h).map(|(&iv, &hj)| r_alpha_box(alpha, iv, hj)).product()
    };
    let mut total = KahanSum::new();
    let mut shell = KahanSum::new();
    let mut h = vec![-cutoff; d];
    loop {
        let w = weight(&h);
        let term = coeff(&h).norm_sqr() * w * w;
        total.add(term);
        if h.iter().map(|v| v.abs()).max().unwrap_or(0) > cutoff / 2 {
            shell.add(term);
        }
        // odometer
        let mut j = d;
        loop {
            if j == 0 {
                return Ok((total.value(), shell.value()));
            }
            j -= 1;
            if h[j] < cutoff {
                h[j] += 1;
                break;
            }
            h[j] = -cutoff;
        }
    }
}
