//! The Bernoulli polynomial method on a box: the periodization `F` of a
//! non-periodic `f`, which is the orthogonal projection of `f` from the
//! unanchored Sobolev space onto the Korobov space of the same box.
//!
//! Everything here is a verification device. Evaluating `F` costs
//! `(alpha+1)^d 2^d` partial evaluations per point, so the integrator never
//! uses it.

use crate::bernoulli::{factorial, periodic_scaled_unchecked, scaled_unchecked};
use crate::error::{domain_err, Error, Result};
use crate::integrator::DecayCondition;
use crate::kernels::{SmoothnessOrder, INNER_PRODUCT_NODES};
use crate::lattice::BoxDomain;
use crate::partials::{multi_indices, MixedPartialOracle};
use crate::quadrature::GaussLegendre;
use crate::sum::KahanSum;

/// Largest dimension accepted by the periodization.
pub const MAX_PERIODIZE_DIM: usize = 3;

/// How [`periodize_on_box`] evaluates the correction terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodizationForm {
    /// Boundary differences of partials of order `<= alpha - 1`.
    BoundaryDifference,
    /// Integrals of partials of order `<= alpha` over the corrected axes, by
    /// Gauss–Legendre with the given number of nodes per axis.
    Integral { quad_nodes: usize },
}

fn check_inputs<O: MixedPartialOracle + ?Sized>(f: &O, bx: &BoxDomain, x: &[f64]) -> Result<()> {
    let d = bx.dim();
    if d > MAX_PERIODIZE_DIM {
        return Err(Error::Resource(format!(
            "periodization costs (alpha+1)^d 2^d evaluations and is limited to d <= {MAX_PERIODIZE_DIM}, got {d}"
        )));
    }
    if f.dim() != d || x.len() != d {
        return Err(domain_err!("dimension mismatch between function ({}), box ({d}) and point ({})", f.dim(), x.len()));
    }
    if !bx.contains(x) {
        return Err(domain_err!("point {x:?} lies outside the box"));
    }
    Ok(())
}

fn need_order<O: MixedPartialOracle + ?Sized>(f: &O, order: u32) -> Result<()> {
    if f.max_order() < order {
        return Err(Error::Capability(format!(
            "partials of order {order} are needed, the function provides up to {}",
            f.max_order()
        )));
    }
    Ok(())
}

/// `F(x)`, the periodization of `f` on `bx` at `x`.
pub fn periodize_on_box<O: MixedPartialOracle + ?Sized>(
    f: &O,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    x: &[f64],
    form: PeriodizationForm,
) -> Result<f64> {
    match form {
        PeriodizationForm::BoundaryDifference => periodized_partial(f, alpha, bx, &vec![0; bx.dim()], x),
        PeriodizationForm::Integral { quad_nodes } => periodize_integral_form(f, alpha, bx, x, quad_nodes),
    }
}

/// `F^(kappa)(x)` from the boundary-difference form.
///
/// Differentiating `B_tau(x_j)/tau!` lowers its degree, and the terms with
/// `kappa_j > tau_j` vanish; on the uncorrected axes the derivative falls on
/// `f`. Needs partials of order `max(alpha - 1, max kappa)`.
pub fn periodized_partial<O: MixedPartialOracle + ?Sized>(
    f: &O,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    kappa: &[u32],
    x: &[f64],
) -> Result<f64> {
    check_inputs(f, bx, x)?;
    if kappa.len() != bx.dim() {
        return Err(domain_err!("derivative multi-index has {} entries for a {}-dimensional box", kappa.len(), bx.dim()));
    }
    let a = alpha.get();
    need_order(f, (a - 1).max(kappa.iter().copied().max().unwrap_or(0)))?;
    let d = bx.dim();
    let ivs = bx.intervals();

    let mut total = KahanSum::new();
    let mut order = vec![0u32; d];
    let mut corner = x.to_vec();
    for tau in multi_indices(d, a) {
        let u: Vec<usize> = (0..d).filter(|&j| tau[j] > 0).collect();
        if u.is_empty() {
            total.add(f.partial(kappa, x)?);
            continue;
        }
        if u.iter().any(|&j| kappa[j] > tau[j]) {
            continue;
        }
        let coef: f64 = u
            .iter()
            .map(|&j| {
                let deg = tau[j] - kappa[j];
                scaled_unchecked(deg, ivs[j], x[j]) / factorial(deg)
            })
            .product();
        for j in 0..d {
            order[j] = if tau[j] > 0 { tau[j] - 1 } else { kappa[j] };
        }
        // sum over w subset of u: coordinates in w at a_j, the rest of u at b_j
        let mut diff = KahanSum::new();
        for mask in 0u32..(1 << u.len()) {
            let mut sign = 1.0;
            for (k, &j) in u.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    corner[j] = ivs[j].a();
                    sign = -sign;
                } else {
                    corner[j] = ivs[j].b();
                }
            }
            diff.add(sign * f.partial(&order, &corner)?);
        }
        for &j in &u {
            corner[j] = x[j];
        }
        let sign = if u.len() % 2 == 0 { 1.0 } else { -1.0 };
        total.add(sign * coef * diff.value());
    }
    Ok(total.value())
}

/// Integrates `h` over the listed axes of `bx` by Gauss–Legendre, holding the
/// other coordinates of `point` fixed. Each axis is split at its `breaks`.
fn integrate_axes(
    rule: &GaussLegendre,
    bx: &BoxDomain,
    axes: &[usize],
    breaks: &[f64],
    point: &mut [f64],
    h: &mut dyn FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let Some((&j, rest)) = axes.split_first() else {
        return h(point);
    };
    let iv = bx.intervals()[j];
    let mut cuts = vec![iv.a()];
    if let Some(&c) = breaks.get(j) {
        if iv.a() < c && c < iv.b() {
            cuts.push(c);
        }
    }
    cuts.push(iv.b());
    let mut acc = KahanSum::new();
    for w in cuts.windows(2) {
        let (half, mid) = (0.5 * (w[1] - w[0]), 0.5 * (w[1] + w[0]));
        for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
            point[j] = mid + half * t;
            acc.add(half * wt * integrate_axes(rule, bx, rest, breaks, point, h)?);
        }
    }
    Ok(acc.value())
}

/// Integral form of the periodization: corrections use `int f^(tau) dx_u`
/// over the corrected axes instead of boundary differences.
fn periodize_integral_form<O: MixedPartialOracle + ?Sized>(
    f: &O,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    x: &[f64],
    quad_nodes: usize,
) -> Result<f64> {
    check_inputs(f, bx, x)?;
    let a = alpha.get();
    need_order(f, a)?;
    if quad_nodes == 0 {
        return Err(domain_err!("quadrature needs at least one node"));
    }
    let rule = GaussLegendre::cached(quad_nodes);
    let d = bx.dim();
    let mut total = KahanSum::new();
    total.add(f.value(x)?);
    for tau in multi_indices(d, a) {
        let u: Vec<usize> = (0..d).filter(|&j| tau[j] > 0).collect();
        if u.is_empty() {
            continue;
        }
        let coef: f64 = u
            .iter()
            .map(|&j| scaled_unchecked(tau[j], bx.intervals()[j], x[j]) / factorial(tau[j]))
            .product();
        let mut p = x.to_vec();
        let integral = integrate_axes(&rule, bx, &u, &[], &mut p, &mut |y| f.partial(&tau, y))?;
        let sign = if u.len() % 2 == 0 { 1.0 } else { -1.0 };
        total.add(sign * coef * integral);
    }
    Ok(total.value())
}

/// The periodization of `f` as a function in its own right, with partials
/// from [`periodized_partial`].
pub struct Periodized<O> {
    f: O,
    alpha: SmoothnessOrder,
    bx: BoxDomain,
}

impl<O: MixedPartialOracle> Periodized<O> {
    pub fn new(f: O, alpha: SmoothnessOrder, bx: BoxDomain) -> Result<Self> {
        if f.dim() != bx.dim() {
            return Err(domain_err!("function dimension {} differs from box dimension {}", f.dim(), bx.dim()));
        }
        need_order(&f, alpha.get() - 1)?;
        Ok(Self { f, alpha, bx })
    }
}

impl<O: MixedPartialOracle> MixedPartialOracle for Periodized<O> {
    fn dim(&self) -> usize {
        self.bx.dim()
    }

    fn max_order(&self) -> u32 {
        self.f.max_order()
    }

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        periodized_partial(&self.f, self.alpha, &self.bx, tau, x)
    }
}

/// Bound on `sup |F - f|` over `bx` for a function with the given decay and
/// decay-norm estimate `norm_est`:
///
/// `(alpha+1)^d prod_j max(1, b_j - a_j)^(alpha-1) norm_est * g(m)`, where
/// `m = min_j min(|a_j|, |b_j|)` and `g(m) = exp(-beta m^q)` for exponential
/// decay or `m^-beta` for polynomial decay. The polynomial bound is infinite
/// when some box face touches the origin.
pub fn projection_error_bound(
    decay: &DecayCondition,
    norm_est: f64,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
) -> Result<f64> {
    if !(norm_est >= 0.0) {
        return Err(domain_err!("norm estimate must be nonnegative, got {norm_est}"));
    }
    let a = alpha.get();
    let d = bx.dim();
    let scale: f64 = bx.intervals().iter().map(|iv| iv.length().max(1.0).powi(a as i32 - 1)).product();
    let prefactor = ((a + 1) as f64).powi(d as i32) * scale * norm_est;
    let m = bx
        .intervals()
        .iter()
        .map(|iv| iv.a().abs().min(iv.b().abs()))
        .fold(f64::INFINITY, f64::min);
    let decay_factor = match *decay {
        DecayCondition::Exponential { beta, q, .. } => (-beta * m.powf(q)).exp(),
        DecayCondition::Polynomial { beta, .. } => m.powf(-beta),
    };
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    Ok(prefactor * decay_factor)
}

/// Right-hand sides of the two Bernoulli-series representations of `f(x)` on
/// `bx` (`d <= 2`):
///
/// (i) boundary-integral series over nonempty `u` plus the full remainder
/// `(-1)^d int prod_j B~_alpha(x_j - y_j + a_j)/alpha! f^(alpha,...,alpha)(y) dy`;
///
/// (ii) the mixed-remainder form, with the periodic kernel on the axes
/// outside `u` and `tau_j = alpha` there.
///
/// Both should reproduce `f(x)`; the quadrature splits each axis at `x_j`,
/// where the periodic kernel has its kink.
pub fn representation_check<O: MixedPartialOracle + ?Sized>(
    f: &O,
    alpha: SmoothnessOrder,
    bx: &BoxDomain,
    x: &[f64],
) -> Result<(f64, f64)> {
    check_inputs(f, bx, x)?;
    let d = bx.dim();
    if d > 2 {
        return Err(Error::Resource(format!("representation check quadrature supports d <= 2, got {d}")));
    }
    let a = alpha.get();
    need_order(f, a)?;
    let rule = GaussLegendre::cached(INNER_PRODUCT_NODES);
    let ivs = bx.intervals();
    let bern = |j: usize, t: u32| scaled_unchecked(t, ivs[j], x[j]) / factorial(t);
    let kern = |j: usize, y: f64| periodic_scaled_unchecked(a, ivs[j], x[j] - y + ivs[j].a()) / factorial(a);
    let all: Vec<usize> = (0..d).collect();

    // (i)
    let mut rep1 = KahanSum::new();
    for mask in 1u32..(1 << d) {
        let u: Vec<usize> = (0..d).filter(|&j| mask & (1 << j) != 0).collect();
        let sign = if u.len() % 2 == 1 { 1.0 } else { -1.0 };
        for tu in multi_indices(u.len(), a) {
            let mut tau = vec![0u32; d];
            for (k, &j) in u.iter().enumerate() {
                tau[j] = tu[k];
            }
            let coef: f64 = u.iter().map(|&j| bern(j, tau[j])).product();
            let mut p = x.to_vec();
            let integral = integrate_axes(&rule, bx, &u, x, &mut p, &mut |y| f.partial(&tau, y))?;
            rep1.add(sign * coef * integral);
        }
    }
    let top = vec![a; d];
    let mut p = x.to_vec();
    let remainder = integrate_axes(&rule, bx, &all, x, &mut p, &mut |y| {
        let k: f64 = (0..d).map(|j| kern(j, y[j])).product();
        Ok(k * f.partial(&top, y)?)
    })?;
    rep1.add(if d % 2 == 0 { remainder } else { -remainder });

    // (ii)
    let mut rep2 = KahanSum::new();
    for mask in 0u32..(1 << d) {
        let u: Vec<usize> = (0..d).filter(|&j| mask & (1 << j) != 0).collect();
        let outside: Vec<usize> = (0..d).filter(|&j| mask & (1 << j) == 0).collect();
        let sign = if outside.len() % 2 == 0 { 1.0 } else { -1.0 };
        for tu in multi_indices(u.len(), a) {
            let mut tau = vec![a; d];
            for (k, &j) in u.iter().enumerate() {
                tau[j] = tu[k];
            }
            let coef: f64 = u.iter().map(|&j| bern(j, tau[j])).product();
            let mut p = x.to_vec();
            let integral = integrate_axes(&rule, bx, &all, x, &mut p, &mut |y| {
                let k: f64 = outside.iter().map(|&j| kern(j, y[j])).product();
                Ok(k * f.partial(&tau, y)?)
            })?;
            rep2.add(sign * coef * integral);
        }
    }
    Ok((rep1.value(), rep2.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernoulli::{table, Interval};
    use crate::partials::FnPartials;
    use approx::assert_abs_diff_eq;

    fn al(a: u32) -> SmoothnessOrder {
        SmoothnessOrder::new(a).unwrap()
    }

    fn poly(c: &'static [f64]) -> FnPartials<impl Fn(&[u32], &[f64]) -> f64 + Sync> {
        // sum c_k x^k and its derivatives
        FnPartials::new(1, 6, move |tau: &[u32], x: &[f64]| {
            let k0 = tau[0] as usize;
            let mut v = 0.0;
            for (k, &ck) in c.iter().enumerate().skip(k0) {
                let falling: f64 = ((k - k0 + 1)..=k).map(|i| i as f64).product();
                v += ck * falling * x[0].powi((k - k0) as i32);
            }
            v
        })
    }

    const BD: PeriodizationForm = PeriodizationForm::BoundaryDifference;

    #[test]
    fn worked_values() {
        let unit = BoxDomain::unit(1);
        for x in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let v = periodize_on_box(&poly(&[0.0, 1.0]), al(1), &unit, &[x], BD).unwrap();
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
            let v = periodize_on_box(&poly(&[0.0, 0.0, 1.0]), al(2), &unit, &[x], BD).unwrap();
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn periodic_input_is_fixed() {
        let b2 = FnPartials::new(1, 2, |tau: &[u32], x: &[f64]| {
            let t = 2 - tau[0];
            table().eval_unchecked(t, x[0]) * [1.0, 2.0, 2.0][tau[0] as usize]
        });
        for x in [0.0, 0.2, 0.7, 1.0] {
            let v = periodize_on_box(&b2, al(1), &BoxDomain::unit(1), &[x], BD).unwrap();
            assert_abs_diff_eq!(v, b2.value(&[x]).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn integral_form_agrees() {
        let bx = BoxDomain::new(vec![Interval::new(-1.0, 2.0).unwrap()]).unwrap();
        let f = poly(&[0.3, -1.0, 0.5, 0.25, -0.125]);
        for x in [-1.0, -0.3, 0.4, 1.9] {
            for a in 1..=3 {
                let bd = periodize_on_box(&f, al(a), &bx, &[x], BD).unwrap();
                let int = periodize_on_box(&f, al(a), &bx, &[x], PeriodizationForm::Integral { quad_nodes: 16 }).unwrap();
                assert_abs_diff_eq!(bd, int, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn guards() {
        let f = FnPartials::new(4, 3, |_: &[u32], _: &[f64]| 1.0);
        assert!(matches!(
            periodize_on_box(&f, al(1), &BoxDomain::unit(4), &[0.5; 4], BD),
            Err(Error::Resource(_))
        ));
        let g = FnPartials::new(1, 0, |_: &[u32], x: &[f64]| x[0]);
        assert!(matches!(
            periodize_on_box(&g, al(2), &BoxDomain::unit(1), &[0.5], BD),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            periodize_on_box(&g, al(1), &BoxDomain::unit(1), &[1.5], BD),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn error_bound_examples() {
        let exp1 = DecayCondition::exponential(1.0, 2.0, 1.0).unwrap();
        let b = projection_error_bound(&exp1, 1.0, al(2), &BoxDomain::symmetric(3.0, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(b, 9.0 * 36.0 * (-3.0f64).exp(), epsilon = 1e-12);
        let b = projection_error_bound(&exp1, 1.0, al(1), &BoxDomain::symmetric(0.4, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(b, 2.0 * (-0.4f64).exp(), epsilon = 1e-15);
        let poly = DecayCondition::polynomial(3.0, 2.0).unwrap();
        let touching = BoxDomain::new(vec![Interval::new(0.0, 2.0).unwrap()]).unwrap();
        assert_eq!(projection_error_bound(&poly, 1.0, al(1), &touching).unwrap(), f64::INFINITY);
        let mut last = f64::INFINITY;
        for a in [1.0, 5.0, 20.0, 80.0] {
            let b = projection_error_bound(&exp1, 1.0, al(2), &BoxDomain::symmetric(a, 2).unwrap()).unwrap();
            assert!(b < last);
            last = b;
        }
        assert!(last < 1e-20);
    }

    #[test]
    fn representations_of_square() {
        let f = poly(&[0.0, 0.0, 1.0]);
        let (r1, r2) = representation_check(&f, al(1), &BoxDomain::unit(1), &[0.3]).unwrap();
        assert_abs_diff_eq!(r1, 0.09, epsilon = 1e-12);
        assert_abs_diff_eq!(r2, 0.09, epsilon = 1e-12);
        let c = FnPartials::new(2, 3, |tau: &[u32], _: &[f64]| if tau.iter().all(|&t| t == 0) { 2.5 } else { 0.0 });
        let bx = BoxDomain::symmetric(1.5, 2).unwrap();
        let (r1, r2) = representation_check(&c, al(2), &bx, &[0.2, -1.0]).unwrap();
        assert_abs_diff_eq!(r1, 2.5, epsilon = 1e-13);
        assert_abs_diff_eq!(r2, 2.5, epsilon = 1e-13);
    }
}
