//! Integration over `R^d` with a scaled lattice rule: pick a box `[-a, a]^d`
//! from the integrand's decay and the number of points, map the lattice into
//! it, and average. Also the computable error-bound pieces (truncation,
//! cubature, projection).

use crate::bernoulli::factorial;
use crate::error::{domain_err, Error, Result};
use crate::kernels::SmoothnessOrder;
use crate::lattice::{wce_scaled_box_bound, BoxDomain, GeneratingVector};
use crate::partials::MixedPartialOracle;
use crate::projection::projection_error_bound;
use crate::sum::chunked_sum_with;

/// How fast an integrand and its partials of order `<= alpha - 1` decay:
/// `sup |exp(beta |x|_p^q) f^(tau)(x)| < inf` or `sup ||x|_p^beta f^(tau)(x)| < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayCondition {
    Exponential { beta: f64, p: f64, q: f64 },
    Polynomial { beta: f64, p: f64 },
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(domain_err!("norm order p must lie in [1, inf], got {p}"));
    }
    Ok(())
}

impl DecayCondition {
    pub fn exponential(beta: f64, p: f64, q: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain_err!("exponential decay needs beta > 0, got {beta}"));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(domain_err!("exponential decay needs q >= 1, got {q}"));
        }
        check_p(p)?;
        Ok(Self::Exponential { beta, p, q })
    }

    pub fn polynomial(beta: f64, p: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain_err!("polynomial decay needs beta > 0, got {beta}"));
        }
        check_p(p)?;
        Ok(Self::Polynomial { beta, p })
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::Exponential { beta, .. } | Self::Polynomial { beta, .. } => beta,
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            Self::Exponential { p, .. } | Self::Polynomial { p, .. } => p,
        }
    }

    /// The rate hypothesis for polynomial decay: `beta > d max(alpha - 1, 1)`.
    pub fn check_hypothesis(&self, alpha: SmoothnessOrder, d: usize) -> Result<()> {
        if let Self::Polynomial { beta, .. } = *self {
            let need = d as f64 * (alpha.get().saturating_sub(1).max(1)) as f64;
            if beta <= need {
                return Err(domain_err!(
                    "polynomial decay requires beta > d*max(alpha-1, 1): beta = {beta} <= {need} (d = {d}, alpha = {})",
                    alpha.get()
                ));
            }
        }
        Ok(())
    }
}

/// An integrand on `R^d` with the metadata the integrator needs.
/// Evaluation must be safe to call from several threads at once.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn smoothness(&self) -> SmoothnessOrder;
    fn decay(&self) -> DecayCondition;

    fn exact_integral(&self) -> Option<f64> {
        None
    }

    /// Analytic mixed partials, if available.
    fn partials(&self) -> Option<&dyn MixedPartialOracle> {
        None
    }
}

/// A closure-backed [`Integrand`].
pub struct FnIntegrand<F> {
    dim: usize,
    f: F,
    alpha: SmoothnessOrder,
    decay: DecayCondition,
    exact: Option<f64>,
    partials: Option<Box<dyn MixedPartialOracle + Send>>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnIntegrand<F> {
    pub fn new(dim: usize, alpha: SmoothnessOrder, decay: DecayCondition, f: F) -> Result<Self> {
        if dim == 0 {
            return Err(domain_err!("integrand dimension must be at least 1"));
        }
        Ok(Self { dim, f, alpha, decay, exact: None, partials: None })
    }

    pub fn with_exact(mut self, exact: f64) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_partials(mut self, partials: Box<dyn MixedPartialOracle + Send>) -> Self {
        self.partials = Some(partials);
        self
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Integrand for FnIntegrand<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn smoothness(&self) -> SmoothnessOrder {
        self.alpha
    }
    fn decay(&self) -> DecayCondition {
        self.decay
    }
    fn exact_integral(&self) -> Option<f64> {
        self.exact
    }
    fn partials(&self) -> Option<&dyn MixedPartialOracle> {
        self.partials.as_deref().map(|p| p as &dyn MixedPartialOracle)
    }
}

/// Outcome of one scaled-lattice integration.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult {
    pub estimate: f64,
    pub box_domain: BoxDomain,
    pub n: u64,
    pub bound_truncation: Option<f64>,
    /// Norm-free factor of the cubature bound on the box.
    pub bound_cubature_factor: Option<f64>,
    pub bound_projection: Option<f64>,
}

/// Half-width `a` of the box for `n` points:
/// `(alpha ln n / beta)^(1/q)` for exponential decay,
/// `n^(alpha / (beta + t d / 2))` with `t = 3` if `alpha >= 2` else `1` for
/// polynomial decay.
pub fn box_half_width(decay: &DecayCondition, alpha: SmoothnessOrder, d: usize, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(domain_err!("box selection needs n >= 2, got {n}"));
    }
    if d == 0 {
        return Err(domain_err!("box selection needs d >= 1"));
    }
    let al = alpha.get() as f64;
    match *decay {
        DecayCondition::Exponential { beta, q, .. } => Ok((al * (n as f64).ln() / beta).powf(1.0 / q)),
        DecayCondition::Polynomial { beta, .. } => {
            decay.check_hypothesis(alpha, d)?;
            let t = if alpha.get() >= 2 { 3.0 } else { 1.0 };
            Ok((n as f64).powf(al / (beta + t * d as f64 / 2.0)))
        }
    }
}

/// The symmetric box `[-a, a]^d` for `n` points; see [`box_half_width`].
pub fn select_box(decay: &DecayCondition, alpha: SmoothnessOrder, d: usize, n: u64) -> Result<BoxDomain> {
    BoxDomain::symmetric(box_half_width(decay, alpha, d, n)?, d)
}

/// `vol(bx)/n sum_i f(p_i)` over the lattice mapped into `bx`.
pub fn integrate_on_box<I: Integrand + ?Sized>(f: &I, gv: &GeneratingVector, bx: &BoxDomain) -> Result<f64> {
    let d = f.dim();
    if gv.dim() != d || bx.dim() != d {
        return Err(domain_err!(
            "dimension mismatch: integrand {d}, generating vector {}, box {}",
            gv.dim(),
            bx.dim()
        ));
    }
    let n = gv.n();
    let sum = chunked_sum_with(
        n as usize,
        || (vec![0.0; d], vec![0.0; d]),
        |(p, x), i| {
            let idx = i as u64 + 1;
            gv.point_into(idx, p);
            bx.map_from_unit_into(p, x);
            let v = f.eval(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Computation(format!("integrand returned {v} at node {idx} (x = {x:?})")))
            }
        },
    )?;
    Ok(bx.volume() * (sum / n as f64))
}

/// Scaled lattice rule over `R^d`: box from [`select_box`], then
/// [`integrate_on_box`].
pub fn integrate<I: Integrand + ?Sized>(f: &I, gv: &GeneratingVector) -> Result<QuadratureResult> {
    let bx = select_box(&f.decay(), f.smoothness(), f.dim(), gv.n())?;
    let estimate = integrate_on_box(f, gv, &bx)?;
    Ok(QuadratureResult {
        estimate,
        box_domain: bx,
        n: gv.n(),
        bound_truncation: None,
        bound_cubature_factor: None,
        bound_projection: None,
    })
}

/// Caller-supplied norm estimates for the error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormEstimates {
    /// The decay constant `max_tau sup |w(x) f^(tau)(x)|`, with `w` the decay weight.
    pub decay_sup: f64,
    /// A Sobolev-norm estimate for the cubature part.
    pub sobolev: f64,
}

/// [`integrate`], with the bound fields filled from `norms`.
pub fn integrate_with_bounds<I: Integrand + ?Sized>(
    f: &I,
    gv: &GeneratingVector,
    norms: &NormEstimates,
) -> Result<QuadratureResult> {
    let mut res = integrate(f, gv)?;
    let report = total_error_bound_report(f, gv, &res.box_domain, norms)?;
    res.bound_truncation = Some(report.truncation);
    res.bound_cubature_factor = Some(wce_scaled_box_bound(gv, f.smoothness(), &res.box_domain)?);
    res.bound_projection = Some(report.projection);
    Ok(res)
}

/// Bound on `|int_{R^d} f - int_{[-a,a]^d} f|` given the decay constant
/// `norm_sup`.
///
/// Exponential: `2^d d / (beta^(d/q) q) ceil(d/q)! norm exp(-beta a^q) / (beta a^q) max(1, (beta a^q)^(d/q))`.
/// Polynomial (needs `beta > d`): `2^d d / (beta - d) norm a^(d - beta)`.
pub fn truncation_bound(
    decay: &DecayCondition,
    norm_sup: f64,
    _alpha: SmoothnessOrder,
    d: usize,
    a: f64,
) -> Result<f64> {
    if !(a > 0.0) {
        return Err(domain_err!("truncation bound needs a > 0, got {a}"));
    }
    if !(norm_sup >= 0.0) {
        return Err(domain_err!("norm must be nonnegative, got {norm_sup}"));
    }
    if d == 0 {
        return Err(domain_err!("truncation bound needs d >= 1"));
    }
    let df = d as f64;
    let two_d = 2f64.powi(d as i32);
    match *decay {
        DecayCondition::Exponential { beta, q, .. } => {
            let s = beta * a.powf(q);
            let pre = two_d * df / (beta.powf(df / q) * q) * factorial((df / q).ceil() as u32) * norm_sup;
            if pre == 0.0 {
                return Ok(0.0);
            }
            // exp(-s)/s * max(1, s^(d/q)) in log space
            let log_tail = -s - s.ln() + (df / q * s.ln()).max(0.0);
            Ok(pre * log_tail.exp())
        }
        DecayCondition::Polynomial { beta, .. } => {
            if beta <= df {
                return Err(domain_err!("polynomial truncation bound requires beta > d: beta = {beta}, d = {d}"));
            }
            Ok(two_d * df / (beta - df) * norm_sup * a.powf(df - beta))
        }
    }
}

/// The three parts bounding the error of the scaled rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundReport {
    pub truncation: f64,
    /// Worst-case error on the box times the Sobolev-norm estimate.
    pub cubature: f64,
    /// Projection bound times the box volume.
    pub projection: f64,
}

/// Computable stand-ins for the three error parts on `bx`. The truncation
/// part uses `a = min_j min(|a_j|, |b_j|)`, which is the half-width for a
/// symmetric box; it is infinite when a face touches the origin.
pub fn total_error_bound_report<I: Integrand + ?Sized>(
    f: &I,
    gv: &GeneratingVector,
    bx: &BoxDomain,
    norms: &NormEstimates,
) -> Result<ErrorBoundReport> {
    let alpha = f.smoothness();
    let decay = f.decay();
    let d = bx.dim();
    if f.dim() != d {
        return Err(domain_err!("integrand dimension {} differs from box dimension {d}", f.dim()));
    }
    let a = bx
        .intervals()
        .iter()
        .map(|iv| iv.a().abs().min(iv.b().abs()))
        .fold(f64::INFINITY, f64::min);
    let truncation = if norms.decay_sup == 0.0 {
        0.0
    } else if a > 0.0 {
        truncation_bound(&decay, norms.decay_sup, alpha, d, a)?
    } else {
        f64::INFINITY
    };
    let cubature = wce_scaled_box_bound(gv, alpha, bx)? * norms.sobolev;
    let projection = projection_error_bound(&decay, norms.decay_sup, alpha, bx)? * bx.volume();
    Ok(ErrorBoundReport { truncation, cubature, projection })
}
