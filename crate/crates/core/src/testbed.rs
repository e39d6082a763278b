//! Test integrands with known integrals over `R^d`.
//!
//! * [`LogisticFamily`] (`f1`): `prod_j (1 + 4x + 10cos^2 x + sign(x-mu)|x-mu|^sigma / Gamma(sigma+1)) * rho(x; mu, s)`
//!   with `rho` the logistic density.
//! * [`NormalFamily`] (`f2`): `prod_j phi(x_j) (1 + |x_j|^sigma)`.
//! * [`PolyDecayFamily`]: `prod_j (1 + x_j^2)^(-kappa)`, a smooth integrand with
//!   polynomial decay.
//!
//! All are products of one-dimensional factors, so partials, box integrals
//! and decay constants reduce to 1D computations.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::OnceLock;

use statrs::function::gamma::gamma;

use crate::error::{domain_err, Error, Result};
use crate::integrator::{DecayCondition, Integrand};
use crate::kernels::{SmoothnessOrder, MAX_ALPHA};
use crate::lattice::BoxDomain;
use crate::partials::{check_order, MixedPartialOracle};
use crate::quadrature::adaptive_integrate;

/// Smoothness implied by a Hölder-type exponent: `floor(sigma + 1/2)`,
/// at least 1 and at most [`MAX_ALPHA`].
pub fn smoothness_from_sigma(sigma: f64) -> Result<SmoothnessOrder> {
    let a = (sigma + 0.5).floor().clamp(1.0, MAX_ALPHA as f64) as u32;
    SmoothnessOrder::new(a)
}

/// A product of one-dimensional factors `f(x) = prod_j f_j(x_j)`.
pub trait ProductIntegrand: Integrand + MixedPartialOracle {
    /// `d^k/dx^k f_j(x)`, for `k <= factor_max_order()`.
    fn factor(&self, j: usize, k: u32, x: f64) -> f64;

    /// Highest derivative order of the factors that exists classically.
    fn factor_max_order(&self) -> u32;

    /// Points where factor `j` is not smooth.
    fn factor_kinks(&self, j: usize) -> Vec<f64>;

    /// `int_R f_j`, when known in closed form.
    fn factor_integral(&self, j: usize) -> Option<f64>;

    /// Short description for logs and plots.
    fn label(&self) -> String;
}

/// `prod_j f_j^(tau_j)(x_j)`.
fn product_partial<P: ProductIntegrand + ?Sized>(p: &P, tau: &[u32], x: &[f64]) -> Result<f64> {
    check_order(p, tau)?;
    if x.len() != tau.len() {
        return Err(domain_err!("point has {} coordinates, expected {}", x.len(), tau.len()));
    }
    Ok(tau.iter().zip(x).enumerate().map(|(j, (&k, &xj))| p.factor(j, k, xj)).product())
}

/// `int_{bx} f` by per-axis adaptive Gauss–Kronrod quadrature.
pub fn box_integral<P: ProductIntegrand + ?Sized>(p: &P, bx: &BoxDomain) -> Result<f64> {
    if bx.dim() != Integrand::dim(p) {
        return Err(domain_err!("box dimension {} differs from integrand dimension {}", bx.dim(), Integrand::dim(p)));
    }
    Ok(bx
        .intervals()
        .iter()
        .enumerate()
        .map(|(j, iv)| {
            adaptive_integrate(|x| p.factor(j, 0, x), iv.a(), iv.b(), &p.factor_kinks(j), 1e-300, 1e-14)
        })
        .product())
}

/// Upper estimate of the decay constant `max_{tau <= tau_max} sup_x |w(x) f^(tau)(x)|`
/// from a separable majorant of the weight `w`:
///
/// * exponential, `w = exp(beta |x|_p^q)`: `|x|_p^q <= c sum_j |x_j|^q` with
///   `c = max(1, d^(q/p - 1))`, so `w <= prod_j exp(c beta |x_j|^q)`;
/// * polynomial, `w = |x|_p^beta`: `w <= d^beta prod_j max(1, |x_j|)^beta`.
///
/// Each factor's supremum is sampled on `samples` equispaced points of
/// `[-radius, radius]` plus its kinks, so the result bounds the decay
/// constant restricted to that cube.
pub fn separable_decay_sup<P: ProductIntegrand + ?Sized>(
    p: &P,
    decay: &DecayCondition,
    tau_max: u32,
    radius: f64,
    samples: usize,
) -> Result<f64> {
    if tau_max > p.factor_max_order() {
        return Err(Error::Capability(format!(
            "decay constant needs order {tau_max}, factors provide {}",
            p.factor_max_order()
        )));
    }
    if samples < 2 || !(radius > 0.0) {
        return Err(domain_err!("sampling needs radius > 0 and at least 2 samples"));
    }
    let d = Integrand::dim(p);
    let df = d as f64;
    let (log_weight, mut total): (Box<dyn Fn(f64) -> f64>, f64) = match *decay {
        DecayCondition::Exponential { beta, p: pn, q } => {
            let c = if pn.is_infinite() { 1.0 } else { df.powf(q / pn - 1.0).max(1.0) };
            (Box::new(move |x: f64| c * beta * x.abs().powf(q)), 1.0)
        }
        DecayCondition::Polynomial { beta, .. } => {
            (Box::new(move |x: f64| beta * x.abs().max(1.0).ln()), df.powf(beta))
        }
    };
    for j in 0..d {
        let mut xs: Vec<f64> = (0..samples).map(|i| -radius + 2.0 * radius * i as f64 / (samples - 1) as f64).collect();
        xs.extend(p.factor_kinks(j).into_iter().filter(|k| k.abs() <= radius));
        let mut best = 0.0f64;
        for k in 0..=tau_max {
            for &x in &xs {
                let v = (log_weight(x).exp() * p.factor(j, k, x)).abs();
                if !v.is_finite() {
                    return Ok(f64::INFINITY);
                }
                best = best.max(v);
            }
        }
        total *= best;
    }
    Ok(total)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `d^i/dy^i [sign(y) |y|^sigma] / Gamma(sigma + 1)`, which is
/// `sign(y)^(i+1) |y|^(sigma-i) / Gamma(sigma+1-i)`; zero at `y = 0` while
/// `sigma > i`.
fn signed_power_derivative(sigma: f64, i: u32, y: f64) -> f64 {
    if y == 0.0 {
        return if sigma > i as f64 { 0.0 } else { f64::INFINITY };
    }
    let sign = if i % 2 == 0 { y.signum() } else { 1.0 };
    sign * y.abs().powf(sigma - i as f64) / gamma(sigma + 1.0 - i as f64)
}

/// `Q_k` with `d^k/dz^k sech^2 z = sech^2(z) Q_k(tanh z)`, as coefficients in
/// ascending powers; `Q_0 = 1`, `Q_{k+1} = -2 T Q_k + (1 - T^2) Q_k'`.
fn sech2_polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut out = vec![vec![1.0]];
        for _ in 0..2 * MAX_ALPHA {
            let q = out.last().unwrap();
            let mut next = vec![0.0; q.len() + 1];
            for (i, &c) in q.iter().enumerate() {
                next[i + 1] -= 2.0 * c;
                if i >= 1 {
                    next[i - 1] += i as f64 * c;
                    next[i + 1] -= i as f64 * c;
                }
            }
            out.push(next);
        }
        out
    })
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

/// Parameters of the logistic family `f1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFamily {
    mu: Vec<f64>,
    s: Vec<f64>,
    sigma: f64,
    alpha: SmoothnessOrder,
}

impl LogisticFamily {
    /// `sigma` must be positive and not an integer; `s` positive.
    pub fn new(mu: Vec<f64>, s: Vec<f64>, sigma: f64) -> Result<Self> {
        if mu.is_empty() || mu.len() != s.len() {
            return Err(domain_err!("mu and s need the same nonzero length, got {} and {}", mu.len(), s.len()));
        }
        if s.iter().any(|&v| !(v > 0.0 && v.is_finite())) || mu.iter().any(|v| !v.is_finite()) {
            return Err(domain_err!("logistic scales must be positive and locations finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || sigma.fract() == 0.0 {
            return Err(domain_err!("sigma must be positive and not an integer, got {sigma}"));
        }
        Ok(Self { alpha: smoothness_from_sigma(sigma)?, mu, s, sigma })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `d^k/dx^k` of the logistic density on axis `j`.
    fn density(&self, j: usize, k: u32, x: f64) -> f64 {
        let s = self.s[j];
        let z = (x - self.mu[j]) / (2.0 * s);
        let e = (-2.0 * z.abs()).exp();
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        let q = horner(&sech2_polys()[k as usize], z.tanh());
        sech2 * q / (4.0 * s) / (2.0 * s).powi(k as i32)
    }

    /// `d^i/dx^i` of the polynomial-like prefactor on axis `j`.
    fn prefactor(&self, j: usize, i: u32, x: f64) -> f64 {
        let y = x - self.mu[j];
        let trig = if i == 0 {
            10.0 * x.cos().powi(2)
        } else {
            5.0 * 2f64.powi(i as i32) * (2.0 * x + i as f64 * PI / 2.0).cos()
        };
        let linear = match i {
            0 => 1.0 + 4.0 * x,
            1 => 4.0,
            _ => 0.0,
        };
        linear + trig + signed_power_derivative(self.sigma, i, y)
    }

    /// Exact `int_R` of axis `j`'s factor: `6 + 4 mu + 10 pi s cos(2 mu) / sinh(2 pi s)`.
    pub fn factor_exact(&self, j: usize) -> f64 {
        let (mu, s) = (self.mu[j], self.s[j]);
        6.0 + 4.0 * mu + 10.0 * PI * s * (2.0 * mu).cos() / (2.0 * PI * s).sinh()
    }
}

impl Integrand for LogisticFamily {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(j, &xj)| self.prefactor(j, 0, xj) * self.density(j, 0, xj)).product()
    }

    fn smoothness(&self) -> SmoothnessOrder {
        self.alpha
    }

    /// Exponential with `q = 1`, `beta = 1 / max_j s_j`, `p = inf`.
    fn decay(&self) -> DecayCondition {
        let smax = self.s.iter().copied().fold(0.0, f64::max);
        DecayCondition::Exponential { beta: 1.0 / smax, p: f64::INFINITY, q: 1.0 }
    }

    fn exact_integral(&self) -> Option<f64> {
        Some((0..self.mu.len()).map(|j| self.factor_exact(j)).product())
    }

    fn partials(&self) -> Option<&dyn MixedPartialOracle> {
        Some(self)
    }
}

impl MixedPartialOracle for LogisticFamily {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `alpha - 1`: the order the decay condition and the periodization need.
    fn max_order(&self) -> u32 {
        self.alpha.get() - 1
    }

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        product_partial(self, tau, x)
    }
}

impl ProductIntegrand for LogisticFamily {
    fn factor(&self, j: usize, k: u32, x: f64) -> f64 {
        (0..=k).map(|i| binomial(k, i) * self.prefactor(j, i, x) * self.density(j, k - i, x)).sum()
    }

    fn factor_max_order(&self) -> u32 {
        self.sigma.floor() as u32
    }

    fn factor_kinks(&self, j: usize) -> Vec<f64> {
        vec![self.mu[j]]
    }

    fn factor_integral(&self, j: usize) -> Option<f64> {
        Some(self.factor_exact(j))
    }

    fn label(&self) -> String {
        format!("f1 d={} sigma={} mu={:?} s={:?}", self.mu.len(), self.sigma, self.mu, self.s)
    }
}

/// Parameters of the normal family `f2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFamily {
    sigma: f64,
    d: usize,
    alpha: SmoothnessOrder,
}

impl NormalFamily {
    /// `sigma >= 0`. Non-integer `sigma` gives smoothness `floor(sigma + 1/2)`;
    /// integer `sigma` is accepted (even values are polynomial, hence smooth).
    pub fn new(sigma: f64, d: usize) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(domain_err!("sigma must be nonnegative, got {sigma}"));
        }
        if d == 0 {
            return Err(domain_err!("dimension must be at least 1"));
        }
        Ok(Self { sigma, d, alpha: smoothness_from_sigma(sigma)? })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn even_integer(&self) -> bool {
        self.sigma.fract() == 0.0 && self.sigma % 2.0 == 0.0
    }

    /// `(1 + sqrt(2)^sigma Gamma((sigma+1)/2) / sqrt(pi))`, the integral of one factor.
    pub fn factor_exact(&self) -> f64 {
        1.0 + 2f64.sqrt().powf(self.sigma) * gamma((self.sigma + 1.0) / 2.0) / PI.sqrt()
    }

    /// `d^i/dx^i (1 + |x|^sigma)`.
    fn moment(&self, i: u32, x: f64) -> f64 {
        let falling: f64 = (0..i).map(|r| self.sigma - r as f64).product();
        let base = if i == 0 { 1.0 } else { 0.0 };
        if falling == 0.0 {
            return base;
        }
        let e = self.sigma - i as f64;
        let pow = if x == 0.0 {
            match e.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => 1.0,
                _ => f64::INFINITY,
            }
        } else {
            x.abs().powf(e) * if i % 2 == 1 { x.signum() } else { 1.0 }
        };
        base + falling * pow
    }
}

/// `d^k/dx^k phi(x) = (-1)^k He_k(x) phi(x)`.
fn normal_density_derivative(k: u32, x: f64) -> f64 {
    let (mut he_prev, mut he) = (0.0, 1.0);
    for n in 0..k {
        let next = x * he - n as f64 * he_prev;
        he_prev = he;
        he = next;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * he * (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

impl Integrand for NormalFamily {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| normal_density_derivative(0, t) * (1.0 + t.abs().powf(self.sigma))).product()
    }

    fn smoothness(&self) -> SmoothnessOrder {
        self.alpha
    }

    /// Exponential with `beta = 1/2`, `p = q = 2`.
    fn decay(&self) -> DecayCondition {
        DecayCondition::Exponential { beta: 0.5, p: 2.0, q: 2.0 }
    }

    fn exact_integral(&self) -> Option<f64> {
        Some(self.factor_exact().powi(self.d as i32))
    }

    fn partials(&self) -> Option<&dyn MixedPartialOracle> {
        Some(self)
    }
}

impl MixedPartialOracle for NormalFamily {
    fn dim(&self) -> usize {
        self.d
    }

    fn max_order(&self) -> u32 {
        if self.even_integer() {
            2 * MAX_ALPHA
        } else {
            self.alpha.get() - 1
        }
    }

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        product_partial(self, tau, x)
    }
}

impl ProductIntegrand for NormalFamily {
    fn factor(&self, _j: usize, k: u32, x: f64) -> f64 {
        (0..=k).map(|i| binomial(k, i) * self.moment(i, x) * normal_density_derivative(k - i, x)).sum()
    }

    fn factor_max_order(&self) -> u32 {
        if self.even_integer() {
            2 * MAX_ALPHA
        } else {
            self.sigma.floor() as u32
        }
    }

    fn factor_kinks(&self, _j: usize) -> Vec<f64> {
        if self.even_integer() {
            Vec::new()
        } else {
            vec![0.0]
        }
    }

    fn factor_integral(&self, _j: usize) -> Option<f64> {
        Some(self.factor_exact())
    }

    fn label(&self) -> String {
        format!("f2 d={} sigma={}", self.d, self.sigma)
    }
}

/// `prod_j (1 + x_j^2)^(-kappa)`: smooth, decaying like `|x|^(-2 kappa)` along
/// the axes. Declared decay is polynomial with `beta = 2 kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyDecayFamily {
    kappa: f64,
    d: usize,
    alpha: SmoothnessOrder,
}

impl PolyDecayFamily {
    pub fn new(kappa: f64, d: usize, alpha: SmoothnessOrder) -> Result<Self> {
        if !(kappa > 0.5 && kappa.is_finite()) {
            return Err(domain_err!("kappa must exceed 1/2 for integrability, got {kappa}"));
        }
        if d == 0 {
            return Err(domain_err!("dimension must be at least 1"));
        }
        Ok(Self { kappa, d, alpha })
    }

    /// `sqrt(pi) Gamma(kappa - 1/2) / Gamma(kappa)`.
    pub fn factor_exact(&self) -> f64 {
        PI.sqrt() * gamma(self.kappa - 0.5) / gamma(self.kappa)
    }
}

impl Integrand for PolyDecayFamily {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| (1.0 + t * t).powf(-self.kappa)).product()
    }

    fn smoothness(&self) -> SmoothnessOrder {
        self.alpha
    }

    fn decay(&self) -> DecayCondition {
        DecayCondition::Polynomial { beta: 2.0 * self.kappa, p: 2.0 }
    }

    fn exact_integral(&self) -> Option<f64> {
        Some(self.factor_exact().powi(self.d as i32))
    }
}

impl MixedPartialOracle for PolyDecayFamily {
    fn dim(&self) -> usize {
        self.d
    }

    fn max_order(&self) -> u32 {
        0
    }

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        product_partial(self, tau, x)
    }
}

impl ProductIntegrand for PolyDecayFamily {
    fn factor(&self, _j: usize, k: u32, x: f64) -> f64 {
        debug_assert_eq!(k, 0, "only values are provided");
        (1.0 + x * x).powf(-self.kappa)
    }

    fn factor_max_order(&self) -> u32 {
        0
    }

    fn factor_kinks(&self, _j: usize) -> Vec<f64> {
        Vec::new()
    }

    fn factor_integral(&self, _j: usize) -> Option<f64> {
        Some(self.factor_exact())
    }

    fn label(&self) -> String {
        format!("poly d={} kappa={}", self.d, self.kappa)
    }
}

/// One of the test families, as parsed from a spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFamily {
    Logistic(LogisticFamily),
    Normal(NormalFamily),
    PolyDecay(PolyDecayFamily),
}

impl TestFamily {
    pub fn as_product(&self) -> &(dyn ProductIntegrand + Send) {
        match self {
            Self::Logistic(f) => f,
            Self::Normal(f) => f,
            Self::PolyDecay(f) => f,
        }
    }
}

/// Contents of a spec file: one `key=value` per line, `#` comments.
///
/// * `family=f1` with `sigma=`, `mu=` and `s=` (comma-separated, equal length);
/// * `family=f2` with `sigma=` and `d=`;
/// * `family=poly` with `kappa=`, `d=` and `alpha=`;
/// * optional `decompose=true|false` (default `true`) to request the
///   truncation/cubature split in convergence runs.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandSpecFile {
    pub family: TestFamily,
    pub decompose: bool,
}

fn parse_vec(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| domain_err!("bad number {t:?} in {key}: {e}")))
        .collect()
}

impl FromStr for IntegrandSpecFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| domain_err!("line {}: expected key=value, got {raw:?}", lineno + 1))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(domain_err!("line {}: duplicate key {:?}", lineno + 1, k.trim()));
            }
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| domain_err!("spec is missing `{k}=`"));
        let num = |k: &str| -> Result<f64> {
            let v = get(k)?;
            v.parse::<f64>().map_err(|e| domain_err!("bad value {v:?} for {k}: {e}"))
        };
        let int = |k: &str| -> Result<u32> {
            let v = get(k)?;
            v.parse::<u32>().map_err(|e| domain_err!("bad value {v:?} for {k}: {e}"))
        };
        let decompose = match kv.get("decompose").map(String::as_str) {
            None | Some("true") => true,
            Some("false") => false,
            Some(other) => return Err(domain_err!("decompose must be true or false, got {other:?}")),
        };
        let allowed: &[&str] = match get("family")?.as_str() {
            "f1" => &["family", "sigma", "mu", "s", "decompose"],
            "f2" => &["family", "sigma", "d", "decompose"],
            "poly" => &["family", "kappa", "d", "alpha", "decompose"],
            other => return Err(domain_err!("unknown family {other:?}; expected f1, f2 or poly")),
        };
        if let Some(k) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(domain_err!("key {k:?} does not apply to family {}", get("family")?));
        }
        let family = match get("family")?.as_str() {
            "f1" => TestFamily::Logistic(LogisticFamily::new(
                parse_vec("mu", get("mu")?)?,
                parse_vec("s", get("s")?)?,
                num("sigma")?,
            )?),
            "f2" => TestFamily::Normal(NormalFamily::new(num("sigma")?, int("d")? as usize)?),
            _ => TestFamily::PolyDecay(PolyDecayFamily::new(
                num("kappa")?,
                int("d")? as usize,
                SmoothnessOrder::new(int("alpha")?)?,
            )?),
        };
        Ok(Self { family, decompose })
    }
}
