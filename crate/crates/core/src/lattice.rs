//! Rank-1 lattice rules: point generation, scaling to boxes, the dual lattice,
//! worst-case errors in the Korobov space, and component-by-component (CBC)
//! construction of generating vectors.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::bernoulli::{table, Interval};
use crate::error::{domain_err, Error, Result};
use crate::kernels::{r_alpha, SmoothnessOrder};
use crate::dd;
use crate::sum::{exact_chunked_sum, ExactSum};

/// Generating vector of a 2^m-point base-2 lattice sequence, good for
/// 2^8 to 2^24 points in up to three dimensions (first-order unweighted
/// Korobov space).
pub const BASE2_SEQUENCE_VECTOR: [u64; 3] = [1, 4959637, 5860107];

/// Largest dual-lattice scan accepted by [`dual_lattice`] and
/// [`wce_korobov_bruteforce`].
pub const DUAL_SCAN_BUDGET: u128 = 100_000_000;

/// Number of points `n` and generating vector `z` of a rank-1 lattice rule.
///
/// Components are used modulo `n`, so a vector built for a lattice sequence
/// can be applied verbatim to any of its `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeneratingVector {
    n: u64,
    z: Vec<u64>,
}

impl GeneratingVector {
    /// Validates `n >= 1` and `d >= 1`; components that are not coprime to
    /// `n` are accepted with a warning.
    pub fn new(n: u64, z: Vec<u64>) -> Result<Self> {
        if n == 0 {
            return Err(domain_err!("lattice rule needs n >= 1"));
        }
        if z.is_empty() {
            return Err(domain_err!("generating vector needs at least one component"));
        }
        let gv = Self { n, z };
        let bad = gv.non_coprime_components();
        if !bad.is_empty() && n > 1 {
            warn!("generating vector components {bad:?} are not coprime to n = {n}");
        }
        Ok(gv)
    }

    /// First `d` components of [`BASE2_SEQUENCE_VECTOR`] with `n = 2^m`.
    pub fn base2_sequence(m: u32, d: usize) -> Result<Self> {
        if d == 0 || d > BASE2_SEQUENCE_VECTOR.len() {
            return Err(domain_err!("the base-2 sequence vector has 1..=3 components, asked for {d}"));
        }
        if m > 40 {
            return Err(domain_err!("2^{m} points is out of range"));
        }
        Self::new(1u64 << m, BASE2_SEQUENCE_VECTOR[..d].to_vec())
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    /// Same vector with a different number of points.
    pub fn with_n(&self, n: u64) -> Result<Self> {
        Self::new(n, self.z.clone())
    }

    /// First `d` components.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.dim() {
            return Err(domain_err!("cannot truncate a {}-dimensional vector to {d}", self.dim()));
        }
        Ok(Self { n: self.n, z: self.z[..d].to_vec() })
    }

    /// Indices of components with `gcd(z_j, n) != 1`.
    pub fn non_coprime_components(&self) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter(|(_, &zj)| gcd(zj % self.n, self.n) != 1)
            .map(|(j, _)| j)
            .collect()
    }

    /// `(i z_j mod n)` for point index `i`.
    #[inline]
    fn residue(&self, i: u64, j: usize) -> u64 {
        ((i as u128 * self.z[j] as u128) % self.n as u128) as u64
    }

    /// Writes `p_i = (i z / n) mod 1` into `out`.
    #[inline]
    pub fn point_into(&self, i: u64, out: &mut [f64]) {
        let n = self.n as f64;
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.residue(i, j) as f64 / n;
        }
    }
}

impl fmt::Display for GeneratingVector {
    /// `n d z_1 ... z_d`, single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.n, self.z.len())?;
        for zj in &self.z {
            write!(f, " {zj}")?;
        }
        Ok(())
    }
}

impl FromStr for GeneratingVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        let parse = |t: &str| t.parse::<u64>().map_err(|e| domain_err!("bad integer {t:?} in generating vector: {e}"));
        if fields.len() < 3 {
            return Err(domain_err!("generating vector record needs `n d z_1 .. z_d`, got {s:?}"));
        }
        let n = parse(fields[0])?;
        let d = parse(fields[1])? as usize;
        if fields.len() != d + 2 {
            return Err(domain_err!("record declares d = {d} but has {} components", fields.len() - 2));
        }
        let z = fields[2..].iter().map(|t| parse(t)).collect::<Result<Vec<_>>>()?;
        Self::new(n, z)
    }
}

impl GeneratingVector {
    /// The one-line file record, newline terminated.
    pub fn to_record(&self) -> String {
        format!("{self}\n")
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A box `prod_j [a_j, b_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    intervals: Vec<Interval>,
}

impl BoxDomain {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(domain_err!("a box needs at least one interval"));
        }
        Ok(Self { intervals })
    }

    pub fn unit(d: usize) -> Self {
        Self { intervals: vec![Interval::unit(); d.max(1)] }
    }

    /// `[-a, a]^d`.
    pub fn symmetric(a: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain_err!("a box needs at least one dimension"));
        }
        Ok(Self { intervals: vec![Interval::symmetric(a)?; d] })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::length).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// Affine image of a unit-cube point: `(b_j - a_j) p_j + a_j`.
    #[inline]
    pub fn map_from_unit_into(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &pj), iv) in out.iter_mut().zip(p).zip(&self.intervals) {
            *o = iv.length() * pj + iv.a();
        }
    }
}

/// Streaming iterator over the points `p_1, ..., p_n`; `p_n` is the origin.
#[derive(Debug, Clone)]
pub struct LatticePoints<'a> {
    gv: &'a GeneratingVector,
    next: u64,
}

impl Iterator for LatticePoints<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next > self.gv.n {
            return None;
        }
        let mut p = vec![0.0; self.gv.dim()];
        self.gv.point_into(self.next, &mut p);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.gv.n + 1 - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for LatticePoints<'_> {}

/// The points `(i z / n) mod 1` for `i = 1..=n`, generated on demand.
pub fn lattice_points(gv: &GeneratingVector) -> LatticePoints<'_> {
    LatticePoints { gv, next: 1 }
}

/// Maps unit-cube points affinely into `bx`, preserving order.
pub fn scale_points(points: &[Vec<f64>], bx: &BoxDomain) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| {
            if p.len() != bx.dim() {
                return Err(domain_err!("point of dimension {} does not fit a {}-dimensional box", p.len(), bx.dim()));
            }
            let mut out = vec![0.0; p.len()];
            bx.map_from_unit_into(p, &mut out);
            Ok(out)
        })
        .collect()
}

/// A dual-lattice frequency `h` with `h . z = 0 (mod n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualIndex(pub Vec<i64>);

fn check_scan_budget(d: usize, hmax: u64) -> Result<()> {
    let side = 2 * hmax as u128 + 1;
    let mut total: u128 = 1;
    for _ in 0..d {
        total = total.saturating_mul(side);
    }
    if total > DUAL_SCAN_BUDGET {
        return Err(Error::Resource(format!(
            "dual scan of (2*{hmax}+1)^{d} = {total} frequencies exceeds the budget of {DUAL_SCAN_BUDGET}"
        )));
    }
    Ok(())
}

/// Calls `visit` for every non-zero `h` with `|h|_inf <= hmax` in the dual.
fn for_each_dual<F: FnMut(&[i64])>(gv: &GeneratingVector, hmax: u64, mut visit: F) -> Result<()> {
    check_scan_budget(gv.dim(), hmax)?;
    let d = gv.dim();
    let n = gv.n as i128;
    let hmax = hmax as i64;
    let zmod: Vec<i128> = gv.z.iter().map(|&z| (z % gv.n) as i128).collect();
    let mut h = vec![-hmax; d];
    // running h . z mod n
    let mut dot: i128 = h.iter().zip(&zmod).map(|(&hj, &zj)| hj as i128 * zj).sum::<i128>().rem_euclid(n);
    loop {
        if dot == 0 && h.iter().any(|&v| v != 0) {
            visit(&h);
        }
        let mut j = d;
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            if h[j] < hmax {
                h[j] += 1;
                dot = (dot + zmod[j]).rem_euclid(n);
                break;
            }
            dot = (dot - 2 * hmax as i128 * zmod[j]).rem_euclid(n);
            h[j] = -hmax;
        }
    }
}

/// All non-zero dual frequencies with `|h|_inf <= hmax`.
pub fn dual_lattice(gv: &GeneratingVector, hmax: u64) -> Result<Vec<DualIndex>> {
    let mut out = Vec::new();
    for_each_dual(gv, hmax, |h| out.push(DualIndex(h.to_vec())))?;
    Ok(out)
}

/// `(-1)^(alpha+1) B_{2 alpha}(t) / (2 alpha)!`, the non-constant part of the
/// one-dimensional Korobov kernel at `t = x - y`, evaluated at `t = k / n` in
/// double-double. For `alpha >= 2` and large `n` the squared worst-case error
/// sits far below `f64` resolution of the per-point terms, so the whole
/// closed form runs at this precision.
struct KorobovExcess {
    /// even-power coefficients in `u = t - 1/2`, scaled and signed
    coeffs: Vec<TwoFloat>,
    n: f64,
}

impl KorobovExcess {
    fn new(alpha: SmoothnessOrder, n: u64) -> Self {
        let two_alpha = 2 * alpha.get();
        let fact = dd::from_i128((1..=two_alpha as i128).product());
        let sign = alpha.kernel_sign();
        let coeffs = table()
            .centered_dd(two_alpha)
            .iter()
            .step_by(2)
            .map(|&c| dd::div(c * sign, fact))
            .collect();
        Self { coeffs, n: n as f64 }
    }

    #[inline]
    fn at(&self, k: u64) -> TwoFloat {
        let u = TwoFloat::new_div(k as f64, self.n) - 0.5;
        let u2 = u * u;
        self.coeffs.iter().rev().fold(dd::ZERO, |acc, &c| acc * u2 + c)
    }
}

/// `prod_j (1 + e_j) - 1` without forming the `1 + ...` sums.
#[inline]
fn product_minus_one(excess: impl Iterator<Item = TwoFloat>) -> TwoFloat {
    excess.fold(dd::ZERO, |acc, e| acc + e + acc * e)
}

fn finish_wce(sum_of_excess: f64, n: u64) -> Result<f64> {
    let sq = sum_of_excess / n as f64;
    if sq < -1e-14 {
        return Err(Error::Computation(format!("negative squared worst-case error {sq:e}")));
    }
    Ok(sq.max(0.0).sqrt())
}

/// Worst-case error of the lattice rule in the Korobov space of smoothness
/// `alpha`, via the Bernoulli-polynomial closed form of the kernel:
///
/// `wce^2 = (1/n) sum_i prod_j [1 + (-1)^(alpha+1) B~_{2 alpha}(i z_j / n) / (2 alpha)!] - 1`.
///
/// Cost `O(n d)`. Per-point terms are double-double and their total is
/// correctly rounded, so values down to roughly `1e-30` relative to the terms
/// survive and the result does not depend on the order of the points.
pub fn wce_korobov_closed_form(gv: &GeneratingVector, alpha: SmoothnessOrder) -> Result<f64> {
    let n = gv.n;
    let ex = KorobovExcess::new(alpha, n);
    let s = exact_chunked_sum(n as usize, |i| {
        let i = i as u64 + 1;
        product_minus_one((0..gv.dim()).map(|j| ex.at(gv.residue(i, j))))
    });
    finish_wce(s, n)
}

/// Truncated dual-lattice series `sqrt(sum_{0 != h in dual, |h|_inf <= hmax} r_alpha(h)^-2)`.
/// Underestimates the worst-case error and converges to it as `hmax` grows.
pub fn wce_korobov_bruteforce(gv: &GeneratingVector, alpha: SmoothnessOrder, hmax: u64) -> Result<f64> {
    let mut acc = ExactSum::new();
    for_each_dual(gv, hmax, |h| {
        let r: f64 = h.iter().map(|&hj| r_alpha(alpha, hj)).product();
        acc.add(1.0 / (r * r));
    })?;
    Ok(acc.value().sqrt())
}

/// `prod_j max(1, b_j - a_j)^(alpha + 1/2)` times the unit-cube worst-case
/// error: the norm-free factor of the error bound for the rule scaled to `bx`.
pub fn wce_scaled_box_bound(gv: &GeneratingVector, alpha: SmoothnessOrder, bx: &BoxDomain) -> Result<f64> {
    if bx.dim() != gv.dim() {
        return Err(domain_err!("box dimension {} differs from lattice dimension {}", bx.dim(), gv.dim()));
    }
    let scale: f64 = bx
        .intervals()
        .iter()
        .map(|iv| iv.length().max(1.0).powf(alpha.get() as f64 + 0.5))
        .product();
    Ok(scale * wce_korobov_closed_form(gv, alpha)?)
}

/// Component-by-component construction for the unweighted Korobov space.
///
/// `z_1 = 1`; each further `z_s` minimizes the `s`-dimensional worst-case
/// error over `{1, ..., n-1}` coprime to `n`, smallest `z_s` on ties.
/// Cost `O(d n^2)`.
pub fn cbc_construct(n: u64, d: usize, alpha: SmoothnessOrder) -> Result<GeneratingVector> {
    if n < 2 {
        return Err(domain_err!("CBC construction needs n >= 2, got {n}"));
    }
    if d == 0 {
        return Err(domain_err!("CBC construction needs d >= 1"));
    }
    if n > 1 << 20 {
        return Err(Error::Resource(format!("CBC with n = {n} exceeds the O(n^2) budget (n <= 2^20)")));
    }
    let ex = KorobovExcess::new(alpha, n);
    let excess: Vec<TwoFloat> = (0..n).into_par_iter().map(|k| ex.at(k)).collect();
    let candidates: Vec<u64> = (1..n).filter(|&z| gcd(z, n) == 1).collect();

    let mut z = vec![1u64];
    // prod_{j<s} (1 + e(i z_j mod n)) - 1, indexed by point i mod n
    let mut prod: Vec<TwoFloat> = excess.clone();
    for _ in 1..d {
        let (best, _) = candidates
            .par_iter()
            .map(|&c| {
                // correctly rounded, so equivalent candidates tie exactly
                let mut acc = ExactSum::new();
                for (i, &p) in prod.iter().enumerate() {
                    let e = excess[((i as u128 * c as u128) % n as u128) as usize];
                    acc.add_dd(p + e + p * e);
                }
                (c, acc.value())
            })
            .reduce(|| (u64::MAX, f64::INFINITY), |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            });
        for (i, p) in prod.iter_mut().enumerate() {
            let e = excess[((i as u128 * best as u128) % n as u128) as usize];
            *p = *p + e + *p * e;
        }
        z.push(best);
    }
    GeneratingVector::new(n, z)
}
