//! Comparison quadratures for integrals against the standard normal density:
//! tensor-product Gauss–Hermite and a Smolyak sparse grid on the levels
//! `m_l = 2^l + 1` (`m_0 = 1`).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain_err, Error, Result};
use crate::sum::chunked_sum_with;

/// Largest 1D rule: level 10 of the `2^l + 1` schedule.
pub const MAX_HERMITE_COUNT: usize = 1025;

/// Largest Smolyak level.
pub const MAX_SMOLYAK_LEVEL: u32 = 10;

/// Largest number of integrand evaluations in a tensor or sparse-grid rule.
pub const POINT_BUDGET: u128 = 100_000_000;

/// A 1D rule for the weight `exp(-x^2)` on `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i g(x_i)`, approximating `int g(x) exp(-x^2) dx`.
    pub fn apply<G: FnMut(f64) -> f64>(&self, mut g: G) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Gauss–Hermite rule with `count` nodes (Golub–Welsch). Exact for
/// polynomials of degree `<= 2 count - 1` against `exp(-x^2)`.
pub fn gauss_hermite_1d(count: usize) -> Result<QuadratureRule1D> {
    if count == 0 {
        return Err(domain_err!("a Gauss-Hermite rule needs at least one node"));
    }
    if count > MAX_HERMITE_COUNT {
        return Err(Error::Resource(format!(
            "Gauss-Hermite rules are limited to {MAX_HERMITE_COUNT} nodes, asked for {count}"
        )));
    }
    // Jacobi matrix of the Hermite recurrence: zero diagonal, sqrt(k/2) off it
    let jacobi = DMatrix::from_fn(count, count, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(jacobi, f64::EPSILON, 100 * count)
        .ok_or_else(|| Error::Computation(format!("eigen-solver did not converge for {count} nodes")))?;
    let mut pairs: Vec<(f64, f64)> = (0..count)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    // enforce exact symmetry about 0
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    for i in 0..count {
        let k = count - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[k].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[k].1);
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    Ok(QuadratureRule1D { nodes, weights })
}

/// Node count at level `l`: `1` for `l = 0`, else `2^l + 1`.
pub fn level_count(level: u32) -> usize {
    if level == 0 {
        1
    } else {
        (1usize << level) + 1
    }
}

/// Cached Gauss–Hermite rule at `level` of the `2^l + 1` schedule.
pub fn gauss_hermite_level(level: u32) -> Result<Arc<QuadratureRule1D>> {
    if level > MAX_SMOLYAK_LEVEL {
        return Err(Error::Resource(format!("Gauss-Hermite level {level} exceeds {MAX_SMOLYAK_LEVEL}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<QuadratureRule1D>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&level) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(gauss_hermite_1d(level_count(level))?);
    cache.lock().expect("rule cache poisoned").insert(level, rule.clone());
    Ok(rule)
}

/// Tensor-product rule for `int f(x) prod_j phi(x_j) dx` with `phi` the
/// standard normal density: nodes `sqrt(2) t`, weights divided by `sqrt(pi)`.
pub fn tensor_quadrature<F>(rule: &QuadratureRule1D, d: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rules = vec![rule; d];
    tensor_product(&rules, &f)
}

fn tensor_product<F>(rules: &[&QuadratureRule1D], f: &F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if rules.is_empty() {
        return Err(domain_err!("tensor rule needs d >= 1"));
    }
    let total = tensor_size(rules.iter().map(|r| r.len()));
    if total > POINT_BUDGET {
        return Err(Error::Resource(format!("tensor rule with {total} points exceeds the budget of {POINT_BUDGET}")));
    }
    let d = rules.len();
    let scale = 2f64.sqrt();
    let norm = PI.sqrt();
    let sum = chunked_sum_with(
        total as usize,
        || vec![0.0; d],
        |x, mut k| -> Result<f64> {
            let mut w = 1.0;
            for j in (0..d).rev() {
                let m = rules[j].len();
                let i = k % m;
                k /= m;
                x[j] = scale * rules[j].nodes[i];
                w *= rules[j].weights[i] / norm;
            }
            Ok(w * f(x))
        },
    )?;
    Ok(sum)
}

fn tensor_size(counts: impl Iterator<Item = usize>) -> u128 {
    counts.fold(1u128, |acc, m| acc.saturating_mul(m as u128))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Multi-indices `l` in `N^d` with `|l| = s`.
fn compositions(d: usize, s: u32) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![s]];
    }
    let mut out = Vec::new();
    for first in 0..=s {
        for mut rest in compositions(d - 1, s - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `(coefficient, level multi-index)` terms of the combination technique.
fn smolyak_terms(level: u32, d: usize) -> Vec<(f64, Vec<u32>)> {
    let q = level as i64;
    let lo = (q - d as i64 + 1).max(0);
    let mut terms = Vec::new();
    for s in lo..=q {
        let k = (q - s) as u32;
        let coef = if k % 2 == 0 { 1.0 } else { -1.0 } * binomial(d as u32 - 1, k);
        for l in compositions(d, s as u32) {
            terms.push((coef, l));
        }
    }
    terms
}

/// Number of integrand evaluations made by [`smolyak_quadrature`]
/// (nodes shared between tensor terms are counted once per term).
pub fn smolyak_evaluations(level: u32, d: usize) -> u128 {
    smolyak_terms(level, d)
        .iter()
        .map(|(_, l)| tensor_size(l.iter().map(|&lj| level_count(lj))))
        .sum()
}

/// Smolyak sparse grid against the standard normal density:
/// `sum_{q-d+1 <= |l| <= q} (-1)^(q-|l|) C(d-1, q-|l|) (Q_{l_1} x ... x Q_{l_d}) f`
/// with `q = level`.
pub fn smolyak_quadrature<F>(level: u32, d: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if d == 0 {
        return Err(domain_err!("Smolyak rule needs d >= 1"));
    }
    if level > MAX_SMOLYAK_LEVEL {
        return Err(Error::Resource(format!("Smolyak level {level} exceeds {MAX_SMOLYAK_LEVEL}")));
    }
    let evals = smolyak_evaluations(level, d);
    if evals > POINT_BUDGET {
        return Err(Error::Resource(format!("Smolyak rule needs {evals} evaluations, budget is {POINT_BUDGET}")));
    }
    let mut acc = crate::sum::KahanSum::new();
    for (coef, l) in smolyak_terms(level, d) {
        let rules = l.iter().map(|&lj| gauss_hermite_level(lj)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&QuadratureRule1D> = rules.iter().map(|r| r.as_ref()).collect();
        acc.add(coef * tensor_product(&refs, &f)?);
    }
    Ok(acc.value())
}
