//! One-dimensional reference quadratures used for verification: fixed-order
//! Gauss–Legendre rules and adaptive Gauss–Kronrod (7/15) integration.

use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};
use std::collections::HashMap;

use crate::bernoulli::Interval;
use crate::sum::KahanSum;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `m`-point rule, computed by Newton iteration on the three-term recurrence.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(m: usize) -> std::sync::Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(m).or_insert_with(|| std::sync::Arc::new(GaussLegendre::new(m))).clone()
    }

    /// Integral of `f` over `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = KahanSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    /// Integral over `[lo, hi]` split at the given interior break points.
    pub fn integrate_split<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, breaks: &[f64], mut f: F) -> f64 {
        let mut pts = vec![lo];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
        inner.sort_by(f64::total_cmp);
        pts.extend(inner);
        pts.push(hi);
        let mut acc = KahanSum::new();
        for w in pts.windows(2) {
            if w[1] > w[0] {
                acc.add(self.integrate(w[0], w[1], &mut f));
            }
        }
        acc.value()
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre integral over a box in one or two dimensions, with
/// optional per-axis break points (kinks of the integrand).
pub fn tensor_integrate<F: FnMut(&[f64]) -> f64>(
    rule: &GaussLegendre,
    intervals: &[Interval],
    breaks: &[Vec<f64>],
    mut f: F,
) -> f64 {
    let no_breaks: Vec<Vec<f64>> = vec![Vec::new(); intervals.len()];
    let breaks = if breaks.is_empty() { &no_breaks } else { breaks };
    match intervals.len() {
        1 => rule.integrate_split(intervals[0].a(), intervals[0].b(), &breaks[0], |x| f(&[x])),
        2 => rule.integrate_split(intervals[0].a(), intervals[0].b(), &breaks[0], |x0| {
            rule.integrate_split(intervals[1].a(), intervals[1].b(), &breaks[1], |x1| f(&[x0, x1]))
        }),
        d => panic!("tensor_integrate supports d <= 2, got {d}"),
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[lo, hi]`, split first at
/// the given break points. Subintervals are bisected until each one's error
/// estimate falls below its share of `max(abs_tol, rel_tol * |result|)`.
pub fn adaptive_integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(hi);

    // (lo, hi, value, err)
    let mut pieces: Vec<(f64, f64, f64, f64)> = pts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    for _ in 0..20_000 {
        let total: KahanSum = pieces.iter().map(|p| p.2).collect();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        let tol = abs_tol.max(rel_tol * total.value().abs());
        if err <= tol {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .expect("at least one piece");
        let (a, b, _, _) = pieces.swap_remove(idx);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        pieces.push((a, m, v1, e1));
        pieces.push((m, b, v2, e2));
    }
    pieces.sort_by(|p, q| p.0.total_cmp(&q.0));
    pieces.iter().map(|p| p.2).collect::<KahanSum>().value()
}
