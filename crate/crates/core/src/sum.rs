//! Compensated summation.
//!
//! [`KahanSum`] is the Neumaier variant of Kahan's algorithm and is what every
//! quadrature sum in the crate accumulates into. [`ExactSum`] keeps Shewchuk's
//! non-overlapping partials and returns the correctly rounded total, so its
//! result does not depend on the order in which terms arrive.
//!
//! [`chunked_sum`] evaluates terms over `0..n` in fixed-size chunks, possibly
//! in parallel, and combines the chunk totals in index order. The result is
//! bit-identical for any number of worker threads; [`exact_chunked_sum`]
//! takes double-double terms and returns their correctly rounded total.

use rayon::prelude::*;
use twofloat::TwoFloat;

/// Number of terms per chunk in [`chunked_sum`]. Fixed so that the reduction
/// tree does not depend on the thread pool.
pub const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Merge another accumulator (its rounded value and its compensation).
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl Extend<f64> for KahanSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        s.extend(iter);
        s
    }
}

/// Correctly rounded summation (Shewchuk's partials, as in Python's `fsum`).
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    #[inline]
    pub fn add_dd(&mut self, x: TwoFloat) {
        self.add(x.hi());
        self.add(x.lo());
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // half-way correction
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated sum of `term(i)` for `i in 0..n`, chunk-parallel with a
/// deterministic reduction. Stops at the first `Err` returned by `term`.
pub fn chunked_sum<E, F>(n: usize, term: F) -> Result<f64, E>
where
    E: Send,
    F: Fn(usize) -> Result<f64, E> + Sync,
{
    chunked_sum_with(n, || (), |_, i| term(i))
}

/// As [`chunked_sum`], with per-chunk scratch state built by `init`.
pub fn chunked_sum_with<S, E, I, F>(n: usize, init: I, term: F) -> Result<f64, E>
where
    E: Send,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, usize) -> Result<f64, E> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Result<Vec<KahanSum>, E> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = init();
            let mut acc = KahanSum::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.add(term(&mut scratch, i)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = KahanSum::new();
    for p in &partial? {
        total.merge(p);
    }
    Ok(total.value())
}

/// Correctly rounded sum of the double-double terms `term(i)` for `i in 0..n`,
/// chunk-parallel. The result depends only on the multiset of terms, not on
/// their order.
pub fn exact_chunked_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> TwoFloat + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<ExactSum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ExactSum::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.add_dd(term(i));
            }
            acc
        })
        .collect();
    let mut total = ExactSum::new();
    for p in &partial {
        total.merge(p);
    }
    total.value()
}
