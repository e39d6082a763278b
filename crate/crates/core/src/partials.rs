//! Mixed partial derivatives supplied analytically by an integrand.

use crate::error::{Error, Result};

/// Source of mixed partials `f^(tau)(x)`, with `tau` a per-axis derivative
/// order. `tau = 0` is the function itself.
pub trait MixedPartialOracle: Sync {
    fn dim(&self) -> usize;

    /// Largest per-axis order the oracle can evaluate.
    fn max_order(&self) -> u32;

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        let zeros = vec![0; self.dim()];
        self.partial(&zeros, x)
    }
}

/// Returns a capability error when `tau` asks for more than `oracle` offers.
pub fn check_order<O: MixedPartialOracle + ?Sized>(oracle: &O, tau: &[u32]) -> Result<()> {
    if tau.len() != oracle.dim() {
        return Err(Error::Domain(format!(
            "multi-index has {} entries but the function has dimension {}",
            tau.len(),
            oracle.dim()
        )));
    }
    if let Some(&t) = tau.iter().find(|&&t| t > oracle.max_order()) {
        return Err(Error::Capability(format!(
            "partial of order {t} requested, only up to {} available",
            oracle.max_order()
        )));
    }
    Ok(())
}

/// A closure-backed oracle.
pub struct FnPartials<F> {
    dim: usize,
    max_order: u32,
    f: F,
}

impl<F> FnPartials<F>
where
    F: Fn(&[u32], &[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, max_order: u32, f: F) -> Self {
        Self { dim, max_order, f }
    }
}

impl<F> MixedPartialOracle for FnPartials<F>
where
    F: Fn(&[u32], &[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> u32 {
        self.max_order
    }

    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        check_order(self, tau)?;
        Ok((self.f)(tau, x))
    }
}

impl<O: MixedPartialOracle + ?Sized> MixedPartialOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn max_order(&self) -> u32 {
        (**self).max_order()
    }
    fn partial(&self, tau: &[u32], x: &[f64]) -> Result<f64> {
        (**self).partial(tau, x)
    }
}

/// Iterator over all multi-indices in `{0, ..., max}^d`, last axis fastest.
pub(crate) fn multi_indices(d: usize, max: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (max as usize + 1).pow(d as u32);
    (0..total).map(move |mut k| {
        let mut tau = vec![0u32; d];
        for t in tau.iter_mut().rev() {
            *t = (k % (max as usize + 1)) as u32;
            k /= max as usize + 1;
        }
        tau
    })
}
