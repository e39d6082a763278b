pub mod baselines;
pub mod bernoulli;
mod dd;
pub mod error;
pub mod integrator;
pub mod kernels;
pub mod lattice;
pub mod partials;
pub mod projection;
pub mod quadrature;
pub mod sum;
pub mod testbed;
