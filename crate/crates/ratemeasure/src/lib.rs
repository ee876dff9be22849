//! Measure-valued short-rate dynamics on a bounded interval.
//!
//! The state of the model is an atomic probability measure on rates; bond
//! prices are its exponential moments, the short rate is its mean, and the
//! measure diffuses on the probability simplex under the mean-reverting drift
//! `(R(mu) - rho*) mu` and a centered multiplicative volatility field.
//!
//! The crate provides:
//!
//! - [`measure`]: atomic measures, the dual norm in closed form, pairings and
//!   the isometric representative map;
//! - [`operators`]: the drift, its building blocks and explicit operator
//!   bounds;
//! - [`volatility`]: finite-factor centered volatility fields and
//!   Hilbert-Schmidt norms;
//! - [`simplex`]: Euclidean projection onto the probability simplex;
//! - [`solver`]: projected-Euler and stochastic-exponential schemes with
//!   reproducible parallel Monte Carlo;
//! - [`pricing`]: bond prices, yield curves, pathwise discounting and
//!   martingale diagnostics;
//! - [`reference`]: independent closed-form and brute-force cross-checks;
//! - [`config`] / [`experiments`] / [`output`]: run configuration, the
//!   convergence and stability experiments, and CSV/report rendering.

pub mod config;
pub mod error;
pub mod experiments;
pub mod measure;
pub mod operators;
pub mod output;
pub mod pricing;
pub mod reference;
pub mod simplex;
pub mod solver;
pub mod volatility;

pub use error::{Error, Result};
pub use measure::{AtomicMeasure, Interval, PiecewiseLinearFn};
pub use simplex::SimplexPoint;
pub use solver::{Scheme, SimulationConfig, SimulationPath};
pub use volatility::VolatilityField;
