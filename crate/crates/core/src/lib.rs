//! Functional nonparametric regression of a scalar response on a curve.
//!
//! The crate provides the functional local constant (FLC, Nadaraya-Watson type)
//! and functional local linear (FLL) estimators with PCA semimetrics, leave-one-out
//! tuning of bandwidth and semimetric dimension, a Karhunen-Loève Wiener-process
//! simulator for Monte Carlo studies, and a rolling one-step-ahead forecasting
//! pipeline with cumulative squared forecast error and a conditional
//! predictive-ability test.
//!
//! Module map:
//!
//! * [`curve`]: grids, discretized curves, quadrature, functional samples.
//! * [`linalg`]: the symmetric Jacobi eigensolver.
//! * [`semimetric`]: PCA basis, PCA semimetric and locating functions.
//! * [`kernel`]: asymmetric kernels on `[0, 1]` and their validator.
//! * [`estimator`]: FLC / FLL estimation and leave-one-out cross-validation.
//! * [`rng`]: counter-based random streams.
//! * [`simulate`]: Wiener DGP, AR(1) errors, Monte Carlo MSPE, rate check.
//! * [`forecast`]: hourly ingestion, daily datasets, rolling forecasts, CSFE, GW test.
//! * [`diagnostics`]: small-ball profiles and pairwise distance quantiles.

pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod forecast;
pub mod kernel;
pub mod linalg;
pub mod rng;
pub mod semimetric;
pub mod simulate;

pub use curve::{Curve, FunctionalSample, Grid};
pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, Method, Prediction, ResponseTransform};
pub use kernel::KernelSpec;
pub use semimetric::{LocatorKind, LocatorSpec, PcaBasis, SemimetricSpec};
