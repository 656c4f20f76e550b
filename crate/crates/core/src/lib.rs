//! Stochastic Stokes' drift of a particle in a travelling wave.
//!
//! Two models are covered. In the *inertia* model the particle velocity
//! relaxes towards the local wave velocity at rate `lambda` while being
//! kicked by white noise:
//!
//! ```text
//! dU = -lambda (U - eps f(X, t)) dt + lambda sigma dB,   dX = U dt
//! ```
//!
//! In the *eddy* model the particle is advected by the wave plus an
//! Ornstein-Uhlenbeck velocity with correlation time `1 / lambda`:
//!
//! ```text
//! dU = -lambda U dt + lambda sigma dB,   dX = (U + eps f(X, t)) dt
//! ```
//!
//! with `f(x, t) = u cos(k x - omega t + phi)`. Both share the long-time
//! diffusivity `sigma^2 / 2`.
//!
//! [`asymptotics`] evaluates the leading-order (`eps^2`) drift and variance
//! rate by quadrature, [`mc`] simulates the full SDEs with ensembles of
//! trajectories, and [`sorting`] superposes several waves in two dimensions
//! to separate particle species by drift direction.

pub mod asymptotics;
pub mod cli;
mod error;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod sorting;

pub use error::{Error, Result};
pub use model::{Model, PhasePolicy, PhysicalParams, ReducedParams, WaveSpec};
