//! Free-energy variational machinery and finite-size Monte Carlo for
//! disorder chaos in spherical mean-field spin glasses.
//!
//! The crate minimizes the spherical-model free-energy functional over
//! discrete order parameters, evaluates the coupled two-system functional
//! with partially decorrelated disorder, locates the concentration
//! overlap `u*` and certifies the free-energy gap away from it, verifies
//! the underlying Gaussian recursion identities by brute-force
//! quadrature, and reproduces the overlap concentration by Metropolis
//! sampling of small coupled systems.
//!
//! With the default `parallel` feature the grid sweeps, oracle suites and
//! disorder replicas fan out over rayon; without it everything runs
//! sequentially with identical results.

pub mod chaos;
pub mod cs;
pub mod error;
pub mod guerra;
pub mod mixture;
pub mod optim;
pub mod order_param;
mod par;
pub mod quad;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use mixture::{MixtureSpec, MixtureTerm};
pub use order_param::{Envelope, StepOrderParameter};
