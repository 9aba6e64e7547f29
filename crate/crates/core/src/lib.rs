//! Spectral Galerkin solver and verifier for parabolic equations with a
//! non-local term and a state-dependent discrete delay.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod history;
pub mod integrator;
pub mod quadrature;
pub mod rhs;
pub mod scenario;
pub mod spectral;
pub mod suite;

pub use error::{Result, SddError};
pub use exec::Execution;
