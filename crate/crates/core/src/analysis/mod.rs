//! Numerical checks of the a priori estimates, each producing an
//! [`EstimateReport`].

pub mod audit;
pub mod counterexample;
pub mod dependence;
pub mod dissipativity;
pub mod energy;
pub mod flow;
pub mod galerkin;
pub mod report;

pub use report::{reports_to_json, EstimateReport, Provenance, Status};
