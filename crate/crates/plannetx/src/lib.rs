//! Longitudinal motion-planning stack: an MPC expert planner built on an
//! SQP/interior-point solver, neural planning policies trained by rolling
//! the learned controls through the exact vehicle dynamics, network
//! compression (structured pruning, INT8 quantization), and a synthetic
//! closed-loop benchmark engine with a worst-case timing harness.

pub mod dynamics;
mod error;
pub mod ocp;
pub mod prediction;

pub use error::PlanError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, PlanError>;
