//! Phase locking, stability and convergence analysis for the
//! Schrödinger-Lohe correlation system.

pub mod cli;
pub mod critical;
pub mod dynamics;
pub mod error;
pub mod fixed_point;
pub mod kuramoto;
pub mod lyapunov;
pub mod model;
pub mod ode;
pub mod report;
pub mod sampling;
pub mod selfconsistency;
pub mod stability;
pub mod wave;

pub use error::{Error, Result};
pub use model::{
    make_ensemble, CMatrix, CorrelationState, FrequencyEnsemble, Method, PhaseLockedState, SolverConfig, C64,
};
