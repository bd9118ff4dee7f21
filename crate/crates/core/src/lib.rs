//! Adiabatic error analysis for driven finite-dimensional Hamiltonians.
//!
//! Spectral tracking, adiabatic perturbation coefficients, a reference
//! Schrödinger integrator and closed forms for the Grover search model.

pub mod acceptance;
pub mod apt;
pub mod error;
pub mod family;
pub mod grover;
pub mod linalg;
pub mod par;
pub mod quadrature;
pub mod schedule;
pub mod sim;
pub mod spectral;
pub mod sweep;

pub use apt::{AptOptions, Expansion, PhasedSum, TradeoffResult};
pub use error::{Error, Result};
pub use family::{ConstantFamily, HamiltonianFamily, InterpolatedFamily};
pub use par::Execution;
pub use schedule::{Schedule, ScheduleKind};
pub use spectral::SpectralFrame;
