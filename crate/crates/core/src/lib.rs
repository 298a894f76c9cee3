//! Lyapunov-accelerated dissipative preparation of a two-atom singlet in a
//! Rydberg cavity-QED system.
//!
//! * [`operator`]: dense operators on labeled tensor-product spaces
//! * [`model`]: the full, effective and STIRAP systems plus control and noise generators
//! * [`zeno`]: Zeno-limit reduction from eigenprojectors of a strong coupling
//! * [`dynamics`]: RK4 integration of the master equation with state feedback
//! * [`experiments`]: scenario registry, sweeps and CSV artifacts

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod operator;
pub mod zeno;

pub use error::{Error, Result};
