//! Numerical toolkit for the negative spectrum of weakly perturbed
//! two-dimensional Pauli operators with radial magnetic field and potential.

pub mod asymptotics;
pub mod channels;
pub mod cli;
pub mod error;
pub mod fields;
pub mod halfline;
pub mod harness;
pub mod hardy;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod specfun;

pub use error::{Error, Result};
