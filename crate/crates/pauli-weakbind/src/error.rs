use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A Bessel evaluation left the representable range.
    #[error("bessel overflow: K_{order}({argument}) exceeds f64 range")]
    BesselOverflow { order: f64, argument: f64 },

    /// The shooting mismatch has no sign change in the (widened) bracket.
    #[error("no negative eigenvalue found in kappa bracket [{lo:e}, {hi:e}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("ODE integrator step underflow at s = {s}")]
    Stiffness { s: f64 },

    #[error("eigenvalue not converged under domain doubling: last change {change:e}")]
    TruncationNotConverged { change: f64 },

    #[error("Hardy bound inapplicable: zero mode has decay class {0}")]
    GrowthClass(String),

    /// Muckenhoupt suprema failed the monotone-decay check beyond the virtual window.
    #[error("Muckenhoupt supremum not decaying in |m| at m = {m}")]
    DecayCheck { m: i32 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
