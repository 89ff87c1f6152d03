//! Error type shared by the solvers, models and simulator.

use thiserror::Error;

/// Failure modes surfaced by the library.
///
/// The variants are coarse on purpose: callers mostly need to distinguish
/// configuration mistakes, out-of-domain evaluations and genuine solver
/// failures (which carry a diagnostic message).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or incomplete configuration (bad parameters, missing closed
    /// forms without a numeric fallback window, unknown model name, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Evaluation outside the admissible domain (state outside the interval,
    /// argument outside the image of the transform, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A discounted integral failed to converge under horizon doubling.
    #[error("integrability error: {0}")]
    Integrability(String),

    /// The policy makes the defining linear system singular (vanishing
    /// continuous-fit denominator or singular slope/intercept system).
    #[error("degenerate policy: {0}")]
    DegeneratePolicy(String),

    /// No trigger level solves the smooth-fit equation on the window.
    #[error("no threshold solution: {0}")]
    NoThreshold(String),

    /// No band quadruplet solves the two-sided smooth-fit system.
    #[error("no band solution: {0}")]
    NoBand(String),

    /// The fixed-point oracle failed to converge or its preconditions fail.
    #[error("oracle failure: {0}")]
    OracleFailure(String),

    /// Monte-Carlo simulation could not run as configured.
    #[error("simulation error: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
