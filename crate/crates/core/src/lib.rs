//! Threshold and band impulse-control policies with implementation delay for
//! one-dimensional diffusions.
//!
//! The library solves two families of problems on a diffusion with natural
//! boundaries, discounted at rate α:
//!
//! - **Threshold policies** (a, b): commit to an intervention when the state
//!   first reaches the trigger `b`; the impulse executes Δ later and moves
//!   the state to the target `a`.  See [`threshold`].
//! - **Band policies** (p, q, c, d): immediate jump p → q on the lower side,
//!   delayed jump to `c` after the state hits `d` on the upper side.  See
//!   [`band`].
//!
//! Both solvers work in transformed coordinates y = F(x) = ψ(x)/φ(x), where
//! the policy value is linear on the continuation region, and reduce the
//! free boundaries to smooth-fit equations.  An independent fixed-point /
//! concave-majorant oracle ([`oracle`]) cross-checks the threshold solver,
//! and a Monte-Carlo policy simulator ([`sim`]) validates every analytic
//! value against path simulation.
//!
//! Two worked models ship in [`models`]: an exchange-rate intervention
//! problem (`forex`) and a hiring/firing problem with firing delay (`labor`),
//! selectable by name through [`models::ModelRegistry`].

// Validation deliberately uses `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod diffusion;
pub mod error;
pub mod models;
pub mod numerics;
pub mod oracle;
pub mod sim;
pub mod special;
pub mod threshold;

pub use error::{Error, Result};
