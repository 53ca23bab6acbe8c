//! Radially symmetric flame-ball solutions of the system
//! `Δu − εu = −v f(u)`, `Δv = v f(u)` in three dimensions.
//!
//! The crate is split by solution strategy:
//!
//! * [`nonlinearity`]: ignition functions and the scalar nonexistence bounds ε⁰, ε¹.
//! * [`heaviside`]: closed forms for the step nonlinearity (ball and annulus modes).
//! * [`shooting`]: general nonlinearities by integrating from the centre.
//! * [`fixedpoint`]: the relaxed Picard iteration on the (u, β) operator.
//! * [`continuation`]: bifurcation curves in (ε, β) and fold detection.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod error;
pub mod fixedpoint;
pub mod heaviside;
pub mod nonlinearity;
pub mod numerics;
pub mod profile;
pub mod report;
pub mod shooting;

pub use error::{Error, Result};
pub use nonlinearity::{EpsilonBounds, IgnitionFunction, Kind, NonlinearitySpec};
pub use profile::{PieceTag, RadialProfile};
pub use report::{CheckSet, SolveReport};
