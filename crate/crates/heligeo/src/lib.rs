//! Geometric backstepping attitude control for a small helicopter whose
//! rotor moment lags the servo commands.
//!
//! The crate is organised bottom-up:
//!
//! - [`so3`]: rotations, attitude errors and the quadratic bounds on `ψ`.
//! - [`model`]: fuselage rigid body plus first-order rotor moment dynamics.
//! - [`reference`]: smooth attitude references and a feasibility checker.
//! - [`controller`]: the fuselage law, the backstepping input and the gain gate.
//! - [`lyapunov`]: Lyapunov functions, bound matrices and trace certificates.
//! - [`sim`]: Lie-group RK4 integration, scenario config and CSV output.
//! - [`verify`]: the property suite behind `heligeo verify`.
//!
//! ```
//! use heligeo::sim::{run, SimConfig};
//!
//! let mut cfg = SimConfig::roll_tracking();
//! cfg.duration = 2.0;
//! let trace = run(&cfg).unwrap();
//! let last = trace.samples.last().unwrap();
//! assert!(last.state.t > 1.99);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod lyapunov;
pub mod model;
pub mod reference;
pub mod sim;
pub mod so3;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
    #[doc = include_str!("../../../book/src/controller.md")]
    mod controller {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
