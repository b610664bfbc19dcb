//! Data-driven design of passive iFIR controllers.
//!
//! An iFIR controller is the parallel interconnection of a backward-Euler
//! integrator `gamma*Ts/(1 - z^-1)` and an FIR filter `sum_k g_k z^-k`. This
//! crate fits such controllers to open-loop plant data by virtual reference
//! feedback tuning (a least-squares problem in `(g, gamma)`) and enforces
//! passivity of the FIR part through one of three interchangeable convex
//! constraint formulations:
//!
//! * a KYP-lemma LMI over an auxiliary symmetric unknown `X`,
//! * a positive-semidefiniteness constraint on a finite section of the
//!   controller's banded Toeplitz operator,
//! * sampled positive-realness inequalities on the frequency response, with
//!   a spacing bound that makes the sampling sound.
//!
//! The constrained least-squares problems are solved by the deterministic
//! operator-splitting solver in [`solver`]. [`plants`] contains the example
//! systems (a compliant two-cart plant, first-order fitting targets,
//! reference models, a PID baseline) used by the integration tests, the CLI
//! and the browser demo.

// index loops walk several arrays at shifted offsets in the numeric kernels
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` guards reject NaN as well as the out-of-domain values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod controller_file;
pub mod design;
pub mod error;
pub mod lti;
pub mod passivity;
pub mod plants;
pub mod signal;
pub mod solver;
pub mod vrft;

pub use error::Error;
pub use lti::{DiscreteTransferFunction, StateSpace, TimeDomain};
pub use passivity::IFIRController;
pub use signal::SampledSignal;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
