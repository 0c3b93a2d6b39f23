//! Numerical laboratory for entanglement-assisted quantum ranging and
//! pulse-position-modulated entanglement-assisted communication.
//!
//! The crate is layered:
//!
//! - [`gaussian`]: covariance-matrix representation of bosonic Gaussian
//!   states and the symplectic maps (loss, squeezing, mixing, phase) used to
//!   build every state of the protocol.
//! - [`distinguishability`]: closed-form s-overlaps, quantum Chernoff
//!   exponents and Gaussian fidelities.
//! - [`fock`]: a brute-force truncated-Fock-space substrate (Helstrom limit,
//!   pretty-good measurement, fractional-power overlaps, Uhlmann fidelity)
//!   that independently checks the analytic layer.
//! - [`ranging`]: the ranging scenario and all closed-form error bounds.
//! - [`receivers`]: the multi-mode OPA receiver and direct-detection models,
//!   exact and Monte Carlo.
//! - [`comm`]: PPM entanglement-assisted communication rates and capacities.
//! - [`validation`]: the analytic-versus-oracle self-test suite.
//! - [`table`]: deterministic CSV output.
//!
//! Conventions: vacuum covariance is the identity (x = a + a†), quadratures
//! are interleaved per mode as (x₁, p₁, …, xₙ, pₙ).

// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comm;
pub mod distinguishability;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod ranging;
pub mod receivers;
pub mod table;
pub mod validation;

pub use error::{Error, Result};
