//! Spectral certificates for quick uniform convergence of averaged
//! projections and for robust Banach property (T) of groups generated
//! by finite subgroups.
//!
//! The crate is organized around the pipeline:
//! finite groups as multiplication tables ([`finite_group`]) feed a real
//! group algebra with regular-representation matrices ([`group_algebra`]),
//! whose averaging elements give bipartite coset graphs and angle data
//! ([`coset_spectra`]); projection families on finite-dimensional normed
//! spaces carry the convergence certificates ([`projection_lab`]); the
//! criterion arithmetic turns spectral bounds into verdicts and Banach
//! class parameters ([`criterion`]); and congruence quotients of
//! elementary matrix groups realize the expander construction
//! ([`expander_forge`]).

// Validation guards are written as `!(x > 0.0)` on purpose: the negated
// form rejects NaN, which `x <= 0.0` lets through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coset_spectra;
pub mod criterion;
pub mod error;
pub mod expander_forge;
pub mod finite_group;
pub mod group_algebra;
pub mod numeric;
pub mod projection_lab;

pub use error::{Error, Result};
