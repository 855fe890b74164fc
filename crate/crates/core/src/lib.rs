//! Hecke eigenvalues of a small catalog of eta-quotient newforms evaluated on
//! the integers represented by class-number-one binary quadratic forms.
//!
//! The crate is organised bottom-up:
//!
//! * [`qforms`]: reduced forms, class numbers, the Kronecker character and
//!   representation counts (divisor formula and lattice enumeration).
//! * [`eigenforms`]: exact q-expansions of the catalog newforms, normalised
//!   eigenvalues, Hecke relations and Satake angles.
//! * [`sieves`]: sieved coefficient tables up to a bound.
//! * [`dirichlet`]: local Euler factors, truncated Euler products and
//!   coefficient-level checks of Dirichlet series factorizations.
//! * [`moments`]: checkpointed summatory functions and slope fits.
//! * [`signchange`]: the step kernel, the minorant, the delay equation and
//!   the first sign change search.
//! * [`verify`]: the batch gate suite used by the command line front end.

pub mod arith;
pub mod dirichlet;
pub mod eigenforms;
mod error;
pub mod moments;
mod ntt;
pub mod qforms;
pub mod sieves;
pub mod signchange;
pub mod summation;
pub mod verify;

pub use error::{Error, Result};

/// Version string embedded in every report.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
