//! Length-structured state-space population dynamics for northern shrimp.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation:
//!
//! * [`model`]: the annual process model `N_{t-1} -> N_t` (Von Bertalanffy
//!   growth matrix, Baranov mortality split, Beverton-Holt recruitment).
//! * [`observation`]: catch and survey-biomass observation models.
//! * [`priors`]: prior families, densities, sampling and unconstrained
//!   reparametrisations.
//! * [`inference`]: the log-posterior over static parameters and latent AR(1)
//!   innovations, an adaptive random-walk Metropolis-Hastings sampler, and
//!   posterior summaries.
//!
//! File formats, threading and the command line live in the `shrimp` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod inference;
pub mod math;
pub mod model;
pub mod observation;
pub mod priors;
pub mod sampling;

pub use error::{Error, Result};
