//! Photon creation in a superconducting cavity terminated by a driven SQUID.
//!
//! The field in a 1-D cavity with a flux-tunable boundary is expanded on the
//! static eigenmodes of the undriven problem; modulating the boundary couples
//! the mode amplitudes parametrically and pumps photon pairs out of vacuum
//! (the dynamical Casimir effect). This crate solves the static spectrum,
//! integrates the driven mode equations, extracts Bogoliubov coefficients and
//! particle numbers, and checks the numerics against multiple-scale analysis.

pub mod analysis;
pub mod bogoliubov;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod msa;
pub mod params;
pub mod spectrum;

pub use error::{Error, Result};
pub use params::{CavityParams, FluxDrive};
pub use spectrum::Spectrum;
