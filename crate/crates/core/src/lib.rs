//! Simulation and analysis of two-photon spectral amplitudes from pulsed
//! type-II down-conversion in BBO, measured through fiber dispersion.
//!
//! The pipeline is: [`tpsa::build_tpsa`] on a [`grid::FrequencyGrid`],
//! optional [`tpsa::apply_filter`], then [`measurement::delay_projection`]
//! (the signal–idler delay histogram after a dispersive fiber),
//! [`measurement::convolve_psf`] and the width-based quantities in
//! [`analysis`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod pump;
pub mod tpsa;
pub mod transform;

pub use error::{Error, Result};
