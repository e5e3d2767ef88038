//! Simulation and compressive-sensing recovery for molecular communication
//! with cross-reactive receptor arrays.
//!
//! Transmitters release mixtures of molecule types; a receiver with `R`
//! cross-reactive receptor types observes a thresholded, Poisson-noisy
//! array signal and identifies the mixture by solving a convex program over
//! mixture weights followed by a peak detector.
//!
//! - [`model`]: parameters, config files, random streams
//! - [`affinity`]: receptor affinity matrices
//! - [`mixture`]: mixture alphabets
//! - [`channel`]: release / propagation / reception
//! - [`recovery`]: convex recovery programs and their solver
//! - [`detection`]: peak detection and error estimates
//! - [`harness`]: parameter sweeps, CSV and SVG output

pub mod affinity;
pub mod channel;
pub mod detection;
pub mod error;
pub mod harness;
pub mod matrix_io;
pub mod mixture;
pub mod model;
pub mod poisson;
pub mod recovery;

pub use error::{Error, Result};
