//! Reproducible experiments on flexible polyhedra: families, tent
//! construction, Fedosov coefficients and Laplace spectra, driven by one
//! configuration each and written as CSV tables plus a JSON summary.

pub mod config;
pub mod experiments;
pub mod io;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{run, Summary};
