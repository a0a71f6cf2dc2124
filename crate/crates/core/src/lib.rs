//! Energy-efficiency Pareto boundary of the multi-cell MISO downlink with
//! coordinated beamforming.
//!
//! Each BS solves a concave fractional program in which the interference it
//! causes and receives is fixed by interference-temperature (IT) levels
//! `Γ_kj`. Sweeping those levels traces the boundary of the achievable
//! energy-efficiency region; [`pareto::run_distributed`] walks to it through
//! pairwise IT updates. The [`oracle`] module provides independent
//! brute-force and numerical cross-checks.

pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pareto;
pub mod solver;

pub use error::{Error, Result};
