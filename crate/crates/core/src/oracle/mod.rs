//! Independent ground truth for the solver: exhaustive beamformer clouds,
//! dense dual-grid search, projected-gradient ascent on the primal and finite
//! differences of the per-link optimum.

mod cloud;
mod dual_grid;
mod finite_diff;
mod projected;

pub use cloud::{brute_force_cloud, CloudSample, DominanceReport, OracleCloud, DOMINANCE_SLACK};
pub use dual_grid::{dual_grid_min, DualGridResult};
pub use finite_diff::{default_fd_step, finite_diff_e};
pub use projected::{projected_gradient_inner, PgOptions, PgResult};
