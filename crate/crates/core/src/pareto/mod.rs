//! Boundary tracing: grid sweeps over IT levels, analytic sensitivities of
//! the per-link optima and the pairwise distributed update.

mod distributed;
mod sensitivity;
mod special;
mod sweep;

pub use distributed::{run_distributed, DistributedConfig, Initializer, Trajectory, TrajectoryRow};
pub use sensitivity::{build_direction_matrix, direction_vector, sensitivity_cross, sensitivity_own, DirectionMatrix};
pub use special::{pc_zero_point, scalar_ee_power, zf_ee_init};
pub use sweep::{closure_indices, sweep_boundary, tighten, BoundaryPoint, BoundaryTrace, ItGrid, SweepOptions};
