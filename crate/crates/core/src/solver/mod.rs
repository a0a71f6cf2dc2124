//! Per-BS concave fractional program for fixed interference-temperature
//! levels: closed-form dual inner solution, ellipsoid dual descent and the
//! outer bisection on the energy-efficiency parameter.

mod bisection;
mod ellipsoid;
mod inner;
mod types;

pub use bisection::{dinkelbach_bisection, dinkelbach_bisection_near};
pub use ellipsoid::{ellipsoid_solve, EllipsoidState};
pub use inner::{closed_form_covariance, effective_noise, parametric_value};
pub use types::{DualPoint, InnerSolution, ItVector, LinkSolution, SolverOptions};

pub(crate) use inner::LinkProblem;

use crate::error::Result;
use crate::model::Scenario;

/// Primal objective `log2(1 + hᴴSh/ν) − γ(Tr S/η + P_c)` of the fixed-γ program.
pub fn primal_value(
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    s: &crate::model::Covariance,
    gamma: f64,
) -> Result<f64> {
    Ok(LinkProblem::new(scenario, it, k)?.primal_value(s, gamma))
}

/// Interference `(2Mε)²‖h_kjᴴ‖²·power` from BS `k` at MS `j`: the rounding of
/// `|h_kjᴴw|²` for a beam of that power. Smaller levels cannot be told apart
/// from a null. Zero for an unbounded power.
pub fn interference_floor(scenario: &Scenario, k: usize, j: usize, power: f64) -> f64 {
    if !power.is_finite() {
        return 0.0;
    }
    let eps = 2.0 * scenario.antennas(k) as f64 * f64::EPSILON;
    eps * eps * crate::linalg::norm_sqr(scenario.channel(k, j)) * power
}

/// Levels up to this multiple of [`interference_floor`] at the power cap are
/// treated as nulls.
pub const NULL_LEVEL_FACTOR: f64 = 16.0;

/// `level`, or zero if it is within [`NULL_LEVEL_FACTOR`] floors of a null.
pub fn snap_level(scenario: &Scenario, k: usize, j: usize, level: f64) -> f64 {
    if level <= NULL_LEVEL_FACTOR * interference_floor(scenario, k, j, scenario.power_cap(k)) {
        0.0
    } else {
        level
    }
}

/// Solves every link at the same IT levels.
pub fn solve_all(scenario: &Scenario, it: &ItVector, opts: &SolverOptions) -> Result<Vec<LinkSolution>> {
    (0..scenario.links())
        .map(|k| dinkelbach_bisection(scenario, it, k, opts))
        .collect()
}
