use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::solver::{dinkelbach_bisection, ItVector, SolverOptions};

/// `1e-5·Γ`. A zero level has no central difference.
pub fn default_fd_step(level: f64) -> f64 {
    1e-5 * level
}

/// Central difference of `E_k` with respect to the IT level `Γ_ab`.
pub fn finite_diff_e(
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    entry: (usize, usize),
    step: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let (a, b) = entry;
    let level = it.get(a, b);
    if !(step > 0.0) || level - step < 0.0 {
        return Err(Error::Precondition(format!(
            "finite-difference step {step:e} invalid at Γ_{a}{b} = {level:e}"
        )));
    }
    let at = |v: f64| -> Result<f64> {
        let mut p = it.clone();
        p.set(a, b, v)?;
        Ok(dinkelbach_bisection(scenario, &p, k, opts)?.gamma_star)
    };
    Ok((at(level + step)? - at(level - step)?) / (2.0 * step))
}
