use std::f64::consts::LN_2;

use crate::error::Result;
use crate::model::Scenario;
use crate::solver::{dinkelbach_bisection, ItVector, LinkSolution, SolverOptions};

/// `∂E_i/∂Γ_ij = λ*_ij / (Tr S*_i/η + P_c)`.
pub fn sensitivity_own(solution: &LinkSolution, j: usize) -> f64 {
    if solution.total_power <= 0.0 {
        return 0.0;
    }
    solution.duals.it(j) / solution.total_power
}

/// `∂E_i/∂Γ_ji` for any `j ≠ i`: raising the interference link `i` must
/// tolerate raises its effective noise.
pub fn sensitivity_cross(solution: &LinkSolution, scenario: &Scenario) -> f64 {
    let i = solution.link;
    if solution.limit_only {
        return -solution.gamma_star / solution.effective_noise;
    }
    let s = solution.signal(scenario.channel(i, i)).max(0.0);
    if s == 0.0 || solution.total_power <= 0.0 {
        return 0.0;
    }
    let nu = solution.effective_noise;
    -(s / solution.total_power) / (nu * (nu + s) * LN_2)
}

/// `[[a, b], [c, d]]` with `a = ∂E_i/∂Γ_ij`, `b = ∂E_i/∂Γ_ji`,
/// `c = ∂E_j/∂Γ_ij`, `d = ∂E_j/∂Γ_ji`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl DirectionMatrix {
    pub fn from_solutions(scenario: &Scenario, si: &LinkSolution, sj: &LinkSolution) -> Self {
        let (i, j) = (si.link, sj.link);
        let m = Self {
            a: sensitivity_own(si, j),
            b: sensitivity_cross(si, scenario),
            c: sensitivity_cross(sj, scenario),
            d: sensitivity_own(sj, i),
        };
        debug_assert!(m.a >= 0.0 && m.d >= 0.0 && m.b <= 0.0 && m.c <= 0.0, "{m:?}");
        m
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `|ad − bc| / (|ad| + |bc|)`, zero for the zero matrix.
    pub fn normalized_det(&self) -> f64 {
        let scale = (self.a * self.d).abs() + (self.b * self.c).abs();
        if scale == 0.0 {
            0.0
        } else {
            self.det().abs() / scale
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }
}

/// Solves links `i` and `j` at `it` and assembles their direction matrix.
pub fn build_direction_matrix(
    scenario: &Scenario,
    it: &ItVector,
    i: usize,
    j: usize,
    opts: &SolverOptions,
) -> Result<DirectionMatrix> {
    let si = dinkelbach_bisection(scenario, it, i, opts)?;
    let sj = dinkelbach_bisection(scenario, it, j, opts)?;
    Ok(DirectionMatrix::from_solutions(scenario, &si, &sj))
}

/// `sign(ad − bc) · [αd − b, a − αc]`, so that `D·d = |det D| · [α, 1]`.
/// Zero when `det D = 0`.
pub fn direction_vector(m: &DirectionMatrix, alpha: f64) -> [f64; 2] {
    let det = m.det();
    if det == 0.0 || !det.is_finite() {
        return [0.0, 0.0];
    }
    let s = det.signum();
    [s * (alpha * m.d - m.b), s * (m.a - alpha * m.c)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(a: f64, b: f64, c: f64, d: f64) -> DirectionMatrix {
        DirectionMatrix { a, b, c, d }
    }

    #[test]
    fn hand_example() {
        let m = mat(1.0, -2.0, -3.0, 4.0);
        let d = direction_vector(&m, 1.0);
        assert_eq!(d, [-6.0, -4.0]);
        assert_eq!(m.apply(d), [2.0, 2.0]);
    }

    #[test]
    fn singular_gives_zero() {
        assert_eq!(direction_vector(&mat(1.0, -1.0, -1.0, 1.0), 1.0), [0.0, 0.0]);
    }

    #[test]
    fn alpha_zero_is_weak() {
        let m = mat(1.0, -2.0, -3.0, 4.0);
        let d = direction_vector(&m, 0.0);
        assert_eq!(d, [-2.0, -1.0]);
        assert_eq!(m.apply(d), [0.0, 2.0]);
    }

    #[test]
    fn product_is_det_times_alpha_one() {
        for &(a, b, c, d, alpha) in &[
            (2.0, -0.5, -0.1, 3.0, 0.5),
            (0.1, -4.0, -2.0, 0.3, 2.0),
            (0.0, -1.0, -1.0, 0.0, 1.0),
        ] {
            let m = mat(a, b, c, d);
            let v = m.apply(direction_vector(&m, alpha));
            let det = m.det().abs();
            assert!((v[0] - det * alpha).abs() < 1e-12);
            assert!((v[1] - det).abs() < 1e-12);
        }
    }
}
