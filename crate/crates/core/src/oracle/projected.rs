use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::model::{Covariance, Scenario};
use crate::solver::{effective_noise, ItVector};

#[derive(Debug, Clone, PartialEq)]
pub struct PgOptions {
    pub max_iter: usize,
    /// Stop once the gradient mapping at the extrapolated point is below
    /// `tol·(1 + ‖∇‖)`, or the objective has not grown by `tol` for a while.
    pub tol: f64,
    pub projection_max_iter: usize,
    pub projection_tol: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-9,
            projection_max_iter: 100_000,
            projection_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PgResult {
    pub covariance: Covariance,
    pub objective: f64,
    pub iterations: usize,
}

const STALL_ITERATIONS: usize = 200;

/// Halfspace `Re tr(A S) ≤ b`.
struct Halfspace {
    a: CMatrix,
    b: f64,
    norm_sqr: f64,
}

impl Halfspace {
    fn project(&self, s: &CMatrix) -> CMatrix {
        let v = frob(&self.a, s);
        if v <= self.b {
            s.clone()
        } else {
            s - &self.a * C64::new((v - self.b) / self.norm_sqr, 0.0)
        }
    }
}

fn frob(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn hermitian(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn project_psd(m: &CMatrix) -> CMatrix {
    let eig = hermitian(m).symmetric_eigen();
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(i).into_owned();
            out += linalg::outer_self(&v) * C64::new(l, 0.0);
        }
    }
    hermitian(&out)
}

/// Dykstra's alternating projection onto the PSD cone intersected with the halfspaces.
fn project(y: &CMatrix, sets: &[Halfspace], opts: &PgOptions) -> Result<CMatrix> {
    let n = y.nrows();
    let mut x = y.clone();
    let mut incr = vec![CMatrix::zeros(n, n); sets.len() + 1];
    for _ in 0..opts.projection_max_iter {
        let prev = x.clone();
        for (i, h) in sets.iter().enumerate() {
            let z = h.project(&(&x + &incr[i]));
            incr[i] = &x + &incr[i] - &z;
            x = z;
        }
        let last = sets.len();
        let z = project_psd(&(&x + &incr[last]));
        incr[last] = &x + &incr[last] - &z;
        x = z;
        if (&x - &prev).norm() <= opts.projection_tol * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    Err(Error::NotConverged(format!(
        "alternating projection after {} sweeps",
        opts.projection_max_iter
    )))
}

/// Maximises `log2(1 + hᴴSh/ν) − γ(Tr S/η + P_c)` over the feasible
/// covariances of link `k` by accelerated projected gradient ascent.
pub fn projected_gradient_inner(
    gamma: f64,
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    opts: &PgOptions,
) -> Result<PgResult> {
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("γ must be positive, got {gamma}")));
    }
    let m = scenario.antennas(k);
    let h: &CVector = scenario.channel(k, k);
    let nu = effective_noise(scenario, it, k);
    let eta = scenario.amp_efficiency();
    let pc = scenario.circuit_power();

    let mut sets = Vec::new();
    for j in (0..scenario.links()).filter(|&j| j != k) {
        let level = it.get(k, j);
        let g = scenario.channel(k, j);
        let gn = linalg::norm_sqr(g);
        if level.is_finite() && gn > 0.0 {
            sets.push(Halfspace {
                a: linalg::outer_self(g),
                b: level,
                norm_sqr: gn * gn,
            });
        }
    }
    if scenario.power_cap(k).is_finite() {
        sets.push(Halfspace {
            a: CMatrix::identity(m, m),
            b: scenario.power_cap(k),
            norm_sqr: m as f64,
        });
    }

    let hh = linalg::outer_self(h);
    let objective = |s: &CMatrix| {
        let sig = linalg::quad_form(s, h).max(0.0);
        let tr: f64 = (0..m).map(|i| s[(i, i)].re).sum();
        (sig / nu).ln_1p() / LN_2 - gamma * (tr / eta + pc)
    };
    let gradient = |s: &CMatrix| {
        let sig = linalg::quad_form(s, h).max(0.0);
        &hh * C64::new(1.0 / ((nu + sig) * LN_2), 0.0) - CMatrix::identity(m, m) * C64::new(gamma / eta, 0.0)
    };

    let hn = linalg::norm_sqr(h);
    // Global bound on the curvature of the rate term.
    let lip_bound = (hn * hn / (nu * nu * LN_2)).max(1e-300);
    let mut lip = lip_bound;
    let mut x = CMatrix::zeros(m, m);
    let mut fx = objective(&x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut iterations = 0;
    let mut last_gain = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let fy = objective(&y);
        let gy = gradient(&y);
        lip = (0.5 * lip).max(1e-300);
        let (xn, fxn) = loop {
            let cand = project(&(&y + &gy * C64::new(1.0 / lip, 0.0)), &sets, opts)?;
            let d = &cand - &y;
            let fc = objective(&cand);
            if fc >= fy + frob(&gy, &d) - 0.5 * lip * d.norm_squared() - 1e-15 * fy.abs().max(1.0) {
                break (cand, fc);
            }
            lip *= 2.0;
        };
        // Gradient mapping at y.
        let mapping = lip * (&xn - &y).norm();
        if mapping <= opts.tol * (1.0 + gy.norm()) {
            if fxn >= fx {
                x = xn;
                fx = fxn;
            }
            break;
        }
        if fxn > fx + opts.tol * (1.0 + fx.abs()) {
            last_gain = iterations;
        } else if iterations - last_gain >= STALL_ITERATIONS {
            break;
        }
        if fxn < fx {
            // Function-value restart.
            t = 1.0;
            y = x.clone();
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &xn + (&xn - &x) * C64::new((t - 1.0) / tn, 0.0);
        x = xn;
        fx = fxn;
        t = tn;
    }
    Ok(PgResult {
        covariance: Covariance::new(hermitian(&x))?,
        objective: fx,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_channels, ScenarioSkeleton};
    use crate::solver::{closed_form_covariance, dinkelbach_bisection, ellipsoid_solve, DualPoint, SolverOptions};

    fn instance(seed: u64, cap: f64) -> Scenario {
        let sk = ScenarioSkeleton::uniform(2, 2, 1.0, cap, 1.0, 0.38, 1.0);
        generate_channels(seed, &sk, 1.0).unwrap()
    }

    #[test]
    fn unconstrained_matches_closed_form() {
        let sc = instance(3, 1e9);
        let it = ItVector::uniform(2, 1e9);
        let gamma = 0.4;
        let pg = projected_gradient_inner(gamma, &sc, &it, 0, &PgOptions::default()).unwrap();
        let s = closed_form_covariance(&DualPoint::zeros(2, 0), gamma, &sc, &it, 0).unwrap();
        assert!((&s.matrix().clone() - pg.covariance.matrix()).norm() < 1e-6 * (1.0 + s.matrix().norm()));
    }

    #[test]
    fn matches_ellipsoid_on_constrained_instance() {
        for seed in 0..4 {
            let sc = instance(seed, 2.0);
            let it = ItVector::uniform(2, 0.05);
            let star = dinkelbach_bisection(&sc, &it, 0, &SolverOptions::default())
                .unwrap()
                .gamma_star;
            let gamma = 0.5 * star;
            let el = ellipsoid_solve(gamma, &sc, &it, 0, 1e-14, 20_000).unwrap();
            let pg = projected_gradient_inner(gamma, &sc, &it, 0, &PgOptions::default()).unwrap();
            assert!(
                (el.f_value - pg.objective).abs() <= 1e-6,
                "seed {seed}: {} vs {}",
                el.f_value,
                pg.objective
            );
        }
    }

    #[test]
    fn zero_channel_is_silent() {
        let sc = instance(1, 2.0).with_channel(0, 0, CVector::zeros(2)).unwrap();
        let it = ItVector::uniform(2, 0.1);
        let pg = projected_gradient_inner(0.3, &sc, &it, 0, &PgOptions::default()).unwrap();
        assert_eq!(pg.covariance.trace(), 0.0);
        assert!((pg.objective + 0.3 * sc.circuit_power()).abs() < 1e-15);
    }
}
