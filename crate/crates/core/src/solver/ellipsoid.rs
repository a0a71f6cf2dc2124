//! Central/deep-cut ellipsoid method for the dual of the fixed-γ program.
//!
//! Duals are optimised in normalised coordinates `μ_i = λ_i / U_i`, where
//! `U_i` is a Slater bound on the optimal multiplier: with `S = 0` strictly
//! feasible, `Σ λ*_i s_i ≤ g(0) + γP_c`, so every optimal `μ_i` lies in
//! `[0, 1]`. The search starts from the ball circumscribing that unit box.

use crate::error::{Error, Result};
use crate::model::Scenario;

use super::inner::{InnerEval, LinkProblem, Workspace};
use super::types::{DualPoint, InnerSolution, ItVector};

/// Center and shape matrix of the current ellipsoid
/// `{y : (y − c)ᵀ P⁻¹ (y − c) ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidState {
    center: Vec<f64>,
    shape: Vec<f64>,
    iterations: usize,
}

impl EllipsoidState {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let n = center.len();
        let mut shape = vec![0.0; n * n];
        for i in 0..n {
            shape[i * n + i] = radius * radius;
        }
        Self {
            center,
            shape,
            iterations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn shape_times(&self, a: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.shape[i * n + j] * a[j]).sum())
            .collect()
    }

    /// `sqrt(aᵀ P a)`: half the width of the ellipsoid along `a`.
    pub fn half_width(&self, a: &[f64]) -> f64 {
        let pa = self.shape_times(a);
        a.iter().zip(&pa).map(|(x, y)| x * y).sum::<f64>().max(0.0).sqrt()
    }

    /// Keeps the part `{y : aᵀ(y − c) ≤ −depth · sqrt(aᵀPa)}`; `depth = 0` is a
    /// central cut. Returns `false` when the ellipsoid has degenerated.
    pub fn cut(&mut self, a: &[f64], depth: f64) -> bool {
        let n = self.dim();
        let pa = self.shape_times(a);
        let apa: f64 = a.iter().zip(&pa).map(|(x, y)| x * y).sum();
        if !(apa > 0.0) || !apa.is_finite() {
            return false;
        }
        let width = apa.sqrt();
        let alpha = depth.clamp(0.0, 0.999);
        self.iterations += 1;
        if n == 1 {
            // The 1-D ellipsoid is an interval; the cut halves it (or more for deep cuts).
            let r = self.shape[0].sqrt();
            let s = a[0].signum();
            self.center[0] -= s * r * (1.0 + alpha) / 2.0;
            let r_new = r * (1.0 - alpha) / 2.0;
            self.shape[0] = r_new * r_new;
            return r_new > 0.0;
        }
        let nf = n as f64;
        let b: Vec<f64> = pa.iter().map(|v| v / width).collect();
        let step = (1.0 + nf * alpha) / (nf + 1.0);
        for (c, bi) in self.center.iter_mut().zip(&b) {
            *c -= step * bi;
        }
        let sigma = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
        let delta = nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0);
        for i in 0..n {
            for j in 0..n {
                self.shape[i * n + j] = delta * (self.shape[i * n + j] - sigma * b[i] * b[j]);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.shape[i * n + j] + self.shape[j * n + i]);
                self.shape[i * n + j] = avg;
                self.shape[j * n + i] = avg;
            }
        }
        self.is_positive_definite()
    }

    /// Cholesky test of the shape matrix.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.dim();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.shape[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut v = self.shape[i * n + j];
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / d;
            }
        }
        true
    }
}

/// Result of minimising a convex function over the unit box.
#[derive(Debug, Clone)]
pub(crate) struct BoxMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises a convex `f` over `[0, 1]^n` given a value/subgradient oracle.
/// Stops once the certified gap `f_best − lower` is at most `tol`.
pub(crate) fn minimize_unit_box<F>(n: usize, mut oracle: F, tol: f64, max_iter: usize) -> Result<BoxMinimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut state = EllipsoidState::ball(vec![0.5; n], 0.5 * (n as f64).sqrt() * 1.001);
    let mut best_x = state.center().to_vec();
    let (mut best_f, _) = oracle(&best_x)?;
    let mut lower = f64::NEG_INFINITY;
    let mut e = vec![0.0; n];
    let mut converged = false;

    while state.iterations() < max_iter {
        let x = state.center().to_vec();
        // Most violated box constraint, if any.
        let mut worst: Option<(usize, f64, f64)> = None;
        for (i, &xi) in x.iter().enumerate() {
            let (viol, sign) = if xi < 0.0 {
                (-xi, -1.0)
            } else if xi > 1.0 {
                (xi - 1.0, 1.0)
            } else {
                continue;
            };
            if worst.is_none_or(|(_, v, _)| viol > v) {
                worst = Some((i, viol, sign));
            }
        }
        if let Some((i, viol, sign)) = worst {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[i] = sign;
            let w = state.half_width(&e);
            if !state.cut(&e, viol / w) {
                break;
            }
            continue;
        }

        let (fx, g) = oracle(&x)?;
        if fx < best_f {
            best_f = fx;
            best_x.clone_from(&x);
        }
        let w = state.half_width(&g);
        lower = lower.max(fx - w);
        if best_f - lower <= tol || w == 0.0 {
            converged = true;
            break;
        }
        if !state.cut(&g, (fx - best_f) / w) {
            // Degenerate shape: no further progress is possible in f64.
            converged = best_f - lower <= tol;
            break;
        }
    }
    Ok(BoxMinimum {
        x: best_x,
        value: best_f,
        lower,
        iterations: state.iterations(),
        converged,
    })
}

/// Which dual coordinates are free and how they are scaled.
#[derive(Debug, Clone)]
struct DualLayout {
    /// Indices into the cross constraints that are optimised.
    it_free: Vec<usize>,
    it_bound: Vec<f64>,
    power_bound: Option<f64>,
}

impl DualLayout {
    fn dim(&self) -> usize {
        self.it_free.len() + usize::from(self.power_bound.is_some())
    }

    fn to_lambda(&self, mu: &[f64], n_cross: usize) -> (Vec<f64>, f64) {
        let mut it = vec![0.0; n_cross];
        for (r, &i) in self.it_free.iter().enumerate() {
            it[i] = mu[r].max(0.0) * self.it_bound[r];
        }
        let power = match self.power_bound {
            Some(u) => mu[self.it_free.len()].max(0.0) * u,
            None => 0.0,
        };
        (it, power)
    }
}

pub(crate) fn solve_inner(
    problem: &LinkProblem<'_>,
    links: usize,
    gamma: f64,
    inner_tol: f64,
    max_iter: usize,
) -> Result<InnerSolution> {
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("γ must be positive, got {gamma}")));
    }
    let mut ws = Workspace::default();
    let mut eval = InnerEval::default();
    let n_cross = problem.n_cross();
    let zero_it = vec![0.0; n_cross];

    let g0 = problem.unconstrained_gain(gamma);
    let zero_solution = |iterations: usize| {
        let m = problem.own.len();
        let bf = crate::model::Beamformer::new(crate::linalg::CVector::zeros(m));
        InnerSolution {
            duals: DualPoint::zeros(links, problem.link),
            f_value: -gamma * problem.circuit_power,
            gap: 0.0,
            covariance: bf.covariance(),
            beamformer: bf,
            iterations,
        }
    };
    if g0 <= 0.0 || problem.power_cap == 0.0 {
        return Ok(zero_solution(0));
    }

    let mut layout = DualLayout {
        it_free: Vec::new(),
        it_bound: Vec::new(),
        power_bound: None,
    };
    for (i, c) in problem.cross.iter().enumerate() {
        if c.level.is_finite() && c.gain > 0.0 {
            layout.it_free.push(i);
            layout.it_bound.push(g0 / c.level.max(c.noise_floor));
        }
    }
    if problem.power_cap.is_finite() {
        layout.power_bound = Some(g0 / problem.power_cap);
    }
    let n = layout.dim();
    let scale = 1.0 + g0 + gamma * problem.circuit_power;
    let tol = inner_tol * scale;
    // Rounding in g(λ) itself; a sign below this is not resolvable.
    let noise = 8.0 * f64::EPSILON * scale;

    let (lambda_it, lambda_power, iterations, gap) = if n == 0 {
        (zero_it, 0.0, 0, noise)
    } else {
        let oracle = |mu: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (it, p) = layout.to_lambda(mu, n_cross);
            problem.evaluate(&it, p, gamma, &mut ws, &mut eval)?;
            let mut g: Vec<f64> = layout
                .it_free
                .iter()
                .zip(&layout.it_bound)
                .map(|(&i, &u)| eval.grad_it[i] * u)
                .collect();
            if let Some(u) = layout.power_bound {
                g.push(eval.grad_power * u);
            }
            Ok((eval.value, g))
        };
        let res = minimize_unit_box(n, oracle, tol, max_iter)?;
        let (mut it, mut p) = layout.to_lambda(&res.x, n_cross);
        let mut value = res.value;

        // Complementary slackness: zero multipliers whose constraint is slack.
        problem.evaluate(&it, p, gamma, &mut ws, &mut eval)?;
        let mut snapped_it = it.clone();
        let mut snapped_p = p;
        let mut any = false;
        for &i in &layout.it_free {
            if snapped_it[i] > 0.0 && eval.grad_it[i] > 0.0 {
                snapped_it[i] = 0.0;
                any = true;
            }
        }
        if snapped_p > 0.0 && eval.grad_power > 0.0 {
            snapped_p = 0.0;
            any = true;
        }
        if any {
            problem.evaluate(&snapped_it, snapped_p, gamma, &mut ws, &mut eval)?;
            if eval.value <= value + tol {
                value = eval.value.min(value);
                it = snapped_it;
                p = snapped_p;
            }
        }
        if let Some((pit, pp, pv)) = polish(problem, &layout, &it, p, gamma, &mut ws, &mut eval)? {
            if pv <= value + tol {
                it = pit;
                p = pp;
                value = pv.min(value);
            }
        }
        let gap = (value - res.lower).max(0.0) + noise;
        if !res.converged && gap > tol + noise {
            problem.evaluate(&it, p, gamma, &mut ws, &mut eval)?;
            let best = build_solution(problem, links, &it, p, &eval, value, gap, res.iterations);
            return Err(Error::Convergence {
                iterations: res.iterations,
                gap,
                best: Box::new(best),
            });
        }
        (it, p, res.iterations, gap)
    };

    problem.evaluate(&lambda_it, lambda_power, gamma, &mut ws, &mut eval)?;
    let value = eval.value;
    Ok(build_solution(
        problem,
        links,
        &lambda_it,
        lambda_power,
        &eval,
        value,
        gap,
        iterations,
    ))
}

/// Newton iteration in `ln λ` on the active multipliers that drives the
/// active constraints to equality (`∇g = 0` on that face). The ellipsoid
/// only pins `g(λ)` down, which leaves `λ` loose where `g` is flat.
fn polish(
    problem: &LinkProblem<'_>,
    layout: &DualLayout,
    it: &[f64],
    p: f64,
    gamma: f64,
    ws: &mut Workspace,
    eval: &mut InnerEval,
) -> Result<Option<(Vec<f64>, f64, f64)>> {
    // Active coordinates: (cross index or None for power, level).
    let mut active: Vec<(Option<usize>, f64)> = layout
        .it_free
        .iter()
        .filter(|&&i| it[i] > 0.0 && problem.cross[i].level > 0.0)
        .map(|&i| (Some(i), problem.cross[i].level))
        .collect();
    let mut p = p;
    if p > 0.0 {
        problem.evaluate(it, p, gamma, ws, eval)?;
        if eval.grad_power <= 1e-6 * problem.power_cap {
            active.push((None, problem.power_cap));
        } else {
            p = 0.0;
        }
    }
    let n = active.len();
    if n == 0 {
        return Ok(None);
    }
    let mut z: Vec<f64> = active
        .iter()
        .map(|&(c, _)| match c {
            Some(i) => it[i].ln(),
            None => p.ln(),
        })
        .collect();
    let lambdas = |z: &[f64]| {
        let mut lit = it.to_vec();
        let mut lp = p;
        for (&(c, _), &zi) in active.iter().zip(z) {
            match c {
                Some(i) => lit[i] = zi.exp(),
                None => lp = zi.exp(),
            }
        }
        (lit, lp)
    };
    let residual = |z: &[f64], ws: &mut Workspace, eval: &mut InnerEval| -> Result<Vec<f64>> {
        let (lit, lp) = lambdas(z);
        problem.evaluate(&lit, lp, gamma, ws, eval)?;
        Ok(active
            .iter()
            .map(|&(c, level)| match c {
                Some(i) => eval.grad_it[i] / level,
                None => eval.grad_power / level,
            })
            .collect())
    };
    let norm = |r: &[f64]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let mut r = residual(&z, ws, eval)?;
    for _ in 0..40 {
        if norm(&r) <= 1e-13 {
            break;
        }
        let h = 1e-6;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut zp = z.clone();
            zp[j] += h;
            let rp = residual(&zp, ws, eval)?;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let Some(step) = jac.lu().solve(&nalgebra::DVector::from_column_slice(&r)) else {
            break;
        };
        let mut t = 1.0;
        let longest = norm(step.as_slice());
        if longest > 2.0 {
            t = 2.0 / longest;
        }
        let mut improved = false;
        for _ in 0..30 {
            let zn: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a - t * b).collect();
            let rn = residual(&zn, ws, eval)?;
            if norm(&rn) < norm(&r) {
                z = zn;
                r = rn;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let (lit, lp) = lambdas(&z);
    problem.evaluate(&lit, lp, gamma, ws, eval)?;
    Ok(Some((lit, lp, eval.value)))
}

#[allow(clippy::too_many_arguments)]
fn build_solution(
    problem: &LinkProblem<'_>,
    links: usize,
    lambda_it: &[f64],
    lambda_power: f64,
    eval: &InnerEval,
    value: f64,
    gap: f64,
    iterations: usize,
) -> InnerSolution {
    let beamformer = problem.recover_primal(eval);
    InnerSolution {
        duals: problem.join_duals(links, lambda_it, lambda_power),
        f_value: value,
        gap,
        covariance: beamformer.covariance(),
        beamformer,
        iterations,
    }
}

/// Minimises the dual function of the fixed-γ program for link `k`.
pub fn ellipsoid_solve(
    gamma: f64,
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<InnerSolution> {
    let problem = LinkProblem::new(scenario, it, k)?;
    solve_inner(&problem, scenario.links(), gamma, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_cut_halves_volume_in_one_dimension() {
        let mut e = EllipsoidState::ball(vec![0.5], 0.5);
        assert!(e.cut(&[1.0], 0.0));
        assert!((e.center()[0] - 0.25).abs() < 1e-15);
        assert!((e.shape()[0] - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn cut_keeps_shape_positive_definite() {
        let mut e = EllipsoidState::ball(vec![0.0, 0.0, 0.0], 1.0);
        for i in 0..200 {
            let a = [((i * 7) % 5) as f64 - 2.0, 1.0, ((i * 3) % 4) as f64 - 1.5];
            if !e.cut(&a, 0.0) {
                break;
            }
        }
        assert!(e.is_positive_definite());
    }

    #[test]
    fn minimises_quadratic_in_box() {
        let target = [0.3, 0.0];
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let d0 = x[0] - target[0];
            let d1 = x[1] + 0.2; // minimiser outside the box at -0.2
            Ok((d0 * d0 + 4.0 * d1 * d1, vec![2.0 * d0, 8.0 * d1]))
        };
        let r = minimize_unit_box(2, f, 1e-12, 5000).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 0.3).abs() < 1e-5);
        assert!(r.x[1].abs() < 1e-5);
        assert!((r.value - 0.16).abs() < 1e-11);
    }
}
