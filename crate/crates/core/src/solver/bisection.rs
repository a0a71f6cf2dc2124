//! Parametric bisection on `F(γ) = max_S N(S) − γ D(S)`: the optimal energy
//! efficiency of the per-BS fractional program is the root of `F`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::model::{Beamformer, Scenario};

use super::ellipsoid::solve_inner;
use super::inner::LinkProblem;
use super::types::{DualPoint, InnerSolution, ItVector, LinkSolution, SolverOptions};

const MAX_DOUBLINGS: usize = 1100;
const HINT_WIDTH: f64 = 1e-6;

/// Sign of `F(γ)` as certified by the inner solver.
enum Sign {
    Positive,
    NonPositive,
    Unresolved,
}

fn certified_sign(sol: &InnerSolution) -> Sign {
    if sol.f_lower() > 0.0 {
        Sign::Positive
    } else if sol.f_value <= 0.0 {
        Sign::NonPositive
    } else {
        Sign::Unresolved
    }
}

fn zero_solution(problem: &LinkProblem<'_>, links: usize) -> LinkSolution {
    let bf = Beamformer::new(CVector::zeros(problem.own.len()));
    LinkSolution {
        link: problem.link,
        gamma_star: 0.0,
        covariance: bf.covariance(),
        beamformer: bf,
        duals: DualPoint::zeros(links, problem.link),
        f_residual: 0.0,
        total_power: problem.circuit_power,
        effective_noise: problem.noise,
        limit_only: false,
        bisection_iterations: 0,
    }
}

/// Solves the per-BS energy-efficiency problem of link `k` at IT levels `it`.
pub fn dinkelbach_bisection(
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    opts: &SolverOptions,
) -> Result<LinkSolution> {
    let problem = LinkProblem::new(scenario, it, k)?;
    solve_link(&problem, scenario.links(), opts)
}

/// Same as [`dinkelbach_bisection`], but brackets the root around `hint`
/// (e.g. the optimum at nearby IT levels) before falling back to the
/// default bracket.
pub fn dinkelbach_bisection_near(
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    opts: &SolverOptions,
    hint: f64,
) -> Result<LinkSolution> {
    let problem = LinkProblem::new(scenario, it, k)?;
    solve_link_near(&problem, scenario.links(), opts, Some(hint))
}

pub(crate) fn solve_link(problem: &LinkProblem<'_>, links: usize, opts: &SolverOptions) -> Result<LinkSolution> {
    solve_link_near(problem, links, opts, None)
}

fn solve_link_near(
    problem: &LinkProblem<'_>,
    links: usize,
    opts: &SolverOptions,
    hint: Option<f64>,
) -> Result<LinkSolution> {
    if problem.power_cap == 0.0 || problem.own_gain == 0.0 {
        return Ok(zero_solution(problem, links));
    }
    if problem.circuit_power == 0.0 {
        return Ok(vanishing_power_solution(problem, links));
    }
    let inner = |gamma: f64| solve_inner(problem, links, gamma, opts.inner_tol, opts.max_inner_iter);

    let mut lo = opts.gamma_lo;
    let mut f_lo = inner(lo)?;
    if !matches!(certified_sign(&f_lo), Sign::Positive) {
        return Ok(zero_solution(problem, links));
    }

    let mut bracket = None;
    if let Some(h) = hint.filter(|h| h.is_finite() && *h > lo) {
        bracket = bracket_near(h, lo, &inner)?;
    }
    let (mut lo, mut f_lo, mut hi, mut f_hi) = match bracket {
        Some(b) => b,
        None => {
            let mut hi = 1.0_f64.max(2.0 * lo);
            let mut f_hi;
            let mut doublings = 0;
            loop {
                f_hi = inner(hi)?;
                match certified_sign(&f_hi) {
                    Sign::NonPositive => break,
                    Sign::Positive => {
                        lo = hi;
                        f_lo = f_hi;
                    }
                    Sign::Unresolved => {}
                }
                doublings += 1;
                if doublings > MAX_DOUBLINGS || !hi.is_finite() {
                    return Err(Error::Internal(format!(
                        "could not bracket the root of F for link {} (E_k unbounded?)",
                        problem.link
                    )));
                }
                hi *= 2.0;
            }
            (lo, f_lo, hi, f_hi)
        }
    };

    let mut iterations = 0;
    while hi - lo > opts.eps * hi && iterations < opts.max_bisection_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = inner(mid)?;
        iterations += 1;
        // F is strictly decreasing; anything else means the inner solves are too
        // loose. The upper bounds carry the same rounding as the gaps.
        let slack = f_lo.gap.max(f_mid.gap).max(f_hi.gap);
        if f_mid.f_lower() > f_lo.f_value + slack || f_mid.f_value + slack < f_hi.f_lower() {
            return Err(Error::Internal(format!(
                "F not monotone on link {}: F({lo:e}) ∈ [{:e}, {:e}], F({mid:e}) ∈ [{:e}, {:e}], F({hi:e}) ∈ [{:e}, {:e}]",
                problem.link,
                f_lo.f_lower(),
                f_lo.f_value,
                f_mid.f_lower(),
                f_mid.f_value,
                f_hi.f_lower(),
                f_hi.f_value
            )));
        }
        match certified_sign(&f_mid) {
            Sign::Positive => {
                lo = mid;
                f_lo = f_mid;
            }
            Sign::NonPositive => {
                hi = mid;
                f_hi = f_mid;
            }
            // |F| is below the inner solver's resolution: the root is located.
            Sign::Unresolved => {
                lo = mid;
                hi = mid;
            }
        }
    }

    let gamma_star = 0.5 * (lo + hi);
    let last = inner(gamma_star)?;
    let total_power = last.covariance.trace() / problem.eta + problem.circuit_power;
    Ok(LinkSolution {
        link: problem.link,
        gamma_star,
        covariance: last.covariance,
        beamformer: last.beamformer,
        duals: last.duals,
        f_residual: last.f_value.abs(),
        total_power,
        effective_noise: problem.noise,
        limit_only: false,
        bisection_iterations: iterations,
    })
}

/// `P_c = 0`: the ratio is largest as the power vanishes, where every
/// positive IT level is slack and only zero levels force nulling, so
/// `E_k = η‖Πh_kk‖² / (ν ln2)` with `Π` projecting out those cross channels.
fn vanishing_power_solution(problem: &LinkProblem<'_>, links: usize) -> LinkSolution {
    let nulled: Vec<&CVector> = problem
        .cross
        .iter()
        .filter(|c| c.level == 0.0 && c.gain > 0.0)
        .map(|c| c.channel)
        .collect();
    let basis = linalg::orthonormal_basis(&nulled, problem.own.len(), 1e-12);
    let gain = linalg::norm_sqr(&linalg::project_out(problem.own, &basis));
    let mut sol = zero_solution(problem, links);
    if gain > 1e-24 * problem.own_gain {
        sol.gamma_star = problem.eta * gain / (problem.noise * LN_2);
        sol.limit_only = true;
    }
    sol
}

type Bracket = (f64, InnerSolution, f64, InnerSolution);

/// Certified bracket `[h(1 − w), h(1 + w)]`, widening `w` by ×100 up to 1.
/// `None` when the hint is too far off.
fn bracket_near(hint: f64, floor: f64, inner: &impl Fn(f64) -> Result<InnerSolution>) -> Result<Option<Bracket>> {
    let mut w = HINT_WIDTH;
    let mut lower = None;
    let mut upper = None;
    while w < 1.0 {
        if lower.is_none() {
            let a = hint * (1.0 - w);
            if a <= floor {
                return Ok(None);
            }
            let f = inner(a)?;
            if matches!(certified_sign(&f), Sign::Positive) {
                lower = Some((a, f));
            }
        }
        if upper.is_none() {
            let b = hint * (1.0 + w);
            let f = inner(b)?;
            if matches!(certified_sign(&f), Sign::NonPositive) {
                upper = Some((b, f));
            }
        }
        if let (Some((a, fa)), Some((b, fb))) = (&lower, &upper) {
            return Ok(Some((*a, fa.clone(), *b, fb.clone())));
        }
        w *= 100.0;
    }
    Ok(None)
}
