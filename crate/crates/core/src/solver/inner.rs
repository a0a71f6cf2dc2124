//! Closed-form maximiser of the Lagrangian and the resulting dual function.
//!
//! For duals `λ` and parameter `γ` the inner problem is
//! `max_{S ⪰ 0} log2(1 + hᴴSh/ν) − Tr(B S)` with
//! `B = Σ_j λ_kj h_kj h_kjᴴ + (λ_kk + γ/η) I`. Its maximiser is rank one,
//! `S = (t/q) B⁻¹h hᴴB⁻¹` with `q = hᴴB⁻¹h` and `t = (1/ln2 − ν/q)⁺`.
//!
//! `B⁻¹h` is evaluated through the Woodbury identity
//! `B⁻¹ = c⁻¹ (I − H (cΛ⁻¹ + HᴴH)⁻¹ Hᴴ)`, `c = λ_kk + γ/η`, which stays
//! accurate when some `λ_kj` are many orders of magnitude above `c`
//! (near-zero IT levels).

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, C64};
use crate::model::{Beamformer, Covariance, Scenario};

use super::types::{DualPoint, ItVector};
use super::NULL_LEVEL_FACTOR;

/// One cross-channel constraint `h_kjᴴ S h_kj ≤ Γ_kj`.
#[derive(Debug, Clone)]
pub(crate) struct CrossConstraint<'a> {
    pub target: usize,
    pub channel: &'a CVector,
    pub level: f64,
    pub gain: f64,
    /// Stand-in for `Γ_kj = 0` when bounding the multiplier.
    pub noise_floor: f64,
}

/// Data of the per-BS problem for link `k` at fixed IT levels.
#[derive(Debug, Clone)]
pub(crate) struct LinkProblem<'a> {
    pub link: usize,
    pub own: &'a CVector,
    pub own_gain: f64,
    pub cross: Vec<CrossConstraint<'a>>,
    /// `h_kjᴴ h_kk` per cross constraint.
    cross_own: Vec<C64>,
    /// `h_kiᴴ h_kj`, row-major over cross constraints.
    gram: Vec<C64>,
    pub noise: f64,
    pub power_cap: f64,
    pub circuit_power: f64,
    pub eta: f64,
}

/// Everything the dual iteration needs from one closed-form evaluation.
#[derive(Debug, Clone, Default)]
pub(crate) struct InnerEval {
    /// `g(λ)`.
    pub value: f64,
    /// Subgradient w.r.t. each cross-constraint multiplier.
    pub grad_it: Vec<f64>,
    /// Subgradient w.r.t. the power multiplier (`P − Tr S`).
    pub grad_power: f64,
    pub trace: f64,
    pub signal: f64,
    pub leaks: Vec<f64>,
    /// `S = scale · x xᴴ` with `x = B⁻¹h`.
    pub scale: f64,
    pub x: Vec<C64>,
}

/// Scratch buffers reused across evaluations.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    active: Vec<usize>,
    a: Vec<C64>,
    rhs: Vec<C64>,
    y: Vec<C64>,
}

/// `Σ_{j≠k} Γ_jk + σ_k²`.
pub fn effective_noise(scenario: &Scenario, it: &ItVector, k: usize) -> f64 {
    it.received_sum(k) + scenario.noise(k)
}

impl<'a> LinkProblem<'a> {
    pub fn new(scenario: &'a Scenario, it: &ItVector, k: usize) -> Result<Self> {
        let links = scenario.links();
        if it.links() != links {
            return Err(Error::Dimension(format!(
                "IT vector has {} links, scenario has {links}",
                it.links()
            )));
        }
        if k >= links {
            return Err(Error::Dimension(format!("link {k} out of range")));
        }
        let own = scenario.channel(k, k);
        let cross: Vec<CrossConstraint<'a>> = (0..links)
            .filter(|&j| j != k)
            .map(|j| {
                let channel = scenario.channel(k, j);
                CrossConstraint {
                    target: j,
                    channel,
                    level: it.get(k, j),
                    gain: linalg::norm_sqr(channel),
                    noise_floor: 1e-12 * scenario.noise(j),
                }
            })
            .collect();
        let n = cross.len();
        let cross_own = cross.iter().map(|c| linalg::inner(c.channel, own)).collect();
        let mut gram = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = linalg::inner(cross[i].channel, cross[j].channel);
            }
        }
        Ok(Self {
            link: k,
            own,
            own_gain: linalg::norm_sqr(own),
            cross,
            cross_own,
            gram,
            noise: effective_noise(scenario, it, k),
            power_cap: scenario.power_cap(k),
            circuit_power: scenario.circuit_power(),
            eta: scenario.amp_efficiency(),
        })
    }

    pub fn n_cross(&self) -> usize {
        self.cross.len()
    }

    /// Evaluates the closed form and dual function at `(λ_it, λ_power, γ)`.
    pub fn evaluate(
        &self,
        lambda_it: &[f64],
        lambda_power: f64,
        gamma: f64,
        ws: &mut Workspace,
        out: &mut InnerEval,
    ) -> Result<()> {
        let n = self.cross.len();
        debug_assert_eq!(lambda_it.len(), n);
        let c = lambda_power + gamma / self.eta;
        if !(c > 0.0) {
            return Err(Error::Precondition(
                "B_k is singular: need γ > 0 or λ_kk > 0".to_string(),
            ));
        }

        ws.active.clear();
        for (i, &l) in lambda_it.iter().enumerate() {
            if l > 0.0 && (c / l).is_finite() && self.cross[i].gain > 0.0 {
                ws.active.push(i);
            }
        }
        let na = ws.active.len();
        ws.a.clear();
        ws.rhs.clear();
        for (r, &i) in ws.active.iter().enumerate() {
            for (s, &j) in ws.active.iter().enumerate() {
                let mut v = self.gram[i * n + j];
                if r == s {
                    v += C64::new(c / lambda_it[i], 0.0);
                }
                ws.a.push(v);
            }
            ws.rhs.push(self.cross_own[i]);
        }
        cholesky_solve(&mut ws.a, &ws.rhs, na, &mut ws.y)?;

        // x = (h − H_a y) / c
        let m = self.own.len();
        out.x.clear();
        out.x.extend(self.own.iter().copied());
        for (r, &i) in ws.active.iter().enumerate() {
            let yi = ws.y[r];
            for (xv, hv) in out.x.iter_mut().zip(self.cross[i].channel.iter()) {
                *xv -= yi * hv;
            }
        }
        let inv_c = 1.0 / c;
        for xv in out.x.iter_mut() {
            *xv *= inv_c;
        }
        let x_norm_sqr: f64 = out.x.iter().map(|z| z.norm_sqr()).sum();

        // hᴴ_kj x for every cross channel.
        out.leaks.clear();
        let mut correction = 0.0;
        let mut proj = Vec::with_capacity(n);
        for i in 0..n {
            let p = if let Some(r) = ws.active.iter().position(|&a| a == i) {
                correction += ws.y[r].norm_sqr() / lambda_it[i];
                ws.y[r] / lambda_it[i]
            } else {
                let ch = self.cross[i].channel;
                (0..m).map(|t| ch[t].conj() * out.x[t]).sum()
            };
            proj.push(p);
        }
        let q = c * x_norm_sqr + correction;

        let t = if q > 0.0 {
            (1.0 / LN_2 - self.noise / q).max(0.0)
        } else {
            0.0
        };
        let scale = if t > 0.0 { t / q } else { 0.0 };
        out.scale = scale;
        out.trace = scale * x_norm_sqr;
        out.signal = t * q;
        for p in &proj {
            out.leaks.push(scale * p.norm_sqr());
        }

        let log_term = if t > 0.0 { (q / (self.noise * LN_2)).log2() } else { 0.0 };
        let mut value = log_term - t - gamma * self.circuit_power;
        out.grad_it.clear();
        for (i, cc) in self.cross.iter().enumerate() {
            if lambda_it[i] > 0.0 {
                value += lambda_it[i] * cc.level;
            }
            out.grad_it.push(cc.level - out.leaks[i]);
        }
        if lambda_power > 0.0 {
            value += lambda_power * self.power_cap;
        }
        out.grad_power = self.power_cap - out.trace;
        out.value = value;
        Ok(())
    }

    /// `log2(1 + hᴴSh/ν) − γ(Tr S/η + P_c)` for a given covariance.
    pub fn primal_value(&self, s: &Covariance, gamma: f64) -> f64 {
        let signal = s.quad_form(self.own).max(0.0);
        (signal / self.noise).ln_1p() / LN_2 - gamma * (s.trace() / self.eta + self.circuit_power)
    }

    /// Unconstrained inner optimum (all duals zero) without the `−γP_c` term.
    /// This is the Slater constant used to bound the optimal duals.
    pub fn unconstrained_gain(&self, gamma: f64) -> f64 {
        let q = self.own_gain * self.eta / gamma;
        if q <= self.noise * LN_2 {
            return 0.0;
        }
        (q / (self.noise * LN_2)).log2() - (1.0 / LN_2 - self.noise / q)
    }

    /// Turns an evaluation into a feasible rank-one covariance.
    ///
    /// Components of `w` along a violated cross channel are shrunk until the
    /// constraint holds; any remaining violation (coupled constraints, power)
    /// is removed by a uniform scaling.
    pub fn recover_primal(&self, eval: &InnerEval) -> Beamformer {
        let m = self.own.len();
        if eval.scale <= 0.0 {
            return Beamformer::new(CVector::zeros(m));
        }
        let s = eval.scale.sqrt();
        let mut w = CVector::from_iterator(m, eval.x.iter().map(|z| z * s));
        // Rounding of w moves |gᴴw| by up to about 2mε‖g‖‖w‖, i.e. the leak
        // by about `2√(level·floor)`; shrinking aims below the level by twice that.
        let eps = 2.0 * m as f64 * f64::EPSILON;
        for _ in 0..8 {
            let mut changed = false;
            let trace = linalg::norm_sqr(&w);
            for cc in &self.cross {
                if cc.gain == 0.0 {
                    continue;
                }
                let p = linalg::inner_accurate(cc.channel, &w);
                let leak = p.norm_sqr();
                if leak > cc.level {
                    let floor = eps * eps * cc.gain * trace;
                    let margin = if cc.level > 0.0 { (floor / cc.level).sqrt() } else { 1.0 };
                    let target = cc.level * (1.0 - 4.0 * margin).max(0.0);
                    let r = (target / leak).sqrt();
                    let coef = p * ((1.0 - r) / cc.gain);
                    w.axpy(-coef, cc.channel, C64::new(1.0, 0.0));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for _ in 0..8 {
            let trace = linalg::norm_sqr(&w);
            let mut factor: f64 = 1.0;
            if trace > self.power_cap {
                factor = factor.min(self.power_cap / trace);
            }
            for cc in &self.cross {
                let leak = linalg::inner_accurate(cc.channel, &w).norm_sqr();
                let floor = eps * eps * cc.gain * trace;
                // Levels near the floor cannot be met more closely than a null.
                let allowed = if cc.level > NULL_LEVEL_FACTOR * floor {
                    cc.level
                } else {
                    cc.level + floor
                };
                if leak > allowed {
                    let margin = eps * (cc.gain * trace / leak).sqrt();
                    factor = factor.min(cc.level / leak * (1.0 - margin.min(0.5)));
                }
            }
            if factor >= 1.0 {
                break;
            }
            w.scale_mut(factor.sqrt());
        }
        Beamformer::new(w)
    }

    /// Maps a full-length dual vector (indexed by link) to the cross-constraint layout.
    pub fn split_duals(&self, duals: &DualPoint) -> (Vec<f64>, f64) {
        let it = self.cross.iter().map(|c| duals.values()[c.target]).collect();
        (it, duals.power())
    }

    pub fn join_duals(&self, links: usize, lambda_it: &[f64], lambda_power: f64) -> DualPoint {
        let mut v = vec![0.0; links];
        for (c, &l) in self.cross.iter().zip(lambda_it) {
            v[c.target] = l;
        }
        v[self.link] = lambda_power;
        DualPoint::new(self.link, v).expect("duals are nonnegative")
    }
}

/// Solves `A y = b` for a small Hermitian positive definite `A` (row-major, overwritten).
fn cholesky_solve(a: &mut [C64], b: &[C64], n: usize, y: &mut Vec<C64>) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::Internal(format!(
                "Woodbury system not positive definite (pivot {d:e})"
            )));
        }
        let d = d.sqrt();
        a[j * n + j] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = v / d;
        }
    }
    y.clear();
    y.extend_from_slice(b);
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v -= a[i * n + k] * y[k];
        }
        y[i] = v / a[i * n + i].re;
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v -= a[k * n + i].conj() * y[k];
        }
        y[i] = v / a[i * n + i].re;
    }
    Ok(())
}

fn check_duals(duals: &DualPoint, scenario: &Scenario, k: usize) -> Result<()> {
    if duals.values().len() != scenario.links() || duals.link() != k {
        return Err(Error::Dimension(format!(
            "dual point for link {} with {} entries, expected link {k} with {}",
            duals.link(),
            duals.values().len(),
            scenario.links()
        )));
    }
    Ok(())
}

/// Closed-form maximiser of the Lagrangian at the given duals.
pub fn closed_form_covariance(
    duals: &DualPoint,
    gamma: f64,
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
) -> Result<Covariance> {
    check_duals(duals, scenario, k)?;
    let problem = LinkProblem::new(scenario, it, k)?;
    let (lambda_it, lambda_power) = problem.split_duals(duals);
    let mut ws = Workspace::default();
    let mut eval = InnerEval::default();
    problem.evaluate(&lambda_it, lambda_power, gamma, &mut ws, &mut eval)?;
    let m = problem.own.len();
    let s = eval.scale.sqrt();
    let w = CVector::from_iterator(m, eval.x.iter().map(|z| z * s));
    Ok(Covariance::rank_one(&w))
}

/// Dual function `g(λ_k)`: the Lagrangian at its closed-form maximiser,
/// including the constant terms.
pub fn parametric_value(duals: &DualPoint, gamma: f64, scenario: &Scenario, it: &ItVector, k: usize) -> Result<f64> {
    check_duals(duals, scenario, k)?;
    let problem = LinkProblem::new(scenario, it, k)?;
    let (lambda_it, lambda_power) = problem.split_duals(duals);
    if lambda_power > 0.0 && problem.power_cap.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if lambda_it
        .iter()
        .zip(&problem.cross)
        .any(|(&l, c)| l > 0.0 && c.level.is_infinite())
    {
        return Ok(f64::INFINITY);
    }
    let mut ws = Workspace::default();
    let mut eval = InnerEval::default();
    problem.evaluate(&lambda_it, lambda_power, gamma, &mut ws, &mut eval)?;
    Ok(eval.value)
}
