use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::model::{Beamformer, EEPoint, Scenario};

/// One candidate strategy pair and its exact EE tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudSample {
    /// ZF-to-MRT mixing parameter per link.
    pub t: [f64; 2],
    /// Transmit power per link (Watts).
    pub p: [f64; 2],
    pub ee: EEPoint,
}

/// Brute-force EE cloud of a two-link scenario, evaluated lazily.
///
/// Link `k` transmits along `u(t) ∝ (1 − t)·u_ZF + t·u_MRT` with power `p`;
/// samples are all combinations of both links' `(t, p)` grids.
#[derive(Debug, Clone)]
pub struct OracleCloud {
    pub angles: Vec<f64>,
    pub powers: [Vec<f64>; 2],
    directions: [Vec<CVector>; 2],
    /// `|h_kkᴴ u|²` per link and angle.
    own_gain: [Vec<f64>; 2],
    /// `|h_kjᴴ u|²` per link and angle.
    cross_gain: [Vec<f64>; 2],
    noise: [f64; 2],
    eta: f64,
    circuit_power: f64,
}

/// Relative shortfall still counted as "at least as good" by [`OracleCloud::dominance`].
pub const DOMINANCE_SLACK: f64 = 1e-9;

/// Worst case of a dominance check of targets against the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// Largest relative gain `max_k (c_k − t_k)/t_k` of a cloud point `c`
    /// over a target `t` it dominates (`c ≥ t` up to [`DOMINANCE_SLACK`]).
    /// Zero if no such pair exists.
    pub worst_excess: f64,
    pub worst_target: Option<usize>,
    pub worst_sample: Option<CloudSample>,
    pub violations: usize,
}

fn ee(signal: f64, interference: f64, noise: f64, power: f64, eta: f64, pc: f64) -> f64 {
    let d = power / eta + pc;
    if d == 0.0 {
        return 0.0;
    }
    (signal / (interference + noise)).ln_1p() / LN_2 / d
}

impl OracleCloud {
    pub fn len(&self) -> usize {
        let per = |k: usize| self.angles.len() * self.powers[k].len();
        per(0) * per(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn per_link(&self, k: usize) -> usize {
        self.angles.len() * self.powers[k].len()
    }

    /// EE tuple for parameter indices `(angle, power)` of both links.
    fn eval(&self, a: [usize; 2], p: [usize; 2]) -> [f64; 2] {
        let p0 = self.powers[0][p[0]];
        let p1 = self.powers[1][p[1]];
        [
            ee(
                p0 * self.own_gain[0][a[0]],
                p1 * self.cross_gain[1][a[1]],
                self.noise[0],
                p0,
                self.eta,
                self.circuit_power,
            ),
            ee(
                p1 * self.own_gain[1][a[1]],
                p0 * self.cross_gain[0][a[0]],
                self.noise[1],
                p1,
                self.eta,
                self.circuit_power,
            ),
        ]
    }

    fn split(&self, k: usize, idx: usize) -> (usize, usize) {
        let np = self.powers[k].len();
        (idx / np, idx % np)
    }

    pub fn sample(&self, index: usize) -> CloudSample {
        let n1 = self.per_link(1);
        let (a0, p0) = self.split(0, index / n1);
        let (a1, p1) = self.split(1, index % n1);
        CloudSample {
            t: [self.angles[a0], self.angles[a1]],
            p: [self.powers[0][p0], self.powers[1][p1]],
            ee: EEPoint(self.eval([a0, a1], [p0, p1]).to_vec()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = CloudSample> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    /// Beamformers of a sample index.
    pub fn beamformers(&self, index: usize) -> [Beamformer; 2] {
        let n1 = self.per_link(1);
        let (a0, p0) = self.split(0, index / n1);
        let (a1, p1) = self.split(1, index % n1);
        [
            Beamformer::from_direction(&self.directions[0][a0], self.powers[0][p0]),
            Beamformer::from_direction(&self.directions[1][a1], self.powers[1][p1]),
        ]
    }

    /// Checks whether any cloud point dominates a target with a relative
    /// gain above `rel_tol` in some coordinate.
    pub fn dominance(&self, targets: &[EEPoint], rel_tol: f64) -> DominanceReport {
        let t: Vec<[f64; 2]> = targets.iter().map(|p| [p.0[0], p.0[1]]).collect();
        let lo: Vec<[f64; 2]> = t
            .iter()
            .map(|v| [v[0] - DOMINANCE_SLACK * v[0].abs(), v[1] - DOMINANCE_SLACK * v[1].abs()])
            .collect();
        let n1 = self.per_link(1);
        // (excess, target, sample index, violations) per outer index.
        let partial: Vec<(f64, usize, usize, usize)> = (0..self.per_link(0))
            .into_par_iter()
            .map(|i0| {
                let (a0, p0) = self.split(0, i0);
                let mut best = (0.0_f64, usize::MAX, usize::MAX, 0usize);
                for i1 in 0..n1 {
                    let (a1, p1) = self.split(1, i1);
                    let c = self.eval([a0, a1], [p0, p1]);
                    for (ti, (tv, l)) in t.iter().zip(&lo).enumerate() {
                        if c[0] < l[0] || c[1] < l[1] {
                            continue;
                        }
                        let rel = |k: usize| {
                            if tv[k] == 0.0 {
                                if c[k] > 0.0 {
                                    f64::INFINITY
                                } else {
                                    0.0
                                }
                            } else {
                                (c[k] - tv[k]) / tv[k].abs()
                            }
                        };
                        let excess = rel(0).max(rel(1));
                        if excess > rel_tol {
                            best.3 += 1;
                        }
                        if excess > best.0 {
                            best = (excess, ti, i0 * n1 + i1, best.3);
                        }
                    }
                }
                best
            })
            .collect();
        let mut report = DominanceReport {
            worst_excess: 0.0,
            worst_target: None,
            worst_sample: None,
            violations: 0,
        };
        let mut worst_index = None;
        for (excess, ti, si, v) in partial {
            report.violations += v;
            if excess > report.worst_excess {
                report.worst_excess = excess;
                report.worst_target = Some(ti);
                worst_index = Some(si);
            }
        }
        report.worst_sample = worst_index.map(|i| self.sample(i));
        report
    }
}

/// Grid `[lo, hi]` with `n` log-spaced points; `n = 1` gives `[hi]`.
fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (r * i as f64).exp() })
        .collect()
}

/// Enumerates ZF/MRT mixtures and log-spaced powers for both links of a
/// two-link scenario.
pub fn brute_force_cloud(scenario: &Scenario, n_angle: usize, n_power: usize) -> Result<OracleCloud> {
    if scenario.links() != 2 {
        return Err(Error::Unsupported(format!(
            "brute-force cloud needs exactly 2 links, scenario has {}",
            scenario.links()
        )));
    }
    if n_angle == 0 || n_power == 0 {
        return Err(Error::Config("cloud resolutions must be >= 1".to_string()));
    }
    let angles: Vec<f64> = if n_angle == 1 {
        vec![1.0]
    } else {
        (0..n_angle).map(|i| i as f64 / (n_angle - 1) as f64).collect()
    };
    let mut directions: [Vec<CVector>; 2] = [Vec::new(), Vec::new()];
    let mut own_gain: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut cross_gain: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut powers: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        let j = 1 - k;
        if scenario.antennas(k) < 2 {
            return Err(Error::Precondition(format!("BS {k} needs at least 2 antennas")));
        }
        let cap = scenario.power_cap(k);
        if !cap.is_finite() {
            return Err(Error::Precondition(format!("BS {k} needs a finite power cap")));
        }
        let h = scenario.channel(k, k);
        let g = scenario.channel(k, j);
        let hn = linalg::norm_sqr(h).sqrt();
        if hn == 0.0 {
            return Err(Error::Precondition(format!("own channel of link {k} is zero")));
        }
        let mrt = h.unscale(hn);
        let basis = linalg::orthonormal_basis(&[g], scenario.antennas(k), 1e-12);
        let proj = linalg::project_out(h, &basis);
        let pn = linalg::norm_sqr(&proj).sqrt();
        let zf = if pn > 1e-12 * hn { proj.unscale(pn) } else { mrt.clone() };
        for &t in &angles {
            let mut u = zf.scale(1.0 - t) + mrt.scale(t);
            let n = linalg::norm_sqr(&u).sqrt();
            u.unscale_mut(n);
            own_gain[k].push(linalg::inner(h, &u).norm_sqr());
            cross_gain[k].push(linalg::inner(g, &u).norm_sqr());
            directions[k].push(u);
        }
        powers[k] = log_grid(cap * 1e-6, cap, n_power);
    }
    Ok(OracleCloud {
        angles,
        powers,
        directions,
        own_gain,
        cross_gain,
        noise: [scenario.noise(0), scenario.noise(1)],
        eta: scenario.amp_efficiency(),
        circuit_power: scenario.circuit_power(),
    })
}
