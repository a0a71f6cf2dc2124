use crate::error::{Error, Result};
use crate::model::{EEPoint, Scenario};
use crate::solver::{dinkelbach_bisection, dinkelbach_bisection_near, ItVector, LinkSolution, SolverOptions};

use super::sensitivity::{direction_vector, DirectionMatrix};
use super::special::zf_ee_init;

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    ZeroForcing,
    Explicit(ItVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedConfig {
    /// Initial step, relative to the current IT levels of the pair.
    pub step: f64,
    /// Levels below `floor · σ_j²` are scaled as if they were that floor.
    pub floor: f64,
    pub alpha: f64,
    /// Stop when every pair has `|ad − bc| / (|ad| + |bc|) ≤ tau`.
    pub tau: f64,
    pub max_rounds: usize,
    pub init: Initializer,
    pub solver: SolverOptions,
    /// Halvings tried per pair and round before giving up on that pair.
    pub max_backtracks: usize,
    /// Relative decrease of an EE value still counted as no change.
    pub accept_tol: f64,
}

impl Default for DistributedConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            floor: 1e-20,
            alpha: 1.0,
            tau: 1e-6,
            max_rounds: 500,
            init: Initializer::ZeroForcing,
            solver: SolverOptions::default(),
            max_backtracks: 60,
            accept_tol: 1e-10,
        }
    }
}

impl DistributedConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "step must be finite and >= 0, got {}",
                self.step
            )));
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::Config(format!(
                "floor must be finite and positive, got {}",
                self.floor
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRow {
    pub round: usize,
    pub it: ItVector,
    pub ee: EEPoint,
    /// `|det D_ij|` per pair, pairs in lexicographic order.
    pub det: Vec<f64>,
    pub normalized_det: Vec<f64>,
    /// Step in effect per pair at the end of the round.
    pub step: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub pairs: Vec<(usize, usize)>,
    pub rows: Vec<TrajectoryRow>,
    pub converged: bool,
    pub solutions: Vec<LinkSolution>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryRow {
        self.rows.last().expect("trajectory has an initial row")
    }
}

fn matrices(scenario: &Scenario, pairs: &[(usize, usize)], sols: &[LinkSolution]) -> Vec<DirectionMatrix> {
    pairs
        .iter()
        .map(|&(i, j)| DirectionMatrix::from_solutions(scenario, &sols[i], &sols[j]))
        .collect()
}

fn row(round: usize, it: &ItVector, sols: &[LinkSolution], mats: &[DirectionMatrix], step: &[f64]) -> TrajectoryRow {
    TrajectoryRow {
        round,
        it: it.clone(),
        ee: EEPoint(sols.iter().map(|s| s.gamma_star).collect()),
        det: mats.iter().map(|m| m.det().abs()).collect(),
        normalized_det: mats.iter().map(DirectionMatrix::normalized_det).collect(),
        step: step.to_vec(),
    }
}

const MAX_STEP: f64 = 4.0;
/// Relative steps below this no longer move the IT levels meaningfully.
const MIN_STEP: f64 = 1e-15;

/// Pairwise IT updates until every direction matrix is numerically singular.
///
/// Each pair steps along the direction vector of `D_ij·diag(s)`, where `s`
/// holds the pair's current levels (floored), so `Γ ← Γ + δ·s⊙d̂`. This is
/// still a direction with `D_ij·d > 0` but stays well scaled when the two
/// levels differ by many orders of magnitude. A step is kept only if neither
/// link loses EE, otherwise it is halved and retried. Steps double until
/// `det D_ij` first changes sign and are halved at every sign change. The run
/// ends unconverged once every open pair's step has shrunk below `1e-15`.
pub fn run_distributed(scenario: &Scenario, config: &DistributedConfig) -> Result<Trajectory> {
    config.validate()?;
    let links = scenario.links();
    let mut it = match &config.init {
        Initializer::ZeroForcing => zf_ee_init(scenario)?.0,
        Initializer::Explicit(it) => {
            if it.links() != links {
                return Err(Error::Dimension(format!(
                    "initial IT vector has {} links, scenario has {links}",
                    it.links()
                )));
            }
            it.clone()
        }
    };
    let pairs: Vec<(usize, usize)> = (0..links).flat_map(|i| ((i + 1)..links).map(move |j| (i, j))).collect();
    let mut sols = (0..links)
        .map(|k| dinkelbach_bisection(scenario, &it, k, &config.solver))
        .collect::<Result<Vec<_>>>()?;
    let mut steps = vec![config.step; pairs.len()];
    let mut bracketed = vec![false; pairs.len()];
    let mut mats = matrices(scenario, &pairs, &sols);
    let done = |mats: &[DirectionMatrix]| mats.iter().all(|m| m.normalized_det() <= config.tau);

    let mut rows = vec![row(0, &it, &sols, &mats, &steps)];
    let mut converged = done(&mats);
    let mut round = 0;
    while !converged && round < config.max_rounds {
        round += 1;
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let m = DirectionMatrix::from_solutions(scenario, &sols[i], &sols[j]);
            if m.normalized_det() <= config.tau || steps[p] == 0.0 {
                continue;
            }
            let scale = [
                it.get(i, j).max(config.floor * scenario.noise(j)),
                it.get(j, i).max(config.floor * scenario.noise(i)),
            ];
            let scaled = DirectionMatrix {
                a: m.a * scale[0],
                b: m.b * scale[1],
                c: m.c * scale[0],
                d: m.d * scale[1],
            };
            let d = direction_vector(&scaled, config.alpha);
            let norm = d[0].hypot(d[1]);
            if norm == 0.0 {
                continue;
            }
            let dir = [scale[0] * d[0] / norm, scale[1] * d[1] / norm];
            for _ in 0..=config.max_backtracks {
                let delta = steps[p];
                let mut cand = it.clone();
                cand.set(i, j, (it.get(i, j) + delta * dir[0]).max(0.0))?;
                cand.set(j, i, (it.get(j, i) + delta * dir[1]).max(0.0))?;
                if cand == it {
                    break;
                }
                let si = dinkelbach_bisection_near(scenario, &cand, i, &config.solver, sols[i].gamma_star)?;
                let sj = dinkelbach_bisection_near(scenario, &cand, j, &config.solver, sols[j].gamma_star)?;
                let keeps = |new: &LinkSolution, old: &LinkSolution| {
                    new.gamma_star >= old.gamma_star * (1.0 - config.accept_tol)
                };
                if keeps(&si, &sols[i]) && keeps(&sj, &sols[j]) {
                    let next = DirectionMatrix::from_solutions(scenario, &si, &sj);
                    it = cand;
                    sols[i] = si;
                    sols[j] = sj;
                    if next.det().signum() != m.det().signum() {
                        bracketed[p] = true;
                        steps[p] = 0.5 * delta;
                    } else if !bracketed[p] {
                        steps[p] = (2.0 * delta).min(MAX_STEP);
                    }
                    break;
                }
                steps[p] = 0.5 * delta;
            }
        }
        mats = matrices(scenario, &pairs, &sols);
        rows.push(row(round, &it, &sols, &mats, &steps));
        converged = done(&mats);
        let stalled = mats
            .iter()
            .zip(&steps)
            .all(|(m, &s)| m.normalized_det() <= config.tau || s < MIN_STEP);
        if stalled && config.step > 0.0 {
            break;
        }
    }
    Ok(Trajectory {
        pairs,
        rows,
        converged,
        solutions: sols,
    })
}
