use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{dominates_relative, EEPoint, Scenario};
use crate::solver::{
    dinkelbach_bisection, dinkelbach_bisection_near, interference_floor, snap_level, ItVector, LinkSolution,
    SolverOptions,
};

use super::distributed::{run_distributed, DistributedConfig, Initializer};

/// Cartesian grid of IT vectors: one axis of levels per ordered pair,
/// axes in lexicographic `(k, j)` order, last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ItGrid {
    links: usize,
    axes: Vec<Vec<f64>>,
}

impl ItGrid {
    pub fn new(links: usize, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != links * (links - 1) {
            return Err(Error::Dimension(format!(
                "{} grid axes for {links} links, expected {}",
                axes.len(),
                links * (links - 1)
            )));
        }
        if let Some(v) = axes.iter().flatten().find(|v| !(**v >= 0.0)) {
            return Err(Error::Config(format!("IT grid levels must be >= 0, got {v}")));
        }
        if axes.iter().any(Vec::is_empty) {
            return Err(Error::Config("empty IT grid axis".to_string()));
        }
        Ok(Self { links, axes })
    }

    /// Single point.
    pub fn single(it: &ItVector) -> Self {
        Self {
            links: it.links(),
            axes: it.entries().map(|(_, v)| vec![v]).collect(),
        }
    }

    /// Per pair `(k, j)`: zero followed by `n − 1` log-spaced levels from
    /// `lo_rel · σ_j²` up to the largest interference BS `k` can cause at MS `j`.
    pub fn log_spaced(scenario: &Scenario, n: usize, lo_rel: f64) -> Result<Self> {
        let links = scenario.links();
        let mut axes = Vec::new();
        for k in 0..links {
            for j in (0..links).filter(|&j| j != k) {
                let lo = lo_rel * scenario.noise(j);
                let cap = scenario.power_cap(k);
                let gain = crate::linalg::norm_sqr(scenario.channel(k, j));
                let hi = if cap.is_finite() {
                    cap * gain
                } else {
                    1e3 * scenario.noise(j)
                };
                axes.push(log_axis(lo, hi.max(lo), n));
            }
        }
        Self::new(links, axes)
    }

    pub fn links(&self) -> usize {
        self.links
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut index: usize) -> ItVector {
        let mut levels = vec![0.0; self.axes.len()];
        for (slot, axis) in levels.iter_mut().zip(&self.axes).rev() {
            *slot = axis[index % axis.len()];
            index /= axis.len();
        }
        let pairs: Vec<_> = ItVector::zeros(self.links).entries().map(|(p, _)| p).collect();
        let entries: Vec<_> = pairs.into_iter().zip(levels).collect();
        ItVector::from_entries(self.links, &entries).expect("levels validated")
    }
}

/// `[0, lo, …, hi]` with `n − 1` geometric steps after zero.
fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![0.0, hi],
        _ => {
            let m = n - 1;
            let ratio = (hi / lo).ln() / (m - 1) as f64;
            std::iter::once(0.0)
                .chain((0..m).map(|i| if i + 1 == m { hi } else { lo * (ratio * i as f64).exp() }))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    /// Replace every slack IT level by the interference actually caused and
    /// re-solve until nothing changes.
    pub tighten: bool,
    pub max_tighten_rounds: usize,
    /// Closure dominance tolerance, relative per component.
    pub closure_tol: f64,
    /// Closure points within this relative distance of an earlier one are dropped.
    pub dedup_rel: f64,
    /// Pairwise IT updates applied to each grid closure point until its
    /// direction matrices are singular; the closure is then taken over the
    /// refined points. Grid staircase points are not Pareto optimal, and a
    /// finite grid misses the flat ends of the boundary. The initializer and
    /// solver options of the config are ignored. Skipped when `P_c = 0`.
    pub refine: Option<DistributedConfig>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            tighten: true,
            max_tighten_rounds: 200,
            closure_tol: 1e-9,
            dedup_rel: 1e-6,
            refine: Some(DistributedConfig {
                tau: 1e-4,
                max_rounds: 150,
                ..DistributedConfig::default()
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub grid_index: usize,
    /// Levels requested by the grid.
    pub grid_it: ItVector,
    /// Levels the reported solutions were computed at (after tightening).
    pub it: ItVector,
    pub ee: EEPoint,
    pub solutions: Vec<LinkSolution>,
    pub tighten_rounds: usize,
    /// Index of the grid point this point was refined from.
    pub refined_from: Option<usize>,
    pub refine_rounds: usize,
}

#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    /// Grid points in grid order, followed by refined points.
    pub points: Vec<BoundaryPoint>,
    /// Indices into `points` of the non-dominated subset.
    pub closure: Vec<usize>,
}

impl BoundaryTrace {
    pub fn closure_points(&self) -> impl Iterator<Item = &BoundaryPoint> + '_ {
        self.closure.iter().map(move |&i| &self.points[i])
    }
}

fn solve_point(scenario: &Scenario, it: &ItVector, opts: &SolverOptions) -> Result<Vec<LinkSolution>> {
    (0..scenario.links())
        .map(|k| dinkelbach_bisection(scenario, it, k, opts))
        .collect()
}

/// Lowers each IT level to the interference actually caused and re-solves
/// until a fixed point. Levels within rounding of a null become exact nulls.
/// Every link's EE is nondecreasing along the way, up to rounding.
pub fn tighten(
    scenario: &Scenario,
    it: &ItVector,
    solutions: Vec<LinkSolution>,
    opts: &SolverOptions,
    max_rounds: usize,
) -> Result<(ItVector, Vec<LinkSolution>, usize)> {
    let links = scenario.links();
    let mut it = it.clone();
    let mut sols = solutions;
    for round in 0..max_rounds {
        let mut next = it.clone();
        let mut dirty = vec![false; links];
        // A vanishing-power optimum leaves every positive level slack, and
        // lowering one to zero would force nulling.
        for k in (0..links).filter(|&k| !sols[k].limit_only) {
            for j in (0..links).filter(|&j| j != k) {
                let level = it.get(k, j);
                let leak = sols[k].beamformer.gain(scenario.channel(k, j));
                let floor = interference_floor(scenario, k, j, sols[k].beamformer.power());
                // Primal recovery leaves up to `4√(floor/level)` of rounding slack.
                let slack = level * (8.0 * (floor / level).sqrt()).max(1e-9);
                let target = snap_level(scenario, k, j, leak.min(level));
                if target < level && (target == 0.0 || level - target > slack) {
                    next.set(k, j, target)?;
                    dirty[k] = true;
                    dirty[j] = true;
                }
            }
        }
        if !dirty.iter().any(|&d| d) {
            return Ok((it, sols, round));
        }
        it = next;
        for k in (0..links).filter(|&k| dirty[k]) {
            sols[k] = dinkelbach_bisection_near(scenario, &it, k, opts, sols[k].gamma_star)?;
        }
    }
    Ok((it, sols, max_rounds))
}

/// Indices of the points not dominated (relative tolerance `tol`) by any
/// other, with near-duplicates removed.
pub fn closure_indices(points: &[EEPoint], tol: f64, dedup_rel: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        let p = points[i].values();
        if points
            .iter()
            .enumerate()
            .any(|(j, q)| j != i && dominates_relative(q.values(), p, tol))
        {
            continue;
        }
        let duplicate = kept.iter().any(|&k| {
            points[k]
                .values()
                .iter()
                .zip(p)
                .all(|(a, b)| (a - b).abs() <= dedup_rel * a.abs().max(b.abs()))
        });
        if !duplicate {
            kept.push(i);
        }
    }
    kept
}

/// Solves every link at every grid point and filters the non-dominated subset.
pub fn sweep_boundary(scenario: &Scenario, grid: &ItGrid, opts: &SweepOptions) -> Result<BoundaryTrace> {
    if grid.links() != scenario.links() {
        return Err(Error::Dimension(format!(
            "grid for {} links, scenario has {}",
            grid.links(),
            scenario.links()
        )));
    }
    let points = (0..grid.len())
        .into_par_iter()
        .map(|index| {
            let grid_it = grid.point(index);
            let run = || -> Result<BoundaryPoint> {
                let sols = solve_point(scenario, &grid_it, &opts.solver)?;
                let (it, sols, rounds) = if opts.tighten {
                    tighten(scenario, &grid_it, sols, &opts.solver, opts.max_tighten_rounds)?
                } else {
                    (grid_it.clone(), sols, 0)
                };
                Ok(BoundaryPoint {
                    grid_index: index,
                    grid_it: grid_it.clone(),
                    it,
                    ee: EEPoint(sols.iter().map(|s| s.gamma_star).collect()),
                    solutions: sols,
                    tighten_rounds: rounds,
                    refined_from: None,
                    refine_rounds: 0,
                })
            };
            run().map_err(|e| Error::GridPoint {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ees: Vec<EEPoint> = points.iter().map(|p| p.ee.clone()).collect();
    let closure = if scenario.circuit_power() == 0.0 {
        corner_index(&ees).into_iter().collect()
    } else {
        closure_indices(&ees, opts.closure_tol, opts.dedup_rel)
    };
    let mut trace = BoundaryTrace { points, closure };
    if let Some(cfg) = &opts.refine {
        if scenario.circuit_power() > 0.0 {
            refine(scenario, &mut trace, cfg, opts)?;
        }
    }
    Ok(trace)
}

/// With `P_c = 0` the region is a box whose corner is approached but not
/// reached; the point with the largest `Σ ln E_k` stands in for it.
fn corner_index(points: &[EEPoint]) -> Option<usize> {
    let score = |p: &EEPoint| p.values().iter().map(|v| v.ln()).sum::<f64>();
    (0..points.len()).fold(None, |best, i| match best {
        Some(b) if score(&points[b]) >= score(&points[i]) => Some(b),
        _ => Some(i),
    })
}

fn refine(scenario: &Scenario, trace: &mut BoundaryTrace, cfg: &DistributedConfig, opts: &SweepOptions) -> Result<()> {
    let refined = trace
        .closure
        .par_iter()
        .map(|&origin| {
            let start = &trace.points[origin];
            let run = || -> Result<BoundaryPoint> {
                let cfg = DistributedConfig {
                    init: Initializer::Explicit(start.it.clone()),
                    solver: opts.solver.clone(),
                    ..cfg.clone()
                };
                let tr = run_distributed(scenario, &cfg)?;
                let (it, sols, rounds) = if opts.tighten {
                    tighten(
                        scenario,
                        &tr.last().it,
                        tr.solutions.clone(),
                        &opts.solver,
                        opts.max_tighten_rounds,
                    )?
                } else {
                    (tr.last().it.clone(), tr.solutions.clone(), 0)
                };
                Ok(BoundaryPoint {
                    grid_index: start.grid_index,
                    grid_it: start.grid_it.clone(),
                    it,
                    ee: EEPoint(sols.iter().map(|s| s.gamma_star).collect()),
                    solutions: sols,
                    tighten_rounds: rounds,
                    refined_from: Some(origin),
                    refine_rounds: tr.rows.len() - 1,
                })
            };
            run().map_err(|e| Error::GridPoint {
                index: start.grid_index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let offset = trace.points.len();
    let ees: Vec<EEPoint> = refined.iter().map(|p| p.ee.clone()).collect();
    trace.closure = closure_indices(&ees, opts.closure_tol, opts.dedup_rel)
        .into_iter()
        .map(|i| offset + i)
        .collect();
    trace.points.extend(refined);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_is_mixed_radix() {
        let g = ItGrid::new(2, vec![vec![0.0, 1.0, 2.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(g.len(), 6);
        let p = g.point(3);
        assert_eq!((p.get(0, 1), p.get(1, 0)), (1.0, 6.0));
    }

    #[test]
    fn log_axis_endpoints() {
        let a = log_axis(1e-3, 10.0, 6);
        assert_eq!(a.len(), 6);
        assert_eq!(a[0], 0.0);
        assert!((a[1] - 1e-3).abs() < 1e-18);
        assert_eq!(a[5], 10.0);
        assert!((a[3] / a[2] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn closure_drops_dominated_and_duplicates() {
        let pts = vec![
            EEPoint(vec![1.0, 1.0]),
            EEPoint(vec![2.0, 0.5]),
            EEPoint(vec![0.5, 0.5]),
            EEPoint(vec![1.0, 1.0]),
        ];
        assert_eq!(closure_indices(&pts, 0.0, 1e-9), vec![0, 1]);
    }
}
