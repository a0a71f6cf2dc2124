use std::path::PathBuf;

use eepareto::linalg::norm_sqr;
use eepareto::model::Scenario;
use eepareto::oracle::{
    brute_force_cloud, default_fd_step, dual_grid_min, finite_diff_e, projected_gradient_inner, PgOptions,
};
use eepareto::pareto::{sensitivity_cross, sensitivity_own, sweep_boundary, ItGrid, SweepOptions};
use eepareto::solver::{dinkelbach_bisection, ellipsoid_solve, ItVector, LinkSolution};
use eepareto::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{it_pairs, provenance};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, out_path, write_file, Table};

const RESIDUAL_TOL: f64 = 1e-8;
const INVARIANT_TOL: f64 = 1e-8;
const DUAL_GRID_TOL: f64 = 1e-4;
const PG_TOL: f64 = 1e-6;
const FD_TOL: f64 = 1e-3;
const CLOUD_TOL: f64 = 1e-3;
const DUAL_GRID_ZOOMS: usize = 12;
/// Below this `Γ / (P‖g‖²)` the interference of a full covariance matrix
/// cannot be formed accurately enough for the projected-gradient check.
const PG_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// A failing instance, enough to rebuild it from the config.
#[derive(Debug, Clone)]
struct Case {
    seed: u64,
    link: Option<usize>,
    gamma: Option<f64>,
    it: ItVector,
    observed: f64,
    detail: String,
}

#[derive(Debug, Clone)]
struct Check {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
    skipped: usize,
    notes: Vec<String>,
    failure: Option<Case>,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
            skipped: 0,
            notes: Vec::new(),
            failure: None,
        }
    }

    fn record(&mut self, gap: f64, case: impl FnOnce() -> Case) {
        self.cases += 1;
        let worse = !(gap <= self.worst);
        if worse {
            self.worst = gap;
        }
        let failing = !(gap <= self.tolerance);
        if failing && (worse || self.failure.is_none()) {
            self.failure = Some(Case {
                observed: gap,
                ..case()
            });
        }
    }

    fn error(&mut self, case: Case) {
        self.cases += 1;
        self.worst = f64::INFINITY;
        self.failure.get_or_insert(case);
    }

    fn skip(&mut self, note: &str) {
        self.skipped += 1;
        if !self.notes.iter().any(|n| n == note) {
            self.notes.push(note.to_string());
        }
    }

    fn status(&self) -> Status {
        if self.failure.is_some() {
            Status::Fail
        } else if self.cases == 0 {
            Status::Skipped
        } else {
            Status::Pass
        }
    }
}

/// IT levels `σ_j² · 10^u`, `u ~ U(−1, 1)`, from the instance seed.
fn draw_levels(scenario: &Scenario, seed: u64) -> ItVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut it = ItVector::zeros(scenario.links());
    for (k, j) in it_pairs(scenario.links()) {
        let level = scenario.noise(j) * 10f64.powf(rng.random_range(-1.0..1.0));
        it.set(k, j, level).expect("positive finite level");
    }
    it
}

struct Instance {
    seed: u64,
    scenario: Scenario,
    it: ItVector,
}

impl Instance {
    fn case(&self, link: Option<usize>, gamma: Option<f64>, detail: String) -> Case {
        Case {
            seed: self.seed,
            link,
            gamma,
            it: self.it.clone(),
            observed: f64::NAN,
            detail,
        }
    }
}

fn check_solutions(inst: &Instance, sols: &[LinkSolution], residual: &mut Check, invariants: &mut Check) {
    let sc = &inst.scenario;
    for s in sols {
        let k = s.link;
        let denom = (s.gamma_star * s.total_power).max(f64::MIN_POSITIVE);
        let r = if s.gamma_star == 0.0 { 0.0 } else { s.f_residual / denom };
        residual.record(r, || {
            inst.case(Some(k), Some(s.gamma_star), format!("|F(γ*)| / (γ*·D) = {r:e}"))
        });

        let ev = s.covariance.eigenvalues();
        let top = ev.first().copied().unwrap_or(0.0).max(0.0);
        let mut gaps = vec![
            ("rank-one", s.covariance.rank_one_residual()),
            (
                "psd",
                ev.iter().map(|&l| (-l).max(0.0)).fold(0.0, f64::max) / top.max(f64::MIN_POSITIVE),
            ),
        ];
        let cap = sc.power_cap(k);
        if cap.is_finite() && cap > 0.0 {
            gaps.push(("power", (s.covariance.trace() - cap).max(0.0) / cap));
        }
        for j in (0..sc.links()).filter(|&j| j != k) {
            let level = inst.it.get(k, j);
            let leak = s.beamformer.weights().dotc(sc.channel(k, j)).norm_sqr();
            let excess = (leak - level).max(0.0);
            gaps.push(("interference", if level > 0.0 { excess / level } else { excess }));
        }
        let (what, gap) = gaps.into_iter().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
        invariants.record(gap, || {
            inst.case(Some(k), Some(s.gamma_star), format!("{what} violation {gap:e}"))
        });
    }
}

fn check_inner(inst: &Instance, sols: &[LinkSolution], cfg: &RunConfig, grid: &mut Check, pg: &mut Check) {
    let sc = &inst.scenario;
    for s in sols.iter().filter(|s| s.gamma_star > 0.0) {
        let k = s.link;
        let gamma = 0.5 * s.gamma_star;
        let el = match ellipsoid_solve(gamma, sc, &inst.it, k, cfg.solver.inner_tol, cfg.solver.max_inner_iter) {
            Ok(el) => el,
            Err(e) => {
                let case = inst.case(Some(k), Some(gamma), format!("ellipsoid: {e}"));
                grid.error(case.clone());
                pg.error(case);
                continue;
            }
        };
        match dual_grid_min(gamma, sc, &inst.it, k, cfg.verify.dual_grid_nodes, DUAL_GRID_ZOOMS) {
            Ok(g) => {
                let rel = (g.value - el.f_value).abs() / el.f_value.abs().max(f64::MIN_POSITIVE);
                grid.record(rel, || {
                    inst.case(
                        Some(k),
                        Some(gamma),
                        format!("grid {:e} vs ellipsoid {:e}", g.value, el.f_value),
                    )
                });
            }
            Err(Error::Unsupported(_)) => grid.skip("more than 3 free multipliers"),
            Err(e) => grid.error(inst.case(Some(k), Some(gamma), format!("dual grid: {e}"))),
        }

        let cap = sc.power_cap(k);
        let resolution = (0..sc.links())
            .filter(|&j| j != k)
            .map(|j| inst.it.get(k, j) / (cap * norm_sqr(sc.channel(k, j))))
            .fold(f64::INFINITY, f64::min);
        if resolution < PG_RESOLUTION {
            pg.skip("IT levels below the numerical resolution of the covariance iteration");
            continue;
        }
        match projected_gradient_inner(gamma, sc, &inst.it, k, &PgOptions::default()) {
            Ok(p) => {
                let gap = (p.objective - el.f_value).abs();
                pg.record(gap, || {
                    inst.case(
                        Some(k),
                        Some(gamma),
                        format!("projected {:e} vs ellipsoid {:e}", p.objective, el.f_value),
                    )
                });
            }
            Err(e) => pg.error(inst.case(Some(k), Some(gamma), format!("projected gradient: {e}"))),
        }
    }
}

/// Sensitivities with `|∂E/∂Γ|·Γ/E` below this count as inactive.
const ACTIVE_ELASTICITY: f64 = 1e-6;

fn check_sensitivities(inst: &Instance, sols: &[LinkSolution], cfg: &RunConfig, fd: &mut Check) {
    let sc = &inst.scenario;
    for s in sols.iter().filter(|s| s.gamma_star > 0.0) {
        let k = s.link;
        for j in (0..sc.links()).filter(|&j| j != k) {
            for (analytic, entry) in [(sensitivity_own(s, j), (k, j)), (sensitivity_cross(s, sc), (j, k))] {
                let level = inst.it.get(entry.0, entry.1);
                if !(analytic.abs() * level >= ACTIVE_ELASTICITY * s.gamma_star) {
                    fd.skip("inactive constraints");
                    continue;
                }
                match finite_diff_e(sc, &inst.it, k, entry, default_fd_step(level), &cfg.solver) {
                    Ok(numeric) => {
                        let rel = (numeric - analytic).abs() / analytic.abs();
                        fd.record(rel, || {
                            inst.case(
                                Some(k),
                                None,
                                format!(
                                    "dE_{}/dΓ_{}_{}: analytic {analytic:e} vs numeric {numeric:e}",
                                    k + 1,
                                    entry.0 + 1,
                                    entry.1 + 1
                                ),
                            )
                        });
                    }
                    Err(e) => fd.error(inst.case(Some(k), None, format!("finite difference: {e}"))),
                }
            }
        }
    }
}

fn check_cloud(inst: &Instance, cfg: &RunConfig, cloud_check: &mut Check) -> Result<(), CliError> {
    let sc = &inst.scenario;
    if sc.links() != 2 {
        cloud_check.skip("unsupported at K>2");
        return Ok(());
    }
    let cloud = brute_force_cloud(sc, cfg.verify.cloud_angles, cfg.verify.cloud_powers)?;
    let grid = ItGrid::log_spaced(sc, cfg.verify.sweep_points, cfg.sweep.low)?;
    let defaults = SweepOptions::default();
    let opts = SweepOptions {
        solver: cfg.solver.clone(),
        refine: defaults.refine.clone().filter(|_| cfg.sweep.refine),
        ..defaults
    };
    let trace = sweep_boundary(sc, &grid, &opts)?;
    let targets: Vec<_> = trace.closure_points().map(|p| p.ee.clone()).collect();
    let report = cloud.dominance(&targets, CLOUD_TOL);
    cloud_check.record(report.worst_excess, || {
        let it = report
            .worst_target
            .and_then(|t| trace.closure_points().nth(t))
            .map(|p| p.it.clone())
            .unwrap_or_else(|| inst.it.clone());
        Case {
            it,
            ..inst.case(
                None,
                None,
                format!("{} cloud points dominate the sweep closure", report.violations),
            )
        }
    });
    Ok(())
}

/// Runs the oracle suite on `verify.instances` seeded instances and writes
/// `verify.csv`. On failure also writes `verify_failure.toml`, a config
/// that replays the worst failing instance.
pub fn verify(cfg: &RunConfig, out: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let mut residual = Check::new("bisection_residual", RESIDUAL_TOL);
    let mut invariants = Check::new("rank_one_feasible", INVARIANT_TOL);
    let mut grid = Check::new("dual_grid", DUAL_GRID_TOL);
    let mut pg = Check::new("projected_gradient", PG_TOL);
    let mut fd = Check::new("finite_difference", FD_TOL);
    let mut cloud = Check::new("cloud_dominance", CLOUD_TOL);

    for n in 0..cfg.verify.instances {
        let seed = cfg.seed.wrapping_add(n as u64);
        let scenario = cfg.scenario_with_seed(seed)?;
        let it = draw_levels(&scenario, seed);
        let inst = Instance { seed, scenario, it };
        let mut sols = Vec::new();
        for k in 0..inst.scenario.links() {
            match dinkelbach_bisection(&inst.scenario, &inst.it, k, &cfg.solver) {
                Ok(s) => sols.push(s),
                Err(e) => residual.error(inst.case(Some(k), None, format!("bisection: {e}"))),
            }
        }
        check_solutions(&inst, &sols, &mut residual, &mut invariants);
        check_inner(&inst, &sols, cfg, &mut grid, &mut pg);
        check_sensitivities(&inst, &sols, cfg, &mut fd);
        if n == 0 {
            check_cloud(&inst, cfg, &mut cloud)?;
        }
    }

    let checks = [residual, invariants, grid, pg, fd, cloud];
    let comment = provenance(
        "verify",
        cfg,
        &[
            ("instances", cfg.verify.instances.to_string()),
            ("dual_grid_nodes", cfg.verify.dual_grid_nodes.to_string()),
            (
                "cloud",
                format!("{}x{}", cfg.verify.cloud_angles, cfg.verify.cloud_powers),
            ),
            ("sweep_points", cfg.verify.sweep_points.to_string()),
        ],
    );
    let header = ["check", "status", "cases", "skipped", "worst", "tolerance", "note"];
    let mut table = Table::new(comment, header.iter().map(|h| h.to_string()).collect());
    for c in &checks {
        table.push(vec![
            c.name.to_string(),
            c.status().as_str().to_string(),
            c.cases.to_string(),
            c.skipped.to_string(),
            num(c.worst),
            num(c.tolerance),
            c.notes.join("; "),
        ]);
    }
    let report = out_path(out, "verify.csv");
    table.write(&report)?;
    let mut paths = vec![report];

    let failed: Vec<&Check> = checks.iter().filter(|c| c.status() == Status::Fail).collect();
    if let Some(first) = failed.first() {
        let case = first.failure.as_ref().expect("failing check has a case");
        let path = out_path(out, "verify_failure.toml");
        write_file(&path, replay_config(cfg, first, case)?.as_bytes())?;
        paths.push(path);
        let names: Vec<&str> = failed.iter().map(|c| c.name).collect();
        return Err(CliError::VerifyFailed(format!(
            "{} failed; worst case written to {}",
            names.join(", "),
            paths[1].display()
        )));
    }
    Ok(paths)
}

/// The input config, pinned to the failing instance, plus a `[case]` table.
fn replay_config(cfg: &RunConfig, check: &Check, case: &Case) -> Result<String, CliError> {
    let seed = i64::try_from(case.seed)
        .map_err(|_| CliError::Config(format!("seed {} does not fit a TOML integer", case.seed)))?;
    let mut doc: toml::Table = toml::from_str(&cfg.source).map_err(|e| CliError::Config(e.to_string()))?;
    let section = |doc: &mut toml::Table, name: &str| -> toml::Table {
        doc.remove(name).and_then(|v| v.as_table().cloned()).unwrap_or_default()
    };
    let mut scenario = section(&mut doc, "scenario");
    scenario.insert("seed".into(), toml::Value::Integer(seed));
    doc.insert("scenario".into(), scenario.into());
    let mut verify = section(&mut doc, "verify");
    verify.insert("instances".into(), toml::Value::Integer(1));
    doc.insert("verify".into(), verify.into());

    let mut t = toml::Table::new();
    t.insert("check".into(), check.name.into());
    t.insert("seed".into(), toml::Value::Integer(seed));
    if let Some(k) = case.link {
        t.insert("link".into(), toml::Value::Integer(k as i64 + 1));
    }
    if let Some(g) = case.gamma {
        t.insert("gamma".into(), g.into());
    }
    let levels: Vec<toml::Value> = it_pairs(case.it.links())
        .iter()
        .map(|&(k, j)| case.it.get(k, j).into())
        .collect();
    t.insert("levels".into(), levels.into());
    t.insert("observed".into(), case.observed.into());
    t.insert("tolerance".into(), check.tolerance.into());
    t.insert("detail".into(), case.detail.clone().into());
    doc.insert("case".into(), t.into());
    toml::to_string(&doc).map_err(|e| CliError::Config(e.to_string()))
}
