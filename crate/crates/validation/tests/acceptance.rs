use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use eepareto::model::{EEPoint, Scenario};
use eepareto::oracle::{
    brute_force_cloud, default_fd_step, dual_grid_min, finite_diff_e, projected_gradient_inner, PgOptions,
};
use eepareto::pareto::{
    pc_zero_point, run_distributed, sensitivity_cross, sensitivity_own, sweep_boundary, BoundaryTrace,
    DistributedConfig, ItGrid, SweepOptions,
};
use eepareto::solver::{dinkelbach_bisection, ellipsoid_solve, solve_all, ItVector, LinkSolution, SolverOptions};
use eepareto_cli::Command;
use eepareto_validation::{cellular, draw_levels, max_rel_diff, unit, Outcome, Report, AMP_EFFICIENCY, CELL_NOISE};

const INVARIANT_TOL: f64 = 1e-8;

/// Worst rank-one, PSD and feasibility violation over every returned solution.
#[derive(Debug, Default)]
struct Invariants {
    solutions: usize,
    worst: f64,
    worst_what: String,
}

impl Invariants {
    fn record(&mut self, what: String, gap: f64) {
        if !(gap <= self.worst) {
            self.worst = gap;
            self.worst_what = what;
        }
    }

    fn check(&mut self, label: &str, scenario: &Scenario, it: &ItVector, sol: &LinkSolution) {
        self.solutions += 1;
        let k = sol.link;
        let ev = sol.covariance.eigenvalues();
        let top = ev.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        self.record(
            format!("{label} link {k}: rank-one"),
            sol.covariance.rank_one_residual(),
        );
        let neg = ev.iter().map(|&l| (-l).max(0.0)).fold(0.0, f64::max);
        self.record(format!("{label} link {k}: psd"), neg / top);
        let cap = scenario.power_cap(k);
        self.record(
            format!("{label} link {k}: power"),
            (sol.covariance.trace() - cap).max(0.0) / cap,
        );
        for j in (0..scenario.links()).filter(|&j| j != k) {
            let g = scenario.channel(k, j);
            let level = it.get(k, j);
            let scale = if level > 0.0 { level } else { cap * g.norm_squared() };
            let excess = (sol.beamformer.gain(g) - level).max(0.0);
            self.record(
                format!("{label} link {k}: interference at {j}"),
                excess / scale.max(f64::MIN_POSITIVE),
            );
        }
    }
}

fn analytic_limit(scenario: &Scenario, k: usize) -> f64 {
    let g: f64 = scenario.channel(k, k).iter().map(|z| z.re * z.re + z.im * z.im).sum();
    AMP_EFFICIENCY * g / (CELL_NOISE * LN_2)
}

fn pc_zero(inv: &mut Invariants) -> Outcome {
    let opts = SolverOptions::default();
    let mut formula_worst = 0.0_f64;
    let mut limit_worst = 0.0_f64;
    let mut ratio_min = f64::INFINITY;
    for seed in 0..20 {
        let sc = cellular(seed, 2, 3, 0.0);
        let Ok((point, _)) = pc_zero_point(&sc) else {
            return Outcome::fail(format!("seed {seed}: pc_zero_point rejected the scenario"));
        };
        let expected: Vec<f64> = (0..2).map(|k| analytic_limit(&sc, k)).collect();
        formula_worst = formula_worst.max(max_rel_diff(point.values(), &expected));

        let near = sc.with_circuit_power(1e-6).expect("valid circuit power");
        let it = ItVector::uniform(2, 1e-20);
        for k in 0..2 {
            match dinkelbach_bisection(&near, &it, k, &opts) {
                Ok(sol) => {
                    inv.check(&format!("pc-zero seed {seed}"), &near, &it, &sol);
                    limit_worst = limit_worst.max((sol.gamma_star - expected[k]).abs() / expected[k]);
                    ratio_min = ratio_min.min(sol.gamma_star / expected[k]);
                }
                Err(e) => return Outcome::fail(format!("seed {seed} link {k}: {e}")),
            }
        }
    }
    Outcome::new(
        formula_worst <= 4.0 * f64::EPSILON && limit_worst <= 1e-2,
        format!(
            "formula rel diff {formula_worst:.1e} (tol {:.1e}); P_c = 1e-6 W vs limit rel diff {limit_worst:.3e} (tol 1e-2), smallest E/limit {ratio_min:.2e}",
            4.0 * f64::EPSILON
        ),
    )
}

/// Sweep closures of the cellular profile with two antennas, kept for the
/// fixed-point check.
fn cloud_dominance(inv: &mut Invariants, traces: &mut Vec<(Scenario, BoundaryTrace)>) -> Outcome {
    let mut worst = 0.0_f64;
    let mut violations = 0;
    let mut closure_points = 0;
    for seed in 0..10 {
        let sc = cellular(seed, 2, 2, 294.5);
        let trace =
            match ItGrid::log_spaced(&sc, 20, 1e-6).and_then(|g| sweep_boundary(&sc, &g, &SweepOptions::default())) {
                Ok(t) => t,
                Err(e) => return Outcome::fail(format!("seed {seed}: sweep: {e}")),
            };
        let cloud = match brute_force_cloud(&sc, 64, 64) {
            Ok(c) => c,
            Err(e) => return Outcome::fail(format!("seed {seed}: cloud: {e}")),
        };
        let targets: Vec<EEPoint> = trace.closure_points().map(|p| p.ee.clone()).collect();
        closure_points += targets.len();
        let report = cloud.dominance(&targets, 1e-3);
        worst = worst.max(report.worst_excess);
        violations += report.violations;
        for p in trace.closure_points() {
            for s in &p.solutions {
                inv.check(&format!("sweep seed {seed} grid {}", p.grid_index), &sc, &p.it, s);
            }
        }
        traces.push((sc, trace));
    }
    Outcome::new(
        worst <= 1e-3,
        format!("{closure_points} closure points, {violations} dominated beyond tolerance, worst excess {worst:.2e} (tol 1e-3)"),
    )
}

fn solver_cross_checks(inv: &mut Invariants) -> Outcome {
    let opts = SolverOptions::default();
    let (mut grid_worst, mut pg_worst) = (0.0_f64, 0.0_f64);
    let mut not_decreasing = Vec::new();
    let mut cases = 0;
    for seed in 0..50 {
        let sc = unit(seed, 2, 2);
        let it = draw_levels(&sc, seed, -1.0, 1.0);
        for k in 0..2 {
            let sol = match dinkelbach_bisection(&sc, &it, k, &opts) {
                Ok(s) => s,
                Err(e) => return Outcome::fail(format!("seed {seed} link {k}: bisection: {e}")),
            };
            inv.check(&format!("cross-check seed {seed}"), &sc, &it, &sol);
            let gamma = 0.5 * sol.gamma_star;
            let el = match ellipsoid_solve(gamma, &sc, &it, k, opts.inner_tol, opts.max_inner_iter) {
                Ok(e) => e,
                Err(e) => return Outcome::fail(format!("seed {seed} link {k}: ellipsoid: {e}")),
            };
            match dual_grid_min(gamma, &sc, &it, k, 41, 12) {
                Ok(g) => grid_worst = grid_worst.max((g.value - el.f_value).abs() / el.f_value.abs()),
                Err(e) => return Outcome::fail(format!("seed {seed} link {k}: dual grid: {e}")),
            }
            match projected_gradient_inner(gamma, &sc, &it, k, &PgOptions::default()) {
                Ok(p) => pg_worst = pg_worst.max((p.objective - el.f_value).abs()),
                Err(e) => return Outcome::fail(format!("seed {seed} link {k}: projected gradient: {e}")),
            }
            let ladder: Result<Vec<f64>, _> = (0..10)
                .map(|i| sol.gamma_star * 2f64.powf((i as f64 - 5.0) / 2.0))
                .map(|g| ellipsoid_solve(g, &sc, &it, k, opts.inner_tol, opts.max_inner_iter).map(|e| e.f_value))
                .collect();
            match ladder {
                Ok(f) if f.windows(2).all(|w| w[1] < w[0]) => {}
                Ok(_) => not_decreasing.push(format!("{seed}/{k}")),
                Err(e) => return Outcome::fail(format!("seed {seed} link {k}: ladder: {e}")),
            }
            cases += 1;
        }
    }
    Outcome::new(
        grid_worst <= 1e-4 && pg_worst <= 1e-6 && not_decreasing.is_empty(),
        format!(
            "{cases} cases; dual grid rel diff {grid_worst:.1e} (tol 1e-4); projected gradient abs diff {pg_worst:.1e} (tol 1e-6); F not strictly decreasing in {} cases {:?}",
            not_decreasing.len(),
            not_decreasing
        ),
    )
}

/// Sensitivities whose elasticity `|∂E/∂Γ|·Γ/E` is below this are inactive.
const ACTIVE_ELASTICITY: f64 = 1e-6;

fn sensitivities() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst = 0.0_f64;
    let mut worst_case = String::new();
    let mut instances = 0;
    let mut derivatives = 0;
    for seed in 1000..1400 {
        if instances == 30 {
            break;
        }
        let links = if seed % 2 == 0 { 2 } else { 3 };
        let sc = unit(seed, links, 3);
        let it = draw_levels(&sc, seed, -2.0, 0.0);
        let sols = match solve_all(&sc, &it, &opts) {
            Ok(s) => s,
            Err(e) => return Outcome::fail(format!("seed {seed}: {e}")),
        };
        let mut active = Vec::new();
        for s in &sols {
            let k = s.link;
            for j in (0..links).filter(|&j| j != k) {
                for (analytic, entry) in [(sensitivity_own(s, j), (k, j)), (sensitivity_cross(s, &sc), (j, k))] {
                    if analytic.abs() * it.get(entry.0, entry.1) >= ACTIVE_ELASTICITY * s.gamma_star {
                        active.push((k, entry, analytic));
                    }
                }
            }
        }
        if active.is_empty() {
            continue;
        }
        instances += 1;
        for (k, entry, analytic) in active {
            let step = default_fd_step(it.get(entry.0, entry.1));
            let numeric = match finite_diff_e(&sc, &it, k, entry, step, &opts) {
                Ok(v) => v,
                Err(e) => return Outcome::fail(format!("seed {seed}: finite difference: {e}")),
            };
            derivatives += 1;
            let rel = (numeric - analytic).abs() / analytic.abs();
            if !(rel <= worst) {
                worst = rel;
                worst_case = format!("seed {seed} dE_{k}/dΓ_{}{}", entry.0, entry.1);
            }
        }
    }
    Outcome::new(
        instances == 30 && worst <= 1e-3,
        format!("{instances} instances with active constraints, {derivatives} derivatives, worst rel diff {worst:.1e} at {worst_case} (tol 1e-3)"),
    )
}

fn fixed_point(traces: &[(Scenario, BoundaryTrace)]) -> Outcome {
    let opts = SolverOptions::default();
    let mut worst = 0.0_f64;
    let mut points = 0;
    for (n, (sc, trace)) in traces.iter().enumerate() {
        for p in trace.closure_points() {
            let mut achieved = ItVector::zeros(sc.links());
            for s in &p.solutions {
                for j in (0..sc.links()).filter(|&j| j != s.link) {
                    achieved
                        .set(s.link, j, s.beamformer.gain(sc.channel(s.link, j)))
                        .expect("interference is finite");
                }
            }
            let again = match solve_all(sc, &achieved, &opts) {
                Ok(s) => s,
                Err(e) => return Outcome::fail(format!("trace {n} grid {}: {e}", p.grid_index)),
            };
            let ee: Vec<f64> = again.iter().map(|s| s.gamma_star).collect();
            worst = worst.max(max_rel_diff(&ee, p.ee.values()));
            points += 1;
        }
    }
    Outcome::new(
        points > 0 && worst <= 1e-5,
        format!("{points} closure points re-solved at achieved interference, worst rel diff {worst:.1e} (tol 1e-5)"),
    )
}

/// Largest `max_k (c_k − e_k)/e_k` over closure points `c ≥ e`.
fn dominated_by(e: &EEPoint, closure: &[EEPoint]) -> f64 {
    closure
        .iter()
        .filter(|c| c.values().iter().zip(e.values()).all(|(c, e)| *c >= *e * (1.0 - 1e-9)))
        .map(|c| max_signed_rel(c.values(), e.values()))
        .fold(0.0, f64::max)
}

fn max_signed_rel(c: &[f64], e: &[f64]) -> f64 {
    c.iter()
        .zip(e)
        .map(|(c, e)| (c - e) / e)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn distributed_runs(report: &mut Report) {
    let sc = cellular(7, 2, 3, 294.5);
    let started = Instant::now();
    let closure: Result<Vec<EEPoint>, _> = ItGrid::log_spaced(&sc, 10, 1e-6)
        .and_then(|g| sweep_boundary(&sc, &g, &SweepOptions::default()))
        .map(|t| t.closure_points().map(|p| p.ee.clone()).collect());
    let sweep_time = started.elapsed();
    let closure = match closure {
        Ok(c) => c,
        Err(e) => {
            report.line(
                7,
                "distributed convergence",
                &Outcome::fail(format!("companion sweep: {e}")),
                sweep_time,
            );
            return;
        }
    };
    for alpha in [0.5, 1.0, 2.0] {
        let started = Instant::now();
        let cfg = DistributedConfig {
            alpha,
            ..DistributedConfig::default()
        };
        let outcome = match run_distributed(&sc, &cfg) {
            Ok(traj) => {
                let last = traj.last();
                let ndet = last.normalized_det.iter().copied().fold(0.0, f64::max);
                let det = last.det.iter().copied().fold(0.0, f64::max);
                let excess = dominated_by(&last.ee, &closure);
                Outcome::new(
                    traj.converged && last.round <= 500 && ndet <= 1e-6 && excess <= 1e-2,
                    format!(
                        "alpha {alpha}: {} after {} rounds, normalized |det D| {ndet:.1e} (tol 1e-6, raw {det:.2e}), dominated by closure by {excess:.1e} (tol 1e-2)",
                        if traj.converged { "converged" } else { "not converged" },
                        last.round
                    ),
                )
            }
            Err(e) => Outcome::fail(format!("alpha {alpha}: {e}")),
        };
        let elapsed = started.elapsed();
        let limit = Duration::from_secs(120);
        report.line(7, "distributed convergence", &outcome.within(elapsed, limit), elapsed);
    }
}

fn circuit_power_monotone() -> Outcome {
    let opts = SolverOptions::default();
    let levels = [0.0, 100.0, 294.5, 600.0];
    let mut bad = Vec::new();
    for seed in 0..5 {
        let base = cellular(seed, 2, 3, 0.0);
        let it = ItVector::uniform(2, CELL_NOISE);
        let mut ee = Vec::new();
        for &pc in &levels {
            match base.with_circuit_power(pc).and_then(|sc| solve_all(&sc, &it, &opts)) {
                Ok(sols) => ee.push(sols.iter().map(|s| s.gamma_star).collect::<Vec<_>>()),
                Err(e) => return Outcome::fail(format!("seed {seed} P_c {pc}: {e}")),
            }
        }
        for k in 0..2 {
            if !ee.windows(2).all(|w| w[1][k] < w[0][k]) {
                bad.push(format!("{seed}/{k}"));
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("5 seeds x 2 links at P_c in {{0+, 100, 294.5, 600}} W; not strictly decreasing: {bad:?}"),
    )
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| e.expect("dir entry").path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).expect("output file"),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let mut compared = 0;
    for command in [Command::Sweep, Command::Distributed, Command::Special, Command::Verify] {
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().expect("tempdir");
                let prefix = format!("{}/", dir.path().display());
                let result = eepareto_cli::run(command, &config, Some(&prefix), None);
                (result.map(|_| read_outputs(dir.path())), dir)
            })
            .collect();
        match (&runs[0].0, &runs[1].0) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => compared += a.len(),
            (Ok(_), Ok(_)) => return Outcome::fail(format!("{command:?}: outputs differ between runs")),
            (Err(e), _) | (_, Err(e)) => return Outcome::fail(format!("{command:?}: {e}")),
        }
    }
    Outcome::new(
        true,
        format!("{compared} files byte-identical across two runs of each command"),
    )
}

fn main() -> ExitCode {
    let mut report = Report::default();
    let mut inv = Invariants::default();
    let mut traces = Vec::new();

    let started = Instant::now();
    let outcome = pc_zero(&mut inv);
    let elapsed = started.elapsed();
    report.line(
        1,
        "zero circuit power point",
        &outcome.within(elapsed, Duration::from_secs(10)),
        elapsed,
    );

    let started = Instant::now();
    let outcome = cloud_dominance(&mut inv, &mut traces);
    let elapsed = started.elapsed();
    report.line(
        2,
        "brute-force cloud dominance",
        &outcome.within(elapsed, Duration::from_secs(300)),
        elapsed,
    );

    let started = Instant::now();
    let outcome = solver_cross_checks(&mut inv);
    report.line(3, "solver cross-checks", &outcome, started.elapsed());

    let outcome = Outcome::new(
        inv.solutions > 0 && inv.worst <= INVARIANT_TOL,
        format!(
            "{} solutions, worst violation {:.1e} ({}) (tol 1e-8)",
            inv.solutions, inv.worst, inv.worst_what
        ),
    );
    report.line(4, "rank-one, psd and feasible", &outcome, Duration::ZERO);

    let started = Instant::now();
    let outcome = sensitivities();
    report.line(5, "sensitivities vs finite differences", &outcome, started.elapsed());

    let started = Instant::now();
    let outcome = fixed_point(&traces);
    report.line(6, "achieved-interference fixed point", &outcome, started.elapsed());

    distributed_runs(&mut report);

    let started = Instant::now();
    let outcome = circuit_power_monotone();
    report.line(8, "circuit power monotonicity", &outcome, started.elapsed());

    let started = Instant::now();
    let outcome = determinism();
    report.line(9, "byte-identical outputs", &outcome, started.elapsed());

    if report.failed().is_empty() {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {:?}", report.failed());
        ExitCode::FAILURE
    }
}
