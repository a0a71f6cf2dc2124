use std::path::PathBuf;

use eepareto::pareto::{sweep_boundary, ItGrid, SweepOptions};

use super::{it_cells, it_header, provenance, solution_cells, solution_header};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, out_path, Table};

/// Writes `boundary.csv` (one row per grid point, after tightening) and
/// `closure.csv` (the non-dominated points of the refined sweep).
pub fn sweep(cfg: &RunConfig, out: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let scenario = cfg.scenario()?;
    let links = scenario.links();
    let grid = ItGrid::log_spaced(&scenario, cfg.sweep.points, cfg.sweep.low)?;
    let defaults = SweepOptions::default();
    let opts = SweepOptions {
        solver: cfg.solver.clone(),
        refine: defaults.refine.clone().filter(|_| cfg.sweep.refine),
        ..defaults
    };
    let trace = sweep_boundary(&scenario, &grid, &opts)?;

    let mut extra = vec![
        ("points", cfg.sweep.points.to_string()),
        ("low", num(cfg.sweep.low)),
        ("closure_tol", num(opts.closure_tol)),
        ("dedup_rel", num(opts.dedup_rel)),
    ];
    match &opts.refine {
        Some(r) => {
            extra.push(("refine_tau", num(r.tau)));
            extra.push(("refine_max_rounds", r.max_rounds.to_string()));
        }
        None => extra.push(("refine", "off".to_string())),
    }
    let comment = provenance("sweep", cfg, &extra);
    let bandwidth = scenario.bandwidth();

    let mut header = vec!["grid_index".to_string()];
    header.extend(it_header(links));
    header.extend(solution_header(links));
    let mut boundary = Table::new(comment.clone(), header.clone());
    for p in trace.points.iter().filter(|p| p.refined_from.is_none()) {
        let mut row = vec![p.grid_index.to_string()];
        row.extend(it_cells(&p.it));
        row.extend(solution_cells(&p.solutions, bandwidth));
        boundary.push(row);
    }

    let mut header = vec!["grid_index".to_string(), "origin".to_string(), "rounds".to_string()];
    header.extend(it_header(links));
    header.extend(solution_header(links));
    let mut closure = Table::new(comment, header);
    for p in trace.closure_points() {
        let origin = if p.refined_from.is_some() { "refined" } else { "grid" };
        let mut row = vec![
            p.grid_index.to_string(),
            origin.to_string(),
            p.refine_rounds.to_string(),
        ];
        row.extend(it_cells(&p.it));
        row.extend(solution_cells(&p.solutions, bandwidth));
        closure.push(row);
    }

    let paths = vec![out_path(out, "boundary.csv"), out_path(out, "closure.csv")];
    boundary.write(&paths[0])?;
    closure.write(&paths[1])?;
    Ok(paths)
}
