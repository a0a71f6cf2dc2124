use std::path::PathBuf;

use eepareto::pareto::{run_distributed, Initializer};

use super::{it_cells, it_header, link_header, provenance};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, out_path, Table};

/// Writes `trajectory.csv`: one row per round, the last flagged with the outcome.
pub fn distributed(cfg: &RunConfig, out: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let scenario = cfg.scenario()?;
    let links = scenario.links();
    let dc = &cfg.distributed;
    let traj = run_distributed(&scenario, dc)?;

    let init = match dc.init {
        Initializer::ZeroForcing => "zf",
        Initializer::Explicit(_) => "explicit",
    };
    let comment = provenance(
        "distributed",
        cfg,
        &[
            ("init", init.to_string()),
            ("step", num(dc.step)),
            ("alpha", num(dc.alpha)),
            ("tau", num(dc.tau)),
            ("max_rounds", dc.max_rounds.to_string()),
            ("accept_tol", num(dc.accept_tol)),
        ],
    );
    let pair_names: Vec<String> = traj.pairs.iter().map(|(i, j)| format!("{}_{}", i + 1, j + 1)).collect();
    let mut header = vec!["round".to_string()];
    header.extend(it_header(links));
    header.extend(link_header("ee", links));
    for prefix in ["det", "ndet", "step"] {
        header.extend(pair_names.iter().map(|p| format!("{prefix}_{p}")));
    }
    header.push("status".to_string());

    let mut table = Table::new(comment, header);
    let last = traj.rows.len() - 1;
    for (n, r) in traj.rows.iter().enumerate() {
        let mut row = vec![r.round.to_string()];
        row.extend(it_cells(&r.it));
        row.extend(r.ee.to_bits_per_joule(scenario.bandwidth()).into_iter().map(num));
        row.extend(r.det.iter().chain(&r.normalized_det).chain(&r.step).map(|&v| num(v)));
        let status = match (n == last, traj.converged) {
            (false, _) => "running",
            (true, true) => "converged",
            (true, false) => "not_converged",
        };
        row.push(status.to_string());
        table.push(row);
    }
    let path = out_path(out, "trajectory.csv");
    table.write(&path)?;
    Ok(vec![path])
}
