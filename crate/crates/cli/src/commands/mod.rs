//! One module per subcommand. Each writes its CSV files and returns their paths.

mod distributed;
mod special;
mod sweep;
mod verify;

pub use distributed::distributed;
pub use special::special;
pub use sweep::sweep;
pub use verify::verify;

use eepareto::solver::{ItVector, LinkSolution, SolverOptions};

use crate::config::RunConfig;
use crate::output::num;

/// Provenance line shared by every command; `extra` holds command tolerances.
pub(crate) fn provenance(command: &str, cfg: &RunConfig, extra: &[(&str, String)]) -> String {
    let SolverOptions {
        eps,
        inner_tol,
        max_inner_iter,
        max_bisection_iter,
        ..
    } = &cfg.solver;
    let mut line = format!(
        "eepareto {} {command} config_sha256={} seed={} eps={} inner_tol={} max_inner_iter={max_inner_iter} max_bisection_iter={max_bisection_iter}",
        env!("CARGO_PKG_VERSION"),
        cfg.hash,
        cfg.seed,
        num(*eps),
        num(*inner_tol),
    );
    for (k, v) in extra {
        line.push_str(&format!(" {k}={v}"));
    }
    line
}

/// Off-diagonal `(k, j)` pairs in lexicographic order.
pub(crate) fn it_pairs(links: usize) -> Vec<(usize, usize)> {
    (0..links)
        .flat_map(|k| (0..links).filter(move |&j| j != k).map(move |j| (k, j)))
        .collect()
}

pub(crate) fn it_header(links: usize) -> Vec<String> {
    it_pairs(links)
        .iter()
        .map(|(k, j)| format!("it_{}_{}", k + 1, j + 1))
        .collect()
}

pub(crate) fn link_header(prefix: &str, links: usize) -> Vec<String> {
    (1..=links).map(|k| format!("{prefix}_{k}")).collect()
}

pub(crate) fn it_cells(it: &ItVector) -> Vec<String> {
    it_pairs(it.links()).iter().map(|&(k, j)| num(it.get(k, j))).collect()
}

/// `ee_k` in bits/J, `p_k`, `rank1_k` and `fres_k` columns.
pub(crate) fn solution_header(links: usize) -> Vec<String> {
    ["ee", "p", "rank1", "fres"]
        .iter()
        .flat_map(|p| link_header(p, links))
        .collect()
}

pub(crate) fn solution_cells(sols: &[LinkSolution], bandwidth: f64) -> Vec<String> {
    let mut row: Vec<String> = sols.iter().map(|s| num(s.gamma_star * bandwidth)).collect();
    row.extend(sols.iter().map(|s| num(s.beamformer.power())));
    row.extend(sols.iter().map(|s| num(s.covariance.rank_one_residual())));
    row.extend(sols.iter().map(|s| num(s.f_residual)));
    row
}
