use std::path::PathBuf;

use eepareto::model::{ee_point_beams, EEPoint};
use eepareto::pareto::{pc_zero_point, zf_ee_init};
use eepareto::solver::{solve_all, ItVector};

use super::{it_cells, it_header, link_header, provenance};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, out_path, Table};

/// Writes `special.csv`: the zero-forcing start and, when `P_c = 0`, the
/// analytic single boundary point (reached in the limit of zero power).
pub fn special(cfg: &RunConfig, out: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let scenario = cfg.scenario()?;
    let links = scenario.links();
    let bandwidth = scenario.bandwidth();

    let mut header = vec!["case".to_string()];
    header.extend(it_header(links));
    header.extend(link_header("ee", links));
    header.extend(link_header("p", links));
    let mut table = Table::new(provenance("special", cfg, &[]), header);

    let (it, beams) = zf_ee_init(&scenario)?;
    let ee = if scenario.circuit_power() == 0.0 {
        // Zero-power beams: report the limit along the zero-forcing directions.
        let sols = solve_all(&scenario, &it, &cfg.solver)?;
        EEPoint(sols.iter().map(|s| s.gamma_star).collect())
    } else {
        ee_point_beams(&scenario, &beams)?
    };
    let mut row = vec!["zf_init".to_string()];
    row.extend(it_cells(&it));
    row.extend(ee.to_bits_per_joule(bandwidth).into_iter().map(num));
    row.extend(beams.iter().map(|b| num(b.power())));
    table.push(row);

    if scenario.circuit_power() == 0.0 {
        let (point, _) = pc_zero_point(&scenario)?;
        let mut row = vec!["pc_zero_analytic".to_string()];
        row.extend(it_cells(&ItVector::zeros(links)));
        row.extend(point.to_bits_per_joule(bandwidth).into_iter().map(num));
        row.extend((0..links).map(|_| num(0.0)));
        table.push(row);
    }
    let path = out_path(out, "special.csv");
    table.write(&path)?;
    Ok(vec![path])
}
