use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::solver::{parametric_value, DualPoint, ItVector};

#[derive(Debug, Clone, PartialEq)]
pub struct DualGridResult {
    /// Smallest dual value found, an upper bound on `F(γ)`.
    pub value: f64,
    pub duals: DualPoint,
    /// Number of dual evaluations.
    pub evaluations: usize,
}

/// Minimises the dual function of link `k` over at most three free multipliers
/// by exhaustive `n × n` grids: the box is grown by ×10 until the minimum is
/// interior, then repeatedly shrunk to ±2 cells around the best node.
pub fn dual_grid_min(
    gamma: f64,
    scenario: &Scenario,
    it: &ItVector,
    k: usize,
    n: usize,
    zoom_levels: usize,
) -> Result<DualGridResult> {
    if n < 3 {
        return Err(Error::Config("dual grid needs at least 3 nodes per axis".to_string()));
    }
    let links = scenario.links();
    // Free coordinates as indices into the link-length dual vector.
    let mut free = Vec::new();
    let mut upper = Vec::new();
    for j in (0..links).filter(|&j| j != k) {
        let level = it.get(k, j);
        if level.is_finite() && crate::linalg::norm_sqr(scenario.channel(k, j)) > 0.0 {
            free.push(j);
            upper.push(1.0 / (level + scenario.noise(j)));
        }
    }
    if scenario.power_cap(k).is_finite() {
        free.push(k);
        upper.push(1.0 / scenario.power_cap(k).max(f64::MIN_POSITIVE));
    }
    if free.len() > 3 {
        return Err(Error::Unsupported(format!(
            "dual grid search over {} multipliers (at most 3)",
            free.len()
        )));
    }
    let dims = free.len();
    let evaluations = std::cell::Cell::new(0);
    let mut eval = |x: &[f64]| -> Result<f64> {
        let mut v = vec![0.0; links];
        for (&j, &xi) in free.iter().zip(x) {
            v[j] = xi;
        }
        evaluations.set(evaluations.get() + 1);
        parametric_value(&DualPoint::new(k, v)?, gamma, scenario, it, k)
    };
    if dims == 0 {
        let value = eval(&[])?;
        return Ok(DualGridResult {
            value,
            duals: DualPoint::zeros(links, k),
            evaluations: evaluations.get(),
        });
    }

    let search =
        |lo: &[f64], hi: &[f64], eval: &mut dyn FnMut(&[f64]) -> Result<f64>| -> Result<(Vec<usize>, Vec<f64>, f64)> {
            let mut best = (vec![0; dims], vec![0.0; dims], f64::INFINITY);
            let total = n.pow(dims as u32);
            for flat in 0..total {
                let mut idx = vec![0; dims];
                let mut r = flat;
                for slot in idx.iter_mut().rev() {
                    *slot = r % n;
                    r /= n;
                }
                let x: Vec<f64> = (0..dims)
                    .map(|d| lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (n - 1) as f64)
                    .collect();
                let v = eval(&x)?;
                if v < best.2 {
                    best = (idx, x, v);
                }
            }
            Ok(best)
        };

    let mut lo = vec![0.0; dims];
    let mut hi = upper;
    let mut best;
    let mut grown = 0;
    loop {
        best = search(&lo, &hi, &mut eval)?;
        let on_edge: Vec<usize> = (0..dims).filter(|&d| best.0[d] == n - 1).collect();
        if on_edge.is_empty() || grown >= 80 {
            break;
        }
        for d in on_edge {
            hi[d] *= 10.0;
        }
        grown += 1;
    }
    for _ in 0..zoom_levels {
        let mut changed = false;
        for d in 0..dims {
            let cell = (hi[d] - lo[d]) / (n - 1) as f64;
            let nlo = (best.1[d] - 2.0 * cell).max(0.0);
            let nhi = best.1[d] + 2.0 * cell;
            if nlo != lo[d] || nhi != hi[d] {
                changed = true;
            }
            lo[d] = nlo;
            hi[d] = nhi;
        }
        if !changed {
            break;
        }
        let next = search(&lo, &hi, &mut eval)?;
        if next.2 <= best.2 {
            best = next;
        }
    }
    let mut v = vec![0.0; links];
    for (&j, &xi) in free.iter().zip(&best.1) {
        v[j] = xi;
    }
    Ok(DualGridResult {
        value: best.2,
        duals: DualPoint::new(k, v)?,
        evaluations: evaluations.get(),
    })
}
