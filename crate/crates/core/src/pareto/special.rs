use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::model::{Beamformer, EEPoint, Scenario};
use crate::solver::ItVector;

/// Maximises `log2(1 + p·snr) / (p/η + P_c)` over `p ∈ [0, P]` by Dinkelbach
/// iterations; `snr` is the receive SNR per Watt. Returns `(p, EE)`.
///
/// With `P_c = 0` the supremum `η·snr/ln2` is only approached as `p → 0`;
/// that limit is returned with `p = 0`.
pub fn scalar_ee_power(snr: f64, eta: f64, circuit_power: f64, power_cap: f64) -> (f64, f64) {
    if !(snr > 0.0) || power_cap == 0.0 {
        return (0.0, 0.0);
    }
    if circuit_power == 0.0 {
        return (0.0, eta * snr / LN_2);
    }
    let ee = |p: f64| (p * snr).ln_1p() / LN_2 / (p / eta + circuit_power);
    let mut p = if power_cap.is_finite() {
        power_cap
    } else {
        eta * circuit_power
    };
    let mut gamma = ee(p);
    for _ in 0..200 {
        let next = (eta / (gamma * LN_2) - 1.0 / snr).clamp(0.0, power_cap);
        let g = ee(next);
        if g <= gamma * (1.0 + 1e-15) {
            if g > gamma {
                p = next;
                gamma = g;
            }
            break;
        }
        p = next;
        gamma = g;
    }
    (p, gamma)
}

/// Zero-forcing start: each BS beams along the part of `h_kk` orthogonal
/// to its cross channels with the EE-optimal power for that direction. The
/// returned IT levels are the (numerically tiny) leaked interference.
pub fn zf_ee_init(scenario: &Scenario) -> Result<(ItVector, Vec<Beamformer>)> {
    let links = scenario.links();
    let mut beams = Vec::with_capacity(links);
    for k in 0..links {
        let own = scenario.channel(k, k);
        let m = scenario.antennas(k);
        let cross: Vec<&CVector> = (0..links).filter(|&j| j != k).map(|j| scenario.channel(k, j)).collect();
        let basis = linalg::orthonormal_basis(&cross, m, 1e-12);
        let proj = linalg::project_out(own, &basis);
        let gain = linalg::norm_sqr(&proj);
        if gain <= 1e-24 * linalg::norm_sqr(own) || gain == 0.0 {
            beams.push(Beamformer::new(CVector::zeros(m)));
            continue;
        }
        // |h_kkᴴ u|² = ‖proj‖² for u = proj/‖proj‖.
        let (p, _) = scalar_ee_power(
            gain / scenario.noise(k),
            scenario.amp_efficiency(),
            scenario.circuit_power(),
            scenario.power_cap(k),
        );
        beams.push(Beamformer::from_direction(&proj, p));
    }
    let mut it = ItVector::zeros(links);
    for (k, bf) in beams.iter().enumerate() {
        for j in (0..links).filter(|&j| j != k) {
            let leak = linalg::inner(scenario.channel(k, j), bf.weights()).norm_sqr();
            it.set(k, j, leak)?;
        }
    }
    Ok((it, beams))
}

/// Single boundary point of the `P_c = 0` region:
/// `E_k = η‖h_kk‖² / (σ_k² ln2)`, reached by MRT as the power goes to zero.
pub fn pc_zero_point(scenario: &Scenario) -> Result<(EEPoint, Vec<CVector>)> {
    if scenario.circuit_power() != 0.0 {
        return Err(Error::Precondition(format!(
            "the analytic point requires P_c = 0, scenario has {} W",
            scenario.circuit_power()
        )));
    }
    let eta = scenario.amp_efficiency();
    let mut values = Vec::with_capacity(scenario.links());
    let mut dirs = Vec::with_capacity(scenario.links());
    for k in 0..scenario.links() {
        let h = scenario.channel(k, k);
        let g = linalg::norm_sqr(h);
        values.push(eta * g / (scenario.noise(k) * LN_2));
        dirs.push(if g > 0.0 { h.unscale(g.sqrt()) } else { h.clone() });
    }
    Ok((EEPoint(values), dirs))
}
