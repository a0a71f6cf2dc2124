//! Scenario profiles and reporting for the acceptance run.

use std::time::Duration;

use eepareto::model::{generate_channels, Scenario, ScenarioSkeleton};
use eepareto::solver::ItVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const AMP_EFFICIENCY: f64 = 0.38;
/// −110 dBm.
pub const CELL_NOISE: f64 = 1e-14;

pub fn dbm(v: f64) -> f64 {
    10f64.powf(v / 10.0) * 1e-3
}

/// Cellular profile: −110 dBm noise, 43 dBm per-BS cap, unit-variance channels.
pub fn cellular(seed: u64, links: usize, antennas: usize, circuit_power: f64) -> Scenario {
    let sk = ScenarioSkeleton::uniform(
        links,
        antennas,
        CELL_NOISE,
        dbm(43.0),
        circuit_power,
        AMP_EFFICIENCY,
        1.0,
    );
    generate_channels(seed, &sk, 1.0).expect("valid cellular profile")
}

/// Unit noise, 10 W cap and 1 W circuit power.
pub fn unit(seed: u64, links: usize, antennas: usize) -> Scenario {
    let sk = ScenarioSkeleton::uniform(links, antennas, 1.0, 10.0, 1.0, AMP_EFFICIENCY, 1.0);
    generate_channels(seed, &sk, 1.0).expect("valid unit profile")
}

/// IT levels `σ_j² · 10^u` with `u ~ U(lo, hi)`.
pub fn draw_levels(scenario: &Scenario, seed: u64, lo: f64, hi: f64) -> ItVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let links = scenario.links();
    let mut it = ItVector::zeros(links);
    for k in 0..links {
        for j in (0..links).filter(|&j| j != k) {
            let level = scenario.noise(j) * 10f64.powf(rng.random_range(lo..hi));
            it.set(k, j, level).expect("positive finite level");
        }
    }
    it
}

/// Largest `|a − b| / |b|` over paired components.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }

    /// Fails the outcome if it ran longer than `limit`.
    pub fn within(self, elapsed: Duration, limit: Duration) -> Self {
        if elapsed <= limit {
            self
        } else {
            Self::new(
                false,
                format!(
                    "{}; took {:.1} s, limit {:.0} s",
                    self.detail,
                    elapsed.as_secs_f64(),
                    limit.as_secs_f64()
                ),
            )
        }
    }
}

/// One `PASS`/`FAIL` line per criterion.
#[derive(Debug, Default)]
pub struct Report {
    failed: Vec<usize>,
}

impl Report {
    pub fn line(&mut self, number: usize, name: &str, outcome: &Outcome, elapsed: Duration) {
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            self.failed.push(number);
        }
        println!(
            "criterion {number} {status} {name}: {} [{:.1} s]",
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }

    pub fn failed(&self) -> &[usize] {
        &self.failed
    }
}
