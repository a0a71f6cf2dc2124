//! Run configuration: a TOML file of flat `key = value` sections. Power
//! fields are strings with an explicit unit (`"43 dBm"`, `"294.5 W"`,
//! `"10 mW"`) and are converted to Watts here, once.

use std::path::Path;

use eepareto::model::{generate_channels, Scenario, ScenarioSkeleton};
use eepareto::pareto::{DistributedConfig, Initializer};
use eepareto::solver::{ItVector, SolverOptions};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Power in Watts parsed from a unit-tagged string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Watts(pub f64);

impl Watts {
    pub fn parse(field: &str, text: &str) -> Result<Self, CliError> {
        let t = text.trim();
        let number = |num: &str| -> Result<f64, CliError> {
            num.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .ok_or_else(|| CliError::Config(format!("{field}: cannot parse number in {text:?}")))
        };
        // Longer units first so "mW" is not read as "W".
        type Unit = (&'static str, fn(f64) -> f64);
        let units: [Unit; 4] = [
            ("dBm", |v| 10f64.powf(v / 10.0) * 1e-3),
            ("dBW", |v| 10f64.powf(v / 10.0)),
            ("mW", |v| v * 1e-3),
            ("W", |v| v),
        ];
        for (unit, to_watts) in units {
            if let Some(num) = t.strip_suffix(unit) {
                return Ok(Watts(to_watts(number(num)?)));
            }
        }
        if t.parse::<f64>().is_ok() {
            Err(CliError::Config(format!(
                "{field}: missing unit in {text:?} (use W, mW, dBW or dBm)"
            )))
        } else {
            Err(CliError::Config(format!("{field}: unknown unit in {text:?}")))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    links: usize,
    antennas: usize,
    amp_efficiency: f64,
    circuit_power: String,
    noise: String,
    power_cap: String,
    bandwidth: f64,
    seed: Option<u64>,
    #[serde(default = "one")]
    cross_gain: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    eps: Option<f64>,
    inner_tol: Option<f64>,
    max_inner_iter: Option<usize>,
    max_bisection_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    points: Option<usize>,
    low: Option<f64>,
    refine: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistributed {
    step: Option<f64>,
    alpha: Option<f64>,
    tau: Option<f64>,
    max_rounds: Option<usize>,
    init: Option<String>,
    levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    instances: Option<usize>,
    cloud_angles: Option<usize>,
    cloud_powers: Option<usize>,
    sweep_points: Option<usize>,
    dual_grid_nodes: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    distributed: RawDistributed,
    #[serde(default)]
    verify: RawVerify,
    /// Written by `verify` on failure; ignored on input.
    #[serde(default)]
    #[allow(dead_code)]
    case: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// Levels per IT axis, including the zero level.
    pub points: usize,
    /// Lowest nonzero level relative to the largest.
    pub low: f64,
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub instances: usize,
    pub cloud_angles: usize,
    pub cloud_powers: usize,
    pub sweep_points: usize,
    pub dual_grid_nodes: usize,
}

/// Parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub skeleton: ScenarioSkeleton,
    pub cross_gain: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub sweep: SweepSettings,
    pub distributed: DistributedConfig,
    pub verify: VerifySettings,
    /// SHA-256 of the config file bytes.
    pub hash: String,
    /// The config text, kept for replay files.
    pub source: String,
}

impl RunConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, seed_override)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        let sc = &raw.scenario;
        let seed = seed_override
            .or(sc.seed)
            .ok_or_else(|| CliError::Config("no seed: set scenario.seed or pass --seed".to_string()))?;
        let skeleton = ScenarioSkeleton::uniform(
            sc.links,
            sc.antennas,
            Watts::parse("scenario.noise", &sc.noise)?.0,
            Watts::parse("scenario.power_cap", &sc.power_cap)?.0,
            Watts::parse("scenario.circuit_power", &sc.circuit_power)?.0,
            sc.amp_efficiency,
            sc.bandwidth,
        );

        let d = SolverOptions::default();
        let solver = SolverOptions {
            eps: raw.solver.eps.unwrap_or(d.eps),
            inner_tol: raw.solver.inner_tol.unwrap_or(d.inner_tol),
            max_inner_iter: raw.solver.max_inner_iter.unwrap_or(d.max_inner_iter),
            max_bisection_iter: raw.solver.max_bisection_iter.unwrap_or(d.max_bisection_iter),
            gamma_lo: d.gamma_lo,
        };
        if !(solver.eps > 0.0 && solver.inner_tol > 0.0) {
            return Err(CliError::Config(
                "solver.eps and solver.inner_tol must be positive".to_string(),
            ));
        }

        let sweep = SweepSettings {
            points: raw.sweep.points.unwrap_or(20),
            low: raw.sweep.low.unwrap_or(1e-6),
            refine: raw.sweep.refine.unwrap_or(true),
        };
        if sweep.points == 0 || !(sweep.low > 0.0 && sweep.low < 1.0) {
            return Err(CliError::Config(
                "sweep.points must be >= 1 and sweep.low in (0, 1)".to_string(),
            ));
        }

        let dd = DistributedConfig::default();
        let init = match raw.distributed.init.as_deref().unwrap_or("zf") {
            "zf" => Initializer::ZeroForcing,
            "explicit" => {
                let levels = raw.distributed.levels.clone().ok_or_else(|| {
                    CliError::Config("distributed.init = \"explicit\" needs distributed.levels".to_string())
                })?;
                Initializer::Explicit(levels_to_it(sc.links, &levels)?)
            }
            other => {
                return Err(CliError::Config(format!(
                    "distributed.init: unknown initializer {other:?}"
                )))
            }
        };
        let distributed = DistributedConfig {
            step: raw.distributed.step.unwrap_or(dd.step),
            alpha: raw.distributed.alpha.unwrap_or(dd.alpha),
            tau: raw.distributed.tau.unwrap_or(dd.tau),
            max_rounds: raw.distributed.max_rounds.unwrap_or(dd.max_rounds),
            init,
            solver: solver.clone(),
            ..dd
        };

        let verify = VerifySettings {
            instances: raw.verify.instances.unwrap_or(3),
            cloud_angles: raw.verify.cloud_angles.unwrap_or(32),
            cloud_powers: raw.verify.cloud_powers.unwrap_or(32),
            sweep_points: raw.verify.sweep_points.unwrap_or(10),
            dual_grid_nodes: raw.verify.dual_grid_nodes.unwrap_or(41),
        };

        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        let cfg = RunConfig {
            skeleton,
            cross_gain: sc.cross_gain,
            seed,
            solver,
            sweep,
            distributed,
            verify,
            hash,
            source: text.to_string(),
        };
        // Validates the skeleton and cross gain.
        cfg.scenario()?;
        Ok(cfg)
    }

    /// Channels drawn from the configured seed.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario_with_seed(self.seed)
    }

    pub fn scenario_with_seed(&self, seed: u64) -> Result<Scenario, CliError> {
        generate_channels(seed, &self.skeleton, self.cross_gain).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Off-diagonal levels in lexicographic `(k, j)` order, in Watts.
fn levels_to_it(links: usize, levels: &[f64]) -> Result<ItVector, CliError> {
    let want = links * links.saturating_sub(1);
    if levels.len() != want {
        return Err(CliError::Config(format!(
            "distributed.levels needs {want} entries for {links} links, got {}",
            levels.len()
        )));
    }
    let mut it = ItVector::zeros(links);
    let pairs = (0..links).flat_map(|k| (0..links).filter(move |&j| j != k).map(move |j| (k, j)));
    for ((k, j), &v) in pairs.zip(levels) {
        it.set(k, j, v).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(it)
}
