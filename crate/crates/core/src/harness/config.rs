use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::game::GameSpec;
use crate::mcp::SolverOptions;
use crate::sim::{HumanStrategy, StopCriteria};

use super::HarnessError;

const SCENARIO1: &str = include_str!("../../configs/scenario1.toml");
const SCENARIO2: &str = include_str!("../../configs/scenario2.toml");
const SCENARIO3: &str = include_str!("../../configs/scenario3.toml");

/// Names accepted by [`ScenarioConfig::preset`].
pub const PRESETS: [&str; 3] = ["scenario1", "scenario2", "scenario3"];

/// Batch settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSettings {
    pub alphas: Vec<f64>,
    pub runs: usize,
    /// Run `i` uses seed `seed_base ^ i`, for every `α`.
    pub seed_base: u64,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            alphas: vec![0.05, 0.1, 0.3, 0.5],
            runs: 200,
            seed_base: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Directory for trajectory exports and metric tables; nothing is written
    /// when unset.
    pub dir: Option<PathBuf>,
}

/// A scenario file: the game, how the human behaves, and how to run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub game: GameSpec,
    #[serde(default = "default_strategy")]
    pub strategy: HumanStrategy,
    #[serde(default)]
    pub stop: StopCriteria,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub monte_carlo: MonteCarloSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

fn default_strategy() -> HumanStrategy {
    HumanStrategy::GnePlayer
}

/// Every parameter that affects an episode besides its seed.
#[derive(Serialize)]
struct Effective<'a> {
    game: &'a GameSpec,
    strategy: &'a HumanStrategy,
    stop: &'a StopCriteria,
    solver: &'a SolverOptions,
}

fn invalid(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }

    /// One of the shipped scenarios, by name (see [`PRESETS`]).
    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        let text = match name {
            "scenario1" => SCENARIO1,
            "scenario2" => SCENARIO2,
            "scenario3" => SCENARIO3,
            _ => return Err(HarnessError::UnknownPreset(name.into())),
        };
        Self::from_toml_str(text)
    }

    /// A preset name or a path to a TOML file.
    /// A preset name, or a path to a TOML file. A bare word that is neither
    /// is reported as an unknown preset.
    pub fn load(name_or_path: &str) -> Result<Self, HarnessError> {
        let path = Path::new(name_or_path);
        let bare = path.extension().is_none() && path.components().count() == 1;
        if PRESETS.contains(&name_or_path) || (bare && !path.exists()) {
            Self::preset(name_or_path)
        } else {
            Self::from_path(path)
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.game.validate().map_err(|e| match e {
            crate::game::GameError::Invalid { field, reason } => invalid(&format!("game.{field}"), reason),
            other => invalid("game", other.to_string()),
        })?;
        match &self.strategy {
            HumanStrategy::VirtualTarget(p) => p.validate().map_err(|e| invalid("strategy", e.to_string()))?,
            HumanStrategy::External => {
                return Err(invalid("strategy.kind", "`external` needs a live session and cannot be run from a file"))
            }
            HumanStrategy::GnePlayer => {}
        }
        let stop = &self.stop;
        if !(stop.target_tolerance > 0.0 && stop.target_tolerance.is_finite()) {
            return Err(invalid("stop.target_tolerance", "must be positive"));
        }
        if !(stop.speed_tolerance > 0.0 && stop.speed_tolerance.is_finite()) {
            return Err(invalid("stop.speed_tolerance", "must be positive"));
        }
        if stop.max_ticks == 0 {
            return Err(invalid("stop.max_ticks", "must be at least 1"));
        }
        self.solver.validate().map_err(|e| match e {
            crate::mcp::McpError::Option { field, reason } => invalid(&format!("solver.{field}"), reason),
            other => invalid("solver", other.to_string()),
        })?;
        let mc = &self.monte_carlo;
        if mc.alphas.is_empty() {
            return Err(invalid("monte_carlo.alphas", "must not be empty"));
        }
        check_alphas(&mc.alphas)?;
        if mc.runs == 0 {
            return Err(invalid("monte_carlo.runs", "must be at least 1"));
        }
        Ok(())
    }

    /// Game spec with `α` replaced.
    pub fn spec_at(&self, alpha: f64) -> GameSpec {
        let mut spec = self.game.clone();
        spec.alpha = alpha;
        spec
    }

    /// SHA-256 over the canonical JSON of every effective parameter at
    /// `alpha`: game, strategy, stop rule and solver options. Seeds, run
    /// counts and output paths are excluded, so all runs of one batch row
    /// share a hash. Object keys are sorted and floats printed in shortest
    /// round-trip form, which makes the serialization canonical.
    pub fn config_hash(&self, alpha: f64) -> String {
        let game = self.spec_at(alpha);
        let value = serde_json::to_value(Effective {
            game: &game,
            strategy: &self.strategy,
            stop: &self.stop,
            solver: &self.solver,
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

pub(crate) fn check_alphas(alphas: &[f64]) -> Result<(), HarnessError> {
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {a}")));
        }
    }
    Ok(())
}
