//! Experiment configuration, loaded from TOML with dotted-key overrides.
//!
//! ```toml
//! total_steps = 1000000
//! eval_every = 10000
//! betas = [0.005, 0.01]
//! seeds = [0, 1, 2, 3, 4]
//! output_dir = "runs/ucbq"
//!
//! [agent]
//! mode = "ucbq"
//!
//! [env]
//! optimal_reward = 1.0
//! suboptimal_reward = 0.1
//! ```
//!
//! Every key may be overridden from the command line with its dotted path,
//! e.g. `--env.horizon 150` or `--agent.reposition.p_start=0.02`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::env::EnvConfig;
use crate::schedules::{Decay, RepositionSchedule};
use crate::tabular::{AgentMode, LearningRate};

/// The ten curiosity coefficients of the warm-up sweep.
pub const DEFAULT_BETAS: [f64; 10] = [5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositionConfig {
    /// Defaults to `1 - gamma`.
    #[serde(default)]
    pub p_start: Option<f64>,
    /// Defaults to `min(1 / H, p_start)`.
    #[serde(default)]
    pub p_end: Option<f64>,
    #[serde(default = "default_decay")]
    pub decay: Decay,
    /// Episodes over which `p` decays; defaults to `total_steps / H`, the
    /// fewest episodes a run can contain.
    #[serde(default)]
    pub decay_episodes: Option<usize>,
}

fn default_decay() -> Decay {
    Decay::LinearPerEpisode
}

impl Default for RepositionConfig {
    fn default() -> Self {
        Self {
            p_start: None,
            p_end: None,
            decay: default_decay(),
            decay_episodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub mode: AgentMode,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: LearningRate,
    /// Initial value of the bonus-carrying table, in first-visit bonuses.
    #[serde(default = "default_optimism")]
    pub optimism: f64,
    #[serde(default)]
    pub reposition: RepositionConfig,
}

fn default_optimism() -> f64 {
    OPTIMISM
}

pub const OPTIMISM: f64 = 15.0;

fn default_learning_rate() -> LearningRate {
    LearningRate::HorizonDecay
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            mode: AgentMode::Ucbq,
            learning_rate: default_learning_rate(),
            optimism: default_optimism(),
            reposition: RepositionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_env")]
    pub env: EnvConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_total_steps")]
    pub total_steps: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Episodes at the end of the run that "final" metrics average over.
    #[serde(default = "default_final_window")]
    pub final_window: usize,
    /// Sweep cells run concurrently; each cell is single-threaded.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Write wall-clock timings to a `timing.json` sidecar.
    #[serde(default)]
    pub timing: bool,
}

fn default_env() -> EnvConfig {
    EnvConfig::warm_up(1.0, 0.1)
}
fn default_betas() -> Vec<f64> {
    DEFAULT_BETAS.to_vec()
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}
fn default_total_steps() -> u64 {
    1_000_000
}
fn default_eval_every() -> u64 {
    10_000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_final_window() -> usize {
    100
}
fn default_jobs() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: default_env(),
            agent: AgentConfig::default(),
            betas: default_betas(),
            seeds: default_seeds(),
            total_steps: default_total_steps(),
            eval_every: default_eval_every(),
            output_dir: default_output_dir(),
            final_window: default_final_window(),
            jobs: default_jobs(),
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self, HarnessError> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        for (key, raw) in overrides {
            apply_override(&mut root, key, raw)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.env.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must not be empty".into()));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(HarnessError::Config("betas must be a non-empty list of non-negative reals".into()));
        }
        if self.total_steps == 0 {
            return Err(HarnessError::Config("total_steps must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(HarnessError::Config("eval_every must be positive".into()));
        }
        if self.final_window == 0 {
            return Err(HarnessError::Config("final_window must be positive".into()));
        }
        if let LearningRate::Constant { alpha } = self.agent.learning_rate {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(HarnessError::Config(format!("constant learning rate {alpha} outside (0, 1]")));
            }
        }
        if self.agent.mode == AgentMode::Hyper {
            self.reposition_schedule()?;
        }
        Ok(())
    }

    pub fn reposition_schedule(&self) -> Result<RepositionSchedule, HarnessError> {
        let r = &self.agent.reposition;
        let horizon = self.env.horizon;
        let p_start = r.p_start.unwrap_or(1.0 - self.env.gamma);
        let p_end = r.p_end.unwrap_or_else(|| (1.0 / horizon as f64).min(p_start));
        let episodes = r
            .decay_episodes
            .unwrap_or_else(|| (self.total_steps / horizon as u64).max(1) as usize);
        RepositionSchedule::new(p_start, p_end, r.decay, episodes, horizon)
            .map_err(|e| HarnessError::Config(format!("agent.reposition: {e}")))
    }
}

/// Parses a raw override value as a TOML literal, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn apply_override(root: &mut toml::Table, key: &str, raw: &str) -> Result<(), HarnessError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!("malformed override key `{key}`")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

/// Splits `--a.b=v` / `--a.b v` pairs out of a raw argument list.
pub fn parse_override_args(args: &[String]) -> Result<Vec<(String, String)>, HarnessError> {
    let mut out = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let Some(stripped) = arg.strip_prefix("--") else {
            return Err(HarnessError::Config(format!("unexpected argument `{arg}`")));
        };
        if let Some((k, v)) = stripped.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = iter
                .next()
                .ok_or_else(|| HarnessError::Config(format!("override `--{stripped}` needs a value")))?;
            out.push((stripped.to_string(), v.clone()));
        }
    }
    Ok(out)
}
