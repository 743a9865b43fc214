//! Experiment configuration file (TOML).
//!
//! ```toml
//! [agent]            # any AgentConfig field
//! gamma = 0.7
//! learning_rate = 0.001
//!
//! [train]
//! opponent = "heu"   # ran | heu | sup
//! budget = 100000
//! seed = 1
//!
//! [eval]
//! games = 1000
//! seed = 7
//!
//! [corpus]
//! games = 32
//! seed = 1000
//! trees = 100
//! ```
//!
//! Every section and field is optional; unknown keys are errors.

use std::path::Path;

use catan_core::Rules;
use catan_dqn::AgentConfig;
use serde::{Deserialize, Serialize};

use crate::training::TrainingConfig;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub games: u64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { games: 1000, seed: 7 }
    }
}

/// Synthetic corpus and forest training for the supervised baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub games: u64,
    pub seed: u64,
    pub trees: usize,
    pub forest_seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { games: 32, seed: 1000, trees: 100, forest_seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agent: AgentConfig,
    pub train: TrainingConfig,
    pub eval: EvalConfig,
    pub corpus: CorpusConfig,
    pub rules: Rules,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::File { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.agent.validate()?;
        self.train.validate()?;
        if self.eval.games == 0 {
            return Err(HarnessError::Config("eval.games: must be positive".into()));
        }
        if self.corpus.games == 0 || self.corpus.trees == 0 {
            return Err(HarnessError::Config("corpus.games and corpus.trees must be positive".into()));
        }
        Ok(())
    }

    /// 500K training experiences and 10K test games per configuration.
    pub fn full_scale(mut self) -> ExperimentConfig {
        self.train.budget = 500_000;
        self.eval.games = 10_000;
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
