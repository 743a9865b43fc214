//! Training, tournaments, cross-evaluation and the remote-learner
//! protocol for Catan trading agents.

pub mod config;
pub mod cross_eval;
pub mod protocol;
pub mod seats;
pub mod stats;
pub mod tournament;
pub mod training;

use std::path::PathBuf;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use seats::{OpponentClass, PolicySpec, SeatAssignment};
pub use tournament::{run_tournament, GameMetrics, TournamentOptions, TournamentReport};
pub use training::{run_training, TrainingConfig, TrainingOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(PathBuf),
    #[error(transparent)]
    Agent(#[from] catan_dqn::agent::AgentError),
    #[error(transparent)]
    Run(#[from] catan_core::RunError),
    #[error(transparent)]
    Log(#[from] catan_core::log::LogError),
    #[error(transparent)]
    Forest(#[from] catan_baselines::ForestError),
    #[error(transparent)]
    Corpus(#[from] catan_baselines::CorpusError),
    #[error(transparent)]
    Protocol(#[from] protocol::ProtocolError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
