//! Settlers of Catan rules engine with a pluggable trading phase: the
//! 73-action trade space, state features, the turn loop and its event log.

pub mod actions;
pub mod board;
pub mod features;
pub mod game;
pub mod log;
pub mod planner;
pub mod policy;
pub mod resources;
pub mod runner;

pub use actions::{ActionMask, OfferTemplate, ReplyAction, TradeAction};
pub use board::PlayerId;
pub use game::{Build, BuildKind, GameError, GameState, Rules, Status, NUM_PLAYERS};
pub use policy::{DecisionContext, PolicyError, TradePolicy};
pub use runner::{play_game, GameRecord, RunError};
pub use resources::{ResourceKind, ResourceSet};
