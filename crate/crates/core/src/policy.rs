//! The interface every trading seat implements.

use thiserror::Error;

use crate::actions::{ActionMask, Negotiation, OfferTemplate};
use crate::board::PlayerId;
use crate::game::GameState;

/// Everything a policy sees when it has to make a trade decision.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub state: &'a GameState,
    pub player: PlayerId,
    pub phase: Negotiation,
    pub mask: &'a ActionMask,
    /// Offers this player already made this turn that nobody accepted.
    pub rejected: &'a [OfferTemplate],
    /// Set when the decision is the content of a counteroffer to
    /// `(proposer, original offer)`.
    pub countering: Option<(PlayerId, OfferTemplate)>,
}

impl DecisionContext<'_> {
    pub fn is_offer(&self) -> bool {
        matches!(self.phase, Negotiation::Offer)
    }
}

/// A policy that could not produce a decision (for example a lost
/// connection to a remote decision maker).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct PolicyError(pub String);

pub trait TradePolicy: Send {
    /// Index of a mask-legal action. `None` passes, which is only allowed
    /// when opening (not countering) an offer.
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError>;

    /// Called once per seat when the game ends.
    fn game_over(&mut self, _state: &GameState, _player: PlayerId) -> Result<(), PolicyError> {
        Ok(())
    }
}

impl<T: TradePolicy + ?Sized> TradePolicy for Box<T> {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        (**self).decide(ctx)
    }

    fn game_over(&mut self, state: &GameState, player: PlayerId) -> Result<(), PolicyError> {
        (**self).game_over(state, player)
    }
}

impl<T: TradePolicy + ?Sized> TradePolicy for &mut T {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        (**self).decide(ctx)
    }

    fn game_over(&mut self, state: &GameState, player: PlayerId) -> Result<(), PolicyError> {
        (**self).game_over(state, player)
    }
}
