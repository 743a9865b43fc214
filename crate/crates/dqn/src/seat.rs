//! Plugs a [`Learner`] into a game seat.

use catan_core::actions::ActionMask;
use catan_core::features::featurize;
use catan_core::policy::{DecisionContext, PolicyError, TradePolicy};
use catan_core::{GameState, PlayerId};

use crate::agent::{compute_reward, AgentConfig, DecisionKind, Learner, Observation};

/// Trading seat driven by a learner. It featurizes the state, computes the
/// reward of its previous decision from the change in victory points, and
/// never passes while an action is legal.
pub struct DrlSeat<L> {
    pub learner: L,
    rewards: AgentConfig,
    /// Kind of the previous decision and the points held when it was made.
    last: Option<(DecisionKind, u32)>,
}

impl<L: Learner> DrlSeat<L> {
    /// `rewards` supplies the reward weights; other fields are unused.
    pub fn new(learner: L, rewards: &AgentConfig) -> Self {
        DrlSeat { learner, rewards: rewards.clone(), last: None }
    }

    fn observe(&self, state: &GameState, player: PlayerId, mask: ActionMask) -> Observation {
        let points = state.players[player].victory_points;
        let reward = self.last.map_or(0.0, |(kind, before)| {
            compute_reward(kind, points as i64 - before as i64, points, &self.rewards)
        });
        Observation { features: featurize(state, player).to_vec(), mask, reward }
    }
}

impl<L: Learner> TradePolicy for DrlSeat<L> {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        let obs = self.observe(ctx.state, ctx.player, *ctx.mask);
        let action = self.learner.act(&obs)?;
        self.last = Some((DecisionKind::of_action(action), ctx.state.players[ctx.player].victory_points));
        Ok(Some(action))
    }

    fn game_over(&mut self, state: &GameState, player: PlayerId) -> Result<(), PolicyError> {
        let obs = self.observe(state, player, ActionMask::none());
        self.last = None;
        self.learner.end_episode(&obs)
    }
}
