//! Deficit-driven rule-based trader.
//!
//! The player saves for the build chosen by [`planner::plan`]. Cards beyond
//! that build's cost are surplus. Offers trade surplus for the scarcest
//! missing resource; replies accept when the incoming cards fill a gap and
//! the requested card is surplus.

use catan_core::actions::{offers, ActionMask, Negotiation, OfferTemplate, ReplyAction, COUNTER_INDEX};
use catan_core::planner::{self, needs_by_scarcity, weighted_deficit, Plan};
use catan_core::policy::{DecisionContext, PolicyError, TradePolicy};
use catan_core::{GameState, PlayerId, ResourceSet};

/// The offer a heuristic player would open with, if any.
///
/// Receivables are tried from scarcest to most plentiful; for each, the
/// legal, not yet rejected template paying only with surplus that leaves the
/// smallest weighted deficit wins, then fewest givables, then lowest index.
pub fn choose_offer(
    plan: &Plan,
    held: &ResourceSet,
    production: &[u32; 5],
    mask: &ActionMask,
    rejected: &[OfferTemplate],
) -> Option<OfferTemplate> {
    let deficit = plan.deficit(held);
    let surplus = plan.surplus(held);
    for receive in needs_by_scarcity(&deficit, production) {
        let best = offers()
            .iter()
            .enumerate()
            .filter(|(i, t)| {
                t.receive == receive && mask.is_legal(*i) && surplus.contains(&t.givables()) && !rejected.contains(t)
            })
            .min_by_key(|(i, t)| {
                let mut after = held.saturating_sub(&t.givables());
                after[t.receive] += 1;
                (weighted_deficit(&plan.deficit(&after), production), t.num_givables(), *i)
            });
        if let Some((_, t)) = best {
            return Some(*t);
        }
    }
    None
}

/// Reply to `offer`: accept when it fills a gap and costs only surplus;
/// counter when the cards are wanted but the price is not affordable.
pub fn choose_reply(plan: &Plan, held: &ResourceSet, offer: &OfferTemplate, mask: &ActionMask, has_counter: bool) -> ReplyAction {
    let deficit = plan.deficit(held);
    let wanted = deficit.saturating_sub(&offer.givables()) != deficit;
    let affordable = plan.surplus(held)[offer.receive] > 0;
    if wanted && affordable && mask.is_legal(ReplyAction::Accept.index()) {
        ReplyAction::Accept
    } else if wanted && has_counter && mask.is_legal(COUNTER_INDEX) {
        ReplyAction::Counteroffer
    } else {
        ReplyAction::Reject
    }
}

fn own_offer(state: &GameState, player: PlayerId, mask: &ActionMask, rejected: &[OfferTemplate]) -> Option<OfferTemplate> {
    let plan = planner::plan(state, player);
    let production = planner::production_pips(state, player);
    choose_offer(&plan, &state.players[player].resources, &production, mask, rejected)
}

/// Heuristic decision for any negotiation phase; deterministic in the state.
pub fn heuristic_decision(ctx: &DecisionContext<'_>) -> Option<usize> {
    let state = ctx.state;
    match ctx.phase {
        Negotiation::Offer => match own_offer(state, ctx.player, ctx.mask, ctx.rejected) {
            Some(t) => Some(t.index()),
            // A counter must name an offer; only reached if the reply
            // below was overridden by a caller.
            None if ctx.countering.is_some() => ctx.mask.legal_indices().next(),
            None => None,
        },
        Negotiation::Reply { offer, .. } => {
            let plan = planner::plan(state, ctx.player);
            let held = state.players[ctx.player].resources;
            let offer_mask = catan_core::actions::legal_offer_mask(state, ctx.player);
            let has_counter = own_offer(state, ctx.player, &offer_mask, &[]).is_some();
            Some(choose_reply(&plan, &held, &offer, ctx.mask, has_counter).index())
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPolicy;

impl TradePolicy for HeuristicPolicy {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        Ok(heuristic_decision(ctx))
    }
}
