//! Trader whose offers pick the givable a random forest rates most likely;
//! replies follow the heuristic.

use std::sync::Arc;

use catan_core::actions::{offers, ActionMask, Negotiation, OfferTemplate};
use catan_core::planner::{self, needs_by_scarcity};
use catan_core::policy::{DecisionContext, PolicyError, TradePolicy};
use catan_core::{GameState, PlayerId, ResourceKind};

use crate::forest::RandomForest;
use crate::heuristic::heuristic_decision;

pub const EVIDENCE_DIM: usize = 9;

pub const EVIDENCE_NAMES: [&str; EVIDENCE_DIM] =
    ["clay", "ore", "sheep", "wheat", "wood", "roads", "settlements", "cities", "receivable"];

/// Held cards, pieces on the board and the wanted resource.
pub fn evidence(state: &GameState, player: PlayerId, receive: ResourceKind) -> [f64; EVIDENCE_DIM] {
    let p = &state.players[player];
    let mut x = [0.0; EVIDENCE_DIM];
    for (k, n) in p.resources.iter() {
        x[k.index()] = n as f64;
    }
    x[5] = (15 - p.roads_left) as f64;
    x[6] = (5 - p.settlements_left) as f64;
    x[7] = (4 - p.cities_left) as f64;
    x[8] = receive.index() as f64;
    x
}

/// Among legal, not yet rejected templates receiving `receive`, the one
/// built around the most probable givable: single card, then a pair of it,
/// then a mixed pair, lowest index within each.
pub fn offer_for(posterior: &[f64], receive: ResourceKind, mask: &ActionMask, rejected: &[OfferTemplate]) -> Option<OfferTemplate> {
    let usable: Vec<(usize, OfferTemplate)> = offers()
        .iter()
        .enumerate()
        .filter(|(i, t)| t.receive == receive && mask.is_legal(*i) && !rejected.contains(t))
        .map(|(i, t)| (i, *t))
        .collect();
    let best = ResourceKind::ALL
        .into_iter()
        .filter(|&y| usable.iter().any(|(_, t)| t.gives(y)))
        .max_by(|a, b| posterior[a.index()].total_cmp(&posterior[b.index()]).then(b.cmp(a)))?;
    usable
        .iter()
        .filter(|(_, t)| t.gives(best))
        .min_by_key(|(i, t)| {
            let shape = match t.give {
                [Some(_), None] => 0,
                [Some(a), Some(b)] if a == b => 1,
                _ => 2,
            };
            (shape, *i)
        })
        .map(|(_, t)| *t)
}

/// The forest's offer for the scarcest needed resource that has any
/// usable template, or `None` when the plan needs nothing.
pub fn supervised_offer(
    forest: &RandomForest,
    state: &GameState,
    player: PlayerId,
    mask: &ActionMask,
    rejected: &[OfferTemplate],
) -> Option<OfferTemplate> {
    let plan = planner::plan(state, player);
    let deficit = plan.deficit(&state.players[player].resources);
    let production = planner::production_pips(state, player);
    needs_by_scarcity(&deficit, &production).into_iter().find_map(|receive| {
        let posterior = forest.predict(&evidence(state, player, receive));
        offer_for(&posterior, receive, mask, rejected)
    })
}

#[derive(Debug, Clone)]
pub struct SupervisedPolicy {
    forest: Arc<RandomForest>,
}

impl SupervisedPolicy {
    pub fn new(forest: Arc<RandomForest>) -> Self {
        SupervisedPolicy { forest }
    }
}

impl TradePolicy for SupervisedPolicy {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        Ok(match ctx.phase {
            Negotiation::Offer => match supervised_offer(&self.forest, ctx.state, ctx.player, ctx.mask, ctx.rejected) {
                Some(t) => Some(t.index()),
                None if ctx.countering.is_some() => ctx.mask.legal_indices().next(),
                None => None,
            },
            Negotiation::Reply { .. } => heuristic_decision(ctx),
        })
    }
}
