//! Built-in, non-trading behaviour shared by every seat: setup placement,
//! robber and discard choices, the build plan and the build phase.
//!
//! Trading policies only decide offers and replies; everything here runs
//! identically for all of them.

use std::collections::VecDeque;

use crate::board::{topology, Building, EdgeId, HexId, NodeId, PlayerId, NUM_HEXES, NUM_NODES};
use crate::game::{Build, BuildKind, DevCard, GameState, NUM_PLAYERS};
use crate::resources::{ResourceKind, ResourceSet};

/// Highest pip-sum node that satisfies the distance rule.
pub fn setup_node(state: &GameState) -> NodeId {
    (0..NUM_NODES)
        .filter(|&n| state.board.satisfies_distance_rule(n))
        .max_by_key(|&n| (state.board.node_pips(n), std::cmp::Reverse(n)))
        .expect("a free node always exists during setup")
}

/// Road from `node` toward the free neighbour with the best pip-sum.
pub fn setup_road(state: &GameState, node: NodeId) -> EdgeId {
    let t = topology();
    t.node_edges[node]
        .iter()
        .copied()
        .filter(|&e| state.board.edges[e].is_none())
        .max_by_key(|&e| {
            let [a, b] = t.edge_nodes[e];
            let other = if a == node { b } else { a };
            (state.board.node_pips(other), std::cmp::Reverse(e))
        })
        .expect("a fresh settlement has a free edge")
}

/// Discard `n` cards, always from the most-held kind.
pub fn choose_discard(held: &ResourceSet, n: u32) -> ResourceSet {
    let mut left = *held;
    let mut out = ResourceSet::EMPTY;
    for _ in 0..n {
        let Some(k) = left.most_held() else { break };
        left[k] -= 1;
        out[k] += 1;
    }
    out
}

fn leading_opponent(state: &GameState, player: PlayerId) -> PlayerId {
    (0..NUM_PLAYERS)
        .filter(|&p| p != player)
        .max_by_key(|&p| {
            let ps = &state.players[p];
            (ps.victory_points, ps.resources.total(), std::cmp::Reverse(p))
        })
        .expect("three opponents")
}

/// Robber target and victim for `player`.
///
/// Prefers the highest-pip hex next to the leading opponent that does not
/// touch the mover; the victim is the adjacent opponent holding most cards.
pub fn choose_robber(state: &GameState, player: PlayerId) -> (HexId, Option<PlayerId>) {
    let leader = leading_opponent(state, player);
    let board = &state.board;
    let candidates = |pred: &dyn Fn(HexId) -> bool| {
        (0..NUM_HEXES)
            .filter(|&h| h != state.robber && !board.player_touches_hex(player, h) && pred(h))
            .max_by_key(|&h| (board.hexes[h].pips(), std::cmp::Reverse(h)))
    };
    let hex = candidates(&|h| board.player_touches_hex(leader, h))
        .or_else(|| candidates(&|_| true))
        .unwrap_or_else(|| {
            // Every other hex touches the mover; pick the one hurting it least.
            (0..NUM_HEXES)
                .filter(|&h| h != state.robber)
                .min_by_key(|&h| (board.hexes[h].pips(), h))
                .expect("19 hexes")
        });
    let victim = (0..NUM_PLAYERS)
        .filter(|&p| p != player && board.player_touches_hex(p, hex) && state.players[p].resources.total() > 0)
        .max_by_key(|&p| (state.players[p].resources.total(), std::cmp::Reverse(p)));
    (hex, victim)
}

/// Per-resource production weight: sum of pips over own buildings
/// (cities count twice), ignoring the robbed hex.
pub fn production_pips(state: &GameState, player: PlayerId) -> [u32; 5] {
    let t = topology();
    let mut out = [0u32; 5];
    for (h, hex) in state.board.hexes.iter().enumerate() {
        if h == state.robber {
            continue;
        }
        let Some(r) = hex.terrain.resource() else { continue };
        for &n in &t.hex_nodes[h] {
            match state.board.nodes[n] {
                Some((p, Building::Settlement)) if p == player => out[r.index()] += hex.pips(),
                Some((p, Building::City)) if p == player => out[r.index()] += 2 * hex.pips(),
                _ => {}
            }
        }
    }
    out
}

/// Nodes where `player` could place a settlement if it had the cards.
pub fn settlement_spots(state: &GameState, player: PlayerId) -> Vec<NodeId> {
    (0..NUM_NODES)
        .filter(|&n| state.can_place(player, Build::Settlement(n)))
        .collect()
}

/// First road of a shortest free path from the player's network to the best
/// settlement spot within three roads; `None` if nothing is reachable.
pub fn road_toward_spot(state: &GameState, player: PlayerId) -> Option<EdgeId> {
    let t = topology();
    let board = &state.board;
    // BFS over nodes; each frontier entry remembers the first edge used.
    let mut seen = [false; NUM_NODES];
    let mut queue: VecDeque<(NodeId, u32, Option<EdgeId>)> = VecDeque::new();
    for (n, seen_n) in seen.iter_mut().enumerate() {
        let own_building = board.owner_at(n) == Some(player);
        let on_road = board.owner_at(n).is_none() && t.node_edges[n].iter().any(|&e| board.edges[e] == Some(player));
        if own_building || on_road {
            *seen_n = true;
            queue.push_back((n, 0, None));
        }
    }
    let mut best: Option<(u32, u32, EdgeId)> = None;
    while let Some((n, depth, first)) = queue.pop_front() {
        if let Some(first) = first {
            if board.satisfies_distance_rule(n) {
                let score = board.node_pips(n) * 4 / (depth + 1);
                let better = match best {
                    None => true,
                    Some((s, d, e)) => (score, std::cmp::Reverse(depth), std::cmp::Reverse(first)) > (s, std::cmp::Reverse(d), std::cmp::Reverse(e)),
                };
                if better {
                    best = Some((score, depth, first));
                }
            }
        }
        if depth == 3 {
            continue;
        }
        if first.is_some() && board.nodes[n].is_some() {
            continue;
        }
        for &e in &t.node_edges[n] {
            if board.edges[e].is_some() {
                continue;
            }
            let [a, b] = t.edge_nodes[e];
            let next = if a == n { b } else { a };
            if seen[next] || matches!(board.owner_at(next), Some(o) if o != player) {
                continue;
            }
            seen[next] = true;
            queue.push_back((next, depth + 1, first.or(Some(e))));
        }
    }
    best.map(|(_, _, e)| e)
}

/// The build a player is currently saving for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plan {
    pub target: Option<BuildKind>,
    /// Cost of the target (empty when there is none).
    pub need: ResourceSet,
}

impl Plan {
    pub fn deficit(&self, held: &ResourceSet) -> ResourceSet {
        self.need.saturating_sub(held)
    }

    /// Cards held beyond what the plan needs.
    pub fn surplus(&self, held: &ResourceSet) -> ResourceSet {
        held.saturating_sub(&self.need)
    }
}

/// Deficit weighted by how slowly the player produces each missing kind.
pub fn weighted_deficit(deficit: &ResourceSet, production: &[u32; 5]) -> u32 {
    deficit
        .iter()
        .map(|(k, n)| n * 36 / (1 + production[k.index()]))
        .sum()
}

/// Cheapest feasible target by pip-weighted deficit: city or settlement
/// (a road when no settlement spot is reachable yet), else a development card.
pub fn plan(state: &GameState, player: PlayerId) -> Plan {
    let p = &state.players[player];
    let production = production_pips(state, player);
    let mut candidates: Vec<BuildKind> = Vec::new();
    let has_settlement = state.board.nodes.contains(&Some((player, Building::Settlement)));
    if p.cities_left > 0 && has_settlement {
        candidates.push(BuildKind::City);
    }
    if p.settlements_left > 0 {
        if !settlement_spots(state, player).is_empty() {
            candidates.push(BuildKind::Settlement);
        } else if p.roads_left > 0 && road_toward_spot(state, player).is_some() {
            candidates.push(BuildKind::Road);
        }
    }
    if candidates.is_empty() && !state.dev_deck.is_empty() {
        candidates.push(BuildKind::DevCard);
    }
    let target = candidates
        .into_iter()
        .enumerate()
        .min_by_key(|&(i, k)| (weighted_deficit(&state.cost(k).saturating_sub(&p.resources), &production), i))
        .map(|(_, k)| k);
    Plan {
        target,
        need: target.map_or(ResourceSet::EMPTY, |k| state.cost(k)),
    }
}

/// Needed kinds ordered from scarcest (lowest own production) to most common.
pub fn needs_by_scarcity(deficit: &ResourceSet, production: &[u32; 5]) -> Vec<ResourceKind> {
    let mut needed: Vec<ResourceKind> = deficit.iter().filter(|&(_, n)| n > 0).map(|(k, _)| k).collect();
    needed.sort_by_key(|&k| (production[k.index()], std::cmp::Reverse(deficit[k]), k));
    needed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildAction {
    Build(Build),
    Bank { give: ResourceKind, receive: ResourceKind },
}

fn best_node(state: &GameState, nodes: impl Iterator<Item = NodeId>) -> Option<NodeId> {
    nodes.max_by_key(|&n| (state.board.node_pips(n), std::cmp::Reverse(n)))
}

/// Next step of the build phase, or `None` when the player is done.
pub fn next_build_action(state: &GameState, player: PlayerId) -> Option<BuildAction> {
    let legal = state.legal_builds(player);
    let city = best_node(state, legal.iter().filter_map(|b| match b {
        Build::City(n) => Some(*n),
        _ => None,
    }));
    if let Some(n) = city {
        return Some(BuildAction::Build(Build::City(n)));
    }
    let settlement = best_node(state, legal.iter().filter_map(|b| match b {
        Build::Settlement(n) => Some(*n),
        _ => None,
    }));
    if let Some(n) = settlement {
        return Some(BuildAction::Build(Build::Settlement(n)));
    }

    let plan = plan(state, player);
    let held = state.players[player].resources;

    if plan.target == Some(BuildKind::Road) {
        if let Some(e) = road_toward_spot(state, player) {
            if legal.contains(&Build::Road(e)) {
                return Some(BuildAction::Build(Build::Road(e)));
            }
        }
    }

    if legal.contains(&Build::DevCard) {
        let after = held.saturating_sub(&state.cost(BuildKind::DevCard));
        if plan.target == Some(BuildKind::DevCard) || plan.deficit(&after) == plan.deficit(&held) {
            return Some(BuildAction::Build(Build::DevCard));
        }
    }

    let deficit = plan.deficit(&held);
    if !deficit.is_empty() {
        let production = production_pips(state, player);
        let surplus = plan.surplus(&held);
        let give = surplus
            .iter()
            .filter(|&(_, n)| n >= 4)
            .max_by_key(|&(k, n)| (n, std::cmp::Reverse(k)))
            .map(|(k, _)| k);
        if let (Some(give), Some(&receive)) = (give, needs_by_scarcity(&deficit, &production).first()) {
            return Some(BuildAction::Bank { give, receive });
        }
    }
    None
}

/// Play a knight when the robber sits on one of our hexes or when it
/// would take the largest army.
pub fn should_play_knight(state: &GameState, player: PlayerId) -> bool {
    if !state.has_playable_knight(player) {
        return false;
    }
    if state.board.player_touches_hex(player, state.robber) && state.board.hexes[state.robber].number.is_some() {
        return true;
    }
    let mine = state.players[player].knights_played + 1;
    let holder_count = state.largest_army.map_or(2, |h| state.players[h].knights_played);
    state.largest_army != Some(player) && mine >= 3 && mine > holder_count
}

pub fn holds_knight(state: &GameState, player: PlayerId) -> bool {
    state.players[player].dev_cards.iter().any(|c| c.card == DevCard::Knight)
}
