//! The 73-way trade action space: 70 offer templates plus three replies.
//!
//! Offers are written as mnemonics such as `C4D` (one clay for one wood) or
//! `OO4W` (two ore for one wheat). Letters: C=clay, O=ore, S=sheep, W=wheat,
//! D=wood. Templates are indexed in lexicographic order of their mnemonics,
//! which is also the order of the network's output layer.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::PlayerId;
use crate::game::{GameError, GameState};
use crate::resources::{ResourceKind, ResourceSet};

pub const NUM_OFFERS: usize = 70;
pub const NUM_ACTIONS: usize = 73;
pub const ACCEPT_INDEX: usize = 70;
pub const REJECT_INDEX: usize = 71;
pub const COUNTER_INDEX: usize = 72;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("action mask has no legal action")]
    EmptyMask,
    #[error("action index {0} out of range")]
    BadIndex(usize),
    #[error("cannot parse trade mnemonic {0:?}")]
    BadMnemonic(String),
}

/// One or two givables for one receivable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OfferTemplate {
    /// Givables in canonical order; the second slot is empty for single offers.
    pub give: [Option<ResourceKind>; 2],
    pub receive: ResourceKind,
}

impl OfferTemplate {
    fn new(first: ResourceKind, second: Option<ResourceKind>, receive: ResourceKind) -> Self {
        let give = match second {
            Some(s) if s < first => [Some(s), Some(first)],
            _ => [Some(first), second],
        };
        OfferTemplate { give, receive }
    }

    pub fn givables(&self) -> ResourceSet {
        let mut s = ResourceSet::EMPTY;
        for k in self.give.iter().flatten() {
            s[*k] += 1;
        }
        s
    }

    pub fn num_givables(&self) -> usize {
        self.give.iter().flatten().count()
    }

    pub fn gives(&self, kind: ResourceKind) -> bool {
        self.give.iter().flatten().any(|&k| k == kind)
    }

    pub fn mnemonic(&self) -> String {
        let mut s: String = self.give.iter().flatten().map(|k| k.letter()).collect();
        s.push('4');
        s.push(self.receive.letter());
        s
    }

    /// Position in the action space (0..70).
    pub fn index(&self) -> usize {
        offers()
            .iter()
            .position(|o| o == self)
            .expect("every valid template is enumerated")
    }

    pub fn from_index(i: usize) -> Option<OfferTemplate> {
        offers().get(i).copied()
    }
}

impl fmt::Display for OfferTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.mnemonic())
    }
}

impl FromStr for OfferTemplate {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ActionError::BadMnemonic(s.to_string());
        let (give, receive) = s.split_once('4').ok_or_else(bad)?;
        let mut recv = receive.chars();
        let receive = recv.next().and_then(ResourceKind::from_letter).ok_or_else(bad)?;
        if recv.next().is_some() {
            return Err(bad());
        }
        let kinds: Vec<ResourceKind> = give.chars().map(ResourceKind::from_letter).collect::<Option<_>>().ok_or_else(bad)?;
        let t = match kinds.as_slice() {
            [a] => OfferTemplate::new(*a, None, receive),
            [a, b] => OfferTemplate::new(*a, Some(*b), receive),
            _ => return Err(bad()),
        };
        // Only the canonical spelling is accepted, so parse(print(t)) == t and print(parse(s)) == s.
        if t.gives(receive) || t.mnemonic() != s {
            return Err(bad());
        }
        Ok(t)
    }
}

/// All 70 templates in action-index order.
pub fn offers() -> &'static [OfferTemplate; NUM_OFFERS] {
    static OFFERS: OnceLock<[OfferTemplate; NUM_OFFERS]> = OnceLock::new();
    OFFERS.get_or_init(|| {
        let mut all = Vec::with_capacity(NUM_OFFERS);
        for (i, &a) in ResourceKind::ALL.iter().enumerate() {
            for &r in &ResourceKind::ALL {
                if r == a {
                    continue;
                }
                all.push(OfferTemplate::new(a, None, r));
                for &b in &ResourceKind::ALL[i..] {
                    if b != r {
                        all.push(OfferTemplate::new(a, Some(b), r));
                    }
                }
            }
        }
        all.sort_by_key(|t| t.mnemonic());
        all.try_into().expect("exactly 70 templates")
    })
}

/// Alias kept for readability at call sites.
pub fn enumerate_offers() -> &'static [OfferTemplate; NUM_OFFERS] {
    offers()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReplyAction {
    Accept,
    Reject,
    Counteroffer,
}

impl ReplyAction {
    pub const ALL: [ReplyAction; 3] = [ReplyAction::Accept, ReplyAction::Reject, ReplyAction::Counteroffer];

    pub fn index(self) -> usize {
        match self {
            ReplyAction::Accept => ACCEPT_INDEX,
            ReplyAction::Reject => REJECT_INDEX,
            ReplyAction::Counteroffer => COUNTER_INDEX,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReplyAction::Accept => "accept",
            ReplyAction::Reject => "reject",
            ReplyAction::Counteroffer => "counteroffer",
        }
    }

    pub fn from_name(s: &str) -> Option<ReplyAction> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TradeAction {
    Offer(OfferTemplate),
    Reply(ReplyAction),
}

impl TradeAction {
    pub fn index(self) -> usize {
        match self {
            TradeAction::Offer(o) => o.index(),
            TradeAction::Reply(r) => r.index(),
        }
    }

    pub fn from_index(i: usize) -> Result<TradeAction, ActionError> {
        match i {
            0..=69 => Ok(TradeAction::Offer(offers()[i])),
            ACCEPT_INDEX => Ok(TradeAction::Reply(ReplyAction::Accept)),
            REJECT_INDEX => Ok(TradeAction::Reply(ReplyAction::Reject)),
            COUNTER_INDEX => Ok(TradeAction::Reply(ReplyAction::Counteroffer)),
            _ => Err(ActionError::BadIndex(i)),
        }
    }
}

impl fmt::Display for TradeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TradeAction::Offer(o) => write!(f, "{o}"),
            TradeAction::Reply(r) => f.write_str(r.name()),
        }
    }
}

/// Legality bits over the 73 actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionMask(pub [bool; NUM_ACTIONS]);

impl Default for ActionMask {
    fn default() -> Self {
        ActionMask([false; NUM_ACTIONS])
    }
}

impl ActionMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        ActionMask([true; NUM_ACTIONS])
    }

    pub fn is_legal(&self, i: usize) -> bool {
        self.0.get(i).copied().unwrap_or(false)
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn legal_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// `0`/`1` string of length 73, as used on the wire.
    pub fn to_bits(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bits(s: &str) -> Option<ActionMask> {
        if s.len() != NUM_ACTIONS {
            return None;
        }
        let mut m = ActionMask::none();
        for (i, c) in s.chars().enumerate() {
            m.0[i] = match c {
                '0' => false,
                '1' => true,
                _ => return None,
            };
        }
        Some(m)
    }
}

/// Offer templates the player can cover with its holdings.
pub fn legal_offer_mask(state: &GameState, player: PlayerId) -> ActionMask {
    let held = state.players[player].resources;
    let mut mask = ActionMask::none();
    for (i, t) in offers().iter().enumerate() {
        mask.0[i] = held.contains(&t.givables());
    }
    mask
}

/// Reply bits for `player` facing `offer`: Reject always; Accept when the
/// player holds the requested card; Counteroffer when it could make an
/// offer of its own and counters are allowed at this depth.
pub fn reply_mask(state: &GameState, player: PlayerId, offer: &OfferTemplate, allow_counter: bool) -> ActionMask {
    let mut mask = ActionMask::none();
    mask.0[REJECT_INDEX] = true;
    mask.0[ACCEPT_INDEX] = state.players[player].resources[offer.receive] > 0;
    mask.0[COUNTER_INDEX] = allow_counter && !legal_offer_mask(state, player).is_empty();
    mask
}

/// Highest-valued legal action; ties go to the lowest index.
pub fn masked_argmax(q: &[f64], mask: &ActionMask) -> Result<usize, ActionError> {
    let mut best: Option<(usize, f64)> = None;
    for i in mask.legal_indices() {
        let v = q[i];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(ActionError::EmptyMask)
}

/// Where in a negotiation a decision is being made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Negotiation {
    /// The player may open an offer.
    Offer,
    /// `proposer` has offered `offer` to the deciding player.
    Reply {
        proposer: PlayerId,
        offer: OfferTemplate,
        allow_counter: bool,
    },
}

impl Negotiation {
    pub fn mask(&self, state: &GameState, player: PlayerId) -> ActionMask {
        match self {
            Negotiation::Offer => legal_offer_mask(state, player),
            Negotiation::Reply { offer, allow_counter, .. } => reply_mask(state, player, offer, *allow_counter),
        }
    }
}

/// Engine-side execution of a negotiation action.
///
/// Offers are validated against the proposer's holdings (no cards move until
/// someone accepts); Accept executes the pending trade; Counteroffer requires
/// the player to be able to make an offer itself.
pub fn apply_negotiation(
    state: &mut GameState,
    player: PlayerId,
    phase: &Negotiation,
    action: TradeAction,
) -> Result<(), GameError> {
    match (phase, action) {
        (Negotiation::Offer, TradeAction::Offer(t)) => state.check_offer(player, &t.givables(), t.receive),
        (Negotiation::Offer, TradeAction::Reply(_)) => Err(GameError::NoPendingOffer),
        (Negotiation::Reply { .. }, TradeAction::Offer(_)) => Err(GameError::OfferPending),
        (Negotiation::Reply { proposer, offer, .. }, TradeAction::Reply(ReplyAction::Accept)) => {
            state.execute_trade(*proposer, player, &offer.givables(), offer.receive)
        }
        (Negotiation::Reply { .. }, TradeAction::Reply(ReplyAction::Reject)) => Ok(()),
        (Negotiation::Reply { allow_counter, .. }, TradeAction::Reply(ReplyAction::Counteroffer)) => {
            if !allow_counter {
                return Err(GameError::CounterNotAllowed);
            }
            let held = state.players[player].resources;
            if offers().iter().any(|t| held.contains(&t.givables())) {
                Ok(())
            } else {
                Err(GameError::InsufficientResources)
            }
        }
    }
}
