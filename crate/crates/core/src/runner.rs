//! The turn loop: knight, roll, trading, building.
//!
//! Trading follows a broadcast protocol. The player to move opens offers one
//! at a time; each offer goes to the three opponents in turn order and the
//! first Accept executes it. A Counteroffer makes the responder propose an
//! offer of its own back to the proposer, who may only accept or reject it;
//! if that fails the original offer moves on to the next responder. Trading
//! stops when the player passes, has no legal offer, or hits the per-turn
//! caps in [`Rules`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::actions::{
    apply_negotiation, legal_offer_mask, ActionMask, Negotiation, OfferTemplate, ReplyAction, TradeAction,
};
use crate::board::{topology, PlayerId, NUM_NODES};
use crate::game::{Build, GameError, GameState, Rules, Status, NUM_PLAYERS};
use crate::log::{Event, Tally};
use crate::planner::{self, BuildAction};
use crate::policy::{DecisionContext, PolicyError, TradePolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("player {player} chose action {index}, which is not legal here")]
    IllegalAction { player: PlayerId, index: usize },
    #[error("player {player} passed where a decision is required")]
    MissingDecision { player: PlayerId },
    #[error("player {player}: {source}")]
    Policy { player: PlayerId, source: PolicyError },
    #[error(transparent)]
    Engine(#[from] GameError),
}

/// Everything retained from one finished game.
#[derive(Debug, Clone)]
pub struct GameRecord {
    pub seed: u64,
    pub status: Status,
    pub turns: u32,
    pub final_state: GameState,
    /// Counted while playing, independently of the event log.
    pub tallies: [Tally; NUM_PLAYERS],
    pub events: Vec<Event>,
}

impl GameRecord {
    pub fn winner(&self) -> Option<PlayerId> {
        match self.status {
            Status::Won(p) => Some(p),
            _ => None,
        }
    }
}

/// Dice and steal randomness for a game, independent of the board stream.
pub fn dice_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

struct Game<'s, 'p> {
    state: GameState,
    seats: &'s mut [Box<dyn TradePolicy + 'p>],
    events: Vec<Event>,
    tallies: [Tally; NUM_PLAYERS],
}

/// Plays one game to completion with the four given seats.
pub fn play_game(seed: u64, rules: Rules, seats: &mut [Box<dyn TradePolicy + '_>]) -> Result<GameRecord, RunError> {
    assert_eq!(seats.len(), NUM_PLAYERS, "a game needs exactly four seats");
    let state = GameState::with_rules(seed, rules);
    let mut game = Game {
        events: vec![Event::Game { seed, rules }],
        state,
        seats,
        tallies: [Tally::default(); NUM_PLAYERS],
    };
    game.log_setup();
    let mut rng = dice_rng(seed);
    while game.state.status() == Status::Ongoing {
        game.play_turn(&mut rng)?;
    }
    let status = game.state.status();
    let turns = game.state.turn;
    game.events.push(Event::Result { status, turns });
    for p in 0..NUM_PLAYERS {
        game.seats[p].game_over(&game.state, p).map_err(|source| RunError::Policy { player: p, source })?;
    }
    Ok(GameRecord {
        seed,
        status,
        turns,
        final_state: game.state,
        tallies: game.tallies,
        events: game.events,
    })
}

impl Game<'_, '_> {
    fn log_setup(&mut self) {
        let t = topology();
        for n in 0..NUM_NODES {
            if let Some((player, _)) = self.state.board.nodes[n] {
                let edge = t.node_edges[n]
                    .iter()
                    .copied()
                    .find(|&e| self.state.board.edges[e] == Some(player))
                    .expect("setup settlements come with a road");
                self.events.push(Event::Setup { player, node: n, edge });
            }
        }
    }

    fn play_turn(&mut self, rng: &mut ChaCha8Rng) -> Result<(), RunError> {
        let p = self.state.current_player;
        self.events.push(Event::Turn { turn: self.state.turn, player: p });

        if planner::should_play_knight(&self.state, p) {
            let mv = self.state.heuristic_robber_move(p, rng);
            self.state.play_knight(p, mv.hex, mv.victim, mv.stolen)?;
            self.events.push(Event::Knight { player: p, hex: mv.hex, victim: mv.victim, stolen: mv.stolen });
            if self.state.is_terminal() {
                return Ok(());
            }
        }

        let roll = self.state.roll_and_produce(rng);
        self.events.push(Event::Roll { player: p, total: roll.total });
        for (player, cards) in roll.produced.iter().enumerate() {
            if !cards.is_empty() {
                self.events.push(Event::Produce { player, cards: *cards });
            }
        }
        for &(player, cards) in &roll.discards {
            self.events.push(Event::Discard { player, cards });
        }
        if let Some(mv) = roll.robber {
            self.events.push(Event::Robber { player: p, hex: mv.hex, victim: mv.victim, stolen: mv.stolen });
        }

        self.trade_phase(p)?;
        self.build_phase(p)?;
        if self.state.is_terminal() {
            return Ok(());
        }
        self.events.push(Event::End { player: p });
        self.state.end_turn();
        Ok(())
    }

    fn ask(
        &mut self,
        player: PlayerId,
        phase: Negotiation,
        mask: &ActionMask,
        rejected: &[OfferTemplate],
        countering: Option<(PlayerId, OfferTemplate)>,
    ) -> Result<Option<TradeAction>, RunError> {
        let ctx = DecisionContext { state: &self.state, player, phase, mask, rejected, countering };
        let decision = self.seats[player].decide(&ctx).map_err(|source| RunError::Policy { player, source })?;
        let Some(index) = decision else {
            return Ok(None);
        };
        if !mask.is_legal(index) {
            return Err(RunError::IllegalAction { player, index });
        }
        let action = TradeAction::from_index(index).map_err(|_| RunError::IllegalAction { player, index })?;
        apply_negotiation(&mut self.state, player, &phase, action)?;
        Ok(Some(action))
    }

    fn reply(&mut self, player: PlayerId, phase: Negotiation) -> Result<ReplyAction, RunError> {
        let mask = phase.mask(&self.state, player);
        match self.ask(player, phase, &mask, &[], None)? {
            Some(TradeAction::Reply(r)) => Ok(r),
            Some(a) => Err(RunError::IllegalAction { player, index: a.index() }),
            None => Err(RunError::MissingDecision { player }),
        }
    }

    fn trade_phase(&mut self, p: PlayerId) -> Result<(), RunError> {
        let rules = self.state.rules;
        let mut rejected: Vec<OfferTemplate> = Vec::new();
        let mut made = 0;
        while (rejected.len() as u32) < rules.max_unaccepted_offers && made < rules.max_offers_per_turn {
            let mask = legal_offer_mask(&self.state, p);
            if mask.is_empty() {
                break;
            }
            let offer = match self.ask(p, Negotiation::Offer, &mask, &rejected, None)? {
                Some(TradeAction::Offer(t)) => t,
                Some(a) => return Err(RunError::IllegalAction { player: p, index: a.index() }),
                None => break,
            };
            made += 1;
            self.tallies[p].offers_made += 1;
            self.events.push(Event::Offer { player: p, offer });
            if !self.broadcast(p, offer)? {
                rejected.push(offer);
            }
        }
        Ok(())
    }

    /// Offers `offer` to each opponent in turn; true if a trade happened.
    fn broadcast(&mut self, p: PlayerId, offer: OfferTemplate) -> Result<bool, RunError> {
        for k in 1..NUM_PLAYERS {
            let r = (p + k) % NUM_PLAYERS;
            let phase = Negotiation::Reply { proposer: p, offer, allow_counter: true };
            let reply = self.reply(r, phase)?;
            self.events.push(Event::Reply { player: r, proposer: p, reply });
            match reply {
                ReplyAction::Accept => {
                    self.record_trade(p, r, offer);
                    return Ok(true);
                }
                ReplyAction::Reject => {}
                ReplyAction::Counteroffer => {
                    let mask = legal_offer_mask(&self.state, r);
                    let counter = match self.ask(r, Negotiation::Offer, &mask, &[], Some((p, offer)))? {
                        Some(TradeAction::Offer(t)) => t,
                        Some(a) => return Err(RunError::IllegalAction { player: r, index: a.index() }),
                        None => return Err(RunError::MissingDecision { player: r }),
                    };
                    self.tallies[r].offers_made += 1;
                    self.events.push(Event::Counter { player: r, proposer: p, offer: counter });
                    let phase = Negotiation::Reply { proposer: r, offer: counter, allow_counter: false };
                    let answer = self.reply(p, phase)?;
                    self.events.push(Event::Reply { player: p, proposer: r, reply: answer });
                    if answer == ReplyAction::Accept {
                        self.record_trade(r, p, counter);
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    fn record_trade(&mut self, proposer: PlayerId, acceptor: PlayerId, offer: OfferTemplate) {
        self.tallies[proposer].successful_offers += 1;
        self.tallies[proposer].trades += 1;
        self.tallies[acceptor].trades += 1;
        self.events.push(Event::Trade { proposer, acceptor, offer });
    }

    fn build_phase(&mut self, p: PlayerId) -> Result<(), RunError> {
        while !self.state.is_terminal() {
            let Some(action) = planner::next_build_action(&self.state, p) else { break };
            match action {
                BuildAction::Build(build) => {
                    let drawn = self.state.apply_build(p, build)?;
                    match (build, drawn) {
                        (Build::DevCard, Some(card)) => {
                            self.tallies[p].cards_bought += 1;
                            self.events.push(Event::Buy { player: p, card });
                        }
                        _ => {
                            self.tallies[p].pieces_built += 1;
                            self.events.push(Event::Build { player: p, build });
                        }
                    }
                }
                BuildAction::Bank { give, receive } => {
                    self.state.bank_trade(p, give, receive)?;
                    self.events.push(Event::Bank { player: p, give, receive });
                }
            }
        }
        Ok(())
    }
}

