//! Newline-delimited game event log and its replay.
//!
//! One record per line: an upper-case event kind followed by
//! space-separated fields. `-` marks an absent optional field.
//!
//! | kind    | fields                                                     |
//! |---------|------------------------------------------------------------|
//! | GAME    | seed turn_cap victory_target costs max_unaccepted max_offers |
//! | SETUP   | player node edge                                           |
//! | TURN    | turn player                                                |
//! | KNIGHT  | player hex victim stolen                                   |
//! | ROLL    | player total                                               |
//! | PRODUCE | player cards                                               |
//! | DISCARD | player cards                                               |
//! | ROBBER  | player hex victim stolen                                   |
//! | OFFER   | player mnemonic                                            |
//! | REPLY   | player proposer accept\|reject\|counteroffer               |
//! | COUNTER | player proposer mnemonic                                   |
//! | TRADE   | proposer acceptor mnemonic                                 |
//! | BANK    | player give receive                                        |
//! | BUILD   | player road\|settlement\|city location                     |
//! | BUY     | player card                                                |
//! | END     | player                                                     |
//! | RESULT  | won player turns \| capped turns                           |
//!
//! `cards` is a comma-separated count list in clay, ore, sheep, wheat, wood
//! order; resources are single letters (C, O, S, W, D). A COUNTER is an
//! offer made by `player` back to `proposer` only; a TRADE names whoever
//! proposed the executed offer first.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::actions::{OfferTemplate, ReplyAction};
use crate::board::{EdgeId, HexId, NodeId, PlayerId};
use crate::game::{Build, CostTable, DevCard, GameError, GameState, Rules, Status, NUM_PLAYERS};
use crate::resources::{ResourceKind, ResourceSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Game { seed: u64, rules: Rules },
    Setup { player: PlayerId, node: NodeId, edge: EdgeId },
    Turn { turn: u32, player: PlayerId },
    Knight { player: PlayerId, hex: HexId, victim: Option<PlayerId>, stolen: Option<ResourceKind> },
    Roll { player: PlayerId, total: u8 },
    Produce { player: PlayerId, cards: ResourceSet },
    Discard { player: PlayerId, cards: ResourceSet },
    Robber { player: PlayerId, hex: HexId, victim: Option<PlayerId>, stolen: Option<ResourceKind> },
    Offer { player: PlayerId, offer: OfferTemplate },
    Reply { player: PlayerId, proposer: PlayerId, reply: ReplyAction },
    Counter { player: PlayerId, proposer: PlayerId, offer: OfferTemplate },
    Trade { proposer: PlayerId, acceptor: PlayerId, offer: OfferTemplate },
    Bank { player: PlayerId, give: ResourceKind, receive: ResourceKind },
    Build { player: PlayerId, build: Build },
    Buy { player: PlayerId, card: DevCard },
    End { player: PlayerId },
    Result { status: Status, turns: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("log does not start with a GAME record")]
    MissingHeader,
    #[error("line {line}: {source}")]
    Rejected { line: usize, source: GameError },
    #[error("line {line}: replay diverged: {msg}")]
    Diverged { line: usize, msg: String },
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn costs_code(c: CostTable) -> &'static str {
    match c {
        CostTable::Standard => "standard",
        CostTable::Literal => "literal",
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Game { seed, rules } => write!(
                f,
                "GAME {seed} {} {} {} {} {}",
                rules.turn_cap,
                rules.victory_target,
                costs_code(rules.costs),
                rules.max_unaccepted_offers,
                rules.max_offers_per_turn
            ),
            Event::Setup { player, node, edge } => write!(f, "SETUP {player} {node} {edge}"),
            Event::Turn { turn, player } => write!(f, "TURN {turn} {player}"),
            Event::Knight { player, hex, victim, stolen } => {
                write!(f, "KNIGHT {player} {hex} {} {}", opt(victim), opt(&stolen.map(|k| k.letter())))
            }
            Event::Roll { player, total } => write!(f, "ROLL {player} {total}"),
            Event::Produce { player, cards } => write!(f, "PRODUCE {player} {}", cards.to_field()),
            Event::Discard { player, cards } => write!(f, "DISCARD {player} {}", cards.to_field()),
            Event::Robber { player, hex, victim, stolen } => {
                write!(f, "ROBBER {player} {hex} {} {}", opt(victim), opt(&stolen.map(|k| k.letter())))
            }
            Event::Offer { player, offer } => write!(f, "OFFER {player} {offer}"),
            Event::Reply { player, proposer, reply } => write!(f, "REPLY {player} {proposer} {}", reply.name()),
            Event::Counter { player, proposer, offer } => write!(f, "COUNTER {player} {proposer} {offer}"),
            Event::Trade { proposer, acceptor, offer } => write!(f, "TRADE {proposer} {acceptor} {offer}"),
            Event::Bank { player, give, receive } => write!(f, "BANK {player} {} {}", give.letter(), receive.letter()),
            Event::Build { player, build } => match build {
                Build::Road(e) => write!(f, "BUILD {player} road {e}"),
                Build::Settlement(n) => write!(f, "BUILD {player} settlement {n}"),
                Build::City(n) => write!(f, "BUILD {player} city {n}"),
                Build::DevCard => write!(f, "BUILD {player} devcard 0"),
            },
            Event::Buy { player, card } => write!(f, "BUY {player} {}", card.code()),
            Event::End { player } => write!(f, "END {player}"),
            Event::Result { status, turns } => match status {
                Status::Won(p) => write!(f, "RESULT won {p} {turns}"),
                _ => write!(f, "RESULT capped {turns}"),
            },
        }
    }
}

struct Fields<'a> {
    parts: std::str::SplitWhitespace<'a>,
}

impl<'a> Fields<'a> {
    fn next(&mut self) -> Result<&'a str, String> {
        self.parts.next().ok_or_else(|| "missing field".to_string())
    }

    fn num<T: FromStr>(&mut self) -> Result<T, String> {
        let s = self.next()?;
        s.parse().map_err(|_| format!("bad number {s:?}"))
    }

    fn player(&mut self) -> Result<PlayerId, String> {
        let p: PlayerId = self.num()?;
        if p < NUM_PLAYERS {
            Ok(p)
        } else {
            Err(format!("bad player {p}"))
        }
    }

    fn opt_player(&mut self) -> Result<Option<PlayerId>, String> {
        match self.next()? {
            "-" => Ok(None),
            s => s.parse().map(Some).map_err(|_| format!("bad player {s:?}")),
        }
    }

    fn resource(&mut self) -> Result<ResourceKind, String> {
        let s = self.next()?;
        let mut chars = s.chars();
        match (chars.next().and_then(ResourceKind::from_letter), chars.next()) {
            (Some(k), None) => Ok(k),
            _ => Err(format!("bad resource {s:?}")),
        }
    }

    fn opt_resource(&mut self) -> Result<Option<ResourceKind>, String> {
        match self.parts.clone().next() {
            Some("-") => {
                self.next()?;
                Ok(None)
            }
            _ => self.resource().map(Some),
        }
    }

    fn cards(&mut self) -> Result<ResourceSet, String> {
        let s = self.next()?;
        ResourceSet::parse_field(s).ok_or_else(|| format!("bad card list {s:?}"))
    }

    fn offer(&mut self) -> Result<OfferTemplate, String> {
        let s = self.next()?;
        s.parse().map_err(|_| format!("bad offer {s:?}"))
    }

    fn finish(mut self) -> Result<(), String> {
        match self.parts.next() {
            None => Ok(()),
            Some(extra) => Err(format!("unexpected field {extra:?}")),
        }
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut f = Fields { parts: line.split_whitespace() };
        let kind = f.next()?;
        let event = match kind {
            "GAME" => {
                let seed = f.num()?;
                let turn_cap = f.num()?;
                let victory_target = f.num()?;
                let costs = match f.next()? {
                    "standard" => CostTable::Standard,
                    "literal" => CostTable::Literal,
                    s => return Err(format!("bad cost table {s:?}")),
                };
                let max_unaccepted_offers = f.num()?;
                let max_offers_per_turn = f.num()?;
                Event::Game {
                    seed,
                    rules: Rules { turn_cap, victory_target, costs, max_unaccepted_offers, max_offers_per_turn },
                }
            }
            "SETUP" => Event::Setup { player: f.player()?, node: f.num()?, edge: f.num()? },
            "TURN" => Event::Turn { turn: f.num()?, player: f.player()? },
            "KNIGHT" => Event::Knight {
                player: f.player()?,
                hex: f.num()?,
                victim: f.opt_player()?,
                stolen: f.opt_resource()?,
            },
            "ROLL" => Event::Roll { player: f.player()?, total: f.num()? },
            "PRODUCE" => Event::Produce { player: f.player()?, cards: f.cards()? },
            "DISCARD" => Event::Discard { player: f.player()?, cards: f.cards()? },
            "ROBBER" => Event::Robber {
                player: f.player()?,
                hex: f.num()?,
                victim: f.opt_player()?,
                stolen: f.opt_resource()?,
            },
            "OFFER" => Event::Offer { player: f.player()?, offer: f.offer()? },
            "REPLY" => {
                let player = f.player()?;
                let proposer = f.player()?;
                let s = f.next()?;
                let reply = ReplyAction::from_name(s).ok_or_else(|| format!("bad reply {s:?}"))?;
                Event::Reply { player, proposer, reply }
            }
            "COUNTER" => Event::Counter { player: f.player()?, proposer: f.player()?, offer: f.offer()? },
            "TRADE" => Event::Trade { proposer: f.player()?, acceptor: f.player()?, offer: f.offer()? },
            "BANK" => Event::Bank { player: f.player()?, give: f.resource()?, receive: f.resource()? },
            "BUILD" => {
                let player = f.player()?;
                let what = f.next()?;
                let at = f.num()?;
                let build = match what {
                    "road" => Build::Road(at),
                    "settlement" => Build::Settlement(at),
                    "city" => Build::City(at),
                    "devcard" => Build::DevCard,
                    s => return Err(format!("bad build kind {s:?}")),
                };
                Event::Build { player, build }
            }
            "BUY" => {
                let player = f.player()?;
                let s = f.next()?;
                let card = DevCard::from_code(s).ok_or_else(|| format!("bad card {s:?}"))?;
                Event::Buy { player, card }
            }
            "END" => Event::End { player: f.player()? },
            "RESULT" => match f.next()? {
                "won" => Event::Result { status: Status::Won(f.player()?), turns: f.num()? },
                "capped" => Event::Result { status: Status::Capped, turns: f.num()? },
                s => return Err(format!("bad result {s:?}")),
            },
            s => return Err(format!("unknown event kind {s:?}")),
        };
        f.finish()?;
        Ok(event)
    }
}

pub fn to_text(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<Event>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.parse().map_err(|msg| LogError::Parse { line: i + 1, msg }))
        .collect()
}

/// Per-player tallies that the harness reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    /// Offers and counteroffers made.
    pub offers_made: u32,
    /// Offers made by this player that ended in a trade.
    pub successful_offers: u32,
    /// Trades on either side.
    pub trades: u32,
    /// Roads, settlements and cities built after setup.
    pub pieces_built: u32,
    pub cards_bought: u32,
}

impl Tally {
    pub fn record(tallies: &mut [Tally; NUM_PLAYERS], event: &Event) {
        match *event {
            Event::Offer { player, .. } | Event::Counter { player, .. } => tallies[player].offers_made += 1,
            Event::Trade { proposer, acceptor, .. } => {
                tallies[proposer].successful_offers += 1;
                tallies[proposer].trades += 1;
                tallies[acceptor].trades += 1;
            }
            Event::Build { player, build: Build::DevCard } => tallies[player].cards_bought += 1,
            Event::Build { player, .. } => tallies[player].pieces_built += 1,
            Event::Buy { player, .. } => tallies[player].cards_bought += 1,
            _ => {}
        }
    }

    pub fn from_events(events: &[Event]) -> [Tally; NUM_PLAYERS] {
        let mut t = [Tally::default(); NUM_PLAYERS];
        for e in events {
            Tally::record(&mut t, e);
        }
        t
    }
}

/// Rebuilds the final state of a logged game by re-applying every
/// state-changing event through the engine. Informational records
/// (offers, replies, production) are cross-checked, not trusted.
pub fn replay(events: &[Event]) -> Result<GameState, LogError> {
    let Some(Event::Game { seed, rules }) = events.first() else {
        return Err(LogError::MissingHeader);
    };
    let mut state = GameState::with_rules(*seed, *rules);
    let mut produced = None;
    for (i, event) in events.iter().enumerate().skip(1) {
        let line = i + 1;
        let rejected = |source| LogError::Rejected { line, source };
        let diverged = |msg: String| LogError::Diverged { line, msg };
        match *event {
            Event::Game { .. } => return Err(diverged("second GAME record".into())),
            Event::Setup { player, node, edge } => {
                if state.board.nodes[node].map(|(p, _)| p) != Some(player) || state.board.edges[edge] != Some(player) {
                    return Err(diverged(format!("setup of player {player} differs")));
                }
            }
            Event::Turn { turn, player } => {
                if turn != state.turn || player != state.current_player {
                    return Err(diverged(format!("expected turn {} of player {}", state.turn, state.current_player)));
                }
            }
            Event::Knight { player, hex, victim, stolen } => {
                state.play_knight(player, hex, victim, stolen).map_err(rejected)?
            }
            Event::Roll { total, .. } => {
                produced = Some(state.produce(total));
            }
            Event::Produce { player, cards } => {
                let got = produced.map(|p| p[player]).unwrap_or(ResourceSet::EMPTY);
                if got != cards {
                    return Err(diverged(format!("player {player} produced {got}, log says {cards}")));
                }
            }
            Event::Discard { player, cards } => state.discard(player, &cards).map_err(rejected)?,
            Event::Robber { player, hex, victim, stolen } => {
                state.move_robber(player, hex, victim, stolen).map_err(rejected)?
            }
            Event::Offer { player, offer } | Event::Counter { player, offer, .. } => {
                state.check_offer(player, &offer.givables(), offer.receive).map_err(rejected)?
            }
            Event::Reply { .. } => {}
            Event::Trade { proposer, acceptor, offer } => {
                state.execute_trade(proposer, acceptor, &offer.givables(), offer.receive).map_err(rejected)?
            }
            Event::Bank { player, give, receive } => state.bank_trade(player, give, receive).map_err(rejected)?,
            Event::Build { player, build } => {
                state.apply_build(player, build).map_err(rejected)?;
            }
            Event::Buy { player, card } => {
                let drawn = state.apply_build(player, Build::DevCard).map_err(rejected)?;
                if drawn != Some(card) {
                    return Err(diverged(format!("drew {drawn:?}, log says {card:?}")));
                }
            }
            Event::End { .. } => state.end_turn(),
            Event::Result { status, turns } => {
                if status != state.status() || turns != state.turn {
                    return Err(diverged(format!("final status {:?} at turn {}", state.status(), state.turn)));
                }
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let events = [
            Event::Game { seed: 42, rules: Rules::default() },
            Event::Setup { player: 1, node: 12, edge: 30 },
            Event::Turn { turn: 3, player: 3 },
            Event::Knight { player: 0, hex: 5, victim: Some(2), stolen: Some(ResourceKind::Wood) },
            Event::Robber { player: 0, hex: 5, victim: None, stolen: None },
            Event::Roll { player: 2, total: 11 },
            Event::Produce { player: 1, cards: ResourceSet::new(0, 2, 0, 1, 0) },
            Event::Offer { player: 0, offer: "OO4W".parse().unwrap() },
            Event::Reply { player: 1, proposer: 0, reply: ReplyAction::Counteroffer },
            Event::Counter { player: 1, proposer: 0, offer: "S4C".parse().unwrap() },
            Event::Trade { proposer: 1, acceptor: 0, offer: "S4C".parse().unwrap() },
            Event::Bank { player: 2, give: ResourceKind::Sheep, receive: ResourceKind::Ore },
            Event::Build { player: 2, build: Build::City(7) },
            Event::Buy { player: 2, card: DevCard::Knight },
            Event::End { player: 2 },
            Event::Result { status: Status::Won(2), turns: 61 },
            Event::Result { status: Status::Capped, turns: 150 },
        ];
        let text = to_text(&events);
        assert_eq!(parse(&text).unwrap(), events);
        assert!(text.contains("KNIGHT 0 5 2 D\n"));
        assert!(text.contains("ROBBER 0 5 - -\n"));
    }

    #[test]
    fn malformed_lines_report_position() {
        let err = parse("GAME 1 150 10 standard 3 10\nROLL 9 4\n").unwrap_err();
        assert!(matches!(err, LogError::Parse { line: 2, .. }));
        assert!(parse("TRADE 0 1 CC4C").is_err());
        assert!(parse("END 0 extra").is_err());
    }

    #[test]
    fn replay_needs_header() {
        assert_eq!(replay(&[Event::End { player: 0 }]), Err(LogError::MissingHeader));
    }

    #[test]
    fn replay_rejects_impossible_trade() {
        let events = [
            Event::Game { seed: 3, rules: Rules::default() },
            Event::Trade { proposer: 0, acceptor: 1, offer: "OO4W".parse().unwrap() },
        ];
        let state = GameState::new(3);
        let ok = state.check_offer(0, &ResourceSet::single(ResourceKind::Ore, 2), ResourceKind::Wheat).is_ok()
            && state.players[1].resources[ResourceKind::Wheat] > 0;
        assert_eq!(replay(&events).is_ok(), ok);
    }
}
