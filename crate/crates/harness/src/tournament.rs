//! Test-mode tournaments: many independent games with rotated seats and
//! metrics for the tracked policy.

use std::io::Write;

use catan_core::log::{self, Event, Tally};
use catan_core::{play_game, GameRecord, PlayerId, ReplyAction, Rules, Status, TradePolicy, NUM_PLAYERS};
use rayon::prelude::*;
use serde::Serialize;

use crate::seats::{derive_seed, seat_permutation, SeatAssignment};
use crate::stats::wilson_interval;
use crate::HarnessError;

/// Per-game outcome for one player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct GameMetrics {
    pub won: bool,
    pub victory_points: u32,
    pub offers_made: u32,
    pub successful_offers: u32,
    pub total_trades: u32,
    pub pieces_built: u32,
    pub cards_bought: u32,
    pub turns: u32,
    /// Replies given to offers and how many of them accepted.
    pub replies: u32,
    pub accepts: u32,
}

impl GameMetrics {
    fn assemble(tally: &Tally, won: bool, victory_points: u32, turns: u32, events: &[Event], player: PlayerId) -> Self {
        let (replies, accepts) = reply_counts(events, player);
        GameMetrics {
            won,
            victory_points,
            offers_made: tally.offers_made,
            successful_offers: tally.successful_offers,
            total_trades: tally.trades,
            pieces_built: tally.pieces_built,
            cards_bought: tally.cards_bought,
            turns,
            replies,
            accepts,
        }
    }

    /// From the runner's online tallies.
    pub fn from_record(record: &GameRecord, player: PlayerId) -> Self {
        let won = record.winner() == Some(player);
        let vp = record.final_state.players[player].victory_points;
        Self::assemble(&record.tallies[player], won, vp, record.turns, &record.events, player)
    }

    /// Recomputed from the event stream alone, replaying it through the
    /// engine for the final score.
    pub fn from_events(events: &[Event], player: PlayerId) -> Result<Self, HarnessError> {
        let state = log::replay(events)?;
        let tally = Tally::from_events(events)[player];
        let won = matches!(state.status(), Status::Won(p) if p == player);
        Ok(Self::assemble(&tally, won, state.players[player].victory_points, state.turn, events, player))
    }
}

fn reply_counts(events: &[Event], player: PlayerId) -> (u32, u32) {
    let mut replies = 0;
    let mut accepts = 0;
    for e in events {
        if let Event::Reply { player: p, reply, .. } = e {
            if *p == player {
                replies += 1;
                accepts += u32::from(*reply == ReplyAction::Accept);
            }
        }
    }
    (replies, accepts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResult {
    pub index: u64,
    pub seed: u64,
    /// `permutation[position] = slot`.
    pub permutation: [usize; NUM_PLAYERS],
    /// Board position of slot 0.
    pub tracked: PlayerId,
    /// Board position of the winner, if any.
    pub winner: Option<PlayerId>,
    pub metrics: GameMetrics,
    /// Event log text, when requested.
    #[serde(skip)]
    pub log: Option<String>,
}

impl GameResult {
    pub fn winning_slot(&self) -> Option<usize> {
        self.winner.map(|p| self.permutation[p])
    }
}

/// Averages of [`GameMetrics`] over a set of games.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Averages {
    pub win_rate: f64,
    pub win_ci_low: f64,
    pub win_ci_high: f64,
    pub victory_points: f64,
    pub offers_made: f64,
    pub successful_offers: f64,
    pub total_trades: f64,
    pub pieces_built: f64,
    pub cards_bought: f64,
    pub turns: f64,
    /// Accepted replies over all replies (0 when there were none).
    pub accept_rate: f64,
}

impl Averages {
    pub fn of(games: &[GameMetrics]) -> Averages {
        let n = games.len().max(1) as f64;
        let mean = |f: fn(&GameMetrics) -> u32| games.iter().map(|g| f(g) as f64).sum::<f64>() / n;
        let wins = games.iter().filter(|g| g.won).count() as u64;
        let (lo, hi) = wilson_interval(wins, games.len() as u64, 0.95);
        let replies: u32 = games.iter().map(|g| g.replies).sum();
        let accepts: u32 = games.iter().map(|g| g.accepts).sum();
        Averages {
            win_rate: wins as f64 / n,
            win_ci_low: lo,
            win_ci_high: hi,
            victory_points: mean(|g| g.victory_points),
            offers_made: mean(|g| g.offers_made),
            successful_offers: mean(|g| g.successful_offers),
            total_trades: mean(|g| g.total_trades),
            pieces_built: mean(|g| g.pieces_built),
            cards_bought: mean(|g| g.cards_bought),
            turns: mean(|g| g.turns),
            accept_rate: if replies == 0 { 0.0 } else { accepts as f64 / replies as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TournamentReport {
    pub label: String,
    pub seed: u64,
    /// Ordered by game index.
    pub games: Vec<GameResult>,
    pub averages: Averages,
    pub wins_by_slot: [u64; NUM_PLAYERS],
    pub wins_by_position: [u64; NUM_PLAYERS],
    pub capped: u64,
}

impl TournamentReport {
    pub fn from_games(label: String, seed: u64, mut games: Vec<GameResult>) -> TournamentReport {
        games.sort_by_key(|g| g.index);
        let metrics: Vec<GameMetrics> = games.iter().map(|g| g.metrics).collect();
        let mut wins_by_slot = [0; NUM_PLAYERS];
        let mut wins_by_position = [0; NUM_PLAYERS];
        let mut capped = 0;
        for g in &games {
            match g.winner {
                Some(p) => {
                    wins_by_position[p] += 1;
                    wins_by_slot[g.permutation[p]] += 1;
                }
                None => capped += 1,
            }
        }
        TournamentReport { label, seed, averages: Averages::of(&metrics), games, wins_by_slot, wins_by_position, capped }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub struct TournamentOptions {
    pub rules: Rules,
    /// Keep each game's event log in its [`GameResult`].
    pub keep_logs: bool,
}


/// Plays game `index` of a tournament seeded with `seed`.
pub fn play_one(seats: &SeatAssignment, index: u64, seed: u64, opts: &TournamentOptions) -> Result<GameResult, HarnessError> {
    let game_seed = derive_seed(seed, index);
    let permutation = seat_permutation(game_seed);
    let mut policies: Vec<Box<dyn TradePolicy>> = permutation
        .iter()
        .enumerate()
        .map(|(pos, &slot)| seats.slots[slot].build(derive_seed(game_seed, pos as u64)))
        .collect();
    let record = play_game(game_seed, opts.rules, &mut policies)?;
    let tracked = permutation.iter().position(|&s| s == 0).expect("slot 0 is seated");
    Ok(GameResult {
        index,
        seed: game_seed,
        permutation,
        tracked,
        winner: record.winner(),
        metrics: GameMetrics::from_record(&record, tracked),
        log: opts.keep_logs.then(|| log::to_text(&record.events)),
    })
}

/// `n` independent games in parallel; results are merged by game index.
pub fn run_tournament(seats: &SeatAssignment, n: u64, seed: u64, opts: &TournamentOptions) -> Result<TournamentReport, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Config("tournament needs at least one game".into()));
    }
    let games = (0..n)
        .into_par_iter()
        .map(|i| play_one(seats, i, seed, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TournamentReport::from_games(seats.label(), seed, games))
}

pub const REPORT_HEADER: &str = "configuration,games,win_rate,win_ci_low,win_ci_high,victory_points,offers_made,successful_offers,total_trades,pieces_built,cards_bought,turns,accept_rate";

pub fn report_row(r: &TournamentReport) -> String {
    let a = &r.averages;
    format!(
        "{},{},{:.4},{:.4},{:.4},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.4}",
        r.label,
        r.games.len(),
        a.win_rate,
        a.win_ci_low,
        a.win_ci_high,
        a.victory_points,
        a.offers_made,
        a.successful_offers,
        a.total_trades,
        a.pieces_built,
        a.cards_bought,
        a.turns,
        a.accept_rate
    )
}

pub fn write_report<W: Write>(reports: &[TournamentReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", report_row(r))?;
    }
    Ok(())
}

/// One row per game for the tracked slot.
pub fn write_games<W: Write>(r: &TournamentReport, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "game,seed,position,winner_slot,won,victory_points,offers_made,successful_offers,total_trades,pieces_built,cards_bought,turns,replies,accepts"
    )?;
    for g in &r.games {
        let m = &g.metrics;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            g.index,
            g.seed,
            g.tracked,
            g.winning_slot().map_or("-".to_string(), |s| s.to_string()),
            u8::from(m.won),
            m.victory_points,
            m.offers_made,
            m.successful_offers,
            m.total_trades,
            m.pieces_built,
            m.cards_bought,
            m.turns,
            m.replies,
            m.accepts
        )?;
    }
    Ok(())
}
