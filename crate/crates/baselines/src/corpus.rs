//! Synthetic training data for the forest: offers made by heuristic
//! players in heuristic-only games.

use std::io::{BufRead, Write};

use catan_core::policy::{DecisionContext, PolicyError, TradePolicy};
use catan_core::{play_game, OfferTemplate, ResourceKind, Rules, RunError, NUM_PLAYERS};
use thiserror::Error;

use crate::forest::{Dataset, ForestError};
use crate::heuristic::heuristic_decision;
use crate::supervised::{evidence, EVIDENCE_DIM, EVIDENCE_NAMES};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("game failed: {0}")]
    Run(#[from] RunError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Recorder<'a> {
    rows: &'a mut Dataset,
}

impl TradePolicy for Recorder<'_> {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        let choice = heuristic_decision(ctx);
        if let Some(t) = choice.and_then(OfferTemplate::from_index) {
            let x = evidence(ctx.state, ctx.player, t.receive);
            // A mixed pair yields one row per distinct givable.
            for k in ResourceKind::ALL.into_iter().filter(|&k| t.gives(k)) {
                self.rows.push(x.to_vec(), k.index()).expect("evidence has fixed width");
            }
        }
        Ok(choice)
    }
}

/// Offers (opening and counter) made in `games` heuristic-only games; game
/// `g` uses board seed `seed + g`.
pub fn generate_corpus(games: u64, seed: u64, rules: Rules) -> Result<Dataset, CorpusError> {
    let mut rows: [Dataset; NUM_PLAYERS] = std::array::from_fn(|_| Dataset::new(EVIDENCE_DIM, 5));
    let mut data = Dataset::new(EVIDENCE_DIM, 5);
    for g in 0..games {
        {
            let mut seats: Vec<Box<dyn TradePolicy + '_>> =
                rows.iter_mut().map(|r| Box::new(Recorder { rows: r }) as Box<dyn TradePolicy>).collect();
            play_game(seed.wrapping_add(g), rules, &mut seats)?;
        }
        // Interleave by seat in a fixed order so the output is deterministic.
        for r in rows.iter_mut() {
            data.x.append(&mut r.x);
            data.y.append(&mut r.y);
        }
    }
    Ok(data)
}

fn label_name(y: usize) -> &'static str {
    ["clay", "ore", "sheep", "wheat", "wood"][y]
}

pub fn write_csv<W: Write>(data: &Dataset, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{},givable", EVIDENCE_NAMES.join(","))?;
    for (x, &y) in data.x.iter().zip(&data.y) {
        let fields: Vec<String> = x.iter().map(|v| format!("{}", *v as u32)).collect();
        writeln!(w, "{},{}", fields.join(","), label_name(y))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Dataset, CorpusError> {
    let mut data = Dataset::new(EVIDENCE_DIM, 5);
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != format!("{},givable", EVIDENCE_NAMES.join(",")) {
        return Err(CorpusError::Parse { line: 1, msg: "unexpected header".into() });
    }
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.trim().split(',').collect();
        if parts.len() != EVIDENCE_DIM + 1 {
            return Err(CorpusError::Parse { line: n, msg: format!("expected {} fields", EVIDENCE_DIM + 1) });
        }
        let x = parts[..EVIDENCE_DIM]
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| CorpusError::Parse { line: n, msg: e.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        let y = (0..5)
            .find(|&y| label_name(y) == parts[EVIDENCE_DIM])
            .ok_or_else(|| CorpusError::Parse { line: n, msg: format!("unknown givable {}", parts[EVIDENCE_DIM]) })?;
        data.push(x, y)?;
    }
    Ok(data)
}
