//! The full grid: every baseline and every trained agent against three
//! copies of each baseline.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use catan_baselines::RandomForest;
use catan_dqn::{DqnAgent, QNetwork};

use crate::seats::{OpponentClass, PolicySpec, SeatAssignment};
use crate::tournament::{run_tournament, TournamentOptions, TournamentReport};
use crate::HarnessError;

/// A forest for the supervised baseline and one network per training
/// opponent, in `OpponentClass::ALL` order.
#[derive(Debug, Clone)]
pub struct Contenders {
    pub forest: Arc<RandomForest>,
    pub agents: [Arc<QNetwork>; 3],
}

pub fn forest_path(dir: &Path) -> PathBuf {
    dir.join("forest.json")
}

pub fn agent_path(dir: &Path, class: OpponentClass) -> PathBuf {
    dir.join(format!("drl_{class}.ckpt"))
}

fn open(path: &Path) -> Result<std::fs::File, HarnessError> {
    std::fs::File::open(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => HarnessError::MissingCheckpoint(path.into()),
        _ => HarnessError::File { path: path.into(), source },
    })
}

pub fn load_forest(path: &Path) -> Result<RandomForest, HarnessError> {
    let text = std::io::read_to_string(open(path)?).map_err(|source| HarnessError::File { path: path.into(), source })?;
    Ok(RandomForest::from_json(&text)?)
}

pub fn load_agent(path: &Path) -> Result<DqnAgent, HarnessError> {
    Ok(DqnAgent::load(BufReader::new(open(path)?), 0)?)
}

impl Contenders {
    /// Reads `forest.json` and `drl_{ran,heu,sup}.ckpt` from `dir`.
    pub fn load(dir: &Path) -> Result<Contenders, HarnessError> {
        let forest = Arc::new(load_forest(&forest_path(dir))?);
        let mut nets = Vec::new();
        for class in OpponentClass::ALL {
            nets.push(Arc::new(load_agent(&agent_path(dir, class))?.net));
        }
        let agents: [Arc<QNetwork>; 3] = nets.try_into().expect("three classes");
        Ok(Contenders { forest, agents })
    }

    fn baseline(&self, class: OpponentClass) -> PolicySpec {
        match class {
            OpponentClass::Ran => PolicySpec::Random,
            OpponentClass::Heu => PolicySpec::Heuristic,
            OpponentClass::Sup => PolicySpec::Supervised(self.forest.clone()),
        }
    }

    /// The 15 configurations: Ran, Heu and Sup against the other two
    /// baselines (Ran against Heu and Sup; Heu and Sup against Ran and Heu),
    /// then each agent against all three baselines.
    pub fn grid(&self) -> Vec<SeatAssignment> {
        use OpponentClass::*;
        let pairs = [(Ran, Heu), (Ran, Sup), (Heu, Ran), (Heu, Heu), (Sup, Ran), (Sup, Heu)];
        let mut rows: Vec<SeatAssignment> = pairs
            .iter()
            .map(|&(a, b)| SeatAssignment::one_vs_three(self.baseline(a), self.baseline(b)))
            .collect();
        for (class, net) in OpponentClass::ALL.iter().zip(&self.agents) {
            for opp in OpponentClass::ALL {
                let drl = PolicySpec::Drl { name: class.name().into(), net: net.clone() };
                rows.push(SeatAssignment::one_vs_three(drl, self.baseline(opp)));
            }
        }
        rows
    }
}

/// Runs every grid row with `n` games; row `i` is seeded `seed + i`.
pub fn cross_evaluate(c: &Contenders, n: u64, seed: u64, opts: &TournamentOptions) -> Result<Vec<TournamentReport>, HarnessError> {
    c.grid()
        .iter()
        .enumerate()
        .map(|(i, seats)| run_tournament(seats, n, seed.wrapping_add(i as u64), opts))
        .collect()
}

pub const TABLE_HEADER: &str =
    "comparison,win_rate_pct,victory_points,offers_made,successful_offers,total_trades,pieces_built,cards_bought,turns_per_game";

pub fn write_table<W: Write>(reports: &[TournamentReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TABLE_HEADER}")?;
    for r in reports {
        let a = &r.averages;
        writeln!(
            w,
            "{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}",
            r.label,
            100.0 * a.win_rate,
            a.victory_points,
            a.offers_made,
            a.successful_offers,
            a.total_trades,
            a.pieces_built,
            a.cards_bought,
            a.turns
        )?;
    }
    Ok(())
}
