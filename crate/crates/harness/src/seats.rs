//! Policy specifications and per-game seat assignment.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use catan_baselines::{HeuristicPolicy, RandomForest, RandomPolicy, SupervisedPolicy};
use catan_core::{TradePolicy, NUM_PLAYERS};
use catan_dqn::{AgentConfig, DrlSeat, GreedyLearner, QNetwork};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Baseline class a DRL agent trains against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OpponentClass {
    Ran,
    Heu,
    Sup,
}

impl OpponentClass {
    pub const ALL: [OpponentClass; 3] = [OpponentClass::Ran, OpponentClass::Heu, OpponentClass::Sup];

    pub fn name(self) -> &'static str {
        match self {
            OpponentClass::Ran => "ran",
            OpponentClass::Heu => "heu",
            OpponentClass::Sup => "sup",
        }
    }
}

impl fmt::Display for OpponentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpponentClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        OpponentClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown opponent class {s:?} (expected ran, heu or sup)"))
    }
}

/// A policy that can be instantiated fresh for every game.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Random,
    Heuristic,
    Supervised(Arc<RandomForest>),
    /// Greedy DRL agent; `name` is the class it was trained against.
    Drl { name: String, net: Arc<QNetwork> },
}

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::Random => "Ran".into(),
            PolicySpec::Heuristic => "Heu".into(),
            PolicySpec::Supervised(_) => "Sup".into(),
            PolicySpec::Drl { name, .. } => format!("DRL^{name}"),
        }
    }

    /// A seat for one game; `seed` feeds any randomness the policy uses.
    pub fn build(&self, seed: u64) -> Box<dyn TradePolicy> {
        match self {
            PolicySpec::Random => Box::new(RandomPolicy::new(seed)),
            PolicySpec::Heuristic => Box::new(HeuristicPolicy),
            PolicySpec::Supervised(forest) => Box::new(SupervisedPolicy::new(forest.clone())),
            PolicySpec::Drl { net, .. } => {
                Box::new(DrlSeat::new(GreedyLearner { net: net.clone() }, &AgentConfig::default()))
            }
        }
    }
}

/// Four policy slots; slot 0 is the tracked policy.
#[derive(Debug, Clone)]
pub struct SeatAssignment {
    pub slots: [PolicySpec; NUM_PLAYERS],
}

impl SeatAssignment {
    pub fn one_vs_three(tracked: PolicySpec, opponent: PolicySpec) -> Self {
        SeatAssignment { slots: [tracked, opponent.clone(), opponent.clone(), opponent] }
    }

    /// `"1 Heu vs 3 Ran"` when the opponents agree, else all four labels.
    pub fn label(&self) -> String {
        let labels: Vec<String> = self.slots.iter().map(PolicySpec::label).collect();
        if labels[1..].iter().all(|l| *l == labels[1]) {
            format!("1 {} vs 3 {}", labels[0], labels[1])
        } else {
            labels.join(" ")
        }
    }
}

/// Independent seed for item `index` of a run seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index.wrapping_add(1));
    rng.next_u64()
}

/// `perm[position] = slot`: which slot plays at each board position.
pub fn seat_permutation(game_seed: u64) -> [usize; NUM_PLAYERS] {
    let mut perm = [0, 1, 2, 3];
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(game_seed, u64::MAX - 1)));
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_cover_all_positions() {
        let mut tracked_at = [0u32; NUM_PLAYERS];
        for g in 0..4000 {
            let perm = seat_permutation(derive_seed(3, g));
            let mut sorted = perm;
            sorted.sort();
            assert_eq!(sorted, [0, 1, 2, 3]);
            tracked_at[perm.iter().position(|&s| s == 0).unwrap()] += 1;
        }
        assert!(tracked_at.iter().all(|&c| (900..1100).contains(&c)), "{tracked_at:?}");
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }

    #[test]
    fn labels() {
        let a = SeatAssignment::one_vs_three(PolicySpec::Heuristic, PolicySpec::Random);
        assert_eq!(a.label(), "1 Heu vs 3 Ran");
        assert_eq!("HEU".parse::<OpponentClass>(), Ok(OpponentClass::Heu));
        assert!("x".parse::<OpponentClass>().is_err());
    }
}
