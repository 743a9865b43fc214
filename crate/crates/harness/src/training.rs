//! Trains one DRL seat against three copies of a baseline.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use catan_baselines::RandomForest;
use catan_core::{play_game, GameRecord, PlayerId, Rules, TradePolicy, NUM_PLAYERS};
use catan_dqn::{AgentConfig, DqnAgent, DrlSeat, Learner};
use serde::{Deserialize, Serialize};

use crate::seats::{derive_seed, seat_permutation, OpponentClass, PolicySpec};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub opponent: OpponentClass,
    /// Experiences to learn from.
    pub budget: u64,
    pub seed: u64,
    /// Games between learning-curve rows.
    pub curve_every: u64,
    /// Games averaged in each curve row.
    pub window: usize,
    /// When set, epsilon anneals over this fraction of the budget instead
    /// of the agent's own `anneal_steps`.
    pub anneal_fraction: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            opponent: OpponentClass::Ran,
            budget: 100_000,
            seed: 1,
            curve_every: 10,
            window: 100,
            anneal_fraction: Some(0.5),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, msg: &str| Err(HarnessError::Config(format!("train.{field}: {msg}")));
        if self.curve_every == 0 {
            return bad("curve_every", "must be positive");
        }
        if self.window == 0 {
            return bad("window", "must be positive");
        }
        if let Some(f) = self.anneal_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad("anneal_fraction", "must be in (0, 1]");
            }
        }
        Ok(())
    }

    /// The agent config actually used for a run.
    pub fn effective_agent(&self, agent: &AgentConfig) -> AgentConfig {
        let mut cfg = agent.clone();
        if let Some(f) = self.anneal_fraction {
            cfg.anneal_steps = ((self.budget as f64 * f) as u64).max(1);
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub games: u64,
    pub experiences: u64,
    /// Mean per-game reward over the window.
    pub avg_reward: f64,
    pub win_rate: f64,
    pub epsilon: f64,
}

pub struct TrainingOutcome {
    pub agent: DqnAgent,
    pub curve: Vec<CurvePoint>,
    pub games: u64,
    pub wins: u64,
}

/// One game with `learner` in slot 0 and copies of `opponent` in the
/// others, seated by `seat_permutation(game_seed)`. Returns the record and
/// the learner's position.
pub fn play_learner_game<L: Learner>(
    learner: L,
    rewards: &AgentConfig,
    opponent: &PolicySpec,
    game_seed: u64,
    rules: Rules,
) -> Result<(GameRecord, PlayerId), HarnessError> {
    let perm = seat_permutation(game_seed);
    let tracked = perm.iter().position(|&s| s == 0).expect("slot 0 is seated");
    let mut learner = Some(learner);
    let mut seats: Vec<Box<dyn TradePolicy + '_>> = Vec::with_capacity(NUM_PLAYERS);
    for (pos, &slot) in perm.iter().enumerate() {
        if slot == 0 {
            let l = learner.take().expect("one learning seat");
            seats.push(Box::new(DrlSeat::new(l, rewards)));
        } else {
            seats.push(opponent.build(derive_seed(game_seed, pos as u64)));
        }
    }
    Ok((play_game(game_seed, rules, &mut seats)?, tracked))
}

/// Plays training games until the agent has stored `budget` experiences.
/// Game `g` uses board seed `derive_seed(seed, g)` and a rotated seating.
pub fn run_training(
    cfg: &TrainingConfig,
    agent_cfg: &AgentConfig,
    rules: Rules,
    forest: Option<Arc<RandomForest>>,
) -> Result<TrainingOutcome, HarnessError> {
    cfg.validate()?;
    let agent_cfg = cfg.effective_agent(agent_cfg);
    let mut agent = DqnAgent::new(agent_cfg.clone(), cfg.seed)?;
    agent.budget = Some(cfg.budget);
    let opponent = match cfg.opponent {
        OpponentClass::Ran => PolicySpec::Random,
        OpponentClass::Heu => PolicySpec::Heuristic,
        OpponentClass::Sup => PolicySpec::Supervised(
            forest.ok_or_else(|| HarnessError::Config("training against sup needs a forest".into()))?,
        ),
    };
    let mut curve = Vec::new();
    let mut window: VecDeque<(f64, bool)> = VecDeque::with_capacity(cfg.window);
    let mut games = 0;
    let mut wins = 0;
    while agent.steps < cfg.budget {
        let game_seed = derive_seed(cfg.seed, games);
        let (record, tracked) = play_learner_game(&mut agent, &agent_cfg, &opponent, game_seed, rules)?;
        games += 1;
        let won = record.winner() == Some(tracked);
        wins += u64::from(won);
        let reward: f64 = agent.take_episodes().iter().map(|e| e.reward).sum();
        if window.len() == cfg.window {
            window.pop_front();
        }
        window.push_back((reward, won));
        if games % cfg.curve_every == 0 || agent.steps >= cfg.budget {
            let n = window.len() as f64;
            curve.push(CurvePoint {
                games,
                experiences: agent.steps.min(cfg.budget),
                avg_reward: window.iter().map(|w| w.0).sum::<f64>() / n,
                win_rate: window.iter().filter(|w| w.1).count() as f64 / n,
                epsilon: agent.epsilon(),
            });
        }
    }
    agent.training = false;
    Ok(TrainingOutcome { agent, curve, games, wins })
}

pub const CURVE_HEADER: &str = "games,experiences,avg_reward,win_rate,epsilon";

pub fn write_curve<W: Write>(curve: &[CurvePoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for p in curve {
        writeln!(w, "{},{},{:.6},{:.4},{:.6}", p.games, p.experiences, p.avg_reward, p.win_rate, p.epsilon)?;
    }
    Ok(())
}
