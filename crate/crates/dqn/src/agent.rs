//! Deep Q-learning with experience replay over the masked 73-way action space.

use std::io::{BufRead, Write};
use std::sync::Arc;

use catan_core::actions::{masked_argmax, ActionError, ActionMask, NUM_OFFERS};
use catan_core::policy::PolicyError;
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{NnError, QNetwork, Sgd, TargetNetwork};
use crate::replay::{Experience, ReplayMemory};

/// Weights of the two reward terms: points gained since the previous
/// decision, and the current total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub gained: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Experiences over which epsilon falls linearly to its minimum.
    pub anneal_steps: u64,
    /// Training steps between target-network syncs.
    pub target_sync: u64,
    pub hidden: Vec<usize>,
    pub reply_weights: RewardWeights,
    pub offer_weights: RewardWeights,
    /// Clip the TD error used for gradients to `[-c, c]`.
    pub td_clip: Option<f64>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.7,
            learning_rate: 0.001,
            momentum: 0.0,
            batch_size: 64,
            replay_capacity: 30_000,
            epsilon_start: 1.0,
            epsilon_min: 0.05,
            anneal_steps: 50_000,
            target_sync: 1000,
            hidden: vec![50, 50],
            reply_weights: RewardWeights { gained: 1.0, total: 0.1 },
            offer_weights: RewardWeights { gained: 0.1, total: 0.01 },
            td_clip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: &'static str, msg: String },
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |field, msg: &str| Err(AgentError::Config { field, msg: msg.to_string() });
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.replay_capacity < self.batch_size {
            return bad("replay_capacity", "must hold at least one batch");
        }
        if !(0.0 <= self.epsilon_min && self.epsilon_min <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return bad("epsilon_start", "need 0 <= epsilon_min <= epsilon_start <= 1");
        }
        if self.target_sync == 0 {
            return bad("target_sync", "must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "layer sizes must be positive");
        }
        if self.td_clip.is_some_and(|c| c <= 0.0) {
            return bad("td_clip", "must be positive");
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![catan_core::features::NUM_FEATURES];
        s.extend(&self.hidden);
        s.push(catan_core::actions::NUM_ACTIONS);
        s
    }
}

/// Whether a decision opened (or countered with) an offer or replied to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionKind {
    Offer,
    Reply,
}

impl DecisionKind {
    pub fn of_action(index: usize) -> DecisionKind {
        if index < NUM_OFFERS {
            DecisionKind::Offer
        } else {
            DecisionKind::Reply
        }
    }
}

/// `gained * w_gained` when points were gained, else `total * w_total`.
pub fn compute_reward(kind: DecisionKind, gained: i64, total: u32, cfg: &AgentConfig) -> f64 {
    let w = match kind {
        DecisionKind::Offer => cfg.offer_weights,
        DecisionKind::Reply => cfg.reply_weights,
    };
    if gained > 0 {
        gained as f64 * w.gained
    } else {
        total as f64 * w.total
    }
}

/// Linear decay from `epsilon_start` to `epsilon_min` over `anneal_steps`
/// experiences, then constant.
pub fn epsilon_at(cfg: &AgentConfig, step: u64) -> f64 {
    if step >= cfg.anneal_steps {
        return cfg.epsilon_min;
    }
    let frac = step as f64 / cfg.anneal_steps as f64;
    cfg.epsilon_start + (cfg.epsilon_min - cfg.epsilon_start) * frac
}

/// Epsilon-greedy over the legal actions.
pub fn select_action<R: Rng>(
    net: &QNetwork,
    x: &[f64],
    mask: &ActionMask,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, AgentError> {
    if mask.is_empty() {
        return Err(ActionError::EmptyMask.into());
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(mask.legal_indices().choose(rng).expect("mask is non-empty"));
    }
    Ok(masked_argmax(&net.forward(x)?, mask)?)
}

/// What a decision maker is shown: the state, the legal actions, and the
/// reward earned by its previous decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub features: Vec<f64>,
    pub mask: ActionMask,
    pub reward: f64,
}

/// Something that turns observations into action indices, locally or over
/// the wire.
pub trait Learner: Send {
    fn act(&mut self, obs: &Observation) -> Result<usize, PolicyError>;
    /// Final observation of a game; `obs.mask` is empty.
    fn end_episode(&mut self, obs: &Observation) -> Result<(), PolicyError>;
}

impl<T: Learner + ?Sized> Learner for &mut T {
    fn act(&mut self, obs: &Observation) -> Result<usize, PolicyError> {
        (**self).act(obs)
    }

    fn end_episode(&mut self, obs: &Observation) -> Result<(), PolicyError> {
        (**self).end_episode(obs)
    }
}

impl<T: Learner + ?Sized> Learner for Box<T> {
    fn act(&mut self, obs: &Observation) -> Result<usize, PolicyError> {
        (**self).act(obs)
    }

    fn end_episode(&mut self, obs: &Observation) -> Result<(), PolicyError> {
        (**self).end_episode(obs)
    }
}

/// Test-time decision maker: argmax over legal actions of a frozen network.
#[derive(Debug, Clone)]
pub struct GreedyLearner {
    pub net: Arc<QNetwork>,
}

impl Learner for GreedyLearner {
    fn act(&mut self, obs: &Observation) -> Result<usize, PolicyError> {
        let q = self.net.forward(&obs.features).map_err(|e| PolicyError(e.to_string()))?;
        masked_argmax(&q, &obs.mask).map_err(|e| PolicyError(e.to_string()))
    }

    fn end_episode(&mut self, _obs: &Observation) -> Result<(), PolicyError> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Pending {
    state: Vec<f64>,
    mask: ActionMask,
    action: usize,
}

/// Per-game totals kept for learning curves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeStats {
    pub reward: f64,
    pub decisions: u64,
}

/// The learning agent: online and target networks, replay memory, and the
/// epsilon schedule. Each observation completes the previous decision's
/// experience, stores it, and triggers one gradient step once the memory
/// holds a batch.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub config: AgentConfig,
    pub net: QNetwork,
    pub target: TargetNetwork,
    memory: ReplayMemory,
    sgd: Sgd,
    rng: ChaCha8Rng,
    /// Experiences stored so far; drives the epsilon schedule.
    pub steps: u64,
    /// Gradient steps taken.
    pub train_steps: u64,
    /// Stop storing and learning after this many experiences.
    pub budget: Option<u64>,
    /// When false the agent acts greedily and never learns.
    pub training: bool,
    pub last_loss: Option<f64>,
    pending: Option<Pending>,
    episode: EpisodeStats,
    finished: Vec<EpisodeStats>,
}

impl DqnAgent {
    pub fn new(config: AgentConfig, seed: u64) -> Result<DqnAgent, AgentError> {
        config.validate()?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        let net = QNetwork::init_weights(&config.layer_sizes(), &mut init_rng)?;
        Ok(Self::with_network(config, net, seed))
    }

    fn with_network(config: AgentConfig, net: QNetwork, seed: u64) -> DqnAgent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        DqnAgent {
            target: TargetNetwork::new(&net),
            memory: ReplayMemory::new(config.replay_capacity),
            sgd: Sgd::new(config.learning_rate, config.momentum),
            net,
            rng,
            steps: 0,
            train_steps: 0,
            budget: None,
            training: true,
            last_loss: None,
            pending: None,
            episode: EpisodeStats::default(),
            finished: Vec::new(),
            config,
        }
    }

    pub fn epsilon(&self) -> f64 {
        if self.training {
            epsilon_at(&self.config, self.steps)
        } else {
            0.0
        }
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn learning(&self) -> bool {
        self.training && self.budget.is_none_or(|b| self.steps < b)
    }

    /// Stats of episodes finished since the last call.
    pub fn take_episodes(&mut self) -> Vec<EpisodeStats> {
        std::mem::take(&mut self.finished)
    }

    /// Appends an experience and, once a batch is available, takes one
    /// gradient step.
    pub fn step_and_learn(&mut self, e: Experience) -> Result<(), AgentError> {
        self.memory.push(e);
        self.steps += 1;
        if self.memory.len() < self.config.batch_size {
            return Ok(());
        }
        let batch = self.memory.sample(self.config.batch_size, &mut self.rng);
        let targets = self.target.net.td_targets(&batch, self.config.gamma)?;
        let (loss, grad) = self.net.loss_and_gradient(&batch, &targets, self.config.td_clip)?;
        self.sgd.step(&mut self.net, &grad);
        self.last_loss = Some(loss);
        self.train_steps += 1;
        self.target.tick(&self.net, self.config.target_sync);
        Ok(())
    }

    fn absorb(&mut self, obs: &Observation, terminal: bool) -> Result<(), AgentError> {
        let Some(p) = self.pending.take() else { return Ok(()) };
        assert!(p.mask.is_legal(p.action), "stored action {} was not legal", p.action);
        self.episode.reward += obs.reward;
        self.episode.decisions += 1;
        if self.learning() {
            self.step_and_learn(Experience {
                state: p.state,
                action: p.action,
                reward: obs.reward,
                next_state: obs.features.clone(),
                next_mask: obs.mask,
                terminal,
            })?;
        }
        Ok(())
    }

    fn act_inner(&mut self, obs: &Observation) -> Result<usize, AgentError> {
        self.absorb(obs, false)?;
        let eps = self.epsilon();
        let a = select_action(&self.net, &obs.features, &obs.mask, eps, &mut self.rng)?;
        self.pending = Some(Pending { state: obs.features.clone(), mask: obs.mask, action: a });
        Ok(a)
    }

    /// Text checkpoint: header, counters, config as JSON, then the network.
    /// Replay memory and optimizer state are not saved; the target network
    /// is re-synced from the loaded weights.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), AgentError> {
        let io = |e: std::io::Error| AgentError::Checkpoint(e.to_string());
        writeln!(w, "dqn-agent v1").map_err(io)?;
        writeln!(w, "steps {}", self.steps).map_err(io)?;
        writeln!(w, "train_steps {}", self.train_steps).map_err(io)?;
        let cfg = serde_json::to_string(&self.config).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        writeln!(w, "config {cfg}").map_err(io)?;
        self.net.save(w)?;
        Ok(())
    }

    pub fn load<R: BufRead>(mut r: R, seed: u64) -> Result<DqnAgent, AgentError> {
        let mut line = String::new();
        let mut read = |prefix: &str| -> Result<String, AgentError> {
            line.clear();
            r.read_line(&mut line).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
            let l = line.trim_end();
            l.strip_prefix(prefix)
                .map(str::to_string)
                .ok_or_else(|| AgentError::Checkpoint(format!("expected `{prefix}`, found {l:?}")))
        };
        read("dqn-agent v1")?;
        let parse_u64 = |s: String| s.parse::<u64>().map_err(|e| AgentError::Checkpoint(e.to_string()));
        let steps = parse_u64(read("steps ")?)?;
        let train_steps = parse_u64(read("train_steps ")?)?;
        let config: AgentConfig =
            serde_json::from_str(&read("config ")?).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        config.validate()?;
        let net = QNetwork::load(r)?;
        if net.sizes() != config.layer_sizes() {
            return Err(AgentError::Checkpoint("network shape does not match config".into()));
        }
        let mut agent = DqnAgent::with_network(config, net, seed);
        agent.steps = steps;
        agent.train_steps = train_steps;
        Ok(agent)
    }
}

impl Learner for DqnAgent {
    fn act(&mut self, obs: &Observation) -> Result<usize, PolicyError> {
        self.act_inner(obs).map_err(|e| PolicyError(e.to_string()))
    }

    fn end_episode(&mut self, obs: &Observation) -> Result<(), PolicyError> {
        self.absorb(obs, true).map_err(|e| PolicyError(e.to_string()))?;
        self.finished.push(std::mem::take(&mut self.episode));
        Ok(())
    }
}
