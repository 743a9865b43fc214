//! Deep Q-learning trader: a from-scratch fully-connected Q-network, FIFO
//! experience replay, epsilon-greedy selection over legal actions, and the
//! seat adapter that turns game situations into observations and rewards.

pub mod agent;
pub mod nn;
pub mod replay;
pub mod seat;

pub use agent::{AgentConfig, DqnAgent, GreedyLearner, Learner, Observation};
pub use nn::QNetwork;
pub use replay::{Experience, ReplayMemory};
pub use seat::DrlSeat;
