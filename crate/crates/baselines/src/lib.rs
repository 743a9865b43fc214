//! Baseline traders: uniformly random, deficit-driven heuristic, and a
//! random-forest policy trained on heuristic games.

pub mod corpus;
pub mod forest;
pub mod heuristic;
pub mod random;
pub mod supervised;

pub use corpus::{generate_corpus, CorpusError};
pub use forest::{train_forest, Dataset, DecisionTree, ForestError, ForestParams, RandomForest, TreeParams};
pub use heuristic::HeuristicPolicy;
pub use random::RandomPolicy;
pub use supervised::SupervisedPolicy;
