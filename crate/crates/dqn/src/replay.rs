//! Experience tuples and the FIFO replay memory.

use catan_core::actions::ActionMask;
use rand::seq::index;
use rand::Rng;

/// One transition `(s, a, r, s', terminal)` plus the legal actions in `s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub next_mask: ActionMask,
    pub terminal: bool,
}

/// Ring buffer holding the most recent `capacity` experiences.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Experience>,
    /// Slot the next insert overwrites once the buffer is full.
    cursor: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> ReplayMemory {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.cursor] = e;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let (new, old) = self.items.split_at(self.cursor);
        old.iter().chain(new.iter())
    }

    /// Indices of `n` distinct experiences drawn uniformly, or of all of them
    /// when fewer are stored.
    pub fn sample_indices<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let len = self.items.len();
        if len <= n {
            return (0..len).collect();
        }
        index::sample(rng, len, n).into_vec()
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<&Experience> {
        self.sample_indices(n, rng).into_iter().map(|i| &self.items[i]).collect()
    }
}
