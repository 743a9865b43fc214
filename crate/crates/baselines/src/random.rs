//! Uniformly random trader.

use catan_core::actions::ActionMask;
use catan_core::policy::{DecisionContext, PolicyError, TradePolicy};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform draw over the legal actions of the current phase.
pub fn random_action<R: Rng>(mask: &ActionMask, rng: &mut R) -> Option<usize> {
    mask.legal_indices().choose(rng)
}

/// Picks uniformly among legal actions and never passes.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl TradePolicy for RandomPolicy {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Option<usize>, PolicyError> {
        Ok(random_action(ctx.mask, &mut self.rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn single_legal_action() {
        let mut mask = ActionMask::none();
        mask.set(17, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(random_action(&mask, &mut rng), Some(17));
        }
        assert_eq!(random_action(&ActionMask::none(), &mut rng), None);
    }

    #[test]
    fn uniform_over_mask() {
        let legal = [0usize, 3, 8, 21, 45, 69, 70, 72];
        let mut mask = ActionMask::none();
        for &i in &legal {
            mask.set(i, true);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0u32; 73];
        let n = 10_000;
        for _ in 0..n {
            counts[random_action(&mask, &mut rng).unwrap()] += 1;
        }
        let expected = n as f64 / legal.len() as f64;
        let stat: f64 = legal.iter().map(|&i| (counts[i] as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((legal.len() - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.01, "chi-square p = {p}");
        assert_eq!(counts.iter().sum::<u32>(), n);
    }
}
