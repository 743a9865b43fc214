//! Binomial confidence intervals for win rates.

use statrs::distribution::{ContinuousCDF, Normal};

/// Wilson score interval for `successes` out of `n` at the given
/// two-sided confidence level (e.g. 0.95).
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Exact two-sided acceptance region of Binomial(n, p) at `confidence`:
/// the counts k whose equal-tailed probability mass stays inside.
pub fn binomial_acceptance(n: u64, p: f64, confidence: f64) -> (u64, u64) {
    use statrs::distribution::{Binomial, DiscreteCDF};
    let b = Binomial::new(p, n).expect("valid binomial");
    let tail = (1.0 - confidence) / 2.0;
    let lo = (0..=n).find(|&k| b.cdf(k) > tail).unwrap_or(0);
    let hi = (0..=n).find(|&k| b.cdf(k) >= 1.0 - tail).unwrap_or(n);
    (lo, hi)
}
