//! Small statistical helpers for Monte Carlo summaries.

use serde::{Deserialize, Serialize};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    Interval { lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

pub fn wilson_99(successes: u64, trials: u64) -> Interval {
    wilson_interval(successes, trials, Z_99)
}

/// Binomial standard error `sqrt(p (1 - p) / n)` at the empirical frequency.
pub fn standard_error(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    libm::sqrt(p * (1.0 - p) / trials as f64)
}

/// Half-width of the simultaneous DKW band at confidence `1 - alpha`.
pub fn dkw_epsilon(samples: u64, alpha: f64) -> f64 {
    libm::sqrt(libm::log(2.0 / alpha) / (2.0 * samples as f64))
}
