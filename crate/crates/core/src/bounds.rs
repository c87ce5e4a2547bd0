//! Hoeffding tail bounds for partial sums of `Z_i`, per-phase success bounds,
//! and a certified enclosure of the divergence-probability product.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::PhaseSchedule;
use crate::stair::ScheduleMode;

/// Certified enclosure `[lo, hi]` of a real quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub lo: f64,
    pub hi: f64,
}

impl BoundValue {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Two-sided Hoeffding bound `min(1, 2 exp(-t^2 / (2m)))` for a sum of `m`
/// independent variables valued in `[-1, 1]`.
pub fn hoeffding_tail(m: u64, t: f64) -> f64 {
    assert!(m >= 1, "hoeffding_tail needs m >= 1");
    let raw = 2.0 * libm::exp(-t * t / (2.0 * m as f64));
    raw.min(1.0)
}

/// One-sided bound `P(I <= m E[Z] - t) <= exp(-t^2 / (2m))`, centered at the true mean.
pub fn hoeffding_lower_tail(m: u64, t: f64) -> f64 {
    assert!(m >= 1, "hoeffding_lower_tail needs m >= 1");
    if t <= 0.0 {
        return 1.0;
    }
    libm::exp(-t * t / (2.0 * m as f64)).min(1.0)
}

/// Deviation `2 sqrt(K m ln m)` at which the two-sided tail equals `2 / m^{2K}`.
pub fn log_deviation(m: u64, k: u32) -> f64 {
    let m = m as f64;
    2.0 * libm::sqrt(k as f64 * m * libm::log(m))
}

/// A per-phase success probability bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBound {
    pub value: f64,
    /// The raw bound was nonpositive and has been clamped to zero.
    pub vacuous: bool,
}

/// Lower bound `1 - 2 / (M - 2 + 2(i - 2))^{2K}` on `P(Omega_i | earlier)`,
/// centered at `drift_floor * L` as in the construction.
pub fn phase_success_bound(i: u64, schedule: &PhaseSchedule) -> Result<PhaseBound> {
    if i < 2 {
        return Err(Error::PhaseUndefined(i));
    }
    if schedule.mode != ScheduleMode::PaperLiteral {
        return Err(Error::InvalidSchedule("phase_success_bound needs a paper-literal schedule".into()));
    }
    let length = schedule.big_m - 2 + 2 * (i - 2);
    Ok(paper_factor(length, schedule.profile.hoeffding_k))
}

fn paper_factor(length: u64, k: u32) -> PhaseBound {
    let denom = libm::pow(length as f64, 2.0 * k as f64);
    if denom <= 2.0 {
        PhaseBound { value: 0.0, vacuous: true }
    } else {
        PhaseBound { value: 1.0 - 2.0 / denom, vacuous: false }
    }
}

/// Lower bound on `P(I_{i,L} >= gap)` from the true-mean Hoeffding inequality:
/// `1 - exp(-(L mean - gap)^2 / (2L))` when `L mean >= gap`, else vacuous.
pub fn true_mean_phase_bound(length: u64, mean: f64, gap: f64) -> PhaseBound {
    let slack = length as f64 * mean - gap;
    if !(slack > 0.0) {
        return PhaseBound { value: 0.0, vacuous: true };
    }
    PhaseBound { value: 1.0 - hoeffding_lower_tail(length, slack), vacuous: false }
}

pub const DEFAULT_TRUNCATION: u64 = 1_000_000;

/// Relative allowance for floating-point rounding in the enclosure.
const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Enclosure of `(1 - sigma/2) * prod_{j>=0} (1 - 2 / (M - 2 + 2j)^{2K})`.
pub fn divergence_lower_bound(sigma: f64, big_m: u64, k: u32) -> Result<BoundValue> {
    divergence_lower_bound_truncated(sigma, big_m, k, DEFAULT_TRUNCATION)
}

/// As [`divergence_lower_bound`], multiplying the first `truncation` factors
/// and enclosing the tail with `-q/(1-q) <= ln(1-q) <= -q` and integral
/// bounds on `sum_{j>=J} q_j`.
pub fn divergence_lower_bound_truncated(
    sigma: f64,
    big_m: u64,
    k: u32,
    truncation: u64,
) -> Result<BoundValue> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::OutOfRange { name: "sigma", value: sigma, expected: "(0, 1)" });
    }
    if k < 1 {
        return Err(Error::OutOfRange { name: "K", value: k as f64, expected: ">= 1" });
    }
    if big_m < 3 || libm::pow((big_m - 2) as f64, 2.0 * k as f64) <= 2.0 {
        return Err(Error::OutOfRange {
            name: "M",
            value: big_m as f64,
            expected: "(M - 2)^{2K} > 2 so every factor is positive",
        });
    }
    let c = (big_m - 2) as f64;
    let power = 2.0 * k as f64;
    let q = |j: u64| 2.0 / libm::pow(c + 2.0 * j as f64, power);

    let mut log_partial = Neumaier::default();
    for j in 0..truncation {
        log_partial.add(libm::log1p(-q(j)));
    }
    let log_partial = log_partial.value();

    let base = c + 2.0 * truncation as f64;
    let integral = libm::pow(base, 1.0 - power) / (power - 1.0);
    let q_j = q(truncation);
    let tail_sum_hi = q_j + integral;
    let tail_sum_lo = integral;

    let prefactor = 1.0 - sigma / 2.0;
    let lo = prefactor * libm::exp(log_partial - tail_sum_hi / (1.0 - q_j)) * (1.0 - ROUNDING_SLACK);
    let hi = (prefactor * libm::exp(log_partial - tail_sum_lo) * (1.0 + ROUNDING_SLACK)).min(prefactor);
    Ok(BoundValue { lo, hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductLimitEntry {
    #[serde(rename = "M")]
    pub big_m: u64,
    pub bound: BoundValue,
    pub exceeds_sigma: bool,
    pub exceeds_one_minus_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductLimitReport {
    pub sigma: f64,
    #[serde(rename = "K")]
    pub k: u32,
    pub entries: Vec<ProductLimitEntry>,
    /// Each enclosure lies strictly above the previous one (list sorted by M).
    pub monotone_increasing: bool,
    /// `1 - sigma/2`, the value approached as `M -> infinity`.
    pub supremum: f64,
    #[serde(rename = "least_M_exceeding_sigma")]
    pub least_m_exceeding_sigma: Option<u64>,
    #[serde(rename = "least_M_exceeding_one_minus_sigma")]
    pub least_m_exceeding_one_minus_sigma: Option<u64>,
}

/// Evaluates the product bound over increasing `M` and records where it
/// certifiably exceeds `sigma` (and `1 - sigma`).
pub fn product_limit_check(sigma: f64, k: u32, m_list: &[u64]) -> Result<ProductLimitReport> {
    let mut sorted = m_list.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let entries = sorted
        .iter()
        .map(|&big_m| {
            let bound = divergence_lower_bound(sigma, big_m, k)?;
            Ok(ProductLimitEntry {
                big_m,
                bound,
                exceeds_sigma: bound.lo > sigma,
                exceeds_one_minus_sigma: bound.lo > 1.0 - sigma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone_increasing = entries.windows(2).all(|w| w[1].bound.lo > w[0].bound.hi);
    Ok(ProductLimitReport {
        sigma,
        k,
        monotone_increasing,
        supremum: 1.0 - sigma / 2.0,
        least_m_exceeding_sigma: entries.iter().find(|e| e.exceeds_sigma).map(|e| e.big_m),
        least_m_exceeding_one_minus_sigma: entries
            .iter()
            .find(|e| e.exceeds_one_minus_sigma)
            .map(|e| e.big_m),
        entries,
    })
}
