//! Phase schedules: `M`, `M0`, phase lengths, per-phase `a`, height thresholds,
//! and the feasibility checker for the inductive argument.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::domination;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stair::{ConstantsProfile, ScheduleMode};

/// Anything that assigns a value of `a` to every step index `n`.
pub trait StepRule {
    fn a_at(&self, n: u64) -> Result<f64>;

    fn a_at_exact(&self, n: u64) -> Result<BigRational> {
        self.a_at(n).map(BigRational::from_decimal)
    }
}

/// `a_n = a` for every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantA(pub f64);

impl StepRule for ConstantA {
    fn a_at(&self, _n: u64) -> Result<f64> {
        Ok(self.0)
    }
}

/// `a_n = n^2 + 8`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadraticGrowth;

impl StepRule for QuadraticGrowth {
    fn a_at(&self, n: u64) -> Result<f64> {
        let n = n as f64;
        Ok(n * n + 8.0)
    }

    fn a_at_exact(&self, n: u64) -> Result<BigRational> {
        let n = BigRational::from_int(n as i64);
        Ok(n.clone() * n + BigRational::from_int(8))
    }
}

fn gain_function(delta: f64, k: u32, m: u64) -> f64 {
    let m = m as f64;
    delta * m - 2.0 * libm::sqrt(k as f64 * m * libm::log(m))
}

/// Least `M` such that `delta*m - 2*sqrt(K*m*ln m) >= h` for every integer `m >= M - 2`
/// (with `m >= 1`, so `M >= 3`).
///
/// The gain function is convex on `m >= 1`, so its integer sublevel set is a
/// single run; the search locates the minimizer, then the last failure after it.
pub fn find_m_with(delta: f64, k: u32, h: f64) -> Result<u64> {
    if !(delta > 0.0) || !h.is_finite() || k < 1 {
        return Err(Error::OutOfRange { name: "drift_floor", value: delta, expected: "> 0" });
    }
    let g = |m: u64| gain_function(delta, k, m);
    // Smallest m with g(m+1) >= g(m): first point of the nondecreasing branch.
    let rising = |m: u64| g(m + 1) >= g(m);
    let mut hi = 1u64;
    while !rising(hi) {
        hi *= 2;
    }
    let (mut lo, mut hi_r) = (1u64, hi);
    while lo < hi_r {
        let mid = lo + (hi_r - lo) / 2;
        if rising(mid) {
            hi_r = mid;
        } else {
            lo = mid + 1;
        }
    }
    let argmin = lo;
    let first_ok = if g(argmin) >= h {
        1
    } else {
        let mut top = argmin.max(2);
        while g(top) < h {
            top *= 2;
        }
        let (mut lo, mut hi) = (argmin, top);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if g(mid) >= h {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };
    // Guard window past the root.
    for m in first_ok..first_ok + 1000 {
        if g(m) < h {
            return Err(Error::Unsatisfiable("gain function dips below h after its root"));
        }
    }
    Ok(first_ok + 2)
}

pub fn find_m(profile: &ConstantsProfile) -> Result<u64> {
    find_m_with(profile.drift_floor, profile.hoeffding_k, profile.overshoot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum M0Method {
    ExactBinomial,
    #[default]
    HoeffdingConservative,
}

/// `ln P(Binomial(m, p) <= k_max)`.
pub fn binomial_log_cdf(m: u64, p: f64, k_max: u64) -> f64 {
    if k_max >= m {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return 0.0;
    }
    let (lp, lq) = (libm::log(p), libm::log1p(-p));
    let term = |mut acc: f64, k: u64| {
        acc += libm::log((m - k) as f64) - libm::log((k + 1) as f64) + lp - lq;
        acc
    };
    let start = m as f64 * lq;
    let mut max = start;
    let mut t = start;
    for k in 0..k_max {
        t = term(t, k);
        max = max.max(t);
    }
    let mut sum = libm::exp(start - max);
    let mut t = start;
    for k in 0..k_max {
        t = term(t, k);
        sum += libm::exp(t - max);
    }
    max + libm::log(sum)
}

/// Least `m0` such that `P(Binomial(m, p) > big_m) > 1 - sigma` for every `m >= m0`.
pub fn find_m0_with(sigma: f64, big_m: u64, p: f64, method: M0Method) -> Result<u64> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::OutOfRange { name: "sigma", value: sigma, expected: "[0, 1)" });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::OutOfRange { name: "phase1_up_floor", value: p, expected: "(0, 1]" });
    }
    if sigma == 0.0 {
        return Err(Error::Unsatisfiable(
            "sigma = 0 needs P(Bin(m, p) <= M) = 0 for finite m; use sigma > 0",
        ));
    }
    match method {
        M0Method::ExactBinomial => {
            let log_sigma = libm::log(sigma);
            // The binomial family is stochastically increasing in m, so the tail
            // condition is monotone and a bisection suffices.
            let fails = |m: u64| binomial_log_cdf(m, p, big_m) >= log_sigma;
            let mut hi = big_m + 1;
            while fails(hi) {
                hi = hi.checked_mul(2).ok_or(Error::Unsatisfiable("M0 search overflow"))?;
            }
            let mut lo = big_m + 1;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if fails(mid) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            for m in lo..lo + 32 {
                if fails(m) {
                    return Err(Error::Unsatisfiable("binomial tail not monotone in floating point"));
                }
            }
            Ok(lo)
        }
        M0Method::HoeffdingConservative => {
            let ok = |m: u64| {
                let mean = m as f64 * p;
                mean > big_m as f64
                    && libm::exp(-2.0 * (mean - big_m as f64) * (mean - big_m as f64) / m as f64)
                        <= sigma
            };
            // Larger root of p^2 m^2 - (2pM + L) m + M^2 = 0 with L = ln(1/sigma)/2.
            let big = big_m as f64;
            let l = libm::log(1.0 / sigma) / 2.0;
            let b = 2.0 * p * big + l;
            let root = (b + libm::sqrt(b * b - 4.0 * p * p * big * big)) / (2.0 * p * p);
            let mut m = (libm::floor(root) as u64).saturating_sub(10).max(1);
            while !ok(m) {
                m += 1;
            }
            Ok(m)
        }
    }
}

pub fn find_m0(sigma: f64, big_m: u64, profile: &ConstantsProfile, method: M0Method) -> Result<u64> {
    find_m0_with(sigma, big_m, profile.phase1_up_floor, method)
}

/// Explicit phase record for user-designed schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub length: u64,
    pub a: f64,
    /// Height threshold `T_i` checked at the end of the phase (strict for phase 1).
    pub threshold: u64,
}

/// The `(N_i, a_i, T_i)` structure driving the walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawSchedule")]
pub struct PhaseSchedule {
    pub sigma: f64,
    /// Failure budget of phase 1; defaults to `sigma / 2`.
    pub sigma_phase1: f64,
    pub profile: ConstantsProfile,
    #[serde(rename = "M")]
    pub big_m: u64,
    #[serde(rename = "M0")]
    pub m0: u64,
    pub mode: ScheduleMode,
    pub phases: Option<Vec<PhaseSpec>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    sigma: f64,
    sigma_phase1: Option<f64>,
    profile: ConstantsProfile,
    #[serde(rename = "M")]
    big_m: u64,
    #[serde(rename = "M0")]
    m0: u64,
    mode: ScheduleMode,
    phases: Option<Vec<PhaseSpec>>,
}

impl TryFrom<RawSchedule> for PhaseSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        let schedule = PhaseSchedule {
            sigma: raw.sigma,
            sigma_phase1: raw.sigma_phase1.unwrap_or(raw.sigma / 2.0),
            profile: raw.profile,
            big_m: raw.big_m,
            m0: raw.m0,
            mode: raw.mode,
            phases: raw.phases,
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperScheduleOptions {
    pub sigma_phase1: Option<f64>,
    pub m0_method: M0Method,
}

impl Default for PaperScheduleOptions {
    fn default() -> Self {
        PaperScheduleOptions { sigma_phase1: None, m0_method: M0Method::HoeffdingConservative }
    }
}

/// Closed form `8 (2i^2 + 1 - 2i) / (2i - 1 + mu) - offset` for phases `i >= 2`.
pub fn paper_a<T: Scalar>(i: u64, profile: &ConstantsProfile) -> T {
    let i = T::from_int(i as i64);
    let two = T::from_int(2);
    let num = T::from_int(8)
        * (two.clone() * i.clone() * i.clone() + T::one() - two.clone() * i.clone());
    let den = two * i - T::one() + T::from_decimal(profile.drift_target);
    num / den - T::from_decimal(profile.a_offset)
}

pub fn build_paper_schedule(sigma: f64, profile: &ConstantsProfile) -> Result<PhaseSchedule> {
    build_paper_schedule_with(sigma, profile, PaperScheduleOptions::default())
}

pub fn build_paper_schedule_with(
    sigma: f64,
    profile: &ConstantsProfile,
    options: PaperScheduleOptions,
) -> Result<PhaseSchedule> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::OutOfRange { name: "sigma", value: sigma, expected: "(0, 1)" });
    }
    profile.validate()?;
    let mut profile = profile.clone();
    profile.schedule_mode = ScheduleMode::PaperLiteral;
    let sigma_phase1 = options.sigma_phase1.unwrap_or(sigma / 2.0);
    let big_m = find_m(&profile)?;
    let m0 = find_m0(sigma_phase1, big_m, &profile, options.m0_method)?;
    let schedule = PhaseSchedule {
        sigma,
        sigma_phase1,
        profile,
        big_m,
        m0,
        mode: ScheduleMode::PaperLiteral,
        phases: None,
    };
    schedule.validate()?;
    Ok(schedule)
}

impl PhaseSchedule {
    /// User-designed schedule from explicit phases; phase 1 is `phases[0]`.
    pub fn user_designed(
        sigma: f64,
        sigma_phase1: f64,
        profile: &ConstantsProfile,
        phases: Vec<PhaseSpec>,
    ) -> Result<Self> {
        let first = phases
            .first()
            .ok_or_else(|| Error::InvalidSchedule("at least one phase required".to_owned()))?;
        let mut profile = profile.clone();
        profile.schedule_mode = ScheduleMode::UserDesigned;
        let schedule = PhaseSchedule {
            sigma,
            sigma_phase1,
            big_m: first.threshold,
            m0: first.length,
            profile,
            mode: ScheduleMode::UserDesigned,
            phases: Some(phases),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(Error::InvalidSchedule(why));
        self.profile.validate()?;
        if !(self.sigma >= 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma = {} outside [0, 1)", self.sigma));
        }
        if self.mode != self.profile.schedule_mode {
            return bad("mode disagrees with profile.schedule_mode".to_owned());
        }
        if self.m0 < 1 {
            return bad("M0 must be positive".to_owned());
        }
        match (self.mode, &self.phases) {
            (ScheduleMode::PaperLiteral, None) => {
                if self.big_m < 3 {
                    return bad("paper-literal schedules need M >= 3".to_owned());
                }
                Ok(())
            }
            (ScheduleMode::PaperLiteral, Some(_)) => {
                bad("paper-literal schedules carry no explicit phases".to_owned())
            }
            (ScheduleMode::UserDesigned, None) => {
                bad("user-designed schedules need an explicit phase list".to_owned())
            }
            (ScheduleMode::UserDesigned, Some(phases)) => {
                let Some(first) = phases.first() else {
                    return bad("empty phase list".to_owned());
                };
                if first.length != self.m0 || first.threshold != self.big_m {
                    return bad("M0 and M must equal phase 1's length and threshold".to_owned());
                }
                if first.a != self.profile.phase1_a {
                    return bad("phase 1 must use profile.phase1_a".to_owned());
                }
                let mut prev_a = 8.0;
                for (idx, p) in phases.iter().enumerate() {
                    if p.length < 1 {
                        return bad(format!("phase {} has zero length", idx + 1));
                    }
                    if !(p.a >= 8.0) || !p.a.is_finite() {
                        return bad(format!("phase {} has a = {} < 8", idx + 1, p.a));
                    }
                    if idx >= 1 {
                        if p.a < prev_a {
                            return bad(format!("a decreases at phase {}", idx + 1));
                        }
                        prev_a = p.a;
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of defined phases (`None` for the unbounded paper-literal rule).
    pub fn phase_count(&self) -> Option<u64> {
        self.phases.as_ref().map(|p| p.len() as u64)
    }

    fn user_phase(&self, i: u64) -> Result<&PhaseSpec> {
        let phases = self.phases.as_ref().expect("user-designed");
        if i == 0 {
            return Err(Error::PhaseBeyondSchedule(0));
        }
        phases.get(i as usize - 1).ok_or(Error::PhaseBeyondSchedule(i))
    }

    /// Length `L_i = N_i - N_{i-1}`.
    pub fn length(&self, i: u64) -> Result<u64> {
        match self.mode {
            ScheduleMode::UserDesigned => self.user_phase(i).map(|p| p.length),
            ScheduleMode::PaperLiteral => match i {
                0 => Err(Error::PhaseBeyondSchedule(0)),
                1 => Ok(self.m0),
                _ => Ok(self.big_m - 2 + 2 * (i - 2)),
            },
        }
    }

    pub fn a_of_phase(&self, i: u64) -> Result<f64> {
        match self.mode {
            ScheduleMode::UserDesigned => self.user_phase(i).map(|p| p.a),
            ScheduleMode::PaperLiteral => match i {
                0 => Err(Error::PhaseBeyondSchedule(0)),
                1 => Ok(self.profile.phase1_a),
                _ => Ok(paper_a::<f64>(i, &self.profile)),
            },
        }
    }

    pub fn a_of_phase_exact(&self, i: u64) -> Result<BigRational> {
        match (self.mode, i) {
            (ScheduleMode::PaperLiteral, 2..) => Ok(paper_a::<BigRational>(i, &self.profile)),
            _ => self.a_of_phase(i).map(BigRational::from_decimal),
        }
    }

    /// `T_i`; phase 1 succeeds when `S > T_1`, later phases when `S >= T_i`.
    pub fn threshold(&self, i: u64) -> Result<u64> {
        match self.mode {
            ScheduleMode::UserDesigned => self.user_phase(i).map(|p| p.threshold),
            ScheduleMode::PaperLiteral => match i {
                0 => Err(Error::PhaseBeyondSchedule(0)),
                _ => Ok(self.big_m + libm::ceil(self.profile.overshoot * (i - 1) as f64) as u64),
            },
        }
    }

    /// Whether `S_{N_i}` meets the phase-`i` threshold.
    pub fn omega_holds(&self, i: u64, s: u64) -> Result<bool> {
        let t = self.threshold(i)?;
        Ok(if i == 1 { s > t } else { s >= t })
    }

    /// `N_i`, the end of phase `i` (`N_0 = 0`).
    pub fn boundary(&self, i: u64) -> Result<u64> {
        if i == 0 {
            return Ok(0);
        }
        match self.mode {
            ScheduleMode::UserDesigned => {
                let phases = self.phases.as_ref().expect("user-designed");
                if i as usize > phases.len() {
                    return Err(Error::PhaseBeyondSchedule(i));
                }
                phases[..i as usize]
                    .iter()
                    .try_fold(0u64, |acc, p| acc.checked_add(p.length))
                    .ok_or(Error::Resource { what: "N_i overflow", requested: i, budget: u64::MAX })
            }
            ScheduleMode::PaperLiteral => {
                // N_i = M0 + (i-1)(M-2) + (i-1)(i-2)
                let j = (i - 1) as u128;
                let n = self.m0 as u128 + j * (self.big_m as u128 - 2) + j * j.saturating_sub(1);
                u64::try_from(n)
                    .map_err(|_| Error::Resource { what: "N_i overflow", requested: i, budget: u64::MAX })
            }
        }
    }

    /// Phase `i` containing step `n`, i.e. `N_{i-1} <= n < N_i`.
    pub fn phase_of_step(&self, n: u64) -> Result<u64> {
        let mut hi = 1u64;
        while self.boundary(hi)? <= n {
            hi = hi.checked_mul(2).ok_or(Error::PhaseBeyondSchedule(u64::MAX))?;
            if let Some(count) = self.phase_count() {
                hi = hi.min(count);
                if self.boundary(hi)? <= n {
                    return Err(Error::PhaseBeyondSchedule(count + 1));
                }
            }
        }
        let mut lo = 1u64;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.boundary(mid)? > n {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    pub fn a_of_step(&self, n: u64) -> Result<f64> {
        self.a_of_phase(self.phase_of_step(n)?)
    }
}

impl StepRule for PhaseSchedule {
    fn a_at(&self, n: u64) -> Result<f64> {
        self.a_of_step(n)
    }

    fn a_at_exact(&self, n: u64) -> Result<BigRational> {
        self.a_of_phase_exact(self.phase_of_step(n)?)
    }
}

/// One phase of a feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFeasibility {
    pub i: u64,
    pub a: f64,
    pub length: u64,
    /// Mean of `Z_i`, the certified per-step drift.
    pub drift_lower_bound: f64,
    /// `delta_i L_i - 2 sqrt(K L_i ln L_i)`.
    pub hoeffding_gain: f64,
    /// `T_i - T_{i-1}`.
    pub required_gain: f64,
    /// `T_{i-1} - L_i - (2i - 2)`.
    pub height_margin: i64,
    pub ok: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub i: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub phases: Vec<PhaseFeasibility>,
    pub first_violation: Option<Violation>,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Hoeffding gain `drift * L - 2 sqrt(K L ln L)` of a phase of length `L`.
pub fn hoeffding_gain(drift: f64, k: u32, length: u64) -> f64 {
    gain_function(drift, k, length)
}

/// Checks, phase by phase, the three conditions the induction needs: positive
/// certified drift, enough concentrated gain to move from `T_{i-1}` to `T_i`,
/// and enough height at phase start to keep `x >= i` through a run of down-steps.
pub fn check_schedule_feasibility(schedule: &PhaseSchedule, i_max: u64) -> Result<FeasibilityReport> {
    if i_max < 2 {
        return Err(Error::OutOfRange { name: "i_max", value: i_max as f64, expected: ">= 2" });
    }
    let k = schedule.profile.hoeffding_k;
    let mut phases = Vec::with_capacity(i_max as usize - 1);
    let mut first_violation = None;
    for i in 2..=i_max {
        let length = schedule.length(i)?;
        let a = schedule.a_of_phase(i)?;
        let drift = domination::mean_z(i, schedule)?;
        let gain = hoeffding_gain(drift, k, length);
        let (t_prev, t_cur) = (schedule.threshold(i - 1)?, schedule.threshold(i)?);
        let required = (t_cur as i128 - t_prev as i128) as f64;
        let height_margin = t_prev as i64 - length as i64 - (2 * i as i64 - 2);
        let reason = if !(drift > 0.0) {
            Some("δ_i ≤ 0")
        } else if !(gain >= required) {
            Some("G_i < T_i − T_{i−1}")
        } else if height_margin < 0 {
            Some("H_i < 0")
        } else {
            None
        };
        if let (Some(r), None) = (reason, &first_violation) {
            first_violation = Some(Violation { i, reason: r.to_owned() });
        }
        phases.push(PhaseFeasibility {
            i,
            a,
            length,
            drift_lower_bound: drift,
            hoeffding_gain: gain,
            required_gain: required,
            height_margin,
            ok: reason.is_none(),
            reason: reason.map(ToOwned::to_owned),
        });
    }
    Ok(FeasibilityReport { phases, first_violation })
}

/// Least phase length whose Hoeffding gain reaches `target`, if any up to `limit`.
pub fn min_phase_length(drift: f64, k: u32, target: f64, limit: u64) -> Option<u64> {
    if !(drift > 0.0) {
        return None;
    }
    (1..=limit).find(|&l| hoeffding_gain(drift, k, l) >= target)
}

/// Builds a user-designed schedule from per-phase `a_i` and `L_i` rules
/// (`i >= 2`). Each threshold step `T_i - T_{i-1}` is the floored Hoeffding
/// gain, `T_1` is the least value keeping every height margin nonnegative,
/// and phase 1's length is sized by [`find_m0`] with the conservative method.
pub fn design_schedule(
    sigma: f64,
    profile: &ConstantsProfile,
    i_max: u64,
    mut a_rule: impl FnMut(u64) -> f64,
    mut length_rule: impl FnMut(u64) -> u64,
) -> Result<PhaseSchedule> {
    if i_max < 2 {
        return Err(Error::OutOfRange { name: "i_max", value: i_max as f64, expected: ">= 2" });
    }
    let mut profile = profile.clone();
    profile.schedule_mode = ScheduleMode::UserDesigned;
    let eps = profile.slack;
    let k = profile.hoeffding_k;
    let mut later = Vec::with_capacity(i_max as usize - 1);
    for i in 2..=i_max {
        let a = a_rule(i);
        let length = length_rule(i);
        let drift = domination::z_law(i, &a, &eps)?.mean();
        let gain = libm::floor(hoeffding_gain(drift, k, length)).max(0.0) as u64;
        later.push((a, length, gain));
    }
    // H_i = T_1 + sum_{2<=j<i} gain_j - L_i - (2i-2) >= 0
    let mut t1 = 0i128;
    let mut acc = 0i128;
    for (idx, &(_, length, gain)) in later.iter().enumerate() {
        let i = idx as i128 + 2;
        t1 = t1.max(length as i128 + 2 * i - 2 - acc);
        acc += gain as i128;
    }
    let t1 = u64::try_from(t1.max(1)).map_err(|_| Error::InvalidSchedule("T_1 overflow".to_owned()))?;
    let sigma_phase1 = sigma / 2.0;
    let m0 = find_m0(sigma_phase1, t1, &profile, M0Method::HoeffdingConservative)?;
    let mut phases = Vec::with_capacity(i_max as usize);
    phases.push(PhaseSpec { length: m0, a: profile.phase1_a, threshold: t1 });
    let mut threshold = t1;
    for (a, length, gain) in later {
        threshold += gain;
        phases.push(PhaseSpec { length, a, threshold });
    }
    PhaseSchedule::user_designed(sigma, sigma_phase1, &profile, phases)
}

/// `a_i = max(8, 4 ln(i + 2))`, `L_i = scale * i^3`.
pub fn log_growth_template(
    sigma: f64,
    profile: &ConstantsProfile,
    i_max: u64,
    scale: u64,
) -> Result<PhaseSchedule> {
    design_schedule(
        sigma,
        profile,
        i_max,
        |i| libm::fmax(8.0, 4.0 * libm::log(i as f64 + 2.0)),
        |i| scale * i * i * i,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: last failing m below `limit`, plus 3.
    fn scan_m(delta: f64, k: u32, h: f64, limit: u64) -> u64 {
        let mut last_fail = 0;
        for m in 1..limit {
            if gain_function(delta, k, m) < h {
                last_fail = m;
            }
        }
        last_fail + 3
    }

    #[test]
    fn find_m_matches_scan() {
        assert_eq!(scan_m(0.5, 1, 4.0, 1_000_000), 89);
        assert_eq!(find_m_with(0.5, 1, 4.0).unwrap(), 89);
        assert_eq!(find_m_with(1.0, 1, 0.001).unwrap(), scan_m(1.0, 1, 0.001, 100_000));
        assert_eq!(find_m_with(1.0, 1, 0.001).unwrap(), 11);
        assert_eq!(find_m_with(0.5, 2, 4.0).unwrap(), scan_m(0.5, 2, 4.0, 100_000));
        for (d, h) in [(0.3, 1.0), (0.7, 10.0), (2.0, 0.5), (0.05, 4.0)] {
            assert_eq!(find_m_with(d, 1, h).unwrap(), scan_m(d, 1, h, 200_000), "d={d} h={h}");
        }
    }

    #[test]
    fn find_m_paper_profile() {
        let m = find_m(&ConstantsProfile::paper()).unwrap();
        assert_eq!(m, 527_866);
        assert!(gain_function(0.01, 1, m - 2) >= 4.0);
        assert!(gain_function(0.01, 1, m - 3) < 4.0);
        for j in 0..200u64 {
            let probe = m - 2 + j * j * 997;
            assert!(gain_function(0.01, 1, probe) >= 4.0);
        }
    }

    #[test]
    fn find_m0_examples() {
        let p = 0.2;
        assert_eq!(find_m0_with(0.5, 0, p, M0Method::ExactBinomial).unwrap(), 4);
        assert_eq!(find_m0_with(0.999_999, 2, p, M0Method::ExactBinomial).unwrap(), 3);
        let conservative = find_m0_with(0.1, 10, p, M0Method::HoeffdingConservative).unwrap();
        assert_eq!(conservative, 105);
        let exact = find_m0_with(0.1, 10, p, M0Method::ExactBinomial).unwrap();
        assert_eq!(exact, 75);
        assert!(matches!(
            find_m0_with(0.0, 10, p, M0Method::ExactBinomial),
            Err(Error::Unsatisfiable(_))
        ));
        assert!(find_m0_with(1.0, 10, p, M0Method::ExactBinomial).is_err());
    }

    #[test]
    fn hoeffding_m0_is_least_by_scan() {
        for (sigma, m) in [(0.1, 10), (0.25, 89), (0.01, 500), (0.5, 0)] {
            let got = find_m0_with(sigma, m, 0.2, M0Method::HoeffdingConservative).unwrap();
            let scan = (1..)
                .find(|&k: &u64| {
                    let mean = k as f64 / 5.0;
                    mean > m as f64
                        && libm::exp(-2.0 * (mean - m as f64).powi(2) / k as f64) <= sigma
                })
                .unwrap();
            assert_eq!(got, scan);
        }
    }

    #[test]
    fn binomial_cdf_small_cases() {
        // P(Bin(3, 0.2) <= 1) = 0.512 + 0.384
        let v = libm::exp(binomial_log_cdf(3, 0.2, 1));
        assert!((v - 0.896).abs() < 1e-14);
        assert_eq!(binomial_log_cdf(3, 0.2, 3), 0.0);
    }

    #[test]
    fn paper_schedule_shape() {
        let s = build_paper_schedule(0.5, &ConstantsProfile::paper()).unwrap();
        assert_eq!(s.a_of_phase(1).unwrap(), 8.0);
        let a2 = s.a_of_phase(2).unwrap();
        assert!((a2 - (8.0 * 5.0 / 3.1 - 0.001)).abs() < 1e-12);
        assert_eq!(s.a_of_phase_exact(2).unwrap(), BigRational::new(399_969.into(), 31_000.into()));
        assert_eq!(s.length(2).unwrap(), s.big_m - 2);
        assert_eq!(s.length(5).unwrap(), s.big_m - 2 + 6);
        assert_eq!(s.threshold(1).unwrap(), s.big_m);
        assert_eq!(s.threshold(3).unwrap(), s.big_m + 8);
        assert_eq!(s.sigma_phase1, 0.25);
    }

    #[test]
    fn paper_a_monotone_and_diverging() {
        let profile = ConstantsProfile::paper();
        let mut prev = paper_a::<f64>(2, &profile);
        assert!(prev > 8.0);
        for i in 3..1_000_000u64 {
            let a = paper_a::<f64>(i, &profile);
            assert!(a > prev);
            assert!(a >= 4.0 * i as f64);
            prev = a;
        }
    }

    #[test]
    fn steps_resolve_to_phases() {
        let s = build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap();
        for i in 1..50 {
            let (lo, hi) = (s.boundary(i - 1).unwrap(), s.boundary(i).unwrap());
            assert!(hi > lo);
            assert_eq!(hi - lo, s.length(i).unwrap());
            assert_eq!(s.phase_of_step(lo).unwrap(), i);
            assert_eq!(s.phase_of_step(hi - 1).unwrap(), i);
            assert_eq!(s.a_of_step(lo).unwrap(), s.a_of_phase(i).unwrap());
        }
    }

    #[test]
    fn user_schedule_bounds() {
        let profile = ConstantsProfile::scaled();
        let phases = alloc::vec![
            PhaseSpec { length: 10, a: 8.0, threshold: 3 },
            PhaseSpec { length: 5, a: 9.0, threshold: 4 },
        ];
        let s = PhaseSchedule::user_designed(0.5, 0.25, &profile, phases).unwrap();
        assert_eq!(s.boundary(2).unwrap(), 15);
        assert_eq!(s.phase_of_step(14).unwrap(), 2);
        assert_eq!(s.phase_of_step(15), Err(Error::PhaseBeyondSchedule(3)));
        assert!(s.omega_holds(1, 4).unwrap() && !s.omega_holds(1, 3).unwrap());
        assert!(s.omega_holds(2, 4).unwrap());

        let bad = alloc::vec![
            PhaseSpec { length: 10, a: 8.0, threshold: 3 },
            PhaseSpec { length: 5, a: 7.0, threshold: 4 },
        ];
        assert!(PhaseSchedule::user_designed(0.5, 0.25, &profile, bad).is_err());
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = build_paper_schedule(0.3, &ConstantsProfile::scaled()).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["mode"], "paper-literal");
        assert!(json["phases"].is_null());
        assert!(json.get("M").is_some() && json.get("M0").is_some());
        let back: PhaseSchedule = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(back, s);
        let mut broken = json;
        broken["mode"] = "user-designed".into();
        assert!(serde_json::from_value::<PhaseSchedule>(broken).is_err());
    }

    #[test]
    fn paper_feasibility_fails_early() {
        let s = build_paper_schedule(0.5, &ConstantsProfile::paper()).unwrap();
        let report = check_schedule_feasibility(&s, 100).unwrap();
        let v = report.first_violation.clone().unwrap();
        assert_eq!(v.i, 2);
        assert_eq!(v.reason, "G_i < T_i − T_{i−1}");
        // Worst-case height arithmetic at i = 2 leaves exactly zero margin.
        assert_eq!(report.phases[0].height_margin, 0);
    }

    #[test]
    fn worst_case_height_identity() {
        let s = build_paper_schedule(0.5, &ConstantsProfile::paper()).unwrap();
        let report = check_schedule_feasibility(&s, 300).unwrap();
        for p in &report.phases {
            // T_{i-1} - L_i = M + 4(i-2) - (M - 2 + 2(i-2)) = 2i - 2
            assert_eq!(p.height_margin, 0, "phase {}", p.i);
        }
    }

    #[test]
    fn log_growth_template_feasible() {
        let s = log_growth_template(0.5, &ConstantsProfile::paper(), 10_000, 100).unwrap();
        // Late thresholds exceed 2^53, so gaps must be taken in integers.
        assert!(s.threshold(10_000).unwrap() > 1 << 53);
        let report = check_schedule_feasibility(&s, 10_000).unwrap();
        assert!(report.all_ok(), "{:?}", report.first_violation);
    }
}
