//! Claim auditor: checks each assertion of the construction over finite
//! ranges and reports a verdict with a witness.
//!
//! C2, C3, C6, C7 and C8 use exact arithmetic; C4 and C5 use floats with a
//! `1e-12` guard.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::domination::{check_domination, z_distribution, z_distribution_exact, MARGIN_GUARD};
use crate::error::{Error, Result};
use crate::kernel::{g_lower, g_upper};
use crate::scalar::{rational_string, Scalar};
use crate::schedule::PhaseSchedule;
use crate::stair::ScheduleMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    HoldsUpTo,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::HoldsUpTo => "holds-up-to",
        })
    }
}

/// Counterexample or boundary. For `holds-up-to` the claim holds for every
/// index below `index` and fails at `index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub index: u64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detail {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimResult {
    pub claim_id: String,
    pub statement: String,
    pub range_checked: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub details: Vec<Detail>,
}

impl ClaimResult {
    fn new(id: &str, statement: &str, range_checked: String) -> Self {
        ClaimResult {
            claim_id: id.to_string(),
            statement: statement.to_string(),
            range_checked,
            verdict: Verdict::Holds,
            witness: None,
            details: Vec::new(),
        }
    }

    fn detail(&mut self, key: &str, value: impl ToString) {
        self.details.push(Detail { key: key.to_string(), value: value.to_string() });
    }

    pub fn get_detail(&self, key: &str) -> Option<&str> {
        self.details.iter().find(|d| d.key == key).map(|d| d.value.as_str())
    }

    /// Sets the verdict from the first failing index of a range starting at `lo`.
    fn conclude(&mut self, lo: u64, first_failure: Option<(u64, String)>) {
        match first_failure {
            None => self.verdict = Verdict::Holds,
            Some((index, note)) => {
                self.verdict = if index == lo { Verdict::Fails } else { Verdict::HoldsUpTo };
                self.witness = Some(Witness { index, note });
            }
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Ranges for one audit run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditParams {
    /// Phases `2..=i_max` (C1 also covers phase 1).
    pub i_max: u64,
    /// C5 checks `x` in `[i, i + x_depth]`.
    pub x_depth: u64,
    /// Heights for C7 and positions for C8 run up to `x_max`.
    pub x_max: u64,
}

impl AuditParams {
    /// `x_max` covers every state visited by the C5 grid.
    pub fn new(i_max: u64, x_depth: u64) -> Self {
        AuditParams { i_max, x_depth, x_max: 2 * (i_max + x_depth) + 2 }
    }
}

/// Whether (upeq) at `i` implies `mean_z(i) > mu - 2 eps`, checked at every
/// `i` where (upeq) holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consistency {
    pub upeq_holds_at: u64,
    pub consistent: bool,
    pub counterexample: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub claims: Vec<ClaimResult>,
    pub c2_c3_consistency: Consistency,
}

impl AuditReport {
    pub fn claim(&self, id: &str) -> Option<&ClaimResult> {
        self.claims.iter().find(|c| c.claim_id == id)
    }
}

pub const CLAIM_IDS: [&str; 8] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"];

fn check_i_max(i_max: u64) -> Result<()> {
    if i_max < 2 {
        return Err(Error::OutOfRange { name: "i_max", value: i_max as f64, expected: ">= 2" });
    }
    Ok(())
}

fn rat(x: f64) -> BigRational {
    BigRational::from_decimal(x)
}

/// C1: `a_i >= 8`, `a_{i+1} > a_i` and `a_i >= 4i` (linear growth, so
/// `a_i -> infinity`) for `i <= i_max`.
pub fn claim_c1(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    check_i_max(params.i_max)?;
    let mut r = ClaimResult::new(
        "C1",
        "a_i >= 8, a_i is increasing and a_i >= 4i (so a_i -> infinity)",
        format!("1 <= i <= {}", params.i_max),
    );
    let eight = BigRational::from_int(8);
    let mut prev = schedule.a_of_phase_exact(1)?;
    let mut failure = None;
    if prev < eight {
        failure = Some((1, format!("a_1 = {}", rational_string(&prev))));
    }
    for i in 2..=params.i_max {
        if failure.is_some() {
            break;
        }
        let a = schedule.a_of_phase_exact(i)?;
        if a < eight {
            failure = Some((i, format!("a_{i} = {} < 8", rational_string(&a))));
        } else if a <= prev {
            failure = Some((i, format!("a_{i} <= a_{}", i - 1)));
        } else if a < BigRational::from_int(4 * i as i64) {
            failure = Some((i, format!("a_{i} = {} < 4i", rational_string(&a))));
        }
        prev = a;
    }
    r.detail("a_2", rational_string(&schedule.a_of_phase_exact(2)?));
    r.detail("a_i_max", format!("{:.17e}", prev.to_f64()));
    r.conclude(1, failure);
    Ok(r)
}

/// Left side of (upeq): `(1/2 + 4/a) g_1(i) - (1/2 - 4/a) g_2(i)`.
pub fn upeq_lhs(i: u64, a: &BigRational) -> BigRational {
    let half = BigRational::ratio(1, 2);
    let q = BigRational::from_int(4) / a.clone();
    (half.clone() + q.clone()) * g_lower::<BigRational>(i) - (half - q) * g_upper::<BigRational>(i)
}

/// C2: inequality (upeq) `lhs(i, a_i) > mu` for `2 <= i <= i_max`.
pub fn claim_c2(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    check_i_max(params.i_max)?;
    let mu = rat(schedule.profile.drift_target);
    let mut r = ClaimResult::new(
        "C2",
        "(1/2 + 4/a_i) (i-1)^2/D_i - (1/2 - 4/a_i) i^2/D_i > mu at the closed-form a_i",
        format!("2 <= i <= {}, mu = {}", params.i_max, rational_string(&mu)),
    );
    let mut failure = None;
    let mut holds_count = 0u64;
    for i in 2..=params.i_max {
        let lhs = upeq_lhs(i, &schedule.a_of_phase_exact(i)?);
        if lhs > mu {
            holds_count += 1;
        } else if failure.is_none() {
            failure = Some((i, format!("lhs = {} <= mu", rational_string(&lhs))));
            r.detail("lhs_at_witness_f64", format!("{:.17e}", lhs.to_f64()));
        }
    }
    r.detail("indices_where_upeq_holds", holds_count);
    r.conclude(2, failure);
    Ok(r)
}

/// C3: `mean_z(i) >= mu - 2 eps`, plus the largest `i` with `mean_z(i) >=
/// delta` and with `mean_z(i) > 0`.
pub fn claim_c3(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    check_i_max(params.i_max)?;
    let p = &schedule.profile;
    let target = rat(p.drift_target) - BigRational::from_int(2) * rat(p.slack);
    let delta = rat(p.drift_floor);
    let mut r = ClaimResult::new(
        "C3",
        "E[Z_i] = b - c >= mu - 2 eps",
        format!("2 <= i <= {}, mu - 2 eps = {}", params.i_max, rational_string(&target)),
    );
    let mut failure = None;
    let (mut largest_delta, mut largest_pos) = (None, None);
    // Whether the property holds on an initial segment and nowhere after it.
    let (mut delta_prefix, mut pos_prefix) = (true, true);
    let (mut delta_broken, mut pos_broken) = (false, false);
    for i in 2..=params.i_max {
        let mean = z_distribution_exact(i, schedule)?.mean();
        if mean < target && failure.is_none() {
            failure = Some((i, format!("mean_z = {:.17e}", mean.to_f64())));
        }
        if mean >= delta {
            largest_delta = Some(i);
            delta_prefix &= !delta_broken;
        } else {
            delta_broken = true;
        }
        if mean > BigRational::zero() {
            largest_pos = Some(i);
            pos_prefix &= !pos_broken;
        } else {
            pos_broken = true;
        }
    }
    let show = |v: Option<u64>| v.map_or("none".to_string(), |i| i.to_string());
    r.detail("mean_z_2", format!("{:.17e}", z_distribution_exact(2, schedule)?.mean().to_f64()));
    r.detail("largest_i_mean_ge_delta", show(largest_delta));
    r.detail("mean_ge_delta_on_prefix", delta_prefix);
    r.detail("largest_i_mean_positive", show(largest_pos));
    r.detail("mean_positive_on_prefix", pos_prefix);
    r.conclude(2, failure);
    Ok(r)
}

/// C4: `c <= 2/5 + eps`, `b < 9/20` and `a_i > 10` for `2 <= i <= i_max`.
pub fn claim_c4(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    check_i_max(params.i_max)?;
    let eps = schedule.profile.slack;
    let mut r = ClaimResult::new(
        "C4",
        "Z_i is a valid law: c <= 2/5 + eps, b < 9/20, a_i > 10",
        format!("2 <= i <= {}", params.i_max),
    );
    let mut failure = None;
    let (mut max_c, mut max_b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 2..=params.i_max {
        let a = schedule.a_of_phase(i)?;
        let z = match z_distribution(i, schedule) {
            Ok(z) => z,
            Err(_) => {
                failure.get_or_insert((i, "masses do not form a probability vector".to_string()));
                continue;
            }
        };
        max_c = max_c.max(z.c);
        max_b = max_b.max(z.b);
        if failure.is_some() {
            continue;
        }
        if z.c > 0.4 + eps + MARGIN_GUARD {
            failure = Some((i, format!("c = {:.17e}", z.c)));
        } else if z.b >= 0.45 - MARGIN_GUARD {
            failure = Some((i, format!("b = {:.17e}", z.b)));
        } else if a <= 10.0 + MARGIN_GUARD {
            failure = Some((i, format!("a_i = {a:.17e}")));
        }
    }
    r.detail("max_c", format!("{max_c:.17e}"));
    r.detail("max_b", format!("{max_b:.17e}"));
    r.conclude(2, failure);
    Ok(r)
}

/// C5: `c >= p_down` and `b <= p_up` for `x` in `[i, i + x_depth]`, both parities.
pub fn claim_c5(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    claim_c5_range(schedule, 2, params.i_max, params.x_depth)
}

pub fn claim_c5_range(schedule: &PhaseSchedule, i_lo: u64, i_hi: u64, x_depth: u64) -> Result<ClaimResult> {
    if i_lo < 2 || i_hi < i_lo {
        return Err(Error::OutOfRange { name: "i", value: i_lo as f64, expected: "2 <= i_lo <= i_hi" });
    }
    let mut r = ClaimResult::new(
        "C5",
        "Z_i is dominated by the step law: c >= p_down and b <= p_up whenever x >= i",
        format!("{i_lo} <= i <= {i_hi}, i <= x <= i + {x_depth}"),
    );
    let mut failure = None;
    let (mut min_c, mut min_b) = (f64::INFINITY, f64::INFINITY);
    for i in i_lo..=i_hi {
        let report = check_domination(i, schedule, i, i + x_depth, false)?;
        min_c = min_c.min(report.min_c_margin);
        min_b = min_b.min(report.min_b_margin);
        if let (Some(v), None) = (report.violations.first(), &failure) {
            failure = Some((i, format!("x = {}, {:?}, margins ({:.3e}, {:.3e})", v.x, v.parity, v.c_margin, v.b_margin)));
        }
    }
    r.detail("min_c_margin", format!("{min_c:.17e}"));
    r.detail("min_b_margin", format!("{min_b:.17e}"));
    r.conclude(i_lo, failure);
    Ok(r)
}

/// C6: worst-case height identity `(M + 4(i-2)) - (M - 2 + 2(i-2)) = 2i - 2`.
pub fn claim_c6(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    check_i_max(params.i_max)?;
    let mut r = ClaimResult::new(
        "C6",
        "(M + 4(i-2)) - (M - 2 + 2(i-2)) = 2i - 2",
        format!("2 <= i <= {}, M = {}", params.i_max, schedule.big_m),
    );
    let m = schedule.big_m as i128;
    let mut failure = None;
    let mut thresholds_match = schedule.mode == ScheduleMode::PaperLiteral;
    for i in 2..=params.i_max as i128 {
        let lhs = (m + 4 * (i - 2)) - (m - 2 + 2 * (i - 2));
        if lhs != 2 * i - 2 && failure.is_none() {
            failure = Some((i as u64, format!("lhs = {lhs}")));
        }
        if thresholds_match && schedule.threshold(i as u64 - 1)? as i128 != m + 4 * (i - 2) {
            thresholds_match = false;
        }
    }
    r.detail("thresholds_equal_M_plus_4(i-2)", thresholds_match);
    r.conclude(2, failure);
    Ok(r)
}

/// `x^2 + (x-1)^2`.
fn d(x: u128) -> u128 {
    x * x + (x - 1) * (x - 1)
}

/// C7: `g_1(x) = (x-1)^2/D(x)` increasing and `g_2(x) = x^2/D(x)` decreasing
/// for `1 <= x <= x_max`, by exact integer cross-multiplication.
pub fn claim_c7(params: &AuditParams) -> Result<ClaimResult> {
    let x_max = params.x_max.max(2);
    if x_max > 1 << 30 {
        return Err(Error::Resource { what: "C7 height range", requested: x_max, budget: 1 << 30 });
    }
    let mut r = ClaimResult::new(
        "C7",
        "(x-1)^2/D(x) is increasing and x^2/D(x) is decreasing",
        format!("1 <= x <= {x_max}"),
    );
    let mut failure = None;
    for x in 1..x_max as u128 {
        let (d0, d1) = (d(x), d(x + 1));
        // g_1(x+1) > g_1(x)  <=>  x^2 D(x) > (x-1)^2 D(x+1)
        if x * x * d0 <= (x - 1) * (x - 1) * d1 {
            failure = Some((x as u64, "g_1(x+1) <= g_1(x)".to_string()));
            break;
        }
        // g_2(x+1) < g_2(x)  <=>  (x+1)^2 D(x) < x^2 D(x+1)
        if (x + 1) * (x + 1) * d0 >= x * x * d1 {
            failure = Some((x as u64, "g_2(x+1) >= g_2(x)".to_string()));
            break;
        }
    }
    r.conclude(1, failure);
    Ok(r)
}

/// C8: at the phase-1 parameter, `p_down = 0` at every position and `p_up`
/// is at least the phase-1 floor, for `s <= x_max`. Positions where `p_up`
/// equals the floor are listed.
pub fn claim_c8(schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    claim_c8_at(schedule.profile.phase1_a, schedule.profile.phase1_up_floor, params.x_max)
}

pub fn claim_c8_at(a: f64, floor: f64, s_max: u64) -> Result<ClaimResult> {
    let a = rat(a);
    let floor = rat(floor);
    let mut r = ClaimResult::new(
        "C8",
        "phase 1: p_down = 0 and p_up >= floor, so S never decreases",
        format!("0 <= s <= {s_max}, a = {}, floor = {}", rational_string(&a), rational_string(&floor)),
    );
    let half = BigRational::ratio(1, 2);
    let quarter = BigRational::ratio(1, 4);
    let k_down_diag = half.clone() - BigRational::from_int(4) / a.clone();
    let k_down_sub = quarter.clone() - BigRational::from_int(2) / a.clone();
    let k_up_diag = quarter + BigRational::from_int(2) / a.clone();
    let k_up_sub = half + BigRational::from_int(4) / a;
    // p_up at odd s is k (x-1)^2 / D(x); compare k_num (x-1)^2 f_den against f_num k_den D(x).
    let lhs_scale = k_up_sub.numer() * floor.denom();
    let rhs_scale = floor.numer() * k_up_sub.denom();
    let mut failure = None;
    let mut equality_at = Vec::new();
    for s in 0..=s_max {
        if s % 2 == 0 {
            if s > 0 && !k_down_diag.is_zero() {
                failure = Some((s, format!("p_down = {} g_2 > 0", rational_string(&k_down_diag))));
                break;
            }
            if k_up_diag < floor {
                failure = Some((s, "p_up < floor".to_string()));
                break;
            }
            if k_up_diag == floor {
                equality_at.push(s);
            }
        } else {
            if !k_down_sub.is_zero() {
                failure = Some((s, format!("p_down = {}", rational_string(&k_down_sub))));
                break;
            }
            let x = (s as u128 + 3) / 2;
            let lhs = &lhs_scale * BigInt::from((x - 1) * (x - 1));
            let rhs = &rhs_scale * BigInt::from(d(x));
            if lhs < rhs {
                failure = Some((s, "p_up < floor".to_string()));
                break;
            }
            if lhs == rhs {
                equality_at.push(s);
            }
        }
    }
    let shown: Vec<String> = equality_at.iter().take(16).map(|s| s.to_string()).collect();
    r.detail("p_up_equals_floor_at", format!("[{}]", shown.join(",")));
    r.detail("p_up_equals_floor_count", equality_at.len());
    r.conclude(0, failure);
    Ok(r)
}

/// Checks every `i` where (upeq) holds.
pub fn c2_c3_consistency(schedule: &PhaseSchedule, i_max: u64) -> Result<Consistency> {
    check_i_max(i_max)?;
    let p = &schedule.profile;
    let mu = rat(p.drift_target);
    let target = mu.clone() - BigRational::from_int(2) * rat(p.slack);
    let mut out = Consistency { upeq_holds_at: 0, consistent: true, counterexample: None };
    for i in 2..=i_max {
        if upeq_lhs(i, &schedule.a_of_phase_exact(i)?) > mu {
            out.upeq_holds_at += 1;
            if !(z_distribution_exact(i, schedule)?.mean() > target) && out.consistent {
                out.consistent = false;
                out.counterexample = Some(i);
            }
        }
    }
    Ok(out)
}

fn require_paper(schedule: &PhaseSchedule) -> Result<()> {
    match schedule.mode {
        ScheduleMode::PaperLiteral => Ok(()),
        ScheduleMode::UserDesigned => {
            Err(Error::InvalidSchedule("the audit targets the paper-literal schedule".into()))
        }
    }
}

/// Runs one claim with custom ranges.
pub fn audit_single(claim_id: &str, schedule: &PhaseSchedule, params: &AuditParams) -> Result<ClaimResult> {
    match claim_id {
        "C1" => claim_c1(schedule, params),
        "C2" => claim_c2(schedule, params),
        "C3" => claim_c3(schedule, params),
        "C4" => claim_c4(schedule, params),
        "C5" => claim_c5(schedule, params),
        "C6" => claim_c6(schedule, params),
        "C7" => claim_c7(params),
        "C8" => claim_c8(schedule, params),
        other => Err(Error::UnknownClaim(other.to_string())),
    }
}

/// Runs C1..C8 sequentially; the companion crate runs them concurrently.
pub fn audit_all(schedule: &PhaseSchedule, i_max: u64, x_depth: u64) -> Result<AuditReport> {
    require_paper(schedule)?;
    let params = AuditParams::new(i_max, x_depth);
    let claims = CLAIM_IDS
        .iter()
        .map(|id| audit_single(id, schedule, &params))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport { claims, c2_c3_consistency: c2_c3_consistency(schedule, i_max)? })
}

/// Assembles a report from claims computed elsewhere, ordering by claim id.
pub fn assemble_report(mut claims: Vec<ClaimResult>, consistency: Consistency) -> AuditReport {
    claims.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    AuditReport { claims, c2_c3_consistency: consistency }
}

pub fn is_paper_schedule(schedule: &PhaseSchedule) -> bool {
    require_paper(schedule).is_ok()
}
