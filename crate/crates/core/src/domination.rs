//! The dominated three-point variables `Z_i` and the monotone coupling that
//! realizes the domination pathwise.

use alloc::vec::Vec;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{flat_step_f64, g_lower, g_upper, StepDistribution};
use crate::scalar::Scalar;
use crate::schedule::PhaseSchedule;

/// Law of `Z_i` on `{-1, 0, +1}`: mass `c` at -1, `b` at +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZDistribution<T = f64> {
    pub i: u64,
    pub c: T,
    pub stay: T,
    pub b: T,
}

impl<T: Scalar> ZDistribution<T> {
    pub fn mean(&self) -> T {
        self.b.clone() - self.c.clone()
    }

    pub fn as_step(&self) -> StepDistribution<T> {
        StepDistribution { p_down: self.c.clone(), p_stay: self.stay.clone(), p_up: self.b.clone() }
    }
}

/// `c = (1/2 - 4/a) i^2/D_i + eps`, `b = (1/2 + 4/a) (i-1)^2/D_i - eps`.
pub fn z_law<T: Scalar>(i: u64, a: &T, eps: &T) -> Result<ZDistribution<T>> {
    if i < 2 {
        return Err(Error::PhaseUndefined(i));
    }
    let half = T::ratio(1, 2);
    let four_over_a = T::from_int(4) / a.clone();
    let c = (half.clone() - four_over_a.clone()) * g_upper::<T>(i) + eps.clone();
    let b = (half + four_over_a) * g_lower::<T>(i) - eps.clone();
    let stay = T::one() - c.clone() - b.clone();
    let (zero, one) = (T::zero(), T::one());
    if c < zero || b < zero || stay < zero || c > one || b > one {
        return Err(Error::OutOfRange {
            name: "Z_i masses",
            value: stay.to_f64(),
            expected: "a probability vector",
        });
    }
    Ok(ZDistribution { i, c, stay, b })
}

pub fn z_distribution(i: u64, schedule: &PhaseSchedule) -> Result<ZDistribution> {
    if i < 2 {
        return Err(Error::PhaseUndefined(i));
    }
    z_law(i, &schedule.a_of_phase(i)?, &schedule.profile.slack)
}

pub fn z_distribution_exact(i: u64, schedule: &PhaseSchedule) -> Result<ZDistribution<BigRational>> {
    if i < 2 {
        return Err(Error::PhaseUndefined(i));
    }
    let eps = BigRational::from_decimal(schedule.profile.slack);
    z_law(i, &schedule.a_of_phase_exact(i)?, &eps)
}

pub fn mean_z(i: u64, schedule: &PhaseSchedule) -> Result<f64> {
    z_distribution(i, schedule).map(|z| z.mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Diagonal,
    SubDiagonal,
}

/// Margins of one `(x, parity)` comparison: `c - p_down` and `p_up - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub i: u64,
    pub x: u64,
    pub parity: Parity,
    pub c_margin: f64,
    pub b_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub i: u64,
    pub x_lo: u64,
    pub x_hi: u64,
    pub min_c_margin: f64,
    pub min_b_margin: f64,
    pub violations: Vec<DominationRow>,
    /// Every row, when requested.
    pub rows: Vec<DominationRow>,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Float guard for margin comparisons.
pub const MARGIN_GUARD: f64 = 1e-12;

/// Compares `Z_i` against the step law at `(x, a_i)` for every `x` in
/// `x_lo..=x_hi` and both parities.
pub fn check_domination(
    i: u64,
    schedule: &PhaseSchedule,
    x_lo: u64,
    x_hi: u64,
    keep_rows: bool,
) -> Result<DominationReport> {
    let z = z_distribution(i, schedule)?;
    check_domination_against(&z, schedule.a_of_phase(i)?, x_lo, x_hi, keep_rows)
}

pub fn check_domination_against(
    z: &ZDistribution,
    a: f64,
    x_lo: u64,
    x_hi: u64,
    keep_rows: bool,
) -> Result<DominationReport> {
    let i = z.i;
    if x_lo < i {
        return Err(Error::OutOfRange {
            name: "x",
            value: x_lo as f64,
            expected: "x >= i (domination is only claimed there)",
        });
    }
    let mut report = DominationReport {
        i,
        x_lo,
        x_hi,
        min_c_margin: f64::INFINITY,
        min_b_margin: f64::INFINITY,
        violations: Vec::new(),
        rows: Vec::new(),
    };
    for x in x_lo..=x_hi {
        for (parity, s) in [(Parity::Diagonal, 2 * x - 2), (Parity::SubDiagonal, 2 * x - 3)] {
            let (p_down, p_up) = flat_step_f64(s, a);
            let row = DominationRow { i, x, parity, c_margin: z.c - p_down, b_margin: p_up - z.b };
            report.min_c_margin = report.min_c_margin.min(row.c_margin);
            report.min_b_margin = report.min_b_margin.min(row.b_margin);
            if row.c_margin < -MARGIN_GUARD || row.b_margin < -MARGIN_GUARD {
                report.violations.push(row);
            }
            if keep_rows {
                report.rows.push(row);
            }
        }
    }
    Ok(report)
}

#[inline]
fn inverse_cdf(u: f64, p_down: f64, p_up: f64) -> i8 {
    if u < p_down {
        -1
    } else if u >= 1.0 - p_up {
        1
    } else {
        0
    }
}

/// Draws `(step, z)` from one uniform by inverse CDF under both laws.
///
/// Both marginals are exact and `step >= z` for every `u`, provided `z` sits
/// below `step_law` (`c >= p_down`, `b <= p_up`), which is checked.
pub fn coupled_sample(u: f64, step_law: &StepDistribution, z: &ZDistribution) -> Result<(i8, i8)> {
    if z.c < step_law.p_down || z.b > step_law.p_up {
        return Err(Error::DominationViolated {
            c_margin: z.c - step_law.p_down,
            b_margin: step_law.p_up - z.b,
        });
    }
    Ok((inverse_cdf(u, step_law.p_down, step_law.p_up), inverse_cdf(u, z.c, z.b)))
}

/// Inverse-CDF draw from a step law (same atom order as [`coupled_sample`]).
#[inline]
pub fn sample_step(u: f64, p_down: f64, p_up: f64) -> i8 {
    inverse_cdf(u, p_down, p_up)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_paper_schedule;
    use crate::stair::ConstantsProfile;

    fn paper() -> PhaseSchedule {
        build_paper_schedule(0.5, &ConstantsProfile::paper()).unwrap()
    }

    #[test]
    fn z2_paper_values() {
        let s = paper();
        let z = z_distribution(2, &s).unwrap();
        let a2 = 8.0 * 5.0 / 3.1 - 0.001;
        let c = (0.5 - 4.0 / a2) * 0.8 + 0.0001;
        let b = (0.5 + 4.0 / a2) * 0.2 - 0.0001;
        assert!((z.c - c).abs() < 1e-15 && (z.b - b).abs() < 1e-15);
        assert!((z.c - 0.152_080_778_510_334_55).abs() < 1e-15);
        assert!((z.b - 0.161_904_805_372_416_36).abs() < 1e-15);
        assert!((mean_z(2, &s).unwrap() - 0.009_824_026_862_081_812).abs() < 1e-15);
        assert!(matches!(z_distribution(1, &s), Err(Error::PhaseUndefined(1))));
    }

    #[test]
    fn infinite_a_limit_has_negative_mean() {
        for i in 2..200u64 {
            let z = z_law(i, &1e300, &1e-4).unwrap();
            let d = (i * i + (i - 1) * (i - 1)) as f64;
            let expected = -((2 * i - 1) as f64) / (2.0 * d) - 2e-4;
            assert!((z.mean() - expected).abs() < 1e-14);
            assert!(z.mean() < 0.0);
        }
    }

    #[test]
    fn inverse_solved_a_hits_target_mean_exactly() {
        let mu = BigRational::ratio(1, 10);
        for i in 2..60u64 {
            let d = BigRational::from_int((i * i + (i - 1) * (i - 1)) as i64);
            let lead = BigRational::from_int(2 * i as i64 - 1) / (BigRational::from_int(2) * d);
            let a = BigRational::from_int(4) / (mu.clone() + lead);
            let z = z_law(i, &a, &BigRational::from_int(0)).unwrap();
            assert_eq!(z.mean(), mu);
        }
    }

    #[test]
    fn domination_grid_and_equality_case() {
        let s = paper();
        let r = check_domination(2, &s, 2, 500, true).unwrap();
        assert!(r.holds());
        assert!(r.min_c_margin >= 1e-4 - 1e-15 && r.min_b_margin >= 1e-4 - 1e-15);
        let at_i: Vec<_> = r.rows.iter().filter(|row| row.x == 2).collect();
        let diag = at_i.iter().find(|r| r.parity == Parity::Diagonal).unwrap();
        let sub = at_i.iter().find(|r| r.parity == Parity::SubDiagonal).unwrap();
        assert!((diag.c_margin - 1e-4).abs() < 1e-15);
        assert!((sub.b_margin - 1e-4).abs() < 1e-15);

        let r = check_domination(1000, &s, 1000, 1500, false).unwrap();
        assert!(r.holds());
        assert!(check_domination(5, &s, 4, 10, false).is_err());
    }

    #[test]
    fn domination_exact_at_equality() {
        // Exact slack at x = i on the tight sides.
        let s = paper();
        for i in [2u64, 3, 17, 400] {
            let z = z_distribution_exact(i, &s).unwrap();
            let a = s.a_of_phase_exact(i).unwrap();
            let diag = crate::kernel::flat_step_unchecked(2 * i - 2, &a);
            let sub = crate::kernel::flat_step_unchecked(2 * i - 3, &a);
            let eps = BigRational::ratio(1, 10_000);
            assert_eq!(z.c.clone() - diag.p_down, eps);
            assert_eq!(sub.p_up - z.b.clone(), eps);
        }
    }

    #[test]
    fn validity_bounds() {
        let s = paper();
        for i in (2..1_000_000u64).step_by(7).chain([2, 3, 999_999]) {
            let z = z_distribution(i, &s).unwrap();
            assert!(z.c <= 0.4 + 1e-4 + 1e-15);
            assert!(z.b < 0.45);
        }
    }

    #[test]
    fn coupling_interval_structure() {
        let step = StepDistribution::from_down_up(0.1, 0.3);
        let z = ZDistribution { i: 2, c: 0.2, stay: 0.6, b: 0.2 };
        assert_eq!(coupled_sample(0.05, &step, &z).unwrap(), (-1, -1));
        assert_eq!(coupled_sample(0.95, &step, &z).unwrap(), (1, 1));
        let (st, zv) = coupled_sample(0.15, &step, &z).unwrap();
        assert_eq!(zv, -1);
        assert!(st > zv);
        assert_eq!(coupled_sample(0.75, &step, &z).unwrap(), (1, 0));
        let bad = ZDistribution { i: 2, c: 0.05, stay: 0.75, b: 0.2 };
        assert!(matches!(coupled_sample(0.5, &step, &bad), Err(Error::DominationViolated { .. })));
    }
}
