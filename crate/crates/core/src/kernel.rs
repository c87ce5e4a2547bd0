//! One-step transition laws of the walk, on the stair and flattened.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{rational_string, Scalar};
use crate::stair::{acceptance_ratio, flatten, FlatPosition, StairState};

/// Law of a flattened increment on `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution<T = f64> {
    pub p_down: T,
    pub p_stay: T,
    pub p_up: T,
}

impl<T: Scalar> StepDistribution<T> {
    pub fn from_down_up(p_down: T, p_up: T) -> Self {
        let p_stay = T::one() - p_down.clone() - p_up.clone();
        StepDistribution { p_down, p_stay, p_up }
    }

    pub fn total(&self) -> T {
        self.p_down.clone() + self.p_stay.clone() + self.p_up.clone()
    }

    /// Expected increment `p_up - p_down`.
    pub fn drift(&self) -> T {
        self.p_up.clone() - self.p_down.clone()
    }

    pub fn to_f64(&self) -> StepDistribution<f64> {
        StepDistribution {
            p_down: self.p_down.to_f64(),
            p_stay: self.p_stay.to_f64(),
            p_up: self.p_up.to_f64(),
        }
    }
}

/// Direction assignment on sub-diagonal states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelVariant {
    /// Backward direction carries `1/2 - 4/a` on both state types; its
    /// flattened image is the three-point law used throughout the analysis.
    LemmaConsistent,
    /// Sub-diagonal backward direction carries `1/2 + 4/a`, as the walk's
    /// verbal definition reads.
    DefinitionLiteral,
}

/// `(x-1)^2 / (x^2 + (x-1)^2)`, increasing on `x >= 1`.
pub fn g_lower<T: Scalar>(x: u64) -> T {
    let xf = T::from_int(x as i64);
    let xm = T::from_int(x as i64 - 1);
    let d = xf.clone() * xf + xm.clone() * xm.clone();
    xm.clone() * xm / d
}

/// `x^2 / (x^2 + (x-1)^2)`, decreasing on `x >= 1`.
pub fn g_upper<T: Scalar>(x: u64) -> T {
    let xf = T::from_int(x as i64);
    let xm = T::from_int(x as i64 - 1);
    let d = xf.clone() * xf.clone() + xm.clone() * xm;
    xf.clone() * xf / d
}

fn check_a<T: Scalar>(a: &T) -> Result<()> {
    if *a < T::from_int(8) {
        return Err(Error::OutOfRange { name: "a", value: a.to_f64(), expected: ">= 8" });
    }
    Ok(())
}

/// Flattened step law at position `s` with parameter `a`, without range checks.
///
/// At `s = 0` the backward proposal leaves the stair and is rejected, so the
/// down-probability is zero.
pub fn flat_step_unchecked<T: Scalar>(s: u64, a: &T) -> StepDistribution<T> {
    let half = T::ratio(1, 2);
    let quarter = T::ratio(1, 4);
    let four_over_a = T::from_int(4) / a.clone();
    let two_over_a = T::from_int(2) / a.clone();
    let pos = FlatPosition(s);
    let x = pos.height();
    if pos.is_diagonal() {
        let p_down = if s == 0 { T::zero() } else { (half - four_over_a) * g_upper::<T>(x) };
        StepDistribution::from_down_up(p_down, quarter + two_over_a)
    } else {
        let p_up = (half + four_over_a) * g_lower::<T>(x);
        StepDistribution::from_down_up(quarter - two_over_a, p_up)
    }
}

/// Flattened step law for floats; the simulator's hot path.
#[inline]
pub fn flat_step_f64(s: u64, a: f64) -> (f64, f64) {
    let x = if s % 2 == 0 { s / 2 + 1 } else { (s + 3) / 2 } as f64;
    let d = x * x + (x - 1.0) * (x - 1.0);
    if s % 2 == 0 {
        let p_down = if s == 0 { 0.0 } else { (0.5 - 4.0 / a) * x * x / d };
        (p_down, 0.25 + 2.0 / a)
    } else {
        (0.25 - 2.0 / a, (0.5 + 4.0 / a) * (x - 1.0) * (x - 1.0) / d)
    }
}

pub fn flat_step_distribution<T: Scalar>(s: FlatPosition, a: &T) -> Result<StepDistribution<T>> {
    check_a(a)?;
    Ok(flat_step_unchecked(s.0, a))
}

/// Full one-step law of the two-dimensional walk from `state`.
pub fn stair_step_distribution<T: Scalar>(
    state: StairState,
    a: &T,
    variant: KernelVariant,
) -> Result<BTreeMap<StairState, T>> {
    check_a(a)?;
    let half = T::ratio(1, 2);
    let four_over_a = T::from_int(4) / a.clone();
    let backward_dir = if state.is_diagonal() || variant == KernelVariant::LemmaConsistent {
        half.clone() - four_over_a.clone()
    } else {
        half.clone() + four_over_a.clone()
    };
    let forward_dir = T::one() - backward_dir.clone();

    let mut law = BTreeMap::new();
    let mut stay = T::zero();

    let (bx, by) = if state.is_diagonal() {
        (state.x() as i64, state.y() as i64 - 1)
    } else {
        (state.x() as i64 - 1, state.y() as i64)
    };
    match acceptance_ratio::<T>(state, (bx, by)) {
        Ok(acc) => {
            let target = state.backward().expect("on-stair backward neighbor");
            stay = stay + backward_dir.clone() * (T::one() - acc.clone());
            law.insert(target, backward_dir * acc);
        }
        Err(Error::OffStair { .. }) => stay = stay + backward_dir,
        Err(e) => return Err(e),
    }

    let fwd = state.forward();
    let acc = acceptance_ratio::<T>(state, (fwd.x() as i64, fwd.y() as i64))?;
    stay = stay + forward_dir.clone() * (T::one() - acc.clone());
    law.insert(fwd, forward_dir * acc);
    law.insert(state, stay);
    Ok(law)
}

/// Pushes a stair law through the flattening map.
pub fn flattened_image<T: Scalar>(
    from: StairState,
    law: &BTreeMap<StairState, T>,
) -> StepDistribution<T> {
    let s = flatten(from).0 as i64;
    let (mut down, mut stay, mut up) = (T::zero(), T::zero(), T::zero());
    for (to, p) in law {
        match flatten(*to).0 as i64 - s {
            -1 => down = down + p.clone(),
            0 => stay = stay + p.clone(),
            1 => up = up + p.clone(),
            other => unreachable!("stair moves change S by at most one, got {other}"),
        }
    }
    StepDistribution { p_down: down, p_stay: stay, p_up: up }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMismatch {
    pub state: StairState,
    pub a: String,
    pub expected: [String; 3],
    pub got: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: KernelVariant,
    pub states_checked: u64,
    pub mismatches: Vec<KernelMismatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub x_max: u64,
    pub a_values: Vec<String>,
    pub variants: Vec<VariantReport>,
}

impl EquivalenceReport {
    pub fn variant(&self, variant: KernelVariant) -> &VariantReport {
        self.variants.iter().find(|r| r.variant == variant).expect("both variants checked")
    }
}

fn triple(d: &StepDistribution<BigRational>) -> [String; 3] {
    [rational_string(&d.p_down), rational_string(&d.p_stay), rational_string(&d.p_up)]
}

/// Compares, in exact arithmetic, the flattened image of each two-dimensional
/// kernel variant against the flattened law for every state with `x <= x_max`.
pub fn kernel_equivalence_check(x_max: u64, a_values: &[BigRational]) -> Result<EquivalenceReport> {
    if x_max < 1 {
        return Err(Error::OutOfRange { name: "x_max", value: x_max as f64, expected: ">= 1" });
    }
    for a in a_values {
        check_a(a)?;
    }
    let states: Vec<StairState> = (1..=x_max as i64)
        .flat_map(|x| {
            let diag = StairState::new(x, x).ok();
            let sub = StairState::new(x, x - 1).ok();
            [diag, sub].into_iter().flatten()
        })
        .collect();

    let mut variants = Vec::new();
    for variant in [KernelVariant::LemmaConsistent, KernelVariant::DefinitionLiteral] {
        let mut mismatches = Vec::new();
        let mut checked = 0u64;
        for a in a_values {
            for &state in &states {
                checked += 1;
                let expected = flat_step_unchecked(flatten(state).0, a);
                let law = stair_step_distribution(state, a, variant)?;
                let got = flattened_image(state, &law);
                if got != expected {
                    mismatches.push(KernelMismatch {
                        state,
                        a: rational_string(a),
                        expected: triple(&expected),
                        got: triple(&got),
                    });
                }
            }
        }
        variants.push(VariantReport { variant, states_checked: checked, mismatches });
    }
    Ok(EquivalenceReport {
        x_max,
        a_values: a_values.iter().map(rational_string).collect(),
        variants,
    })
}
