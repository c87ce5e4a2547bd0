//! Exact transient law of the flattened walk by forward recursion.

use alloc::vec;
use alloc::vec::Vec;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{flat_step_f64, flat_step_unchecked};
use crate::scalar::Scalar;
use crate::schedule::StepRule;

/// Default horizon budget for the dense recursion.
pub const DEFAULT_HORIZON_BUDGET: u64 = 20_000;
/// Rational denominators grow multiplicatively; beyond this the exact path is refused.
pub const RATIONAL_HORIZON_LIMIT: u64 = 64;

/// Law of `S_n` on `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientLaw<T = f64> {
    pub n: u64,
    pub mass: Vec<T>,
}

impl<T: Scalar> TransientLaw<T> {
    pub fn initial() -> Self {
        TransientLaw { n: 0, mass: vec![T::one()] }
    }

    pub fn total(&self) -> T {
        self.mass.iter().cloned().fold(T::zero(), |acc, m| acc + m)
    }

    /// `P(S_n > threshold)` (strict) or `P(S_n >= threshold)`.
    pub fn tail(&self, threshold: i64, strict: bool) -> T {
        let first = if strict { threshold + 1 } else { threshold };
        let first = first.max(0) as usize;
        self.mass.iter().skip(first).cloned().fold(T::zero(), |acc, m| acc + m)
    }

    /// `P(S_n <= s)`.
    pub fn cdf(&self, s: u64) -> T {
        self.mass
            .iter()
            .take(s as usize + 1)
            .cloned()
            .fold(T::zero(), |acc, m| acc + m)
    }
}

/// Arithmetic-specific one-step update, so the float path keeps its fast kernel.
pub trait LawArithmetic: Scalar {
    const EXACT: bool;
    fn a_at(rule: &dyn StepRuleDyn, n: u64) -> Result<Self>;
    fn step_law(s: u64, a: &Self) -> (Self, Self, Self);
}

/// Object-safe view of [`StepRule`].
pub trait StepRuleDyn {
    fn a_float(&self, n: u64) -> Result<f64>;
    fn a_exact(&self, n: u64) -> Result<BigRational>;
}

impl<R: StepRule> StepRuleDyn for R {
    fn a_float(&self, n: u64) -> Result<f64> {
        self.a_at(n)
    }

    fn a_exact(&self, n: u64) -> Result<BigRational> {
        self.a_at_exact(n)
    }
}

impl LawArithmetic for f64 {
    const EXACT: bool = false;
    fn a_at(rule: &dyn StepRuleDyn, n: u64) -> Result<Self> {
        rule.a_float(n)
    }

    #[inline]
    fn step_law(s: u64, a: &Self) -> (f64, f64, f64) {
        let (down, up) = flat_step_f64(s, *a);
        (down, 1.0 - down - up, up)
    }
}

impl LawArithmetic for BigRational {
    const EXACT: bool = true;
    fn a_at(rule: &dyn StepRuleDyn, n: u64) -> Result<Self> {
        rule.a_exact(n)
    }

    fn step_law(s: u64, a: &Self) -> (Self, Self, Self) {
        let d = flat_step_unchecked(s, a);
        (d.p_down, d.p_stay, d.p_up)
    }
}

/// Steps a transient law forward one step at a time.
#[derive(Debug, Clone)]
pub struct TransientSolver<'r, R, T = f64> {
    rule: &'r R,
    law: TransientLaw<T>,
    scratch: Vec<T>,
}

impl<'r, R: StepRule, T: LawArithmetic> TransientSolver<'r, R, T> {
    pub fn new(rule: &'r R) -> Self {
        TransientSolver { rule, law: TransientLaw::initial(), scratch: Vec::new() }
    }

    pub fn law(&self) -> &TransientLaw<T> {
        &self.law
    }

    /// Advances from `S_n` to `S_{n+1}` using `a_n`.
    pub fn advance(&mut self) -> Result<&TransientLaw<T>> {
        let n = self.law.n;
        let a = T::a_at(self.rule, n)?;
        if a < T::from_int(8) {
            return Err(Error::OutOfRange { name: "a", value: a.to_f64(), expected: ">= 8" });
        }
        self.scratch.clear();
        self.scratch.resize(self.law.mass.len() + 1, T::zero());
        for (s, m) in self.law.mass.iter().enumerate() {
            if *m == T::zero() {
                continue;
            }
            let (down, stay, up) = T::step_law(s as u64, &a);
            if s > 0 {
                self.scratch[s - 1] = self.scratch[s - 1].clone() + m.clone() * down;
            }
            self.scratch[s] = self.scratch[s].clone() + m.clone() * stay;
            self.scratch[s + 1] = self.scratch[s + 1].clone() + m.clone() * up;
        }
        core::mem::swap(&mut self.law.mass, &mut self.scratch);
        self.law.n = n + 1;
        Ok(&self.law)
    }

    pub fn advance_to(&mut self, horizon: u64) -> Result<&TransientLaw<T>> {
        while self.law.n < horizon {
            self.advance()?;
        }
        Ok(&self.law)
    }
}

fn check_budget<T: LawArithmetic>(horizon: u64, budget: u64) -> Result<()> {
    if T::EXACT && horizon > RATIONAL_HORIZON_LIMIT {
        return Err(Error::Resource {
            what: "rational transient law horizon",
            requested: horizon,
            budget: RATIONAL_HORIZON_LIMIT,
        });
    }
    if horizon > budget {
        return Err(Error::Resource { what: "transient law horizon", requested: horizon, budget });
    }
    Ok(())
}

/// Law of `S_horizon`.
pub fn transient_law<T: LawArithmetic, R: StepRule>(
    horizon: u64,
    rule: &R,
    budget: u64,
) -> Result<TransientLaw<T>> {
    check_budget::<T>(horizon, budget)?;
    let mut solver = TransientSolver::<R, T>::new(rule);
    solver.advance_to(horizon).cloned()
}

/// Laws of `S_0, ..., S_horizon`. Memory is quadratic in the horizon.
pub fn transient_law_sequence<T: LawArithmetic, R: StepRule>(
    horizon: u64,
    rule: &R,
    budget: u64,
) -> Result<Vec<TransientLaw<T>>> {
    check_budget::<T>(horizon, budget)?;
    let mut solver = TransientSolver::<R, T>::new(rule);
    let mut out = vec![solver.law().clone()];
    for _ in 0..horizon {
        out.push(solver.advance()?.clone());
    }
    Ok(out)
}

/// Laws at the requested step indices only (sorted ascending on output).
pub fn transient_laws_at<T: LawArithmetic, R: StepRule>(
    checkpoints: &[u64],
    rule: &R,
    budget: u64,
) -> Result<Vec<TransientLaw<T>>> {
    let mut points = checkpoints.to_vec();
    points.sort_unstable();
    points.dedup();
    let horizon = points.last().copied().unwrap_or(0);
    check_budget::<T>(horizon, budget)?;
    let mut solver = TransientSolver::<R, T>::new(rule);
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        out.push(solver.advance_to(p)?.clone());
    }
    Ok(out)
}

/// `P(S_horizon > threshold)` when `strict`, else `P(S_horizon >= threshold)`.
pub fn event_probability<T: LawArithmetic, R: StepRule>(
    horizon: u64,
    rule: &R,
    threshold: i64,
    strict: bool,
    budget: u64,
) -> Result<T> {
    Ok(transient_law::<T, R>(horizon, rule, budget)?.tail(threshold, strict))
}
