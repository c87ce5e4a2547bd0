//! Arithmetic shared by the floating (simulation) and exact (verification) paths.

use alloc::format;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};

/// A field the kernel formulas can be evaluated in.
///
/// Implemented for `f64` (fast, used by the simulator) and [`BigRational`]
/// (exact, used by the equivalence checks and the auditor).
pub trait Scalar: Clone + PartialOrd + Num + core::fmt::Debug {
    fn from_int(v: i64) -> Self;

    fn ratio(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }

    /// Interprets a float by its shortest round-trip decimal expansion, so
    /// `0.1` becomes exactly `1/10` in rational mode.
    fn from_decimal(x: f64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_decimal(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_decimal(x: f64) -> Self {
        decimal_to_rational(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational value of the shortest decimal representation of `x`.
/// Returns `None` for non-finite input.
pub fn decimal_to_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // `Display` for f64 never uses exponent notation and prints the shortest
    // string that round-trips.
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let mut numer = BigInt::zero();
    let ten = BigInt::from(10u8);
    for ch in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer * &ten + BigInt::from(ch - b'0');
    }
    let denom = num_traits::pow(ten, frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Renders a rational as `p/q` (or `p` when integral).
pub fn rational_string(r: &BigRational) -> alloc::string::String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, `p`, or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p = BigInt::from_str_radix(p.trim(), 10).ok()?;
        let q = BigInt::from_str_radix(q.trim(), 10).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let x: f64 = text.parse().ok()?;
    decimal_to_rational(x)
}
