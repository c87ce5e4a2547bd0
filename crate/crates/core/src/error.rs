use alloc::string::String;
use core::fmt;

/// Errors raised by the stair-walk core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// `(x, y)` is not on the stair (`x - y` must be 0 or 1, both coordinates positive).
    InvalidState { x: i64, y: i64 },
    /// A flat position must be nonnegative.
    NegativePosition(i64),
    /// The target of a move is not on the stair; the move must be treated as rejected.
    OffStair { x: i64, y: i64 },
    /// A parameter lies outside its admissible range.
    OutOfRange { name: &'static str, value: f64, expected: &'static str },
    /// No finite answer exists for the requested search.
    Unsatisfiable(&'static str),
    /// `Z_i` and related objects only exist for phases `i >= 2`.
    PhaseUndefined(u64),
    /// The schedule does not define phase `i`.
    PhaseBeyondSchedule(u64),
    /// A coupling was requested for a pair of laws that is not stochastically ordered.
    DominationViolated { c_margin: f64, b_margin: f64 },
    /// A computation would exceed its configured budget.
    Resource { what: &'static str, requested: u64, budget: u64 },
    UnknownClaim(String),
    InvalidProfile(String),
    InvalidSchedule(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidState { x, y } => write!(f, "({x}, {y}) is not a stair state"),
            Error::NegativePosition(s) => write!(f, "flat position {s} is negative"),
            Error::OffStair { x, y } => {
                write!(f, "move target ({x}, {y}) is off the stair; the proposal is rejected")
            }
            Error::OutOfRange { name, value, expected } => {
                write!(f, "{name} = {value} out of range (expected {expected})")
            }
            Error::Unsatisfiable(why) => write!(f, "unsatisfiable: {why}"),
            Error::PhaseUndefined(i) => write!(f, "phase {i}: Z_i is only defined for i >= 2"),
            Error::PhaseBeyondSchedule(i) => write!(f, "phase {i} is not defined by the schedule"),
            Error::DominationViolated { c_margin, b_margin } => write!(
                f,
                "Z is not stochastically below the step law (c margin {c_margin}, b margin {b_margin})"
            ),
            Error::Resource { what, requested, budget } => {
                write!(f, "{what}: requested {requested} exceeds budget {budget}")
            }
            Error::UnknownClaim(id) => write!(f, "unknown claim id `{id}`"),
            Error::InvalidProfile(why) => write!(f, "invalid constants profile: {why}"),
            Error::InvalidSchedule(why) => write!(f, "invalid schedule: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
