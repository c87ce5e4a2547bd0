//! The stair state space, its flattening onto the nonnegative integers, the
//! unnormalized target weights, and the constants profile.

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point `(x, y)` of the stair: `x == y` (diagonal) or `x == y + 1` (sub-diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StairState {
    x: u64,
    y: u64,
}

impl StairState {
    pub const ORIGIN: StairState = StairState { x: 1, y: 1 };

    pub fn new(x: i64, y: i64) -> Result<Self> {
        if x < 1 || y < 1 || !(x == y || x == y + 1) {
            return Err(Error::InvalidState { x, y });
        }
        Ok(StairState { x: x as u64, y: y as u64 })
    }

    pub fn x(self) -> u64 {
        self.x
    }

    pub fn y(self) -> u64 {
        self.y
    }

    pub fn is_diagonal(self) -> bool {
        self.x == self.y
    }

    /// Neighbor one step towards the origin along the stair, or `None` from `(1,1)`,
    /// whose backward proposal `(1,0)` leaves the stair.
    pub fn backward(self) -> Option<StairState> {
        if self.is_diagonal() {
            (self.y > 1).then_some(StairState { x: self.x, y: self.y - 1 })
        } else {
            Some(StairState { x: self.x - 1, y: self.y })
        }
    }

    pub fn forward(self) -> StairState {
        if self.is_diagonal() {
            StairState { x: self.x + 1, y: self.y }
        } else {
            StairState { x: self.x, y: self.y + 1 }
        }
    }

    pub fn flatten(self) -> FlatPosition {
        flatten(self)
    }
}

impl core::fmt::Display for StairState {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Distance `S` of a stair state from `(1,1)` measured along the stair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlatPosition(pub u64);

impl FlatPosition {
    pub fn try_from_signed(s: i64) -> Result<Self> {
        if s < 0 {
            Err(Error::NegativePosition(s))
        } else {
            Ok(FlatPosition(s as u64))
        }
    }

    pub fn is_diagonal(self) -> bool {
        self.0 % 2 == 0
    }

    /// First coordinate `x` of the corresponding stair state.
    pub fn height(self) -> u64 {
        if self.is_diagonal() {
            self.0 / 2 + 1
        } else {
            (self.0 + 3) / 2
        }
    }

    pub fn unflatten(self) -> StairState {
        unflatten(self)
    }
}

pub fn flatten(state: StairState) -> FlatPosition {
    if state.is_diagonal() {
        FlatPosition(2 * (state.x - 1))
    } else {
        FlatPosition(2 * state.x - 3)
    }
}

/// Checked flattening of raw coordinates.
pub fn flatten_coords(x: i64, y: i64) -> Result<FlatPosition> {
    StairState::new(x, y).map(flatten)
}

pub fn unflatten(s: FlatPosition) -> StairState {
    let x = s.height();
    if s.is_diagonal() {
        StairState { x, y: x }
    } else {
        StairState { x, y: x - 1 }
    }
}

/// Unnormalized target weight `j^-2` of every stair state on level `j`.
pub fn weight<T: Scalar>(j: u64) -> T {
    let j = T::from_int(j as i64);
    T::one() / (j.clone() * j)
}

/// Metropolis-type acceptance `w(to) / (w(to) + w(from))` for a move between
/// adjacent stair states. A target that is off the stair yields
/// [`Error::OffStair`]; the caller treats that proposal as rejected.
pub fn acceptance_ratio<T: Scalar>(from: StairState, to: (i64, i64)) -> Result<T> {
    let target = StairState::new(to.0, to.1).map_err(|_| Error::OffStair { x: to.0, y: to.1 })?;
    let dx = target.x as i64 - from.x as i64;
    let dy = target.y as i64 - from.y as i64;
    if dx.abs() + dy.abs() != 1 {
        return Err(Error::InvalidState { x: to.0, y: to.1 });
    }
    let w_to: T = weight(target.y);
    let w_from: T = weight(from.y);
    Ok(w_to.clone() / (w_to + w_from))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    PaperLiteral,
    UserDesigned,
}

/// Every numeric constant the construction depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsProfile {
    /// Per-step drift floor used when sizing `M` (0.01).
    pub drift_floor: f64,
    /// Target drift in the closed form for `a_i` (0.1).
    pub drift_target: f64,
    /// Slack between `Z_i` and the step law (0.0001).
    pub slack: f64,
    /// Offset subtracted from the closed form for `a_i` (0.001).
    pub a_offset: f64,
    /// Per-phase height gain (4).
    pub overshoot: f64,
    #[serde(rename = "hoeffding_K")]
    pub hoeffding_k: u32,
    /// `a` during phase 1 (8).
    pub phase1_a: f64,
    /// Lower bound on the up-probability during phase 1 (1/5).
    pub phase1_up_floor: f64,
    pub schedule_mode: ScheduleMode,
}

impl ConstantsProfile {
    pub fn paper() -> Self {
        ConstantsProfile {
            drift_floor: 0.01,
            drift_target: 0.1,
            slack: 0.0001,
            a_offset: 0.001,
            overshoot: 4.0,
            hoeffding_k: 1,
            phase1_a: 8.0,
            phase1_up_floor: 0.2,
            schedule_mode: ScheduleMode::PaperLiteral,
        }
    }

    /// Desk-scale profile: same construction, `M = 89` instead of ~5·10⁵.
    pub fn scaled() -> Self {
        ConstantsProfile { drift_floor: 0.5, drift_target: 0.6, ..Self::paper() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidProfile(format!("{why}")));
        let finite = [
            self.drift_floor,
            self.drift_target,
            self.slack,
            self.a_offset,
            self.overshoot,
            self.phase1_a,
            self.phase1_up_floor,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all constants must be finite");
        }
        if self.drift_floor <= 0.0 {
            return bad("drift_floor must be positive");
        }
        if !(self.drift_floor + 2.0 * self.slack < self.drift_target) {
            return bad("need drift_floor + 2*slack < drift_target");
        }
        if self.slack < 0.0 || self.a_offset < 0.0 {
            return bad("slack and a_offset must be nonnegative");
        }
        if self.overshoot <= 0.0 {
            return bad("overshoot must be positive");
        }
        if self.hoeffding_k < 1 {
            return bad("hoeffding_K must be at least 1");
        }
        if self.phase1_a < 8.0 {
            return bad("phase1_a must be at least 8");
        }
        if !(0.0..=1.0).contains(&self.phase1_up_floor) || self.phase1_up_floor == 0.0 {
            return bad("phase1_up_floor must lie in (0, 1]");
        }
        Ok(())
    }
}

impl Default for ConstantsProfile {
    fn default() -> Self {
        Self::paper()
    }
}
