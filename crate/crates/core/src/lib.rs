//! Core of the stair-walk toolkit: the state space and its flattening, exact
//! and floating one-step kernels, phase schedules, the dominating variables
//! `Z_i` with a monotone coupling, Hoeffding and product bounds, a claim
//! auditor, a dynamic-programming transient oracle and a seeded simulator.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod bounds;
pub mod domination;
pub mod error;
pub mod kernel;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod simulator;
pub mod stair;
pub mod stats;
pub mod verifier;

pub use error::{Error, Result};
pub use kernel::{KernelVariant, StepDistribution};
pub use schedule::{PhaseSchedule, PhaseSpec, StepRule};
pub use stair::{ConstantsProfile, FlatPosition, ScheduleMode, StairState};

pub use num_rational::BigRational;
