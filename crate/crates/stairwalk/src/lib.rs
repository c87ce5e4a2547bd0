//! File formats, parallel drivers and the command-line front end for the
//! stair-walk toolkit. The mathematics lives in `stairwalk-core`.

pub mod cli;
pub mod config;
pub mod csv_out;
pub mod error;
pub mod json;
pub mod parallel;

pub use error::{AppError, AppResult};
pub use stairwalk_core as core;
