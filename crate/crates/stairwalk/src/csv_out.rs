//! Plot-ready CSV exports. Reals use the same 17-digit format as JSON.

use std::io::Write;

use stairwalk_core::domination::{DominationRow, Parity};
use stairwalk_core::oracle::TransientLaw;
use stairwalk_core::scalar::{rational_string, Scalar};
use stairwalk_core::schedule::{FeasibilityReport, PhaseSchedule};
use stairwalk_core::simulator::{PhaseStats, Trajectory};
use stairwalk_core::BigRational;

use crate::error::AppResult;
use crate::json::real;

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn feasibility<W: Write>(out: W, report: &FeasibilityReport) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "i", "a", "length", "drift_lower_bound", "hoeffding_gain", "required_gain", "height_margin", "ok", "reason",
    ])?;
    for p in &report.phases {
        w.write_record([
            p.i.to_string(),
            real(p.a),
            p.length.to_string(),
            real(p.drift_lower_bound),
            real(p.hoeffding_gain),
            real(p.required_gain),
            p.height_margin.to_string(),
            p.ok.to_string(),
            p.reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn domination<W: Write>(out: W, rows: &[DominationRow]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "x", "parity", "c_margin", "b_margin"])?;
    for r in rows {
        let parity = match r.parity {
            Parity::Diagonal => "diagonal",
            Parity::SubDiagonal => "sub-diagonal",
        };
        w.write_record([r.i.to_string(), r.x.to_string(), parity.into(), real(r.c_margin), real(r.b_margin)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Formats one probability mass for a CSV cell.
pub trait MassCell {
    fn cell(&self) -> String;
}

impl MassCell for f64 {
    fn cell(&self) -> String {
        real(*self)
    }
}

impl MassCell for BigRational {
    fn cell(&self) -> String {
        rational_string(self)
    }
}

/// Rows `(n, s, mass)` for every law, skipping zero masses.
pub fn laws<W: Write, T: Scalar + MassCell>(out: W, laws: &[TransientLaw<T>]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "s", "mass"])?;
    for law in laws {
        for (s, m) in law.mass.iter().enumerate() {
            if !m.is_zero() {
                w.write_record([law.n.to_string(), s.to_string(), m.cell()])?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Rows `(replication, n, s)` at each stored checkpoint.
pub fn trajectories<W: Write>(out: W, trajectories: &[Trajectory]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replication", "n", "s"])?;
    for t in trajectories {
        for c in &t.checkpoints {
            w.write_record([t.seed.replication.to_string(), c.n.to_string(), c.s.to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn phase_stats<W: Write>(out: W, stats: &PhaseStats) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "i", "attempts", "successes", "frequency", "standard_error", "wilson99_lo", "wilson99_hi", "paper_bound",
        "true_mean_bound",
    ])?;
    for p in &stats.per_phase {
        w.write_record([
            p.i.to_string(),
            p.attempts.to_string(),
            p.successes.to_string(),
            real(p.frequency),
            real(p.standard_error),
            real(p.wilson99.lo),
            real(p.wilson99.hi),
            opt_real(p.paper_bound),
            opt_real(p.true_mean_bound),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Rows `(i, N_i, a_i, T_i)` for the first `count` phases.
pub fn schedule_table<W: Write>(out: W, schedule: &PhaseSchedule, count: u64) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "N_i", "a_i", "T_i"])?;
    let last = schedule.phase_count().map_or(count, |c| c.min(count));
    for i in 1..=last {
        w.write_record([
            i.to_string(),
            schedule.boundary(i)?.to_string(),
            real(schedule.a_of_phase(i)?),
            schedule.threshold(i)?.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
