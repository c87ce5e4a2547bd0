//! Multi-threaded drivers. Every result is identical to the sequential core
//! routine for any thread count: replications are seeded by index and tallies
//! merge by addition.

use rayon::prelude::*;
use stairwalk_core::domination::{check_domination, DominationRow};
use stairwalk_core::simulator::{
    control_replication, finalize, summarize_control, tally_range, ControlMode, ControlSummary, ControlTally,
    ExperimentTally, PhaseStats, SimConfig,
};
use stairwalk_core::verifier::{self, AuditParams, AuditReport, CLAIM_IDS};
use stairwalk_core::rng::ReplicationSeed;
use stairwalk_core::{Error, PhaseSchedule, Result};

/// Replications per work item.
const CHUNK: u64 = 256;

/// Runs `f` on a pool with `threads` workers (0 = all cores).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn chunks(replications: u64) -> Vec<std::ops::Range<u64>> {
    (0..replications.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(replications)).collect()
}

pub fn experiment_tally(
    schedule: &PhaseSchedule,
    max_phase: u64,
    replications: u64,
    base_seed: u64,
    config: &SimConfig,
) -> Result<ExperimentTally> {
    chunks(replications)
        .into_par_iter()
        .map(|r| tally_range(schedule, max_phase, base_seed, r, config))
        .try_reduce(|| ExperimentTally::new(max_phase), |a, b| Ok(a.merge(&b)))
}

pub fn run_experiment(
    schedule: &PhaseSchedule,
    max_phase: u64,
    replications: u64,
    base_seed: u64,
    config: &SimConfig,
) -> Result<PhaseStats> {
    if replications < 1 {
        return Err(Error::OutOfRange { name: "replications", value: 0.0, expected: ">= 1" });
    }
    let tally = experiment_tally(schedule, max_phase, replications, base_seed, config)?;
    finalize(&tally, schedule, base_seed)
}

pub fn run_control(mode: ControlMode, horizon: u64, replications: u64, base_seed: u64) -> Result<ControlSummary> {
    if let ControlMode::Constant { a } = mode {
        if !(a >= 8.0) {
            return Err(Error::OutOfRange { name: "a", value: a, expected: ">= 8" });
        }
    }
    let tally = chunks(replications)
        .into_par_iter()
        .map(|range| {
            let mut t = ControlTally::new(horizon);
            for r in range {
                control_replication(&mode, horizon, ReplicationSeed::new(base_seed, r), &mut t)?;
            }
            Ok(t)
        })
        .try_reduce(|| ControlTally::new(horizon), |a, b| Ok(a.merge(&b)))?;
    Ok(summarize_control(mode, tally, base_seed))
}

/// Audit with claims and the C2/C3 cross-check evaluated concurrently.
pub fn audit_all(schedule: &PhaseSchedule, i_max: u64, x_depth: u64) -> Result<AuditReport> {
    if !verifier::is_paper_schedule(schedule) {
        return verifier::audit_all(schedule, i_max, x_depth);
    }
    let params = AuditParams::new(i_max, x_depth);
    let (claims, consistency) = rayon::join(
        || CLAIM_IDS.par_iter().map(|id| verifier::audit_single(id, schedule, &params)).collect::<Result<Vec<_>>>(),
        || verifier::c2_c3_consistency(schedule, i_max),
    );
    Ok(verifier::assemble_report(claims?, consistency?))
}

/// Domination rows for every `i` in `i_lo..=i_hi` and `x` in `[i, i + x_depth]`.
pub fn domination_rows(schedule: &PhaseSchedule, i_lo: u64, i_hi: u64, x_depth: u64) -> Result<Vec<DominationRow>> {
    let per_phase = (i_lo..=i_hi)
        .into_par_iter()
        .map(|i| check_domination(i, schedule, i, i + x_depth, true).map(|r| r.rows))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_phase.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stairwalk_core::schedule::build_paper_schedule;
    use stairwalk_core::simulator;
    use stairwalk_core::ConstantsProfile;

    #[test]
    fn parallel_matches_sequential_for_any_thread_count() {
        let s = build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap();
        let cfg = SimConfig::default();
        let seq = simulator::run_experiment(&s, 3, 700, 42, &cfg).unwrap();
        for threads in [1, 3, 8] {
            let par = with_threads(threads, || run_experiment(&s, 3, 700, 42, &cfg)).unwrap();
            assert_eq!(par, seq);
        }
        let seq = simulator::run_control(ControlMode::FastGrowth, 300, 600, 7).unwrap();
        let par = with_threads(4, || run_control(ControlMode::FastGrowth, 300, 600, 7)).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn parallel_audit_matches_sequential() {
        let s = build_paper_schedule(0.5, &ConstantsProfile::paper()).unwrap();
        assert_eq!(audit_all(&s, 30, 20).unwrap(), verifier::audit_all(&s, 30, 20).unwrap());
    }
}
