//! Seeded Monte Carlo simulation of the flattened walk, with phase-event
//! tracking and per-phase conditional statistics.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bounds::{phase_success_bound, true_mean_phase_bound};
use crate::domination::{coupled_sample, sample_step, z_distribution, ZDistribution};
use crate::error::{Error, Result};
use crate::kernel::{flat_step_f64, StepDistribution};
use crate::rng::{ReplicationSeed, GENERATOR_ID};
use crate::schedule::{PhaseSchedule, StepRule};
use crate::stair::{FlatPosition, ScheduleMode};
use crate::stats::{standard_error, wilson_99, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Stop a replication at its first failed phase event.
    pub early_stop: bool,
    /// Extra checkpoints every this many steps (phase boundaries are always recorded).
    pub checkpoint_every: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { early_stop: true, checkpoint_every: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: ReplicationSeed,
    pub checkpoints: Vec<Checkpoint>,
    /// `phase_outcomes[i - 1]` tells whether the phase-`i` event held.
    pub phase_outcomes: Vec<bool>,
    pub deepest_phase: u64,
    pub final_n: u64,
    pub final_s: u64,
}

/// Length of the leading run of `true`.
pub fn prefix_depth(outcomes: &[bool]) -> u64 {
    outcomes.iter().take_while(|&&ok| ok).count() as u64
}

/// Walks one step from `s` with parameter `a` using uniform `u`.
#[inline]
pub fn step(s: u64, a: f64, u: f64) -> u64 {
    let (down, up) = flat_step_f64(s, a);
    match sample_step(u, down, up) {
        -1 => s - 1,
        0 => s,
        _ => s + 1,
    }
}

/// Simulates `S_0 = 0` through `N_{max_phase}` and evaluates the phase events.
pub fn run_replication(
    schedule: &PhaseSchedule,
    max_phase: u64,
    seed: ReplicationSeed,
    config: &SimConfig,
) -> Result<Trajectory> {
    if max_phase < 1 {
        return Err(Error::OutOfRange { name: "max_phase", value: 0.0, expected: ">= 1" });
    }
    let mut rng = seed.rng();
    let mut s = 0u64;
    let mut n = 0u64;
    let mut checkpoints = vec![Checkpoint { n: 0, s: 0 }];
    let mut outcomes = Vec::with_capacity(max_phase as usize);
    for i in 1..=max_phase {
        let a = schedule.a_of_phase(i)?;
        let length = schedule.length(i)?;
        for _ in 0..length {
            s = step(s, a, rng.uniform());
            n += 1;
            if let Some(every) = config.checkpoint_every {
                if n % every == 0 {
                    checkpoints.push(Checkpoint { n, s });
                }
            }
        }
        if checkpoints.last().map(|c| c.n) != Some(n) {
            checkpoints.push(Checkpoint { n, s });
        }
        let ok = schedule.omega_holds(i, s)?;
        outcomes.push(ok);
        if !ok && config.early_stop {
            break;
        }
    }
    Ok(Trajectory {
        seed,
        deepest_phase: prefix_depth(&outcomes),
        phase_outcomes: outcomes,
        checkpoints,
        final_n: n,
        final_s: s,
    })
}

/// Recomputes phase outcomes from the stored checkpoints.
pub fn recompute_outcomes(schedule: &PhaseSchedule, trajectory: &Trajectory) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(trajectory.phase_outcomes.len());
    for i in 1..=trajectory.phase_outcomes.len() as u64 {
        let n = schedule.boundary(i)?;
        let cp = trajectory
            .checkpoints
            .iter()
            .find(|c| c.n == n)
            .ok_or(Error::InvalidSchedule("missing phase-boundary checkpoint".into()))?;
        out.push(schedule.omega_holds(i, cp.s)?);
    }
    Ok(out)
}

/// Mergeable counts behind [`PhaseStats`]. Merging is associative and
/// commutative, so any partition of the replications gives the same result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentTally {
    pub max_phase: u64,
    pub replications: u64,
    pub attempts: Vec<u64>,
    pub successes: Vec<u64>,
    pub all_phases: u64,
}

impl ExperimentTally {
    pub fn new(max_phase: u64) -> Self {
        ExperimentTally {
            max_phase,
            replications: 0,
            attempts: vec![0; max_phase as usize],
            successes: vec![0; max_phase as usize],
            all_phases: 0,
        }
    }

    pub fn record(&mut self, trajectory: &Trajectory) {
        self.replications += 1;
        for (idx, &ok) in trajectory.phase_outcomes.iter().enumerate() {
            self.attempts[idx] += 1;
            if ok {
                self.successes[idx] += 1;
            } else {
                break;
            }
        }
        if trajectory.deepest_phase == self.max_phase {
            self.all_phases += 1;
        }
    }

    pub fn merge(mut self, other: &ExperimentTally) -> Self {
        assert_eq!(self.max_phase, other.max_phase);
        self.replications += other.replications;
        self.all_phases += other.all_phases;
        for (a, b) in self.attempts.iter_mut().zip(&other.attempts) {
            *a += b;
        }
        for (a, b) in self.successes.iter_mut().zip(&other.successes) {
            *a += b;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStat {
    pub i: u64,
    /// Replications that satisfied every earlier event.
    pub attempts: u64,
    pub successes: u64,
    pub frequency: f64,
    pub standard_error: f64,
    pub wilson99: Interval,
    /// `1 - 2/L^{2K}` for paper-literal phases `i >= 2`, `1 - sigma/2` for phase 1.
    pub paper_bound: Option<f64>,
    /// True-mean Hoeffding bound (phase 1: `1 - sigma_phase1`).
    pub true_mean_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub replications: u64,
    pub max_phase: u64,
    pub base_seed: u64,
    pub generator: alloc::string::String,
    pub per_phase: Vec<PhaseStat>,
    pub product_estimate: f64,
    pub product_wilson99: Interval,
    pub product_standard_error: f64,
}

/// Analytic per-phase bounds attached to Monte Carlo frequencies.
pub fn phase_bounds(schedule: &PhaseSchedule, i: u64) -> Result<(Option<f64>, Option<f64>)> {
    if i == 1 {
        let paper = 1.0 - schedule.sigma / 2.0;
        return Ok((Some(paper), Some(1.0 - schedule.sigma_phase1)));
    }
    let paper = match schedule.mode {
        ScheduleMode::PaperLiteral => Some(phase_success_bound(i, schedule)?.value),
        ScheduleMode::UserDesigned => None,
    };
    let gap = (schedule.threshold(i)? as i128 - schedule.threshold(i - 1)? as i128) as f64;
    let true_mean = match z_distribution(i, schedule) {
        Ok(z) => Some(true_mean_phase_bound(schedule.length(i)?, z.mean(), gap).value),
        Err(_) => None,
    };
    Ok((paper, true_mean))
}

pub fn finalize(
    tally: &ExperimentTally,
    schedule: &PhaseSchedule,
    base_seed: u64,
) -> Result<PhaseStats> {
    let mut per_phase = Vec::with_capacity(tally.max_phase as usize);
    for idx in 0..tally.max_phase as usize {
        let i = idx as u64 + 1;
        let (attempts, successes) = (tally.attempts[idx], tally.successes[idx]);
        let (paper_bound, true_mean_bound) = phase_bounds(schedule, i)?;
        per_phase.push(PhaseStat {
            i,
            attempts,
            successes,
            frequency: if attempts == 0 { f64::NAN } else { successes as f64 / attempts as f64 },
            standard_error: standard_error(successes, attempts),
            wilson99: wilson_99(successes, attempts),
            paper_bound,
            true_mean_bound,
        });
    }
    Ok(PhaseStats {
        replications: tally.replications,
        max_phase: tally.max_phase,
        base_seed,
        generator: GENERATOR_ID.into(),
        per_phase,
        product_estimate: tally.all_phases as f64 / tally.replications.max(1) as f64,
        product_wilson99: wilson_99(tally.all_phases, tally.replications),
        product_standard_error: standard_error(tally.all_phases, tally.replications),
    })
}

/// Tally for replications `range` of an experiment.
pub fn tally_range(
    schedule: &PhaseSchedule,
    max_phase: u64,
    base_seed: u64,
    range: core::ops::Range<u64>,
    config: &SimConfig,
) -> Result<ExperimentTally> {
    let mut tally = ExperimentTally::new(max_phase);
    for r in range {
        let t = run_replication(schedule, max_phase, ReplicationSeed::new(base_seed, r), config)?;
        tally.record(&t);
    }
    Ok(tally)
}

/// Sequential experiment; see the companion crate for the parallel driver,
/// which produces identical results.
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
    let tally = tally_range(schedule, max_phase, base_seed, 0..replications, config)?;
    finalize(&tally, schedule, base_seed)
}

/// Per-phase record of a coupled replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPhase {
    pub i: u64,
    pub start_s: u64,
    pub end_s: u64,
    pub z_sum: i64,
    /// Minimum over the phase of `(S_n - S_start) - (sum of z so far)`.
    pub min_gap: i64,
    /// Whether `x >= i` held at every step, so every step was coupled.
    pub fully_coupled: bool,
}

/// Runs phases `2..=max_phase` (after an uncoupled phase 1) drawing each step
/// jointly with a `Z_i` sample through [`coupled_sample`] while `x >= i`.
pub fn run_coupled_replication(
    schedule: &PhaseSchedule,
    max_phase: u64,
    seed: ReplicationSeed,
) -> Result<Vec<CoupledPhase>> {
    let mut rng = seed.rng();
    let mut s = 0u64;
    for _ in 0..schedule.length(1)? {
        s = step(s, schedule.a_of_phase(1)?, rng.uniform());
    }
    let mut phases = Vec::new();
    for i in 2..=max_phase {
        let a = schedule.a_of_phase(i)?;
        let z: ZDistribution = z_distribution(i, schedule)?;
        let start_s = s;
        let (mut z_sum, mut min_gap, mut fully_coupled) = (0i64, i64::MAX, true);
        for _ in 0..schedule.length(i)? {
            let u = rng.uniform();
            if FlatPosition(s).height() >= i {
                let (down, up) = flat_step_f64(s, a);
                let law = StepDistribution::from_down_up(down, up);
                let (st, zv) = coupled_sample(u, &law, &z)?;
                s = (s as i64 + st as i64) as u64;
                z_sum += zv as i64;
            } else {
                fully_coupled = false;
                s = step(s, a, u);
            }
            if fully_coupled {
                min_gap = min_gap.min(s as i64 - start_s as i64 - z_sum);
            }
        }
        phases.push(CoupledPhase { i, start_s, end_s: s, z_sum, min_gap, fully_coupled });
    }
    Ok(phases)
}

/// Parameter regime of a control experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ControlMode {
    Constant { a: f64 },
    /// `a_n = n^2 + 8`.
    FastGrowth,
}

impl StepRule for ControlMode {
    fn a_at(&self, n: u64) -> Result<f64> {
        match self {
            ControlMode::Constant { a } => Ok(*a),
            ControlMode::FastGrowth => crate::schedule::QuadraticGrowth.a_at(n),
        }
    }
}

/// Occupancy histogram bins `0..OCCUPANCY_BINS`, plus one overflow bin.
pub const OCCUPANCY_BINS: usize = 64;
/// States counted as "low" in the return-frequency statistic.
pub const LOW_STATE_MAX: u64 = 4;

/// Mergeable counts of a control experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlTally {
    pub horizon: u64,
    pub replications: u64,
    pub final_s: Vec<u64>,
    pub monotone_paths: u64,
    /// Occupancy over the second half of each trajectory.
    pub tail_occupancy: Vec<u64>,
    pub tail_low_visits: u64,
    pub tail_steps: u64,
}

impl ControlTally {
    pub fn new(horizon: u64) -> Self {
        ControlTally {
            horizon,
            replications: 0,
            final_s: Vec::new(),
            monotone_paths: 0,
            tail_occupancy: vec![0; OCCUPANCY_BINS + 1],
            tail_low_visits: 0,
            tail_steps: 0,
        }
    }

    pub fn merge(mut self, other: &ControlTally) -> Self {
        self.replications += other.replications;
        self.final_s.extend_from_slice(&other.final_s);
        self.monotone_paths += other.monotone_paths;
        for (a, b) in self.tail_occupancy.iter_mut().zip(&other.tail_occupancy) {
            *a += b;
        }
        self.tail_low_visits += other.tail_low_visits;
        self.tail_steps += other.tail_steps;
        self
    }
}

pub fn control_replication(
    mode: &ControlMode,
    horizon: u64,
    seed: ReplicationSeed,
    tally: &mut ControlTally,
) -> Result<()> {
    let mut rng = seed.rng();
    let mut s = 0u64;
    let mut monotone = true;
    let tail_start = horizon / 2;
    for n in 0..horizon {
        let next = step(s, mode.a_at(n)?, rng.uniform());
        monotone &= next >= s;
        s = next;
        if n + 1 > tail_start {
            tally.tail_occupancy[(s as usize).min(OCCUPANCY_BINS)] += 1;
            tally.tail_steps += 1;
            if s <= LOW_STATE_MAX {
                tally.tail_low_visits += 1;
            }
        }
    }
    tally.replications += 1;
    tally.final_s.push(s);
    tally.monotone_paths += monotone as u64;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSummary {
    pub mode: ControlMode,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    /// Mean of `S_horizon / horizon`.
    pub mean_drift: f64,
    pub mean_final_s: f64,
    /// Final-position quantiles at 10%, 50%, 90%.
    pub final_s_quantiles: [u64; 3],
    pub monotone_fraction: f64,
    pub tail_occupancy: Vec<u64>,
    pub tail_mode: u64,
    pub tail_low_fraction: f64,
}

pub fn summarize_control(mode: ControlMode, mut tally: ControlTally, base_seed: u64) -> ControlSummary {
    tally.final_s.sort_unstable();
    let reps = tally.replications.max(1);
    let mean_final = tally.final_s.iter().map(|&s| s as f64).sum::<f64>() / reps as f64;
    let quantile = |p: f64| -> u64 {
        if tally.final_s.is_empty() {
            return 0;
        }
        let idx = libm::floor(p * (tally.final_s.len() - 1) as f64) as usize;
        tally.final_s[idx]
    };
    let tail_mode = tally
        .tail_occupancy
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(s, _)| s as u64)
        .unwrap_or(0);
    ControlSummary {
        mode,
        horizon: tally.horizon,
        replications: tally.replications,
        base_seed,
        mean_drift: mean_final / tally.horizon.max(1) as f64,
        mean_final_s: mean_final,
        final_s_quantiles: [quantile(0.1), quantile(0.5), quantile(0.9)],
        monotone_fraction: tally.monotone_paths as f64 / reps as f64,
        tail_mode,
        tail_low_fraction: tally.tail_low_visits as f64 / tally.tail_steps.max(1) as f64,
        tail_occupancy: tally.tail_occupancy,
    }
}

pub fn run_control(
    mode: ControlMode,
    horizon: u64,
    replications: u64,
    base_seed: u64,
) -> Result<ControlSummary> {
    if let ControlMode::Constant { a } = mode {
        if !(a >= 8.0) {
            return Err(Error::OutOfRange { name: "a", value: a, expected: ">= 8" });
        }
    }
    let mut tally = ControlTally::new(horizon);
    for r in 0..replications {
        control_replication(&mode, horizon, ReplicationSeed::new(base_seed, r), &mut tally)?;
    }
    Ok(summarize_control(mode, tally, base_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_paper_schedule;
    use crate::stair::ConstantsProfile;

    fn scaled() -> PhaseSchedule {
        build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap()
    }

    #[test]
    fn phase_one_is_nondecreasing() {
        let s = scaled();
        let cfg = SimConfig { early_stop: true, checkpoint_every: Some(1) };
        for r in 0..20 {
            let t = run_replication(&s, 1, ReplicationSeed::new(3, r), &cfg).unwrap();
            assert!(t.checkpoints.windows(2).all(|w| w[1].s >= w[0].s));
            assert_eq!(t.final_n, s.length(1).unwrap());
        }
    }

    #[test]
    fn determinism_and_depth() {
        let s = scaled();
        let cfg = SimConfig::default();
        for r in 0..10 {
            let seed = ReplicationSeed::new(11, r);
            let a = run_replication(&s, 4, seed, &cfg).unwrap();
            let b = run_replication(&s, 4, seed, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(a.deepest_phase <= 4);
            assert_eq!(recompute_outcomes(&s, &a).unwrap(), a.phase_outcomes);
        }
    }

    #[test]
    fn tallies_merge_in_any_split() {
        let s = scaled();
        let cfg = SimConfig::default();
        let whole = tally_range(&s, 3, 5, 0..60, &cfg).unwrap();
        let left = tally_range(&s, 3, 5, 0..17, &cfg).unwrap();
        let right = tally_range(&s, 3, 5, 17..60, &cfg).unwrap();
        assert_eq!(right.clone().merge(&left), whole);
        assert_eq!(left.merge(&right), whole);
    }

    #[test]
    fn early_stop_truncates_outcomes() {
        // Threshold far out of reach makes phase 1 fail.
        let profile = ConstantsProfile::scaled();
        let phases = vec![
            crate::schedule::PhaseSpec { length: 5, a: 8.0, threshold: 100 },
            crate::schedule::PhaseSpec { length: 5, a: 8.0, threshold: 100 },
        ];
        let s = PhaseSchedule::user_designed(0.5, 0.25, &profile, phases).unwrap();
        let t = run_replication(&s, 2, ReplicationSeed::new(0, 0), &SimConfig::default()).unwrap();
        assert_eq!(t.phase_outcomes, vec![false]);
        assert_eq!(t.deepest_phase, 0);
        let cfg = SimConfig { early_stop: false, checkpoint_every: None };
        let t = run_replication(&s, 2, ReplicationSeed::new(0, 0), &cfg).unwrap();
        assert_eq!(t.phase_outcomes.len(), 2);
    }

    #[test]
    fn coupled_paths_dominate() {
        let s = scaled();
        for r in 0..50 {
            let phases = run_coupled_replication(&s, 4, ReplicationSeed::new(9, r)).unwrap();
            for p in phases.iter().filter(|p| p.fully_coupled) {
                assert!(p.min_gap >= 0);
                assert!(p.end_s as i64 - p.start_s as i64 >= p.z_sum);
            }
        }
    }

    #[test]
    fn control_constant_eight() {
        let summary = run_control(ControlMode::Constant { a: 8.0 }, 1000, 50, 1).unwrap();
        assert_eq!(summary.monotone_fraction, 1.0);
        assert!(summary.mean_drift > 0.2);
        assert!(run_control(ControlMode::Constant { a: 7.0 }, 10, 1, 1).is_err());
    }
}
