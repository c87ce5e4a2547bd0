//! Simulation against exact laws and statistical self-checks.

use stairwalk_core::oracle::transient_laws_at;
use stairwalk_core::rng::ReplicationSeed;
use stairwalk_core::schedule::{build_paper_schedule, QuadraticGrowth, StepRule};
use stairwalk_core::simulator::{run_coupled_replication, run_experiment, step, SimConfig};
use stairwalk_core::stats::{dkw_epsilon, wilson_99};
use stairwalk_core::ConstantsProfile;

fn simulate_finals<R: StepRule>(rule: &R, horizon: u64, reps: u64, seed: u64) -> Vec<u64> {
    (0..reps)
        .map(|r| {
            let mut rng = ReplicationSeed::new(seed, r).rng();
            let mut s = 0;
            for n in 0..horizon {
                s = step(s, rule.a_at(n).unwrap(), rng.uniform());
            }
            s
        })
        .collect()
}

#[test]
fn empirical_law_within_dkw_band_of_dp() {
    let horizons = [5u64, 20, 60];
    let laws = transient_laws_at::<f64, _>(&horizons, &QuadraticGrowth, 1000).unwrap();
    let reps = 40_000;
    for (law, &h) in laws.iter().zip(&horizons) {
        let mut finals = simulate_finals(&QuadraticGrowth, h, reps, 31);
        finals.sort_unstable();
        let mut worst = 0.0f64;
        for k in 0..=h {
            let below = finals.partition_point(|&x| x <= k) as f64 / reps as f64;
            worst = worst.max((below - law.cdf(k)).abs());
        }
        assert!(worst <= dkw_epsilon(reps, 0.001), "horizon {h}: {worst}");
    }
}

#[test]
fn experiments_are_reproducible() {
    let s = build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap();
    let cfg = SimConfig::default();
    let a = run_experiment(&s, 3, 300, 9, &cfg).unwrap();
    let b = run_experiment(&s, 3, 300, 9, &cfg).unwrap();
    assert_eq!(a, b);
    let c = simulate_finals(&QuadraticGrowth, 50, 50, 9);
    let d = simulate_finals(&QuadraticGrowth, 50, 50, 10);
    assert_ne!(c, d);
}

#[test]
fn coupled_paths_stay_above_z_sums() {
    let s = build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap();
    let mut coupled = 0;
    for r in 0..500 {
        for phase in run_coupled_replication(&s, 5, ReplicationSeed::new(4, r)).unwrap() {
            if phase.fully_coupled {
                coupled += 1;
                assert!(phase.min_gap >= 0, "{phase:?}");
            }
        }
    }
    assert!(coupled > 1000);
}

/// Coverage of the 99% Wilson interval for Bernoulli draws from the stream generator.
#[test]
fn wilson_coverage_meta_check() {
    let (p, n, experiments) = (0.3, 400u64, 4000u64);
    let mut covered = 0;
    for e in 0..experiments {
        let mut rng = ReplicationSeed::new(123, e).rng();
        let hits = (0..n).filter(|_| rng.uniform() < p).count() as u64;
        covered += wilson_99(hits, n).contains(p) as u64;
    }
    let coverage = covered as f64 / experiments as f64;
    assert!(coverage > 0.98, "coverage {coverage}");
}
