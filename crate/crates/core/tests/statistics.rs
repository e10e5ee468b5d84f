//! Seeded Monte Carlo checks against closed-form oracles. Every seed is
//! fixed, so these are deterministic.

use causim_core::experiments::{
    model_correlation, run_bell_experiment, run_double_slit, run_single_sg, run_unentangled_pair, spin_probability,
    BellConfig, DoubleSlitConfig, JointStats, Runtime, SpindirPolicy, UnentangledConfig,
};
use causim_core::refined::Scheduler;

fn within_sigma(estimate: f64, truth: f64, se: f64, k: f64) -> bool {
    // A zero standard error (p ∈ {0,1}) demands exact agreement.
    (estimate - truth).abs() <= k * se.max(1e-12)
}

/// Standard error of E under the model: 2·sqrt(p(1−p)/n) with p = cos²Δ.
fn model_se(delta: f64, n: u64) -> f64 {
    let p = spin_probability(delta);
    2.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn correlation_converges_to_cos_two_delta() {
    let pairs = [(0.0, 0.0), (0.0, 30.0), (10.0, 55.0), (0.0, 60.0), (20.0, 110.0), (300.0, 15.0)];
    for trials in [1_000u64, 10_000, 100_000] {
        for (i, &(a, b)) in pairs.iter().enumerate() {
            let s = run_bell_experiment(&BellConfig::new(a, b, trials, 17 + i as u64)).unwrap();
            let truth = model_correlation(b - a);
            assert!(
                within_sigma(s.correlation, truth, model_se(b - a, trials), 3.0),
                "({a},{b}) at {trials}: E = {} vs {truth}",
                s.correlation
            );
        }
    }
}

#[test]
fn thirty_degrees_gives_three_quarters_same() {
    let s = run_bell_experiment(&BellConfig::new(0.0, 30.0, 100_000, 21)).unwrap();
    assert!((s.p_same - 0.75).abs() < 0.01, "{}", s.p_same);
    assert!((s.correlation - 0.5).abs() < 0.02, "{}", s.correlation);
}

#[test]
fn marginals_are_fair_under_uniform_source() {
    for (i, (a, b)) in [(0.0, 0.0), (0.0, 45.0), (33.0, 200.0)].into_iter().enumerate() {
        let s = run_bell_experiment(&BellConfig::new(a, b, 50_000, 40 + i as u64)).unwrap();
        for m in [s.marginal_a_plus, s.marginal_b_plus] {
            assert!(within_sigma(m, 0.5, s.marginal_se, 3.0), "({a},{b}): marginal {m}");
        }
    }
}

#[test]
fn fixed_source_direction_is_deterministic_when_aligned() {
    let cfg = BellConfig {
        policy: SpindirPolicy::Fixed(0.0),
        ..BellConfig::new(0.0, 0.0, 10_000, 5)
    };
    assert_eq!(run_bell_experiment(&cfg).unwrap().n_pp, 10_000);
}

#[test]
fn unentangled_pairs_multiply() {
    let cases = [(0.0, 0.0, 1.0), (30.0, 60.0, 0.1875), (90.0, 10.0, 0.0), (45.0, 45.0, 0.25)];
    for (i, (t1, t2, joint)) in cases.into_iter().enumerate() {
        let s = run_unentangled_pair(&UnentangledConfig {
            spindir_a: t1,
            spindir_b: t2,
            angle_a: 0.0,
            angle_b: 0.0,
            trials: 50_000,
            seed: 60 + i as u64,
            runtime: Runtime::Centralized,
        })
        .unwrap();
        let se = (joint * (1.0 - joint) / 50_000.0f64).sqrt();
        assert!(within_sigma(s.frequencies[0], joint, se, 3.0), "({t1},{t2}): {}", s.frequencies[0]);
    }
}

#[test]
fn single_apparatus_follows_cos_squared() {
    for (i, delta) in [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0, 135.0].into_iter().enumerate() {
        let r = run_single_sg(delta, 20_000, 80 + i as u64).unwrap();
        assert!(within_sigma(r.frequency, r.expected, r.standard_error, 3.0), "{delta}: {r:?}");
    }
}

fn scheduler_agreement(x: &JointStats, y: &JointStats) -> bool {
    let se = (x.correlation_se.powi(2) + y.correlation_se.powi(2)).sqrt();
    within_sigma(x.correlation, y.correlation, se, 3.0)
}

#[test]
fn scheduling_does_not_change_statistics() {
    let run = |scheduler, seed| {
        run_bell_experiment(&BellConfig {
            runtime: Runtime::Refined(scheduler),
            ..BellConfig::new(0.0, 40.0, 20_000, seed)
        })
        .unwrap()
    };
    let rr = run(Scheduler::RoundRobin, 90);
    let rnd = run(Scheduler::Randomized, 91);
    assert!(scheduler_agreement(&rr, &rnd), "{} vs {}", rr.correlation, rnd.correlation);
    assert_eq!(run(Scheduler::Randomized, 1).differing(), run(Scheduler::Randomized, 1).differing());

    for marker in [false, true] {
        let h = |scheduler| {
            run_double_slit(&DoubleSlitConfig {
                runtime: Runtime::Refined(scheduler),
                ..DoubleSlitConfig::new(marker, 20_000, 92)
            })
            .unwrap()
        };
        for scheduler in [Scheduler::RoundRobin, Scheduler::Randomized] {
            let hist = h(scheduler);
            assert!(hist.within_three_sigma(), "marker {marker} {scheduler:?}: {}", hist.max_deviation_sigma);
        }
    }
}

#[test]
fn refined_runtime_keeps_perfect_correlation() {
    for scheduler in [Scheduler::RoundRobin, Scheduler::Randomized] {
        let s = run_bell_experiment(&BellConfig {
            runtime: Runtime::Refined(scheduler),
            ..BellConfig::new(77.0, 77.0, 5_000, 3)
        })
        .unwrap();
        assert_eq!(s.differing(), 0);
    }
}
