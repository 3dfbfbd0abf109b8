use backhaul::experiments::{
    run_allocation, run_allocation_trial, run_failure, run_failure_trial, run_m_sweep,
    OccupationModel, ScenarioConfig,
};
use backhaul::graph::{LinkId, QosProfile, Technology};
use backhaul::stochastic::BetaParams;
use proptest::prelude::*;

fn id(s: &str) -> LinkId {
    s.parse().unwrap()
}

fn config(qos: QosProfile, seed: u64, alpha: f64, beta: f64) -> ScenarioConfig {
    ScenarioConfig {
        qos,
        seed,
        trials: 50,
        occupation: OccupationModel::Beta(BetaParams::new(alpha, beta).unwrap()),
        ..ScenarioConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn allocation_trial_invariants(
        seed in any::<u64>(),
        trial in 0u64..10_000,
        alpha in 0.5f64..5.0,
        beta in 0.5f64..5.0,
        p2 in any::<bool>(),
    ) {
        let qos = if p2 { QosProfile::P2 } else { QosProfile::P1 };
        let cfg = config(qos, seed, alpha, beta);
        let out = run_allocation_trial(&cfg, trial);
        prop_assert_eq!(out.flows, 1);
        prop_assert_eq!(out.offered_mbps, qos.rate_mbps);
        if out.admitted_flows == 1 {
            prop_assert_eq!(out.admitted_mbps, qos.rate_mbps);
            prop_assert_eq!(out.blocked_mbps, 0.0);
        } else {
            prop_assert_eq!(out.admitted_mbps, 0.0);
            prop_assert_eq!(out.blocked_mbps, qos.rate_mbps);
        }
        for (link, t) in cfg.topology.links().zip(&out.link_traffic) {
            prop_assert!(*t >= 0.0 && *t <= link.capacity_mbps);
            if !p2 && link.technology == Technology::Sub6GHz {
                prop_assert_eq!(*t, 0.0);
            }
        }
    }

    #[test]
    fn failure_trial_conserves_load(
        seed in any::<u64>(),
        trial in 0u64..10_000,
        p2 in any::<bool>(),
        which in 0usize..9,
    ) {
        let qos = if p2 { QosProfile::P2 } else { QosProfile::P1 };
        let mut cfg = config(qos, seed, 1.0, 1.0);
        let failed = cfg.topology.link_ids().nth(which).unwrap();
        cfg.failed_links = vec![failed];
        let out = run_failure_trial(&cfg, trial);
        let balance = out.admitted_mbps + out.blocked_mbps;
        prop_assert!((balance - out.offered_mbps).abs() <= 1e-9 * out.offered_mbps.max(1.0));
        prop_assert!(out.offered_mbps <= cfg.topology.link(failed).unwrap().capacity_mbps + 1e-9);
        let idx = cfg.topology.link_ids().position(|l| l == failed).unwrap();
        prop_assert_eq!(out.link_traffic[idx], 0.0);
        for r in &out.routes {
            for f in &r.fragments {
                prop_assert!(f.link_ids().all(|l| l != failed));
                prop_assert!(f.sum_mean_delay_ms <= qos.max_delay_ms);
            }
        }
    }
}

#[test]
fn identical_seeds_identical_stats() {
    let cfg = config(QosProfile::P1, 99, 1.0, 1.0);
    assert_eq!(run_allocation(&cfg).unwrap(), run_allocation(&cfg).unwrap());
    let other = ScenarioConfig {
        seed: 100,
        ..cfg.clone()
    };
    assert_ne!(
        run_allocation(&cfg).unwrap(),
        run_allocation(&other).unwrap()
    );
}

#[test]
fn trials_do_not_depend_on_batch_size() {
    let small = config(QosProfile::P2, 5, 2.0, 2.0);
    let large = ScenarioConfig {
        trials: 200,
        ..small.clone()
    };
    let a = run_allocation_trial(&small, 17);
    let b = run_allocation_trial(&large, 17);
    assert_eq!(a, b);
}

#[test]
fn sweep_points_match_single_runs() {
    let mut cfg = config(QosProfile::P1, 3, 1.0, 1.0);
    cfg.m_sweep = vec![0.0, 2.0, 4.0];
    let sweep = run_m_sweep(&cfg).unwrap();
    for point in sweep {
        let mut single = cfg.clone();
        single.routing.m_initial = point.m;
        let stats = run_allocation(&single).unwrap();
        assert_eq!(point.violation_probability, stats.violation_probability);
        assert_eq!(point.mean_iterations, stats.mean_iterations);
    }
}

#[test]
fn failed_link_carries_nothing_after_reallocation() {
    let mut cfg = config(QosProfile::P2, 8, 1.0, 1.0);
    cfg.failed_links = vec![id("123"), id("232")];
    let stats = run_failure(&cfg).unwrap();
    assert_eq!(stats.traffic(id("123")), 0.0);
    assert_eq!(stats.traffic(id("232")), 0.0);
    assert!(stats.offered_load_mbps > 0.0);
    assert!((0.0..=1.0).contains(&stats.blocked_fraction()));
}

#[test]
fn unknown_failed_link_is_rejected() {
    let mut cfg = config(QosProfile::P1, 0, 1.0, 1.0);
    cfg.failed_links = vec![id("1-4-1")];
    assert!(run_failure(&cfg).is_err());
}
