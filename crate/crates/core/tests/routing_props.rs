mod common;

use backhaul::graph::{QosProfile, Topology};
use backhaul::routing::{reduce_multigraph, route, shortest_path, RoutingError, RoutingParams};
use common::{enumerate, min_weight, random_topology};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn topo_from(seed: u64) -> Topology {
    random_topology(&mut ChaCha8Rng::seed_from_u64(seed), 6, 12)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn dijkstra_matches_enumeration(seed in any::<u64>(), rate in 0.1f64..500.0, m in 0.0f64..6.0) {
        let topo = topo_from(seed);
        let ids: Vec<_> = topo.node_ids().collect();
        let (src, dst) = (ids[0], *ids.last().unwrap());
        let cands = enumerate(&topo, src, dst, rate, m);
        let reduced = reduce_multigraph(&topo, rate, m);
        match shortest_path(&reduced, src, dst) {
            Ok(p) => {
                let best = min_weight(&cands).expect("oracle finds a path too");
                prop_assert!(close(p.sum_weight, best), "{} vs {}", p.sum_weight, best);
                let hops = p.hops(&reduced);
                let found = cands.iter().any(|c| {
                    c.nodes == p.nodes
                        && c.interfaces.iter().zip(&hops).all(|(k, h)| *k == h.interface)
                });
                prop_assert!(found, "selected path is not gate-feasible");
            }
            Err(RoutingError::NoPath { .. }) => prop_assert!(cands.is_empty()),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn zero_exponent_minimises_delay(seed in any::<u64>(), rate in 0.1f64..500.0) {
        let topo = topo_from(seed);
        let ids: Vec<_> = topo.node_ids().collect();
        let (src, dst) = (ids[0], *ids.last().unwrap());
        let cands = enumerate(&topo, src, dst, rate, 0.0);
        let reduced = reduce_multigraph(&topo, rate, 0.0);
        if let Ok(p) = shortest_path(&reduced, src, dst) {
            let least = cands.iter().map(|c| c.delay).fold(f64::INFINITY, f64::min);
            prop_assert!(close(p.sum_delay_ms, least));
        }
    }

    #[test]
    fn gate_feasible_set_shrinks_with_rate(seed in any::<u64>(), lo in 0.1f64..300.0, extra in 0.0f64..300.0, m in 0.0f64..5.0) {
        let topo = topo_from(seed);
        let low = reduce_multigraph(&topo, lo, m);
        let high = reduce_multigraph(&topo, lo + extra, m);
        for ((a, b), _) in high.edges() {
            prop_assert!(low.edge(a, b).is_some());
        }
    }

    #[test]
    fn route_conserves_or_rolls_back(
        seed in any::<u64>(),
        rate in 0.2f64..800.0,
        budget in 1.0f64..120.0,
        m in 0.0f64..6.0,
    ) {
        let mut topo = topo_from(seed);
        let before = topo.clone();
        let ids: Vec<_> = topo.node_ids().collect();
        let (src, dst) = (ids[0], *ids.last().unwrap());
        let qos = QosProfile { rate_mbps: rate, max_delay_ms: budget };
        let params = RoutingParams::with_m(m);
        match route(&mut topo, src, dst, qos, &params) {
            Ok(res) => {
                prop_assert_eq!(res.total_rate(), rate);
                prop_assert!(res.total_iterations as usize >= res.fragments.len());
                for f in &res.fragments {
                    prop_assert!(f.rate_mbps >= params.min_fragment_mbps);
                    prop_assert!(f.sum_mean_delay_ms <= budget);
                    prop_assert_eq!(f.path.first().unwrap().from, src);
                    prop_assert_eq!(f.path.last().unwrap().to, dst);
                    for id in f.link_ids() {
                        prop_assert!(before.link(id).unwrap().up);
                    }
                }
                let loads = res.link_loads();
                for link in before.links() {
                    let after = topo.link(link.id).unwrap();
                    let added = loads.get(&link.id).copied().unwrap_or(0.0);
                    if added == 0.0 {
                        prop_assert_eq!(after, link);
                    } else {
                        let expected = (link.occupation + added / link.capacity_mbps).min(1.0);
                        prop_assert!((after.occupation - expected).abs() < 1e-9);
                        prop_assert!(after.occupation <= 1.0);
                    }
                }
            }
            Err(RoutingError::Infeasible { iterations }) => {
                prop_assert!(iterations >= 1);
                prop_assert_eq!(&topo, &before);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}
