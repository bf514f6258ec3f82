use proptest::prelude::*;

use jcc_core::market::{admit, auction, DemandProfile, PricingMode};
use jcc_core::offload::{all_cloud, all_device, evaluate_placement, optimal_demand, partition, plan_delay};
use jcc_core::oracles::{brute_force_partition, exhaustive_demand, is_feasible};
use jcc_core::scenario::{graph_template, market_instance, InstanceConfig, TemplateParams};
use jcc_core::taskgraph::{chain, topo_sort, TaskGraph};
use jcc_core::{Deadline, DeviceProfile, LinkConfig, LinkTemplate, VmCatalog};

const TOL: f64 = 1e-9;

fn arb_chain() -> impl Strategy<Value = TaskGraph> {
    (1usize..=10).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..2e9, n), prop::collection::vec(0.0f64..4e6, n - 1))
            .prop_map(|(c, b)| chain(&c, &b).unwrap())
    })
}

fn arb_dag() -> impl Strategy<Value = TaskGraph> {
    (1usize..=4, 1usize..=3, 0.0f64..=1.0, any::<u64>()).prop_map(|(layers, width, edge_prob, seed)| {
        let p = TemplateParams { layers, width, edge_prob, bits_range: (0.0, 4e6), ..TemplateParams::default() };
        graph_template("layered_random", &p, seed).unwrap()
    })
}

fn arb_device() -> impl Strategy<Value = DeviceProfile> {
    (0.3e9f64..1.5e9, -11.0f64..-7.0, prop::option::of(0.05f64..5.0)).prop_map(|(cpu_hz, lg, d)| DeviceProfile {
        cpu_hz,
        tx_power_w: 0.1,
        channel_gain: 10f64.powf(lg),
        noise_w: 1e-13,
        deadline: d.map_or(Deadline::Unbounded, Deadline::Seconds),
    })
}

fn link(q: usize) -> LinkConfig {
    LinkConfig { subchannels: q, bandwidth_hz: 1e6, station_subchannels: 15, cloud_capacity_hz: 100e9 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn topo_order_respects_edges(g in arb_dag()) {
        let order = topo_sort(&g);
        let mut pos = vec![usize::MAX; g.len()];
        for (i, &c) in order.iter().enumerate() {
            pos[c] = i;
        }
        prop_assert!(pos.iter().all(|&p| p < g.len()));
        for e in g.edges() {
            prop_assert!(pos[e.src] < pos[e.dst]);
        }
    }

    #[test]
    fn partition_dominates_fixed_plans(g in arb_dag(), dev in arb_device(), q in 0usize..=15, vm in prop::sample::select(vec![5e9, 10e9, 20e9])) {
        let plan = partition(&g, &dev, &link(q), vm);
        let local = plan_delay(&g, &all_device(&g), &dev, &link(q), vm).unwrap();
        prop_assert!(plan.total_delay <= local + TOL);
        if q > 0 {
            let remote = plan_delay(&g, &all_cloud(&g), &dev, &link(q), vm).unwrap();
            prop_assert!(plan.total_delay <= remote + TOL);
        }
        let again = evaluate_placement(&g, &plan.placement, &dev, &link(q), vm).unwrap();
        prop_assert!((again.total_delay - plan.total_delay).abs() <= TOL * plan.total_delay.max(1.0));
        prop_assert!(plan.total_delay >= brute_force_partition(&g, &dev, &link(q), vm).total_delay - TOL);
    }

    #[test]
    fn chain_partition_is_exact(g in arb_chain(), dev in arb_device(), q in 0usize..=15) {
        let ours = partition(&g, &dev, &link(q), 10e9).total_delay;
        let best = brute_force_partition(&g, &dev, &link(q), 10e9).total_delay;
        prop_assert!((ours - best).abs() <= 1e-9 * best.max(1e-12), "{} vs {}", ours, best);
    }

    #[test]
    fn chain_delay_falls_with_subchannels(g in arb_chain(), dev in arb_device(), q in 0usize..15) {
        let fewer = partition(&g, &dev, &link(q), 10e9).total_delay;
        let more = partition(&g, &dev, &link(q + 1), 10e9).total_delay;
        prop_assert!(more <= fewer + TOL);
    }

    #[test]
    fn demand_matches_sweep(g in arb_dag(), dev in arb_device(), cap in prop::sample::select(vec![50e9, 100e9, 200e9])) {
        let t = LinkTemplate { station_subchannels: 15, bandwidth_hz: 1e6, cloud_capacity_hz: cap };
        let cat = VmCatalog::new(vec![5e9, 10e9, 20e9]).unwrap();
        prop_assert_eq!(optimal_demand(&g, &dev, &t, &cat), exhaustive_demand(&g, &dev, &t, &cat));
    }
}

fn arb_instance() -> impl Strategy<Value = (InstanceConfig, u64)> {
    (1usize..=30, 1usize..=4, 1usize..=2, 1usize..=6, any::<u64>()).prop_map(|(n, st, cl, max_q, seed)| {
        let c = InstanceConfig {
            n_users: n,
            n_stations: st.max(cl),
            n_clouds: cl,
            subchannels: vec![6, 10, 15],
            max_q,
            ..InstanceConfig::default()
        };
        (c, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn auction_is_feasible_and_rational((c, seed) in arb_instance(), literal in any::<bool>()) {
        let inst = market_instance(&c, seed);
        let mode = if literal { PricingMode::Literal } else { PricingMode::Definitional };
        let r = auction(&inst.demands, &inst.topology, &inst.catalog, mode).unwrap();
        prop_assert!(is_feasible(&inst.demands, &inst.topology, &inst.catalog, &r.winners).unwrap());
        for d in &inst.demands {
            let p = r.payment(d.user);
            if r.is_winner(d.user) {
                prop_assert!((0.0..=d.claimed + TOL).contains(&p));
            } else {
                prop_assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn winners_stay_winners((c, seed) in arb_instance(), pick in any::<prop::sample::Index>(), bump in 0.0f64..10.0) {
        let inst = market_instance(&c, seed);
        let (t, k) = (&inst.topology, &inst.catalog);
        let r = admit(&inst.demands, t, k).unwrap();
        prop_assume!(!r.winners.is_empty());
        let w = r.winners[pick.index(r.winners.len())];
        let variations: [fn(&mut DemandProfile, f64); 3] = [
            |d, b| d.claimed += b,
            |d, _| d.q = d.q.saturating_sub(1).max(1),
            |d, _| d.s = d.s.saturating_sub(1),
        ];
        for vary in variations {
            let mut changed = inst.demands.clone();
            vary(&mut changed[w], bump);
            prop_assert!(admit(&changed, t, k).unwrap().is_winner(w));
        }
    }

    #[test]
    fn payment_is_the_threshold((c, seed) in arb_instance(), pick in any::<prop::sample::Index>()) {
        let inst = market_instance(&c, seed);
        let (t, k) = (&inst.topology, &inst.catalog);
        let r = auction(&inst.demands, t, k, PricingMode::Definitional).unwrap();
        prop_assume!(!r.winners.is_empty());
        let w = r.winners[pick.index(r.winners.len())];
        let p = r.payment(w);
        let mut probe = inst.demands.clone();
        probe[w].claimed = p * (1.0 + 1e-6) + 1e-9;
        prop_assert!(admit(&probe, t, k).unwrap().is_winner(w));
        if p > 0.0 {
            probe[w].claimed = p * (1.0 - 1e-6);
            prop_assert!(!admit(&probe, t, k).unwrap().is_winner(w));
        }
    }

    #[test]
    fn misreports_do_not_pay((c, seed) in arb_instance(), pick in any::<prop::sample::Index>(), claim in 0.0f64..40.0) {
        let inst = market_instance(&c, seed);
        let (t, k) = (&inst.topology, &inst.catalog);
        let u = pick.index(inst.demands.len());
        let v = inst.demands[u].true_value;
        let honest = auction(&inst.demands, t, k, PricingMode::Definitional).unwrap();
        let utility = |r: &jcc_core::AllocationResult| if r.is_winner(u) { v - r.payment(u) } else { 0.0 };
        let mut lie = inst.demands.clone();
        lie[u].claimed = claim;
        let lied = auction(&lie, t, k, PricingMode::Definitional).unwrap();
        prop_assert!(utility(&lied) <= utility(&honest) + TOL);
    }
}
