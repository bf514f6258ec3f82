use jcc_core::market::{admit, ratio_bound};
use jcc_core::oracles::{
    baseline_all_offload, baseline_coarse_greedy, baseline_odessa_greedy, baseline_random, brute_force_partition,
    cross_entropy_admission, exact_admission, exhaustive_admission, greedy_admission, is_feasible,
    special_case_relaxed, CrossEntropyParams, DEFAULT_EXACT_CAP,
};
use jcc_core::scenario::{graph_template, market_instance, InstanceConfig, TemplateParams};
use jcc_core::{Deadline, DeviceProfile, LinkConfig};

const TOL: f64 = 1e-9;

#[test]
fn branch_and_bound_matches_enumeration() {
    for n_clouds in [1, 2] {
        let c = InstanceConfig { n_users: 12, n_stations: 4, n_clouds, ..InstanceConfig::default() };
        for seed in 0..150 {
            let inst = market_instance(&c, seed);
            let bb = exact_admission(&inst.demands, &inst.topology, &inst.catalog, DEFAULT_EXACT_CAP).unwrap();
            let ex = exhaustive_admission(&inst.demands, &inst.topology, &inst.catalog).unwrap();
            assert!((bb.welfare - ex.welfare).abs() < TOL, "seed {seed}: {} vs {}", bb.welfare, ex.welfare);
        }
    }
}

#[test]
fn cross_entropy_finds_optimum() {
    let c = InstanceConfig::default();
    let mut hits = 0;
    for seed in 0..100 {
        let inst = market_instance(&c, seed);
        let exact = exact_admission(&inst.demands, &inst.topology, &inst.catalog, DEFAULT_EXACT_CAP).unwrap();
        let params = CrossEntropyParams { seed, ..CrossEntropyParams::default() };
        let ce = cross_entropy_admission(&inst.demands, &inst.topology, &inst.catalog, &params).unwrap();
        let greedy = greedy_admission(&inst.demands, &inst.topology, &inst.catalog).unwrap();
        assert!(ce.welfare >= greedy.welfare - TOL);
        assert!(ce.welfare <= exact.welfare + TOL);
        assert!(!ce.exact);
        if ce.welfare >= exact.welfare - TOL {
            hits += 1;
        }
    }
    assert!(hits >= 95, "cross-entropy matched the optimum on {hits}/100");
}

#[test]
fn cross_entropy_replays() {
    let inst = market_instance(&InstanceConfig { n_users: 40, ..InstanceConfig::default() }, 5);
    let params = CrossEntropyParams { seed: 9, iterations: 10, ..CrossEntropyParams::default() };
    let a = cross_entropy_admission(&inst.demands, &inst.topology, &inst.catalog, &params).unwrap();
    let b = cross_entropy_admission(&inst.demands, &inst.topology, &inst.catalog, &params).unwrap();
    assert_eq!((a.welfare, a.winners), (b.welfare, b.winners));
}

#[test]
fn theorem_bound_and_feasibility() {
    let c = InstanceConfig { n_users: 16, n_stations: 4, n_clouds: 2, subchannels: vec![10, 15], ..InstanceConfig::default() };
    for seed in 0..200 {
        let inst = market_instance(&c, seed);
        let (d, t, k) = (&inst.demands, &inst.topology, &inst.catalog);
        let exact = exact_admission(d, t, k, DEFAULT_EXACT_CAP).unwrap();
        let greedy = admit(d, t, k).unwrap();
        assert!(greedy.welfare_bid >= ratio_bound(t, k) * exact.welfare - TOL, "seed {seed}");
        let reports = [
            exact,
            greedy_admission(d, t, k).unwrap(),
            baseline_coarse_greedy(d, t, k).unwrap(),
            baseline_random(d, t, k, seed).unwrap(),
            cross_entropy_admission(d, t, k, &CrossEntropyParams { iterations: 5, ..Default::default() }).unwrap(),
        ];
        for r in &reports {
            assert!(is_feasible(d, t, k, &r.winners).unwrap(), "{:?} infeasible on seed {seed}", r.method);
            assert!(r.welfare <= reports[0].welfare + TOL);
        }
    }
}

#[test]
fn relaxation_sandwich() {
    for n_clouds in [1, 2] {
        let c = InstanceConfig {
            n_users: 16,
            n_stations: 4,
            n_clouds,
            max_q: 4,
            uniform: true,
            ..InstanceConfig::default()
        };
        for seed in 0..200 {
            let inst = market_instance(&c, seed);
            let (d, t, k) = (&inst.demands, &inst.topology, &inst.catalog);
            let greedy = admit(d, t, k).unwrap().welfare_bid;
            let exact = exact_admission(d, t, k, DEFAULT_EXACT_CAP).unwrap().welfare;
            let relaxed = special_case_relaxed(d, t, k).unwrap().welfare;
            assert!(greedy <= exact + TOL && exact <= relaxed + TOL && relaxed <= 2.0 * greedy + TOL, "seed {seed}");
        }
    }
}

#[test]
fn random_order_trails_greedy_in_median() {
    let c = InstanceConfig { n_users: 60, n_stations: 4, ..InstanceConfig::default() };
    for seed in 0..10 {
        let inst = market_instance(&c, seed);
        let (d, t, k) = (&inst.demands, &inst.topology, &inst.catalog);
        let greedy = admit(d, t, k).unwrap().welfare_bid;
        let mut random: Vec<f64> = (0..100).map(|s| baseline_random(d, t, k, s).unwrap().welfare).collect();
        random.sort_by(f64::total_cmp);
        assert!(random[50] <= greedy);
    }
}

#[test]
fn baseline_partitions_never_beat_brute_force() {
    let params = TemplateParams { layers: 4, width: 3, ..TemplateParams::default() };
    for seed in 0..100 {
        let g = graph_template(["face_like", "qr_like", "layered_random"][seed as usize % 3], &params, seed).unwrap();
        let dev = DeviceProfile {
            cpu_hz: 0.5e9,
            tx_power_w: 0.1,
            channel_gain: 1e-10,
            noise_w: 1e-13,
            deadline: Deadline::Unbounded,
        };
        for q in [1, 4, 15] {
            let link = LinkConfig { subchannels: q, bandwidth_hz: 1e6, station_subchannels: 15, cloud_capacity_hz: 100e9 };
            let best = brute_force_partition(&g, &dev, &link, 10e9).total_delay;
            let odessa = baseline_odessa_greedy(&g, &dev, &link, 10e9).total_delay;
            let all = baseline_all_offload(&g, &dev, &link, 10e9).unwrap().total_delay;
            assert!(odessa >= best - TOL && all >= best - TOL);
        }
    }
}
