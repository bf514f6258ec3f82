//! Acceptance criteria as runnable checks. `quick` uses small fixed counts;
//! `full` uses the counts the criteria call for.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use jcc_core::market::{admit, auction, ratio_bound, AllocationResult, DemandProfile, PricingMode};
use jcc_core::offload::{all_cloud, all_device, optimal_demand, partition, partition_with, plan_delay, PartitionMode};
use jcc_core::oracles::{
    brute_force_partition, exact_admission, exhaustive_demand, special_case_relaxed, CrossEntropyParams,
    DEFAULT_EXACT_CAP,
};
use jcc_core::scenario::{
    channel_gain, generate, graph_template, market_instance, InstanceConfig, MarketInstance, Scenario, ScenarioConfig,
    TemplateParams,
};
use jcc_core::taskgraph::{chain, TaskGraph};
use jcc_core::{Deadline, DeviceProfile, LinkConfig, LinkTemplate, Method, VmCatalog};

use crate::bench::{bench_instance, time_admit, time_cross_entropy};
use crate::experiment::{auto_baseline, run_experiment, solve, ExperimentSpec, SweepVar};
use crate::reports::{claim_grid, occupancy_rows, pick_bidders, probe_rows, OffloadMethod};
use crate::{median, rows_to_string, Format};

/// Absolute slack on welfare and utility comparisons.
pub const WELFARE_TOL: f64 = 1e-9;
/// Relative slack on delay equalities.
pub const DELAY_RTOL: f64 = 1e-9;
/// Thresholds for the figure-trend checks.
pub const TREND_MIN_RATIO: f64 = 0.80;
pub const TREND_MIN_GAIN_COARSE: f64 = 0.20;
pub const TREND_MIN_GAIN_RANDOM: f64 = 0.50;
/// Wall-clock ceiling for admitting 10,000 users.
pub const ADMIT_10K_LIMIT_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Pass,
    Fail,
    /// A soft target was missed; reported but not failing.
    SoftMiss,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: &'static str,
    pub title: &'static str,
    pub outcome: Outcome,
    pub detail: String,
    /// Seed and serialized input of the first failing instance.
    pub failure: Option<String>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::SoftMiss => "SOFT",
        };
        write!(f, "[{tag}] {} {}: {}", self.id, self.title, self.detail)?;
        if let Some(x) = &self.failure {
            write!(f, "\n       first failure: {x}")?;
        }
        Ok(())
    }
}

fn report(id: &'static str, title: &'static str, ok: bool, detail: String, failure: Option<String>) -> CriterionReport {
    CriterionReport { id, title, outcome: if ok { Outcome::Pass } else { Outcome::Fail }, detail, failure }
}

#[derive(Debug, Clone)]
pub struct Counts {
    pub theorem3: u64,
    pub theorem2: u64,
    pub truth_scenarios: u64,
    pub truth_users: usize,
    pub truth_points: usize,
    pub perturbations: usize,
    pub chains_per_length: u64,
    pub dags: u64,
    pub demand: u64,
    pub trend_seeds: u64,
    pub trend_users: usize,
    pub perf_users: usize,
    pub perf_sizes: Vec<usize>,
}

impl Counts {
    pub fn for_level(level: Level) -> Counts {
        match level {
            Level::Full => Counts {
                theorem3: 1000,
                theorem2: 500,
                truth_scenarios: 50,
                truth_users: 5,
                truth_points: 21,
                perturbations: 500,
                chains_per_length: 100,
                dags: 500,
                demand: 500,
                trend_seeds: 20,
                trend_users: 100,
                perf_users: 10_000,
                perf_sizes: vec![100, 400, 1000],
            },
            Level::Quick => Counts {
                theorem3: 60,
                theorem2: 40,
                truth_scenarios: 4,
                truth_users: 3,
                truth_points: 21,
                perturbations: 40,
                chains_per_length: 10,
                dags: 40,
                demand: 40,
                trend_seeds: 3,
                trend_users: 60,
                perf_users: 2_000,
                perf_sizes: vec![100],
            },
        }
    }
}

/// Individual rationality and loser-pays-zero over auction runs.
#[derive(Debug, Clone, Default)]
pub struct RationalityTally {
    pub runs: usize,
    pub violations: usize,
    pub first: Option<String>,
}

impl RationalityTally {
    pub fn record(&mut self, demands: &[DemandProfile], r: &AllocationResult, context: impl FnOnce() -> String) {
        self.runs += 1;
        let bad = demands.iter().any(|d| {
            let p = r.payment(d.user);
            if r.is_winner(d.user) { !(-WELFARE_TOL..=d.claimed + WELFARE_TOL).contains(&p) } else { p != 0.0 }
        });
        if bad {
            self.violations += 1;
            self.first.get_or_insert_with(context);
        }
    }

    pub fn merge(&mut self, other: RationalityTally) {
        self.runs += other.runs;
        self.violations += other.violations;
        if self.first.is_none() {
            self.first = other.first;
        }
    }
}

fn describe(inst: &MarketInstance) -> String {
    format!("seed {}: {}", inst.seed, serde_json::to_string(inst).expect("instance serializes"))
}

struct Item {
    ok: bool,
    value: f64,
    failure: Option<String>,
    ir: RationalityTally,
}

fn first_failure(items: &[Item]) -> Option<String> {
    items.iter().find_map(|i| i.failure.clone())
}

fn tally(items: Vec<Item>, ir: &mut RationalityTally) -> (usize, Vec<f64>, Option<String>) {
    let failures = items.iter().filter(|i| !i.ok).count();
    let first = first_failure(&items);
    let values = items.iter().map(|i| i.value).collect();
    for i in items {
        ir.merge(i.ir);
    }
    (failures, values, first)
}

pub fn theorem3_config(seed: u64) -> InstanceConfig {
    let clouds = 1 + (seed % 2) as usize;
    InstanceConfig {
        n_users: 16,
        n_stations: clouds * (1 + (seed / 2 % 3) as usize),
        n_clouds: clouds,
        subchannels: vec![4, 6, 10, 15],
        max_q: 1 + (seed % 6) as usize,
        ..InstanceConfig::default()
    }
}

/// Greedy welfare against the general worst-case ratio.
pub fn theorem3(count: u64, ir: &mut RationalityTally) -> CriterionReport {
    let items: Vec<Item> = (0..count)
        .into_par_iter()
        .map(|seed| {
            let inst = market_instance(&theorem3_config(seed), seed);
            let (d, t, k) = (&inst.demands, &inst.topology, &inst.catalog);
            let exact = exact_admission(d, t, k, DEFAULT_EXACT_CAP).expect("at most 16 bidders").welfare;
            let r = auction(d, t, k, PricingMode::Definitional).expect("valid instance");
            let rho = ratio_bound(t, k);
            let ok = r.welfare_bid >= rho * exact - WELFARE_TOL && r.welfare_bid <= exact + WELFARE_TOL;
            let mut tally = RationalityTally::default();
            tally.record(d, &r, || describe(&inst));
            Item {
                ok,
                value: if exact > 0.0 { r.welfare_bid / exact } else { 1.0 },
                failure: (!ok).then(|| describe(&inst)),
                ir: tally,
            }
        })
        .collect();
    let (failures, ratios, first) = tally(items, ir);
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    report(
        "AC1",
        "general approximation bound",
        failures == 0 && count > 0,
        format!("{count} instances, {failures} violations, worst greedy/exact {worst:.4}, median {:.4}", median(&ratios)),
        first,
    )
}

pub fn theorem2_config(seed: u64) -> InstanceConfig {
    let clouds = 1 + (seed % 2) as usize;
    InstanceConfig {
        n_users: 16,
        n_stations: clouds * (1 + (seed / 2 % 3) as usize),
        n_clouds: clouds,
        subchannels: vec![[6, 8, 10, 12, 15][(seed % 5) as usize]],
        max_q: 1 + (seed / 5 % 4) as usize,
        uniform: true,
        ..InstanceConfig::default()
    }
}

/// Half-approximation and the relaxation sandwich in the uniform case.
pub fn theorem2(count: u64, ir: &mut RationalityTally) -> CriterionReport {
    let items: Vec<Item> = (0..count)
        .into_par_iter()
        .map(|seed| {
            let inst = market_instance(&theorem2_config(seed), seed);
            let (d, t, k) = (&inst.demands, &inst.topology, &inst.catalog);
            let exact = exact_admission(d, t, k, DEFAULT_EXACT_CAP).expect("at most 16 bidders").welfare;
            let relaxed = special_case_relaxed(d, t, k).expect("uniform instance").welfare;
            let r = auction(d, t, k, PricingMode::Definitional).expect("valid instance");
            let g = r.welfare_bid;
            let ok = g >= 0.5 * exact - WELFARE_TOL
                && g <= exact + WELFARE_TOL
                && exact <= relaxed + WELFARE_TOL
                && relaxed <= 2.0 * g + WELFARE_TOL;
            let mut tally = RationalityTally::default();
            tally.record(d, &r, || describe(&inst));
            Item {
                ok,
                value: if exact > 0.0 { g / exact } else { 1.0 },
                failure: (!ok).then(|| format!("greedy {g}, exact {exact}, relaxed {relaxed}; {}", describe(&inst))),
                ir: tally,
            }
        })
        .collect();
    let (failures, ratios, first) = tally(items, ir);
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    report(
        "AC2",
        "uniform-case half bound and relaxation sandwich",
        failures == 0 && count > 0,
        format!("{count} instances, {failures} violations, worst greedy/exact {worst:.4}"),
        first,
    )
}

pub fn truth_scenario(seed: u64, n_users: usize) -> Scenario {
    let mut s = generate(&ScenarioConfig { n_users, seed, ..ScenarioConfig::default() }).expect("default config");
    s.compute_demands();
    s
}

/// Claim grids around the truthful claim and winner perturbations.
pub fn truthfulness(c: &Counts, ir: &mut RationalityTally) -> CriterionReport {
    let scenarios: Vec<Scenario> = (0..c.truth_scenarios).into_par_iter().map(|s| truth_scenario(s, 100)).collect();
    let items: Vec<Item> = scenarios
        .par_iter()
        .map(|s| {
            let demands = s.demand_profiles();
            let (t, k) = (&s.topology, s.catalog());
            let mut tally = RationalityTally::default();
            let mut worst_gain = f64::NEG_INFINITY;
            let mut failure = None;
            for user in pick_bidders(s, c.truth_users, s.config.seed) {
                let at = demands.iter().position(|d| d.user == user).expect("picked from bidders");
                let v = demands[at].true_value;
                let utility = |r: &AllocationResult| if r.is_winner(user) { v - r.payment(user) } else { 0.0 };
                let honest = auction(&demands, t, &k, PricingMode::Definitional).expect("valid scenario");
                let base = utility(&honest);
                let mut probe = demands.clone();
                for claim in claim_grid(v, c.truth_points) {
                    probe[at].claimed = claim;
                    let r = auction(&probe, t, &k, PricingMode::Definitional).expect("valid scenario");
                    tally.record(&probe, &r, || format!("scenario seed {}, user {user}, claim {claim}", s.config.seed));
                    let gain = utility(&r) - base;
                    worst_gain = worst_gain.max(gain);
                    if gain > WELFARE_TOL && failure.is_none() {
                        failure = Some(format!(
                            "scenario seed {}, user {user}, true {v}, claim {claim}, gain {gain}; config {}",
                            s.config.seed,
                            serde_json::to_string(&s.config).expect("config serializes")
                        ));
                    }
                }
            }
            Item { ok: failure.is_none(), value: worst_gain, failure, ir: tally }
        })
        .collect();
    let probes = c.truth_scenarios as usize * c.truth_users * c.truth_points;
    let (failures, gains, first) = tally(items, ir);
    let worst = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Winner perturbations, cycling through scenarios and the three moves.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f6e6f);
    let (mut applied, mut attempts, mut flips) = (0usize, 0usize, 0usize);
    let mut flip = None;
    while applied < c.perturbations && attempts < 20 * c.perturbations.max(1) && !scenarios.is_empty() {
        let s = &scenarios[attempts % scenarios.len()];
        let kind = attempts % 3;
        attempts += 1;
        let demands = s.demand_profiles();
        let (t, k) = (&s.topology, s.catalog());
        let r = admit(&demands, t, &k).expect("valid scenario");
        let Some(&w) = r.winners.choose(&mut rng) else { continue };
        let at = demands.iter().position(|d| d.user == w).expect("winner bids");
        let mut changed = demands.clone();
        match kind {
            0 => changed[at].claimed *= rng.gen_range(1.0..2.0),
            1 if changed[at].q > 1 => changed[at].q -= 1,
            2 if changed[at].s > 0 => changed[at].s -= 1,
            _ => continue,
        }
        applied += 1;
        if !admit(&changed, t, &k).expect("valid scenario").is_winner(w) {
            flips += 1;
            flip.get_or_insert_with(|| format!("scenario seed {}, winner {w}, move {kind}", s.config.seed));
        }
    }
    let ok = failures == 0 && flips == 0 && applied == c.perturbations;
    report(
        "AC3",
        "truthfulness and monotone allocation",
        ok,
        format!(
            "{probes} probes, {failures} scenarios with a profitable misreport, worst gain {worst:.3e}; \
             {applied} perturbations, {flips} winners lost"
        ),
        first.or(flip),
    )
}

pub fn rationality(ir: &RationalityTally) -> CriterionReport {
    report(
        "AC4",
        "individual rationality and losers pay zero",
        ir.violations == 0 && ir.runs > 0,
        format!("{} auction runs, {} violations", ir.runs, ir.violations),
        ir.first.clone(),
    )
}

fn random_device<R: Rng>(rng: &mut R, deadline: Deadline) -> DeviceProfile {
    DeviceProfile {
        cpu_hz: *[0.5e9, 0.8e9, 1.0e9].choose(rng).expect("non-empty"),
        tx_power_w: 0.1,
        channel_gain: channel_gain(rng.gen_range(10.0..500.0), 4.0),
        noise_w: 1e-13,
        deadline,
    }
}

fn random_link<R: Rng>(rng: &mut R, q_min: usize) -> (LinkConfig, f64) {
    let link = LinkConfig {
        subchannels: rng.gen_range(q_min..=15),
        bandwidth_hz: 1e6,
        station_subchannels: 15,
        cloud_capacity_hz: 100e9,
    };
    (link, *[5e9, 10e9, 20e9].choose(rng).expect("non-empty"))
}

fn random_chain<R: Rng>(rng: &mut R, len: usize) -> TaskGraph {
    let cycles: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..2e9)).collect();
    let bits: Vec<f64> =
        (1..len).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..4e6) }).collect();
    chain(&cycles, &bits).expect("chains are valid")
}

fn random_dag<R: Rng>(rng: &mut R, max_len: usize) -> TaskGraph {
    loop {
        let g = match rng.gen_range(0..4) {
            0 => graph_template("face_like", &TemplateParams::default(), rng.gen()),
            1 => graph_template("qr_like", &TemplateParams::default(), rng.gen()),
            _ => {
                let p = TemplateParams {
                    layers: rng.gen_range(1..=5),
                    width: rng.gen_range(1..=3),
                    edge_prob: rng.gen_range(0.0..1.0),
                    bits_range: (0.0, 4e6),
                    cycles_range: (0.0, 1.5e9),
                    ..TemplateParams::default()
                };
                graph_template("layered_random", &p, rng.gen())
            }
        }
        .expect("templates validate");
        if g.len() <= max_len {
            return g;
        }
    }
}

fn dominates(g: &TaskGraph, dev: &DeviceProfile, link: &LinkConfig, vm: f64, delay: f64) -> bool {
    let local = plan_delay(g, &all_device(g), dev, link, vm).expect("local plan");
    let remote = if link.subchannels > 0 { plan_delay(g, &all_cloud(g), dev, link, vm).ok() } else { None };
    delay <= local * (1.0 + DELAY_RTOL) && remote.is_none_or(|r| delay <= r * (1.0 + DELAY_RTOL))
}

/// Partition against brute force on chains and random DAGs.
pub fn partition_correctness(chains_per_length: u64, dags: u64) -> CriterionReport {
    let chain_items: Vec<(bool, bool, bool, Option<String>)> = (1..=10usize)
        .flat_map(|len| (0..chains_per_length).map(move |i| (len, i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(len, i)| {
            let mut rng = ChaCha8Rng::seed_from_u64((len as u64) << 32 | i);
            let g = random_chain(&mut rng, len);
            let dev = random_device(&mut rng, Deadline::Unbounded);
            let (link, vm) = random_link(&mut rng, 0);
            let ours = partition(&g, &dev, &link, vm).total_delay;
            let best = brute_force_partition(&g, &dev, &link, vm).total_delay;
            let literal = partition_with(PartitionMode::Literal, &g, &dev, &link, vm).total_delay;
            let exact = (ours - best).abs() <= DELAY_RTOL * best.max(f64::MIN_POSITIVE);
            let dom = dominates(&g, &dev, &link, vm, ours);
            let literal_exact = (literal - best).abs() <= DELAY_RTOL * best.max(f64::MIN_POSITIVE);
            let failure = (!(exact && dom)).then(|| {
                format!(
                    "chain len {len} case {i}: ours {ours}, best {best}; device {}, link {}, vm {vm}, graph {}",
                    serde_json::to_string(&dev).unwrap(),
                    serde_json::to_string(&link).unwrap(),
                    serde_json::to_string(&g).unwrap()
                )
            });
            (exact, dom, literal_exact, failure)
        })
        .collect();
    let dag_items: Vec<(bool, bool, bool, Option<String>)> = (0..dags)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xda6 << 32 | i);
            let g = random_dag(&mut rng, 12);
            let dev = random_device(&mut rng, Deadline::Unbounded);
            let (link, vm) = random_link(&mut rng, 0);
            let ours = partition(&g, &dev, &link, vm).total_delay;
            let best = brute_force_partition(&g, &dev, &link, vm).total_delay;
            let not_below = ours >= best * (1.0 - DELAY_RTOL);
            let dom = dominates(&g, &dev, &link, vm, ours);
            let optimal = (ours - best).abs() <= DELAY_RTOL * best.max(f64::MIN_POSITIVE);
            let failure = (!(not_below && dom))
                .then(|| {
                    format!(
                        "dag case {i}: ours {ours}, best {best}; device {}, link {}, vm {vm}, graph {}",
                        serde_json::to_string(&dev).unwrap(),
                        serde_json::to_string(&link).unwrap(),
                        serde_json::to_string(&g).unwrap()
                    )
                });
            (not_below, dom, optimal, failure)
        })
        .collect();
    let chain_misses = chain_items.iter().filter(|c| !c.0).count();
    let literal_misses = chain_items.iter().filter(|c| !c.2).count();
    let dag_below = dag_items.iter().filter(|d| !d.0).count();
    let dag_optimal = dag_items.iter().filter(|d| d.2).count();
    let dom_fail = chain_items.iter().chain(&dag_items).filter(|x| !x.1).count();
    let first = chain_items.iter().chain(&dag_items).find_map(|x| x.3.clone());
    report(
        "AC5",
        "partition correctness",
        chain_misses == 0 && dag_below == 0 && dom_fail == 0,
        format!(
            "{} chains, {chain_misses} off the brute-force minimum (printed recursion alone: {literal_misses}); \
             {dags} DAGs, {dag_below} below the minimum, {dag_optimal} exactly optimal; {dom_fail} dominance failures",
            chain_items.len()
        ),
        first,
    )
}

/// Demand search against a full sweep.
pub fn demand_optimality(count: u64) -> CriterionReport {
    let items: Vec<(bool, &'static str, Option<String>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xde3 << 32 | i);
            let g = random_dag(&mut rng, 12);
            let deadline = Deadline::Seconds(*[0.3, 0.5, 1.0, 2.0, 5.0].choose(&mut rng).expect("non-empty"));
            let dev = random_device(&mut rng, deadline);
            let t = LinkTemplate {
                station_subchannels: 15,
                bandwidth_hz: 1e6,
                cloud_capacity_hz: *[50e9, 100e9, 200e9].choose(&mut rng).expect("non-empty"),
            };
            let cat = VmCatalog::new(vec![5e9, 10e9, 20e9]).expect("valid catalog");
            let ours = optimal_demand(&g, &dev, &t, &cat);
            let sweep = exhaustive_demand(&g, &dev, &t, &cat);
            let kind = match ours {
                jcc_core::DemandOutcome::Offload(_) => "offload",
                jcc_core::DemandOutcome::NoOffloadNeeded => "local",
                jcc_core::DemandOutcome::Infeasible => "infeasible",
            };
            let failure = (ours != sweep).then(|| format!("case {i}: {ours:?} vs sweep {sweep:?}"));
            (ours == sweep, kind, failure)
        })
        .collect();
    let mismatches = items.iter().filter(|x| !x.0).count();
    let count_kind = |k: &str| items.iter().filter(|x| x.1 == k).count();
    report(
        "AC6",
        "demand optimality",
        mismatches == 0 && count > 0,
        format!(
            "{count} instances ({} offload, {} local, {} infeasible), {mismatches} mismatches",
            count_kind("offload"),
            count_kind("local"),
            count_kind("infeasible")
        ),
        items.iter().find_map(|x| x.2.clone()),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendSummary {
    pub median_ratio: f64,
    pub median_gain_coarse: f64,
    pub median_gain_random: f64,
    pub occupancy_violations: usize,
    pub mean_ours: f64,
    pub mean_odessa: f64,
}

// ratio, coarse gain, random gain, violations, (ours, odessa) phi pairs, first violation
type SeedTrend = (f64, f64, f64, usize, Vec<(f64, f64)>, Option<String>);

pub fn trend_summary(seeds: u64, n_users: usize) -> (TrendSummary, Option<String>) {
    let per_seed: Vec<SeedTrend> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let s = truth_scenario(seed, n_users);
            let d = s.demand_profiles();
            let (t, k) = (&s.topology, s.catalog());
            let ce = CrossEntropyParams::default();
            let w = |m: Method| solve(m, &d, t, &k, seed, &ce, DEFAULT_EXACT_CAP).expect("registered method").welfare;
            let greedy = w(Method::Greedy);
            let best = w(auto_baseline(&d, t, DEFAULT_EXACT_CAP)).max(greedy);
            let gain = |base: f64| if base > 0.0 { greedy / base - 1.0 } else { 0.0 };
            let rows = occupancy_rows(&s, &OffloadMethod::ALL);
            let mut violations = 0;
            let mut first = None;
            let mut pairs = Vec::new();
            for u in 0..s.users.len() {
                let get = |m: &str| rows.iter().find(|r| r.user == u && r.method == m).expect("row per method");
                let (ours, all, odessa) = (get("ours"), get("all_offload"), get("odessa"));
                // all-offload feasible at some profile means ours is feasible there too
                if let Some(a) = all.phi {
                    if ours.phi.is_none_or(|o| o > a + 1e-12) && ours.status != "no_offload_needed" {
                        violations += 1;
                        first.get_or_insert_with(|| format!("scenario seed {seed}, user {u}"));
                    }
                }
                if let (Some(o), Some(x)) = (ours.phi, odessa.phi) {
                    pairs.push((o, x));
                }
            }
            (if best > 0.0 { greedy / best } else { 1.0 }, gain(w(Method::Coarse)), gain(w(Method::Random)), violations, pairs, first)
        })
        .collect();
    let ratios: Vec<f64> = per_seed.iter().map(|x| x.0).collect();
    let coarse: Vec<f64> = per_seed.iter().map(|x| x.1).collect();
    let random: Vec<f64> = per_seed.iter().map(|x| x.2).collect();
    let pairs: Vec<(f64, f64)> = per_seed.iter().flat_map(|x| x.4.iter().copied()).collect();
    let mean = |f: fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / pairs.len().max(1) as f64;
    (
        TrendSummary {
            median_ratio: median(&ratios),
            median_gain_coarse: median(&coarse),
            median_gain_random: median(&random),
            occupancy_violations: per_seed.iter().map(|x| x.3).sum(),
            mean_ours: mean(|p| p.0),
            mean_odessa: mean(|p| p.1),
        },
        per_seed.iter().find_map(|x| x.5.clone()),
    )
}

/// Figure trends at desk scale. Only per-user occupancy dominance is hard.
pub fn figure_trends(seeds: u64, n_users: usize) -> CriterionReport {
    let (t, first) = trend_summary(seeds, n_users);
    let hard = t.occupancy_violations == 0;
    let soft = [
        t.median_ratio >= TREND_MIN_RATIO,
        t.median_gain_coarse >= TREND_MIN_GAIN_COARSE,
        t.median_gain_random >= TREND_MIN_GAIN_RANDOM,
        t.mean_ours <= t.mean_odessa,
    ];
    let outcome = if !hard {
        Outcome::Fail
    } else if soft.iter().all(|&x| x) {
        Outcome::Pass
    } else {
        Outcome::SoftMiss
    };
    let mark = |ok: bool| if ok { "met" } else { "missed" };
    CriterionReport {
        id: "AC7",
        title: "figure trends at desk scale",
        outcome,
        detail: format!(
            "{seeds} seeds at N={n_users}: median greedy/best {:.3} (target {TREND_MIN_RATIO}, {}), \
             median gain over coarse {:.1}% (target {:.0}%, {}), over random {:.1}% (target {:.0}%, {}); \
             mean occupancy of Odessa-style-served users ours {:.4} vs Odessa-style {:.4} ({}); \
             {} per-user all-offload dominance violations",
            t.median_ratio,
            mark(soft[0]),
            100.0 * t.median_gain_coarse,
            100.0 * TREND_MIN_GAIN_COARSE,
            mark(soft[1]),
            100.0 * t.median_gain_random,
            100.0 * TREND_MIN_GAIN_RANDOM,
            mark(soft[2]),
            t.mean_ours,
            t.mean_odessa,
            mark(soft[3]),
            t.occupancy_violations
        ),
        failure: first,
    }
}

/// Large-instance admission time and greedy against cross-entropy.
pub fn performance(n_large: usize, sizes: &[usize]) -> CriterionReport {
    let large = bench_instance(n_large, 0);
    let big = time_admit(&large, 5);
    let mut lines = vec![format!("admit at N={n_large}: {:.4} s (limit {ADMIT_10K_LIMIT_S} s)", big)];
    let mut ok = big < ADMIT_10K_LIMIT_S;
    for &n in sizes {
        let inst = bench_instance(n, 0);
        let g = time_admit(&inst, 5);
        let ce = time_cross_entropy(&inst, 3, &CrossEntropyParams::default());
        ok &= g < ce;
        lines.push(format!("N={n}: greedy {g:.2e} s, ce {ce:.2e} s"));
    }
    report("AC8", "performance", ok, lines.join("; "), None)
}

/// In-process double runs of every artifact-producing path.
pub fn determinism() -> CriterionReport {
    let artifacts = || -> Vec<(&'static str, String)> {
        let mut s = generate(&ScenarioConfig { n_users: 40, seed: 5, ..ScenarioConfig::default() }).expect("config");
        s.compute_demands();
        let spec = ExperimentSpec {
            base: ScenarioConfig { n_users: 30, ..ScenarioConfig::default() },
            sweep: SweepVar::NUsers,
            values: vec![20.0, 30.0],
            methods: vec![Method::Greedy, Method::CrossEntropy, Method::Coarse, Method::Random],
            seeds: vec![0, 1],
            baseline: None,
            ce: CrossEntropyParams { iterations: 10, ..CrossEntropyParams::default() },
            exact_cap: DEFAULT_EXACT_CAP,
        };
        let d = s.demand_profiles();
        let users = pick_bidders(&s, 2, 0);
        vec![
            ("scenario", s.to_json()),
            ("run", rows_to_string(&run_experiment(&spec, false).expect("valid spec"), Format::Csv).unwrap()),
            ("occupancy", rows_to_string(&occupancy_rows(&s, &OffloadMethod::ALL), Format::Csv).unwrap()),
            ("probe", rows_to_string(&probe_rows(&s, &users, 21, PricingMode::Definitional).unwrap(), Format::Csv).unwrap()),
            (
                "auction",
                serde_json::to_string(&auction(&d, &s.topology, &s.catalog(), PricingMode::Definitional).unwrap()).unwrap(),
            ),
        ]
    };
    let (a, b) = (artifacts(), artifacts());
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0).collect();
    report(
        "AC9",
        "determinism",
        differing.is_empty(),
        format!("{} artifacts double-run in process, differing: {:?}", a.len(), differing),
        None,
    )
}

/// Every criterion in order.
pub fn run_all(level: Level) -> Vec<CriterionReport> {
    let c = Counts::for_level(level);
    let mut ir = RationalityTally::default();
    let mut out = vec![theorem3(c.theorem3, &mut ir), theorem2(c.theorem2, &mut ir), truthfulness(&c, &mut ir)];
    out.push(rationality(&ir));
    out.push(partition_correctness(c.chains_per_length, c.dags));
    out.push(demand_optimality(c.demand));
    out.push(figure_trends(c.trend_seeds, c.trend_users));
    out.push(performance(c.perf_users, &c.perf_sizes));
    out.push(determinism());
    out
}
