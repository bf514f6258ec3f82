//! Reference solvers for checking and benchmarking the greedy mechanism:
//! exact admission (branch-and-bound and plain enumeration), a cross-entropy
//! search, the fractional relaxation of the uniform-subchannel case, the
//! baseline allocators, and brute-force oracles for partition and demand.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{self, is_uniform_special_case, resolve, Bid, DemandProfile, MarketError, Topology, UserId, Usage};
use crate::offload::{
    all_cloud, all_device, evaluate_placement, partition, transfer_time, uplink_rate,
    Demand, DemandOutcome, DeviceProfile, LinkConfig, LinkTemplate, Location, OffloadError, PartitionPlan,
    VmCatalog,
};
use crate::taskgraph::{topo_sort, TaskGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("cloud {cloud} has {users} bidders, above the exact-solver cap of {cap}")]
    InstanceTooLarge { cloud: usize, users: usize, cap: usize },
    #[error("instance is not the uniform-subchannel special case")]
    NotSpecialCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Exact,
    Exhaustive,
    #[serde(rename = "ce")]
    CrossEntropy,
    Coarse,
    Random,
    Relaxed,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
            Method::Exhaustive => "exhaustive",
            Method::CrossEntropy => "ce",
            Method::Coarse => "coarse",
            Method::Random => "random",
            Method::Relaxed => "relaxed",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use Method::*;
        [Greedy, Exact, Exhaustive, CrossEntropy, Coarse, Random, Relaxed]
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub method: Method,
    pub welfare: f64,
    /// Selected users, ascending. For the fractional relaxation this is the
    /// support of the optimal selection.
    pub winners: Vec<UserId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
    pub exact: bool,
}

fn report(method: Method, bids: &[Bid], chosen: &[bool], started: Instant, exact: bool) -> OracleReport {
    let mut winners: Vec<UserId> = (0..bids.len()).filter(|&i| chosen[i]).map(|i| bids[i].user).collect();
    winners.sort_unstable();
    OracleReport {
        method,
        welfare: (0..bids.len()).filter(|&i| chosen[i]).map(|i| bids[i].claimed).sum(),
        winners,
        runtime_s: Some(started.elapsed().as_secs_f64()),
        exact,
    }
}

fn feasible(bids: &[Bid], chosen: &[bool], topo: &Topology) -> bool {
    let mut usage = Usage::new(topo);
    for (bid, _) in bids.iter().zip(chosen).filter(|(_, &c)| c) {
        if !usage.fits(bid, topo) {
            return false;
        }
        usage.take(bid);
    }
    true
}

/// Whether a winner set respects every station and cloud capacity.
pub fn is_feasible(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    winners: &[UserId],
) -> Result<bool, MarketError> {
    let bids = resolve(demands, topo, catalog)?;
    let chosen: Vec<bool> = bids.iter().map(|b| winners.contains(&b.user)).collect();
    Ok(feasible(&bids, &chosen, topo))
}

/// The greedy admission wrapped as a report.
pub fn greedy_admission(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
) -> Result<OracleReport, OracleError> {
    let started = Instant::now();
    let r = market::admit(demands, topo, catalog)?;
    Ok(OracleReport {
        method: Method::Greedy,
        welfare: r.welfare_bid,
        winners: r.winners,
        runtime_s: Some(started.elapsed().as_secs_f64()),
        exact: false,
    })
}

pub const DEFAULT_EXACT_CAP: usize = 22;

fn by_cloud(bids: &[Bid], topo: &Topology) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); topo.clouds().len()];
    for (i, b) in bids.iter().enumerate() {
        groups[b.cloud].push(i);
    }
    groups
}

struct BranchAndBound<'a> {
    bids: &'a [Bid],
    topo: &'a Topology,
    // candidate indices sorted by claim per Hz, best first
    items: Vec<usize>,
    station_used: BTreeMap<usize, usize>,
    cloud_left: f64,
    taken: Vec<bool>,
    value: f64,
    best_value: f64,
    best: Vec<bool>,
}

impl BranchAndBound<'_> {
    fn station_left(&self, station: usize) -> usize {
        self.topo.station_capacity(station) - self.station_used.get(&station).copied().unwrap_or(0)
    }

    // Fractional fill of the remaining cloud capacity by claim per Hz, each
    // item checked only against its own station's remaining subchannels.
    fn bound(&self, from: usize) -> f64 {
        let mut left = self.cloud_left;
        let mut bound = self.value;
        for &i in &self.items[from..] {
            let b = &self.bids[i];
            if b.q > self.station_left(b.station) {
                continue;
            }
            if b.vm_hz <= left {
                left -= b.vm_hz;
                bound += b.claimed;
            } else {
                bound += b.claimed * left / b.vm_hz;
                break;
            }
        }
        bound
    }

    fn search(&mut self, depth: usize) {
        if self.value > self.best_value {
            self.best_value = self.value;
            self.best = self.taken.clone();
        }
        if depth == self.items.len() || self.bound(depth) <= self.best_value {
            return;
        }
        let i = self.items[depth];
        let (station, q, vm, claimed) = {
            let b = &self.bids[i];
            (b.station, b.q, b.vm_hz, b.claimed)
        };
        if q <= self.station_left(station) && vm <= self.cloud_left {
            *self.station_used.entry(station).or_insert(0) += q;
            self.cloud_left -= vm;
            self.value += claimed;
            self.taken[i] = true;
            self.search(depth + 1);
            self.taken[i] = false;
            self.value -= claimed;
            self.cloud_left += vm;
            *self.station_used.get_mut(&station).unwrap() -= q;
        }
        self.search(depth + 1);
    }
}

/// Optimal admission. The problem separates by cloud; each cloud is solved by
/// depth-first branch-and-bound with a fractional-knapsack upper bound.
pub fn exact_admission(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    cap: usize,
) -> Result<OracleReport, OracleError> {
    let started = Instant::now();
    let bids = resolve(demands, topo, catalog)?;
    let groups = by_cloud(&bids, topo);
    for (cloud, g) in groups.iter().enumerate() {
        if g.len() > cap {
            return Err(OracleError::InstanceTooLarge { cloud, users: g.len(), cap });
        }
    }
    let mut chosen = vec![false; bids.len()];
    for (cloud, mut items) in groups.into_iter().enumerate() {
        items.retain(|&i| bids[i].claimed > 0.0);
        items.sort_by(|&a, &b| {
            let ra = bids[a].claimed / bids[a].vm_hz;
            let rb = bids[b].claimed / bids[b].vm_hz;
            rb.partial_cmp(&ra).unwrap_or(Ordering::Equal).then(bids[a].user.cmp(&bids[b].user))
        });
        let mut bb = BranchAndBound {
            bids: &bids,
            topo,
            items,
            station_used: BTreeMap::new(),
            cloud_left: topo.cloud_capacity(cloud),
            taken: vec![false; bids.len()],
            value: 0.0,
            best_value: 0.0,
            best: vec![false; bids.len()],
        };
        bb.search(0);
        for (c, b) in chosen.iter_mut().zip(&bb.best) {
            *c |= *b;
        }
    }
    Ok(report(Method::Exact, &bids, &chosen, started, true))
}

/// Plain enumeration of every subset. Only for small instances.
pub fn exhaustive_admission(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
) -> Result<OracleReport, OracleError> {
    const LIMIT: usize = 20;
    let started = Instant::now();
    let bids = resolve(demands, topo, catalog)?;
    if bids.len() > LIMIT {
        return Err(OracleError::InstanceTooLarge { cloud: 0, users: bids.len(), cap: LIMIT });
    }
    let mut best = vec![false; bids.len()];
    let mut best_value = 0.0;
    for mask in 0u64..(1 << bids.len()) {
        let chosen: Vec<bool> = (0..bids.len()).map(|i| mask >> i & 1 == 1).collect();
        let value: f64 = (0..bids.len()).filter(|&i| chosen[i]).map(|i| bids[i].claimed).sum();
        if value > best_value && feasible(&bids, &chosen, topo) {
            best_value = value;
            best = chosen;
        }
    }
    Ok(report(Method::Exhaustive, &bids, &best, started, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossEntropyParams {
    pub population: usize,
    pub elite_fraction: f64,
    /// Weight of the new elite frequencies in the probability update.
    pub smoothing: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CrossEntropyParams {
    fn default() -> Self {
        CrossEntropyParams { population: 200, elite_fraction: 0.1, smoothing: 0.7, iterations: 50, seed: 0 }
    }
}

// Drops members of overloaded stations/clouds, lowest metric first, until the
// selection fits.
fn repair(bids: &[Bid], by_metric_asc: &[usize], chosen: &mut [bool], topo: &Topology) {
    let mut usage = Usage::new(topo);
    for (b, _) in bids.iter().zip(chosen.iter()).filter(|(_, &c)| c) {
        usage.take(b);
    }
    let over_station = |u: &Usage, k: usize| u.station[k] > topo.station_capacity(k);
    let over_cloud = |u: &Usage, l: usize| u.cloud[l] > topo.cloud_capacity(l);
    if (0..usage.station.len()).all(|k| !over_station(&usage, k))
        && (0..usage.cloud.len()).all(|l| !over_cloud(&usage, l))
    {
        return;
    }
    for &i in by_metric_asc {
        let b = &bids[i];
        if chosen[i] && (over_station(&usage, b.station) || over_cloud(&usage, b.cloud)) {
            chosen[i] = false;
            usage.station[b.station] -= b.q;
            usage.cloud[b.cloud] -= b.vm_hz;
        }
    }
}

// Adds left-out bids that still fit, highest metric first.
fn fill(bids: &[Bid], by_metric_asc: &[usize], chosen: &mut [bool], topo: &Topology) {
    let mut usage = Usage::new(topo);
    for (b, _) in bids.iter().zip(chosen.iter()).filter(|(_, &c)| c) {
        usage.take(b);
    }
    for &i in by_metric_asc.iter().rev() {
        if !chosen[i] && usage.fits(&bids[i], topo) {
            usage.take(&bids[i]);
            chosen[i] = true;
        }
    }
}

/// Cross-entropy search over inclusion probabilities. Each sample is repaired
/// to feasibility and then topped up with any bids that still fit. The greedy allocation
/// is placed in the first population and the best sample found so far is
/// carried into every later one, so the result never falls below greedy.
pub fn cross_entropy_admission(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    params: &CrossEntropyParams,
) -> Result<OracleReport, OracleError> {
    let started = Instant::now();
    let bids = resolve(demands, topo, catalog)?;
    let n = bids.len();
    let greedy = market::admit(demands, topo, catalog)?;
    let greedy_set: Vec<bool> = bids.iter().map(|b| greedy.is_winner(b.user)).collect();

    let mut by_metric_asc: Vec<usize> = (0..n).collect();
    by_metric_asc.sort_by(|&a, &b| {
        bids[a].gamma().partial_cmp(&bids[b].gamma()).unwrap_or(Ordering::Equal).then(bids[b].user.cmp(&bids[a].user))
    });
    let score = |x: &[bool]| -> f64 { (0..n).filter(|&i| x[i]).map(|i| bids[i].claimed).sum() };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let population = params.population.max(1);
    let elite_count = ((population as f64 * params.elite_fraction).ceil() as usize).clamp(1, population);
    let mut p = vec![0.5; n];
    let mut best = greedy_set.clone();
    let mut best_score = score(&best);

    for _ in 0..params.iterations {
        let mut samples: Vec<(f64, Vec<bool>)> = Vec::with_capacity(population);
        samples.push((best_score, best.clone()));
        while samples.len() < population {
            let mut x: Vec<bool> = p.iter().map(|&pi| rng.gen::<f64>() < pi).collect();
            repair(&bids, &by_metric_asc, &mut x, topo);
            fill(&bids, &by_metric_asc, &mut x, topo);
            samples.push((score(&x), x));
        }
        // stable sort keeps the carried-over best ahead of equal samples
        samples.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
        if samples[0].0 > best_score {
            best_score = samples[0].0;
            best = samples[0].1.clone();
        }
        let elite = &samples[..elite_count];
        for (i, pi) in p.iter_mut().enumerate() {
            let freq = elite.iter().filter(|(_, x)| x[i]).count() as f64 / elite_count as f64;
            *pi = params.smoothing * freq + (1.0 - params.smoothing) * *pi;
        }
    }
    Ok(report(Method::CrossEntropy, &bids, &best, started, false))
}

/// Optimal value of the fractional relaxation in the uniform-subchannel case:
/// per cloud, at most `floor(M / q)` users per station and a fractional
/// knapsack on CPU capacity.
///
/// Solved through its Lagrangian dual over the CPU constraint, which is exact
/// because the remaining per-station cardinality polytope is integral. The
/// dual is convex and piecewise linear, so its minimum sits at one of the
/// breakpoints enumerated below.
pub fn special_case_relaxed(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
) -> Result<OracleReport, OracleError> {
    let started = Instant::now();
    if !is_uniform_special_case(topo, demands) {
        return Err(OracleError::NotSpecialCase);
    }
    let bids = resolve(demands, topo, catalog)?;
    let mut chosen = vec![false; bids.len()];
    let mut total = 0.0;
    for (cloud, items) in by_cloud(&bids, topo).into_iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        let per_station = topo.station_capacity(bids[items[0]].station) / bids[items[0]].q;
        let mut stations: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &items {
            stations.entry(bids[i].station).or_default().push(i);
        }
        let capacity = topo.cloud_capacity(cloud);
        let dual = |mu: f64| -> (f64, Vec<usize>) {
            let mut value = mu * capacity;
            let mut support = Vec::new();
            for members in stations.values() {
                let mut reduced: Vec<(f64, usize)> =
                    members.iter().map(|&i| (bids[i].claimed - mu * bids[i].vm_hz, i)).collect();
                reduced.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
                for &(r, i) in reduced.iter().take(per_station) {
                    if r > 0.0 {
                        value += r;
                        support.push(i);
                    }
                }
            }
            (value, support)
        };
        let mut breakpoints = vec![0.0];
        for &i in &items {
            breakpoints.push(bids[i].claimed / bids[i].vm_hz);
        }
        for members in stations.values() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    let df = bids[i].vm_hz - bids[j].vm_hz;
                    if df != 0.0 {
                        let mu = (bids[i].claimed - bids[j].claimed) / df;
                        if mu > 0.0 {
                            breakpoints.push(mu);
                        }
                    }
                }
            }
        }
        let (value, support) = breakpoints
            .into_iter()
            .map(dual)
            .reduce(|a, b| if b.0 < a.0 { b } else { a })
            .expect("breakpoints are never empty");
        total += value;
        for i in support {
            chosen[i] = true;
        }
    }
    let mut r = report(Method::Relaxed, &bids, &chosen, started, true);
    r.welfare = total;
    Ok(r)
}

fn scan_in(method: Method, bids: &[Bid], order: &[usize], topo: &Topology, started: Instant) -> OracleReport {
    let mut usage = Usage::new(topo);
    let mut chosen = vec![false; bids.len()];
    for &i in order {
        if usage.fits(&bids[i], topo) {
            usage.take(&bids[i]);
            chosen[i] = true;
        }
    }
    report(method, bids, &chosen, started, false)
}

/// Greedy scan by claimed value alone, highest first.
pub fn baseline_coarse_greedy(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
) -> Result<OracleReport, OracleError> {
    let started = Instant::now();
    let bids = resolve(demands, topo, catalog)?;
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| {
        bids[b].claimed.partial_cmp(&bids[a].claimed).unwrap_or(Ordering::Equal).then(bids[a].user.cmp(&bids[b].user))
    });
    Ok(scan_in(Method::Coarse, &bids, &order, topo, started))
}

/// Scan in a seeded random order.
pub fn baseline_random(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    seed: u64,
) -> Result<OracleReport, OracleError> {
    let started = Instant::now();
    let bids = resolve(demands, topo, catalog)?;
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(scan_in(Method::Random, &bids, &order, topo, started))
}

/// Everything but the output on the cloud.
pub fn baseline_all_offload(
    graph: &TaskGraph,
    dev: &DeviceProfile,
    link: &LinkConfig,
    vm_hz: f64,
) -> Result<PartitionPlan, OffloadError> {
    evaluate_placement(graph, &all_cloud(graph), dev, link, vm_hz)
}

/// Odessa-style myopic partition: in topological order each component takes
/// the location with the smaller own execution time plus the transfers it
/// must receive from already placed predecessors. Ties stay on the device.
pub fn baseline_odessa_greedy(graph: &TaskGraph, dev: &DeviceProfile, link: &LinkConfig, vm_hz: f64) -> PartitionPlan {
    let rate = uplink_rate(link, dev);
    let mut y = all_device(graph);
    for &i in topo_sort(graph).iter() {
        if i == graph.output() {
            continue;
        }
        let cost = |loc: Location| -> Option<f64> {
            let exec = match loc {
                Location::Device => graph.cycles(i) / dev.cpu_hz,
                Location::Cloud if link.subchannels == 0 => return None,
                Location::Cloud => graph.cycles(i) / vm_hz,
            };
            graph.in_edges(i).iter().try_fold(exec, |acc, &(p, bits)| {
                if y[p] == loc { Some(acc) } else { transfer_time(bits, rate).ok().map(|t| acc + t) }
            })
        };
        if let (Some(d), Some(c)) = (cost(Location::Device), cost(Location::Cloud)) {
            if c < d {
                y[i] = Location::Cloud;
            }
        }
    }
    evaluate_placement(graph, &y, dev, link, vm_hz).unwrap_or_else(|_| {
        evaluate_placement(graph, &all_device(graph), dev, link, vm_hz).expect("all-device is always finite")
    })
}

/// Minimum over all `2^(|V|-1)` placements (output fixed on the device).
/// The first minimal placement in mask order is returned.
pub fn brute_force_partition(graph: &TaskGraph, dev: &DeviceProfile, link: &LinkConfig, vm_hz: f64) -> PartitionPlan {
    assert!(graph.len() <= 24, "brute force is exponential in the component count");
    let free: Vec<usize> = (0..graph.len()).filter(|&i| i != graph.output()).collect();
    let mut best: Option<PartitionPlan> = None;
    for mask in 0u64..(1 << free.len()) {
        let mut y = all_device(graph);
        for (bit, &i) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                y[i] = Location::Cloud;
            }
        }
        if let Ok(plan) = evaluate_placement(graph, &y, dev, link, vm_hz) {
            if best.as_ref().is_none_or(|b| plan.total_delay < b.total_delay) {
                best = Some(plan);
            }
        }
    }
    best.expect("mask 0 (all-device) is always evaluable")
}

/// Full sweep of every `(q, s)` with no early exit; keeps the feasible
/// profile with least occupancy (ties: smaller q, then smaller s).
pub fn exhaustive_demand(
    graph: &TaskGraph,
    dev: &DeviceProfile,
    template: &LinkTemplate,
    catalog: &VmCatalog,
) -> DemandOutcome {
    let local_link = LinkConfig::with_subchannels(template, 0);
    let local = evaluate_placement(graph, &all_device(graph), dev, &local_link, 1.0).expect("local plan");
    if local.residual_delay.iter().all(|&z| dev.deadline.admits(z)) {
        return DemandOutcome::NoOffloadNeeded;
    }
    let mut best: Option<Demand> = None;
    for q in 1..=template.station_subchannels {
        for (s, &vm) in catalog.capabilities().iter().enumerate() {
            if vm > template.cloud_capacity_hz {
                continue;
            }
            let phi = q as f64 / template.station_subchannels as f64 + vm / template.cloud_capacity_hz;
            let plan = partition(graph, dev, &LinkConfig::with_subchannels(template, q), vm);
            if !plan.residual_delay.iter().all(|&z| dev.deadline.admits(z)) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => (phi, q, s) < (b.phi, b.q, b.s),
            };
            if better {
                best = Some(Demand { q, s, phi });
            }
        }
    }
    best.map_or(DemandOutcome::Infeasible, DemandOutcome::Offload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{Cloud, Station};
    use crate::offload::Deadline;
    use crate::taskgraph::{build, chain};

    fn single_cell(m: usize, b: f64, users: usize) -> Topology {
        Topology::new(
            vec![Station { id: 0, subchannels: m, bandwidth_hz: 1e6 }],
            vec![Cloud { id: 0, capacity_hz: b }],
            vec![0],
            (0..users).map(|u| (u, 0)),
        )
        .unwrap()
    }

    fn bid(user: UserId, q: usize, s: usize, claimed: f64) -> DemandProfile {
        DemandProfile { user, q, s, claimed, true_value: claimed }
    }

    #[test]
    fn exact_on_three_users() {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(2, 10e9, 3);
        let d = vec![bid(0, 1, 0, 10.0), bid(1, 1, 0, 6.0), bid(2, 1, 0, 4.0)];
        for r in [exact_admission(&d, &topo, &cat, 22).unwrap(), exhaustive_admission(&d, &topo, &cat).unwrap()] {
            assert_eq!(r.welfare, 16.0);
            assert_eq!(r.winners, vec![0, 1]);
            assert!(r.exact);
        }
        let coarse = baseline_coarse_greedy(&d, &topo, &cat).unwrap();
        assert_eq!(coarse.winners, vec![0, 1]);
    }

    #[test]
    fn exact_on_adversarial_pair() {
        let cat = VmCatalog::new(vec![50e9, 60e9]).unwrap();
        let topo = single_cell(10, 100e9, 3);
        let d = vec![bid(0, 6, 1, 6.0), bid(1, 5, 0, 4.8), bid(2, 5, 0, 4.8)];
        let r = exact_admission(&d, &topo, &cat, 22).unwrap();
        assert!((r.welfare - 9.6).abs() < 1e-12);
        assert_eq!(r.winners, vec![1, 2]);
        let greedy = greedy_admission(&d, &topo, &cat).unwrap();
        assert_eq!(greedy.welfare, 6.0);
    }

    #[test]
    fn coarse_loses_to_metric_ranking() {
        // a large valuable bid that eats both resources blocks two efficient ones
        let cat = VmCatalog::new(vec![50e9, 100e9]).unwrap();
        let topo = single_cell(10, 100e9, 3);
        let d = vec![bid(0, 10, 1, 7.0), bid(1, 5, 0, 5.0), bid(2, 5, 0, 5.0)];
        let coarse = baseline_coarse_greedy(&d, &topo, &cat).unwrap();
        let greedy = greedy_admission(&d, &topo, &cat).unwrap();
        assert_eq!(coarse.welfare, 7.0);
        assert_eq!(greedy.welfare, 10.0);
    }

    #[test]
    fn empty_instances() {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(2, 10e9, 0);
        assert_eq!(exact_admission(&[], &topo, &cat, 22).unwrap().welfare, 0.0);
        assert_eq!(baseline_coarse_greedy(&[], &topo, &cat).unwrap().welfare, 0.0);
        assert_eq!(
            cross_entropy_admission(&[], &topo, &cat, &CrossEntropyParams::default()).unwrap().welfare,
            0.0
        );
    }

    #[test]
    fn everything_fits() {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(15, 100e9, 4);
        let d: Vec<_> = (0..4).map(|u| bid(u, 1, 0, 1.0 + u as f64)).collect();
        let ce = cross_entropy_admission(&d, &topo, &cat, &CrossEntropyParams::default()).unwrap();
        assert_eq!(ce.welfare, 10.0);
        assert_eq!(baseline_random(&d, &topo, &cat, 3).unwrap().welfare, 10.0);
    }

    #[test]
    fn random_baseline_replays() {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(3, 10e9, 6);
        let d: Vec<_> = (0..6).map(|u| bid(u, 1, 0, 1.0 + u as f64)).collect();
        let mut a = baseline_random(&d, &topo, &cat, 11).unwrap();
        let mut b = baseline_random(&d, &topo, &cat, 11).unwrap();
        a.runtime_s = None;
        b.runtime_s = None;
        assert_eq!(a, b);
    }

    #[test]
    fn cap_is_enforced() {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(15, 100e9, 5);
        let d: Vec<_> = (0..5).map(|u| bid(u, 1, 0, 1.0)).collect();
        assert_eq!(
            exact_admission(&d, &topo, &cat, 4).unwrap_err(),
            OracleError::InstanceTooLarge { cloud: 0, users: 5, cap: 4 }
        );
    }

    #[test]
    fn relaxation_without_fractional_user() {
        // equal VM sizes and a budget of exactly three of them: the relaxation
        // takes the three best bids whole, as greedy does
        let cat = VmCatalog::new(vec![10e9]).unwrap();
        let topo = single_cell(15, 30e9, 5);
        let d: Vec<_> = (0..5).map(|u| bid(u, 1, 0, 2.0 + u as f64)).collect();
        let relaxed = special_case_relaxed(&d, &topo, &cat).unwrap();
        let greedy = greedy_admission(&d, &topo, &cat).unwrap();
        assert!((relaxed.welfare - greedy.welfare).abs() < 1e-9);
        assert_eq!(relaxed.winners, greedy.winners);
    }

    #[test]
    fn relaxation_counts_fractional_user() {
        // capacity for one and a half VMs
        let cat = VmCatalog::new(vec![10e9]).unwrap();
        let topo = single_cell(15, 15e9, 2);
        let d = vec![bid(0, 1, 0, 4.0), bid(1, 1, 0, 2.0)];
        let relaxed = special_case_relaxed(&d, &topo, &cat).unwrap();
        assert!((relaxed.welfare - 5.0).abs() < 1e-9);
    }

    #[test]
    fn relaxation_requires_uniform_demand() {
        let cat = VmCatalog::new(vec![10e9]).unwrap();
        let topo = single_cell(15, 30e9, 2);
        let d = vec![bid(0, 1, 0, 4.0), bid(1, 2, 0, 2.0)];
        assert_eq!(special_case_relaxed(&d, &topo, &cat).unwrap_err(), OracleError::NotSpecialCase);
    }

    fn dev() -> DeviceProfile {
        DeviceProfile { cpu_hz: 0.5e9, tx_power_w: 0.1, channel_gain: 1e-8, noise_w: 1e-13, deadline: Deadline::Unbounded }
    }

    fn link(q: usize) -> LinkConfig {
        LinkConfig { subchannels: q, bandwidth_hz: 1e6, station_subchannels: 15, cloud_capacity_hz: 50e9 }
    }

    #[test]
    fn baseline_partitions_on_chain() {
        let g = chain(&[1e9, 1e6], &[1e6]).unwrap();
        let all = baseline_all_offload(&g, &dev(), &link(1), 5e9).unwrap();
        assert!((all.total_delay - 0.277_26).abs() < 1e-4);
        let best = brute_force_partition(&g, &dev(), &link(1), 5e9);
        let odessa = baseline_odessa_greedy(&g, &dev(), &link(1), 5e9);
        assert!(odessa.total_delay >= best.total_delay);
        assert_eq!(best.total_delay, partition(&g, &dev(), &link(1), 5e9).total_delay);
    }

    #[test]
    fn odessa_on_free_transfers_matches_partition() {
        let g = build(&[1e9, 2e9, 5e8, 1e8], &[(0, 1, 0.0), (0, 2, 0.0), (1, 3, 0.0), (2, 3, 0.0)], 3).unwrap();
        let odessa = baseline_odessa_greedy(&g, &dev(), &link(1), 10e9);
        let ours = partition(&g, &dev(), &link(1), 10e9);
        assert_eq!(odessa.placement, ours.placement);
        assert_eq!(odessa.placement, all_cloud(&g));
        let all = baseline_all_offload(&g, &dev(), &link(1), 10e9).unwrap();
        assert_eq!(all.total_delay, ours.total_delay);
    }

    #[test]
    fn odessa_singleton() {
        let g = build(&[1e9], &[], 0).unwrap();
        assert_eq!(baseline_odessa_greedy(&g, &dev(), &link(1), 10e9).placement, vec![Location::Device]);
    }

    #[test]
    fn heavy_transfers_punish_all_offload() {
        // the source produces 1 Gbit that the output needs
        let g = chain(&[1e8, 1e8, 1e6], &[1e3, 1e9]).unwrap();
        let all = baseline_all_offload(&g, &dev(), &link(1), 20e9).unwrap();
        let ours = partition(&g, &dev(), &link(1), 20e9);
        assert!(all.total_delay > 50.0 * ours.total_delay);
    }
}
