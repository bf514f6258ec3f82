//! Per-user occupancy comparison and truthfulness probes over a scenario.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use jcc_core::market::truthfulness_probe;
use jcc_core::offload::{optimal_demand, search_demand};
use jcc_core::oracles::{baseline_all_offload, baseline_odessa_greedy};
use jcc_core::scenario::Scenario;
use jcc_core::{DemandOutcome, PricingMode, UserId};

use crate::{input, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OffloadMethod {
    Ours,
    AllOffload,
    Odessa,
}

impl OffloadMethod {
    pub const ALL: [OffloadMethod; 3] = [OffloadMethod::Ours, OffloadMethod::AllOffload, OffloadMethod::Odessa];

    pub fn tag(self) -> &'static str {
        match self {
            OffloadMethod::Ours => "ours",
            OffloadMethod::AllOffload => "all_offload",
            OffloadMethod::Odessa => "odessa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyRow {
    pub user: UserId,
    pub method: String,
    /// `offload`, `no_offload_needed` or `infeasible`.
    pub status: String,
    pub q: Option<usize>,
    pub s: Option<usize>,
    pub phi: Option<f64>,
    /// `phi` over the all-offload `phi`, when both are offloads.
    pub normalized: Option<f64>,
}

/// Least feasible occupancy per user under one placement rule.
pub fn user_demand(scenario: &Scenario, user: UserId, method: OffloadMethod) -> DemandOutcome {
    let u = &scenario.users[user];
    let (g, dev) = (&u.graph, &u.device);
    let t = scenario.link_template(user);
    let cat = scenario.catalog();
    match method {
        OffloadMethod::Ours => optimal_demand(g, dev, &t, &cat),
        OffloadMethod::AllOffload => search_demand(g, dev, &t, &cat, |link, vm| {
            baseline_all_offload(g, dev, link, vm).expect("profiles always grant at least one subchannel")
        }),
        OffloadMethod::Odessa => search_demand(g, dev, &t, &cat, |link, vm| baseline_odessa_greedy(g, dev, link, vm)),
    }
}

fn status(o: &DemandOutcome) -> &'static str {
    match o {
        DemandOutcome::Offload(_) => "offload",
        DemandOutcome::NoOffloadNeeded => "no_offload_needed",
        DemandOutcome::Infeasible => "infeasible",
    }
}

/// Rows ordered by user, then method as given.
pub fn occupancy_rows(scenario: &Scenario, methods: &[OffloadMethod]) -> Vec<OccupancyRow> {
    let mut rows = Vec::new();
    for user in 0..scenario.users.len() {
        let reference = user_demand(scenario, user, OffloadMethod::AllOffload).demand();
        for &m in methods {
            let o = user_demand(scenario, user, m);
            let d = o.demand();
            rows.push(OccupancyRow {
                user,
                method: m.tag().into(),
                status: status(&o).into(),
                q: d.map(|d| d.q),
                s: d.map(|d| d.s),
                phi: d.map(|d| d.phi),
                normalized: d.zip(reference).map(|(d, r)| d.phi / r.phi),
            });
        }
    }
    rows
}

/// Mean normalized occupancy per method over users every method can serve
/// by offloading.
pub fn mean_normalized(rows: &[OccupancyRow], methods: &[OffloadMethod]) -> Vec<(OffloadMethod, f64, usize)> {
    let users: Vec<UserId> = {
        let mut u: Vec<UserId> = rows.iter().map(|r| r.user).collect();
        u.dedup();
        u
    };
    let served: Vec<UserId> = users
        .into_iter()
        .filter(|&u| rows.iter().filter(|r| r.user == u).all(|r| r.normalized.is_some()))
        .collect();
    methods
        .iter()
        .map(|&m| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == m.tag() && served.binary_search(&r.user).is_ok())
                .filter_map(|r| r.normalized)
                .collect();
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            (m, mean, vals.len())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCsvRow {
    pub user: UserId,
    pub true_value: f64,
    pub claimed: f64,
    pub win: bool,
    pub payment: f64,
    pub utility: f64,
    pub truthful_utility: f64,
    pub gain: f64,
}

/// Claims `v * j / (points / 2)` for `j = 0..points`, so the truthful
/// claim sits in the middle of an odd-sized grid.
pub fn claim_grid(true_value: f64, points: usize) -> Vec<f64> {
    let half = (points / 2).max(1) as f64;
    (0..points).map(|j| true_value * j as f64 / half).collect()
}

pub fn probe_rows(
    scenario: &Scenario,
    users: &[UserId],
    points: usize,
    mode: PricingMode,
) -> Result<Vec<ProbeCsvRow>, HarnessError> {
    let demands = scenario.demand_profiles();
    let (topo, cat) = (&scenario.topology, scenario.catalog());
    let mut rows = Vec::new();
    for &user in users {
        let d = demands
            .iter()
            .find(|d| d.user == user)
            .ok_or_else(|| input(format!("user {user} has no demand profile to probe")))?;
        let v = d.true_value;
        let truthful = truthfulness_probe(&demands, topo, &cat, user, &[v], mode).map_err(input)?[0].utility;
        for p in truthfulness_probe(&demands, topo, &cat, user, &claim_grid(v, points), mode).map_err(input)? {
            rows.push(ProbeCsvRow {
                user,
                true_value: v,
                claimed: p.claimed,
                win: p.win,
                payment: p.payment,
                utility: p.utility,
                truthful_utility: truthful,
                gain: p.utility - truthful,
            });
        }
    }
    Ok(rows)
}

/// Up to `k` bidders picked by a seeded shuffle, ascending.
pub fn pick_bidders(scenario: &Scenario, k: usize, seed: u64) -> Vec<UserId> {
    use rand::SeedableRng;
    let mut ids: Vec<UserId> = scenario.demand_profiles().iter().map(|d| d.user).collect();
    ids.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    ids.truncate(k);
    ids.sort_unstable();
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use jcc_core::scenario::{generate, ScenarioConfig};

    fn scenario() -> Scenario {
        let mut s = generate(&ScenarioConfig { n_users: 40, seed: 2, ..ScenarioConfig::default() }).unwrap();
        s.compute_demands();
        s
    }

    #[test]
    fn grid_centers_truth() {
        let g = claim_grid(8.0, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[10], 8.0);
        assert_eq!(g[20], 16.0);
    }

    #[test]
    fn ours_never_needs_more_than_all_offload() {
        let s = scenario();
        let rows = occupancy_rows(&s, &OffloadMethod::ALL);
        assert_eq!(rows.len(), 40 * 3);
        for r in rows.iter().filter(|r| r.method == "ours") {
            if let Some(n) = r.normalized {
                assert!(n <= 1.0 + 1e-12);
            }
        }
        for r in rows.iter().filter(|r| r.method == "all_offload") {
            assert!(r.normalized.is_none_or(|n| n == 1.0));
        }
    }

    #[test]
    fn probes_never_gain() {
        let s = scenario();
        let users = pick_bidders(&s, 3, 1);
        let rows = probe_rows(&s, &users, 21, PricingMode::Definitional).unwrap();
        assert_eq!(rows.len(), users.len() * 21);
        assert!(rows.iter().all(|r| r.gain <= 1e-9));
    }
}
