//! Seeded sweeps comparing admission methods on generated scenarios.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use jcc_core::market::DemandProfile;
use jcc_core::oracles::{
    baseline_coarse_greedy, baseline_random, cross_entropy_admission, exact_admission, greedy_admission,
    CrossEntropyParams, OracleError, DEFAULT_EXACT_CAP,
};
use jcc_core::scenario::{generate, Scenario, ScenarioConfig};
use jcc_core::{Method, OracleReport, Topology, VmCatalog};

use crate::{input, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    NUsers,
    NClouds,
    /// Claim of the lowest-id bidder; everyone else bids truthfully.
    ClaimedValue,
}

/// Methods a sweep may compare.
pub const REGISTERED: [Method; 5] =
    [Method::Greedy, Method::Exact, Method::CrossEntropy, Method::Coarse, Method::Random];

fn default_cap() -> usize {
    DEFAULT_EXACT_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub base: ScenarioConfig,
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Normalization method; `None` picks exact when every cloud is within
    /// the exact cap, else cross-entropy.
    #[serde(default)]
    pub baseline: Option<Method>,
    #[serde(default)]
    pub ce: CrossEntropyParams,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
}

impl ExperimentSpec {
    pub fn check(&self) -> Result<(), HarnessError> {
        if self.values.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            return Err(input("sweep values, seeds and methods must all be non-empty"));
        }
        for m in self.methods.iter().chain(self.baseline.iter()) {
            if !REGISTERED.contains(m) {
                return Err(input(format!("method {} cannot be used in a sweep", m.tag())));
            }
        }
        if matches!(self.sweep, SweepVar::NUsers | SweepVar::NClouds) {
            if let Some(v) = self.values.iter().find(|v| !(v.fract() == 0.0 && **v >= 1.0)) {
                return Err(input(format!("{v} is not a valid count")));
            }
        } else if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(input(format!("{v} is not a valid claim")));
        }
        self.base.check().map_err(input)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub sweep_value: f64,
    pub method: String,
    pub seed: u64,
    pub bidders: usize,
    pub winners: usize,
    pub welfare_bid: f64,
    pub welfare_true: f64,
    /// Bid welfare over the baseline method's bid welfare.
    pub normalized: f64,
    pub baseline: String,
    /// Total occupancy of the winners.
    pub occupancy: f64,
    pub runtime_s: Option<f64>,
    pub status: String,
}

/// Solves one admission instance with a registered method.
pub fn solve(
    method: Method,
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    seed: u64,
    ce: &CrossEntropyParams,
    exact_cap: usize,
) -> Result<OracleReport, OracleError> {
    match method {
        Method::Greedy => greedy_admission(demands, topo, catalog),
        Method::Exact => exact_admission(demands, topo, catalog, exact_cap),
        Method::CrossEntropy => cross_entropy_admission(demands, topo, catalog, &CrossEntropyParams { seed, ..*ce }),
        Method::Coarse => baseline_coarse_greedy(demands, topo, catalog),
        Method::Random => baseline_random(demands, topo, catalog, seed),
        Method::Exhaustive => jcc_core::oracles::exhaustive_admission(demands, topo, catalog),
        Method::Relaxed => jcc_core::oracles::special_case_relaxed(demands, topo, catalog),
    }
}

/// Exact when every cloud's bidder count is within `cap`, else cross-entropy.
pub fn auto_baseline(demands: &[DemandProfile], topo: &Topology, cap: usize) -> Method {
    let mut per_cloud: BTreeMap<usize, usize> = BTreeMap::new();
    for d in demands {
        if let Ok(a) = topo.association(d.user) {
            *per_cloud.entry(a.cloud).or_insert(0) += 1;
        }
    }
    if per_cloud.values().all(|&n| n <= cap) { Method::Exact } else { Method::CrossEntropy }
}

/// Scenario for one sweep cell with demands computed.
pub fn cell_scenario(spec: &ExperimentSpec, value: f64, seed: u64) -> Result<Scenario, HarnessError> {
    let mut config = spec.base.clone();
    config.seed = seed;
    match spec.sweep {
        SweepVar::NUsers => config.n_users = value as usize,
        SweepVar::NClouds => config.n_clouds = value as usize,
        SweepVar::ClaimedValue => {}
    }
    let mut scenario = generate(&config).map_err(input)?;
    scenario.compute_demands();
    Ok(scenario)
}

fn run_cell(spec: &ExperimentSpec, value: f64, seed: u64, timing: bool) -> Vec<ExperimentRow> {
    let failed = |e: String| ExperimentRow {
        sweep_value: value,
        method: "failed".into(),
        seed,
        bidders: 0,
        winners: 0,
        welfare_bid: 0.0,
        welfare_true: 0.0,
        normalized: 0.0,
        baseline: String::new(),
        occupancy: 0.0,
        runtime_s: None,
        status: e,
    };
    let scenario = match cell_scenario(spec, value, seed) {
        Ok(s) => s,
        Err(e) => return vec![failed(e.to_string())],
    };
    let mut demands = scenario.demand_profiles();
    if spec.sweep == SweepVar::ClaimedValue {
        if let Some(d) = demands.first_mut() {
            d.claimed = value;
        }
    }
    let (topo, catalog) = (&scenario.topology, scenario.catalog());
    let baseline = spec.baseline.unwrap_or_else(|| auto_baseline(&demands, topo, spec.exact_cap));
    let mut needed = spec.methods.clone();
    if !needed.contains(&baseline) {
        needed.push(baseline);
    }
    let mut reports = BTreeMap::new();
    for &m in &needed {
        match solve(m, &demands, topo, &catalog, seed, &spec.ce, spec.exact_cap) {
            Ok(r) => {
                reports.insert(m, r);
            }
            Err(e) => return vec![failed(format!("{}: {e}", m.tag()))],
        }
    }
    let base_welfare = reports[&baseline].welfare;
    let phi: BTreeMap<usize, f64> =
        scenario.users.iter().filter_map(|u| u.demand.map(|d| (u.id, d.phi))).collect();
    let truth: BTreeMap<usize, f64> = demands.iter().map(|d| (d.user, d.true_value)).collect();
    spec.methods
        .iter()
        .map(|m| {
            let r = &reports[m];
            ExperimentRow {
                sweep_value: value,
                method: m.tag().into(),
                seed,
                bidders: demands.len(),
                winners: r.winners.len(),
                welfare_bid: r.welfare,
                welfare_true: r.winners.iter().map(|w| truth[w]).sum(),
                normalized: if base_welfare > 0.0 {
                    r.welfare / base_welfare
                } else if r.welfare == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                },
                baseline: baseline.tag().into(),
                occupancy: r.winners.iter().map(|w| phi[w]).sum(),
                runtime_s: if timing { r.runtime_s } else { None },
                status: "ok".into(),
            }
        })
        .collect()
}

/// Runs every (sweep value, seed) cell, in parallel, and returns rows in
/// canonical order: sweep value, then method as listed, then seed.
pub fn run_experiment(spec: &ExperimentSpec, timing: bool) -> Result<Vec<ExperimentRow>, HarnessError> {
    spec.check()?;
    let cells: Vec<(f64, u64)> =
        spec.values.iter().flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s))).collect();
    let mut rows: Vec<ExperimentRow> =
        cells.par_iter().flat_map_iter(|&(v, s)| run_cell(spec, v, s, timing)).collect();
    let rank = |m: &str| spec.methods.iter().position(|x| x.tag() == m).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(rank(&a.method).cmp(&rank(&b.method)))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}
