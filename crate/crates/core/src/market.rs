//! Operator side: greedy admission control over joint subchannel/CPU
//! capacity, critical-value payments, and probes that check the resulting
//! mechanism is truthful.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::offload::{resource_occupancy, OffloadError, VmCatalog};

pub type UserId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("user {0} appears more than once")]
    DuplicateUser(UserId),
    #[error("user {0} has no station association")]
    UnknownUser(UserId),
    #[error("invalid demand for user {user}: {reason}")]
    InvalidDemand { user: UserId, reason: String },
    #[error("allocation was not produced by admission control on these demands")]
    ModeMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: usize,
    pub subchannels: usize,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cloud {
    pub id: usize,
    pub capacity_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub station: usize,
    pub cloud: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawTopology {
    stations: Vec<Station>,
    clouds: Vec<Cloud>,
    station_cloud: Vec<usize>,
    associations: BTreeMap<UserId, Association>,
}

/// Stations, clouds, the station-to-cloud wiring, and where each user is
/// attached. Station and cloud ids are their indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology", into = "RawTopology")]
pub struct Topology {
    stations: Vec<Station>,
    clouds: Vec<Cloud>,
    station_cloud: Vec<usize>,
    associations: BTreeMap<UserId, Association>,
}

impl Topology {
    pub fn new(
        stations: Vec<Station>,
        clouds: Vec<Cloud>,
        station_cloud: Vec<usize>,
        user_stations: impl IntoIterator<Item = (UserId, usize)>,
    ) -> Result<Self, MarketError> {
        let mut associations = BTreeMap::new();
        for (user, station) in user_stations {
            let cloud = *station_cloud
                .get(station)
                .ok_or_else(|| MarketError::InvalidTopology(format!("user {user} at unknown station {station}")))?;
            if associations.insert(user, Association { station, cloud }).is_some() {
                return Err(MarketError::DuplicateUser(user));
            }
        }
        RawTopology { stations, clouds, station_cloud, associations }.try_into()
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn clouds(&self) -> &[Cloud] {
        &self.clouds
    }

    pub fn station_cloud(&self, station: usize) -> usize {
        self.station_cloud[station]
    }

    pub fn association(&self, user: UserId) -> Result<Association, MarketError> {
        self.associations.get(&user).copied().ok_or(MarketError::UnknownUser(user))
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.associations.keys().copied()
    }

    pub fn station_capacity(&self, station: usize) -> usize {
        self.stations[station].subchannels
    }

    pub fn cloud_capacity(&self, cloud: usize) -> f64 {
        self.clouds[cloud].capacity_hz
    }
}

impl TryFrom<RawTopology> for Topology {
    type Error = MarketError;

    fn try_from(raw: RawTopology) -> Result<Self, Self::Error> {
        let bad = |m: String| Err(MarketError::InvalidTopology(m));
        if raw.stations.is_empty() || raw.clouds.is_empty() {
            return bad("need at least one station and one cloud".into());
        }
        for (i, s) in raw.stations.iter().enumerate() {
            if s.id != i {
                return bad(format!("station ids must be dense, found {} at {i}", s.id));
            }
            if s.subchannels == 0 {
                return bad(format!("station {i} has no subchannels"));
            }
            if !(s.bandwidth_hz.is_finite() && s.bandwidth_hz > 0.0) {
                return bad(format!("station {i} bandwidth must be positive"));
            }
        }
        for (i, c) in raw.clouds.iter().enumerate() {
            if c.id != i {
                return bad(format!("cloud ids must be dense, found {} at {i}", c.id));
            }
            if !(c.capacity_hz.is_finite() && c.capacity_hz > 0.0) {
                return bad(format!("cloud {i} capacity must be positive"));
            }
        }
        if raw.station_cloud.len() != raw.stations.len() {
            return bad("every station must map to exactly one cloud".into());
        }
        if let Some(&l) = raw.station_cloud.iter().find(|&&l| l >= raw.clouds.len()) {
            return bad(format!("station mapped to unknown cloud {l}"));
        }
        for (&user, a) in &raw.associations {
            if a.station >= raw.stations.len() || raw.station_cloud[a.station] != a.cloud {
                return bad(format!("user {user} association is inconsistent with the station map"));
            }
        }
        Ok(Topology {
            stations: raw.stations,
            clouds: raw.clouds,
            station_cloud: raw.station_cloud,
            associations: raw.associations,
        })
    }
}

impl From<Topology> for RawTopology {
    fn from(t: Topology) -> Self {
        RawTopology {
            stations: t.stations,
            clouds: t.clouds,
            station_cloud: t.station_cloud,
            associations: t.associations,
        }
    }
}

/// A user's bid `(q, s, claimed)` plus its private true valuation. Admission
/// and pricing only ever read `claimed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    pub user: UserId,
    pub q: usize,
    pub s: usize,
    pub claimed: f64,
    pub true_value: f64,
}

/// Order of ties in the ranking metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Higher claim first, then smaller user id.
    #[default]
    Deterministic,
    /// Seeded random priority among equal metrics.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingMode {
    /// Critical user found by re-running admission without the winner.
    #[default]
    Definitional,
    /// Pricing loop restricted to users at the winner's own station.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// Winning user ids, ascending.
    pub winners: Vec<UserId>,
    /// Payment of every bidder; losers pay 0.
    pub payments: BTreeMap<UserId, f64>,
    /// Sum of winner claims.
    pub welfare_bid: f64,
    /// Sum of winner true values, filled in by [`auction`].
    pub welfare_true: Option<f64>,
    pub station_used: Vec<usize>,
    pub cloud_used: Vec<f64>,
    /// Users in the order admission scanned them.
    pub rank_order: Vec<UserId>,
}

impl AllocationResult {
    pub fn is_winner(&self, user: UserId) -> bool {
        self.winners.binary_search(&user).is_ok()
    }

    pub fn payment(&self, user: UserId) -> f64 {
        self.payments.get(&user).copied().unwrap_or(0.0)
    }

    /// Sum of true values of the winners.
    pub fn true_welfare(&self, demands: &[DemandProfile]) -> f64 {
        demands.iter().filter(|d| self.is_winner(d.user)).map(|d| d.true_value).sum()
    }
}

// Bid with everything admission needs resolved against the topology.
#[derive(Debug, Clone)]
pub(crate) struct Bid {
    pub user: UserId,
    pub station: usize,
    pub cloud: usize,
    pub q: usize,
    pub vm_hz: f64,
    pub phi: f64,
    pub claimed: f64,
}

impl Bid {
    pub fn gamma(&self) -> f64 {
        self.claimed / self.phi
    }
}

pub(crate) fn resolve(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
) -> Result<Vec<Bid>, MarketError> {
    let mut seen = BTreeSet::new();
    demands
        .iter()
        .map(|d| {
            if !seen.insert(d.user) {
                return Err(MarketError::DuplicateUser(d.user));
            }
            let invalid = |reason: String| MarketError::InvalidDemand { user: d.user, reason };
            if d.q == 0 {
                return Err(invalid("a bid needs at least one subchannel".into()));
            }
            if !(d.claimed.is_finite() && d.claimed >= 0.0) {
                return Err(invalid(format!("claimed value {} must be finite and non-negative", d.claimed)));
            }
            let a = topo.association(d.user)?;
            let phi = resource_occupancy(
                d.q,
                d.s,
                topo.station_capacity(a.station),
                topo.cloud_capacity(a.cloud),
                catalog,
            )
            .map_err(|e: OffloadError| invalid(e.to_string()))?;
            Ok(Bid {
                user: d.user,
                station: a.station,
                cloud: a.cloud,
                q: d.q,
                vm_hz: catalog.capabilities()[d.s],
                phi,
                claimed: d.claimed,
            })
        })
        .collect()
}

/// Claimed value per unit of occupancy, `lambda / Phi`.
pub fn ranking_metric(d: &DemandProfile, topo: &Topology, catalog: &VmCatalog) -> Result<f64, MarketError> {
    let bid = resolve(std::slice::from_ref(d), topo, catalog)?.remove(0);
    Ok(bid.gamma())
}

pub(crate) fn rank(bids: &[Bid], tie_break: TieBreak) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    let cmp_metric = |a: &Bid, b: &Bid| b.gamma().partial_cmp(&a.gamma()).unwrap_or(Ordering::Equal);
    match tie_break {
        TieBreak::Deterministic => order.sort_by(|&a, &b| {
            let (x, y) = (&bids[a], &bids[b]);
            cmp_metric(x, y)
                .then_with(|| y.claimed.partial_cmp(&x.claimed).unwrap_or(Ordering::Equal))
                .then(x.user.cmp(&y.user))
        }),
        TieBreak::Seeded(seed) => {
            let mut priority: Vec<usize> = (0..bids.len()).collect();
            priority.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            order.sort_by(|&a, &b| cmp_metric(&bids[a], &bids[b]).then(priority[a].cmp(&priority[b])));
        }
    }
    order
}

/// Running per-station and per-cloud usage during a scan.
#[derive(Debug, Clone)]
pub(crate) struct Usage {
    pub station: Vec<usize>,
    pub cloud: Vec<f64>,
}

impl Usage {
    pub fn new(topo: &Topology) -> Self {
        Usage { station: vec![0; topo.stations().len()], cloud: vec![0.0; topo.clouds().len()] }
    }

    pub fn fits(&self, bid: &Bid, topo: &Topology) -> bool {
        self.station[bid.station] + bid.q <= topo.station_capacity(bid.station)
            && self.cloud[bid.cloud] + bid.vm_hz <= topo.cloud_capacity(bid.cloud)
    }

    pub fn take(&mut self, bid: &Bid) {
        self.station[bid.station] += bid.q;
        self.cloud[bid.cloud] += bid.vm_hz;
    }
}

// One greedy pass over `order`, ignoring `skip`. Returns acceptance per bid
// index and final usage.
pub(crate) fn scan(bids: &[Bid], order: &[usize], skip: Option<usize>, topo: &Topology) -> (Vec<bool>, Usage) {
    let mut usage = Usage::new(topo);
    let mut won = vec![false; bids.len()];
    for &i in order {
        if Some(i) == skip {
            continue;
        }
        if usage.fits(&bids[i], topo) {
            usage.take(&bids[i]);
            won[i] = true;
        }
    }
    (won, usage)
}

fn summarize(bids: &[Bid], order: &[usize], won: &[bool], usage: Usage) -> AllocationResult {
    let mut winners: Vec<UserId> = (0..bids.len()).filter(|&i| won[i]).map(|i| bids[i].user).collect();
    winners.sort_unstable();
    AllocationResult {
        winners,
        payments: bids.iter().map(|b| (b.user, 0.0)).collect(),
        welfare_bid: (0..bids.len()).filter(|&i| won[i]).map(|i| bids[i].claimed).sum(),
        welfare_true: None,
        station_used: usage.station,
        cloud_used: usage.cloud,
        rank_order: order.iter().map(|&i| bids[i].user).collect(),
    }
}

/// Greedy admission in decreasing ranking metric; a bid is accepted iff it
/// still fits its station and its cloud. Payments are left at zero.
pub fn admit(demands: &[DemandProfile], topo: &Topology, catalog: &VmCatalog) -> Result<AllocationResult, MarketError> {
    admit_with(demands, topo, catalog, TieBreak::Deterministic)
}

pub fn admit_with(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    tie_break: TieBreak,
) -> Result<AllocationResult, MarketError> {
    let bids = resolve(demands, topo, catalog)?;
    let order = rank(&bids, tie_break);
    let (won, usage) = scan(&bids, &order, None, topo);
    Ok(summarize(&bids, &order, &won, usage))
}

/// Critical-value payments for an allocation produced by [`admit`].
///
/// A winner pays `lambda_i * Phi_n / Phi_i` where `i` is its critical user:
/// the first bid after it in rank order that loses now but would win were the
/// winner absent. Without a critical user the payment is zero.
pub fn critical_payments(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    result: &AllocationResult,
    mode: PricingMode,
) -> Result<AllocationResult, MarketError> {
    let bids = resolve(demands, topo, catalog)?;
    let index: BTreeMap<UserId, usize> = bids.iter().enumerate().map(|(i, b)| (b.user, i)).collect();
    if result.rank_order.len() != bids.len() {
        return Err(MarketError::ModeMismatch);
    }
    let order: Vec<usize> = result
        .rank_order
        .iter()
        .map(|u| index.get(u).copied().ok_or(MarketError::ModeMismatch))
        .collect::<Result<_, _>>()?;
    if order.windows(2).any(|w| bids[w[0]].gamma() < bids[w[1]].gamma()) {
        return Err(MarketError::ModeMismatch);
    }
    let (won, _) = scan(&bids, &order, None, topo);
    let winners: BTreeSet<UserId> = (0..bids.len()).filter(|&i| won[i]).map(|i| bids[i].user).collect();
    if winners.iter().ne(result.winners.iter()) {
        return Err(MarketError::ModeMismatch);
    }

    let mut priced = result.clone();
    for (pos, &n) in order.iter().enumerate() {
        if !won[n] {
            continue;
        }
        let critical = match mode {
            PricingMode::Definitional => {
                let (cf, _) = scan(&bids, &order, Some(n), topo);
                order[pos + 1..].iter().copied().find(|&i| cf[i] && !won[i])
            }
            PricingMode::Literal => literal_critical(&bids, &order, &won, pos, topo),
        };
        let payment = critical.map_or(0.0, |i| bids[i].claimed * bids[n].phi / bids[i].phi);
        priced.payments.insert(bids[n].user, payment);
    }
    Ok(priced)
}

// The station-restricted pricing loop: accumulate later same-station bids on
// top of what winners ahead of `n` used until `n` would no longer fit.
fn literal_critical(bids: &[Bid], order: &[usize], won: &[bool], pos: usize, topo: &Topology) -> Option<usize> {
    let n = &bids[order[pos]];
    let mut beta_station: usize = 0;
    let mut beta_cloud = 0.0;
    for &j in &order[..pos] {
        if won[j] && bids[j].station == n.station {
            beta_station += bids[j].q;
        }
        if won[j] && bids[j].cloud == n.cloud {
            beta_cloud += bids[j].vm_hz;
        }
    }
    let m = topo.station_capacity(n.station);
    let b = topo.cloud_capacity(n.cloud);
    for &i in &order[pos + 1..] {
        let bid = &bids[i];
        if bid.station != n.station {
            continue;
        }
        if beta_station + bid.q <= m && beta_cloud + bid.vm_hz <= b {
            beta_station += bid.q;
            beta_cloud += bid.vm_hz;
            if beta_station + n.q > m || beta_cloud + n.vm_hz > b {
                return Some(i);
            }
        }
    }
    None
}

/// Admission, pricing and true welfare in one call.
pub fn auction(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    mode: PricingMode,
) -> Result<AllocationResult, MarketError> {
    let admitted = admit(demands, topo, catalog)?;
    let mut priced = critical_payments(demands, topo, catalog, &admitted, mode)?;
    priced.welfare_true = Some(priced.true_welfare(demands));
    Ok(priced)
}

/// Worst-case guarantee `(A + B) / (2 A B)` with `A` the largest station
/// subchannel count and `B` the largest cloud-capacity-to-VM ratio.
pub fn ratio_bound(topo: &Topology, catalog: &VmCatalog) -> f64 {
    let a_max = topo.stations().iter().map(|s| s.subchannels).max().unwrap_or(1) as f64;
    let min_vm = catalog.capabilities()[0];
    let b_max = topo.clouds().iter().map(|c| c.capacity_hz / min_vm).fold(0.0, f64::max);
    (a_max + b_max) / (2.0 * a_max * b_max)
}

/// True when every station has the same subchannel count and every bid asks
/// for the same number of subchannels; the greedy then is a 1/2-approximation.
pub fn is_uniform_special_case(topo: &Topology, demands: &[DemandProfile]) -> bool {
    let m = topo.stations()[0].subchannels;
    topo.stations().iter().all(|s| s.subchannels == m)
        && demands.windows(2).all(|w| w[0].q == w[1].q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub claimed: f64,
    pub win: bool,
    pub payment: f64,
    pub utility: f64,
}

/// Re-runs the auction with `user`'s claim replaced by every grid value and
/// reports the resulting net utility against its true value.
pub fn truthfulness_probe(
    demands: &[DemandProfile],
    topo: &Topology,
    catalog: &VmCatalog,
    user: UserId,
    grid: &[f64],
    mode: PricingMode,
) -> Result<Vec<ProbeRow>, MarketError> {
    let at = demands.iter().position(|d| d.user == user).ok_or(MarketError::UnknownUser(user))?;
    let true_value = demands[at].true_value;
    let mut probe = demands.to_vec();
    grid.iter()
        .map(|&claimed| {
            probe[at].claimed = claimed;
            let result = auction(&probe, topo, catalog, mode)?;
            let win = result.is_winner(user);
            let payment = result.payment(user);
            let utility = if win { true_value - payment } else { 0.0 };
            Ok(ProbeRow { claimed, win, payment, utility })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn single_cell(m: usize, b: f64, users: usize) -> Topology {
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

    // M = 2, B = 10 GHz, three unit bids worth 10, 6, 4
    fn three_users() -> (Vec<DemandProfile>, Topology, VmCatalog) {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(2, 10e9, 3);
        (vec![bid(0, 1, 0, 10.0), bid(1, 1, 0, 6.0), bid(2, 1, 0, 4.0)], topo, cat)
    }

    // M = 10, B = 100 GHz; a 6-subchannel 60 GHz bid beats two halves on metric
    fn adversarial() -> (Vec<DemandProfile>, Topology, VmCatalog) {
        let cat = VmCatalog::new(vec![50e9, 60e9]).unwrap();
        let topo = single_cell(10, 100e9, 3);
        (vec![bid(0, 6, 1, 6.0), bid(1, 5, 0, 4.8), bid(2, 5, 0, 4.8)], topo, cat)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn metric_values() {
        let cat = VmCatalog::new(vec![50e9]).unwrap();
        let topo = single_cell(10, 100e9, 1);
        assert!(close(ranking_metric(&bid(0, 5, 0, 10.0), &topo, &cat).unwrap(), 10.0));
        assert_eq!(ranking_metric(&bid(0, 5, 0, 0.0), &topo, &cat).unwrap(), 0.0);
        assert!(close(ranking_metric(&bid(0, 5, 0, 4.5), &topo, &cat).unwrap(), 4.5));
    }

    #[test]
    fn three_user_admission() {
        let (d, topo, cat) = three_users();
        let r = admit(&d, &topo, &cat).unwrap();
        assert_eq!(r.winners, vec![0, 1]);
        assert_eq!(r.welfare_bid, 16.0);
        assert_eq!(r.station_used, vec![2]);
        assert_eq!(r.cloud_used, vec![10e9]);
        assert_eq!(r.rank_order, vec![0, 1, 2]);
    }

    #[test]
    fn empty_admission() {
        let (_, topo, cat) = three_users();
        let r = admit(&[], &topo, &cat).unwrap();
        assert!(r.winners.is_empty());
        assert_eq!(r.welfare_bid, 0.0);
    }

    #[test]
    fn adversarial_admission() {
        let (d, topo, cat) = adversarial();
        let r = admit(&d, &topo, &cat).unwrap();
        assert_eq!(r.winners, vec![0]);
        assert_eq!(r.welfare_bid, 6.0);
        assert!(close(ratio_bound(&topo, &cat), 0.3));
    }

    #[test]
    fn duplicate_users_rejected() {
        let (mut d, topo, cat) = three_users();
        d[2].user = 0;
        assert_eq!(admit(&d, &topo, &cat).unwrap_err(), MarketError::DuplicateUser(0));
    }

    #[test]
    fn bids_must_fit_their_cells() {
        let (mut d, topo, cat) = three_users();
        d[0].q = 3;
        assert!(matches!(admit(&d, &topo, &cat), Err(MarketError::InvalidDemand { user: 0, .. })));
        d[0].q = 0;
        assert!(matches!(admit(&d, &topo, &cat), Err(MarketError::InvalidDemand { user: 0, .. })));
    }

    #[test]
    fn ratio_bounds() {
        let cat = VmCatalog::new(vec![5e9, 10e9, 20e9]).unwrap();
        let topo = Topology::new(
            (0..3).map(|id| Station { id, subchannels: 15, bandwidth_hz: 1e6 }).collect(),
            vec![
                Cloud { id: 0, capacity_hz: 50e9 },
                Cloud { id: 1, capacity_hz: 100e9 },
                Cloud { id: 2, capacity_hz: 200e9 },
            ],
            vec![0, 1, 2],
            [],
        )
        .unwrap();
        assert!(close(ratio_bound(&topo, &cat), 55.0 / 1200.0));
        let unit = single_cell(1, 5e9, 0);
        assert!(close(ratio_bound(&unit, &VmCatalog::new(vec![5e9]).unwrap()), 1.0));
    }

    #[test]
    fn three_user_payments() {
        let (d, topo, cat) = three_users();
        for mode in [PricingMode::Definitional, PricingMode::Literal] {
            let r = auction(&d, &topo, &cat, mode).unwrap();
            assert_eq!(r.payment(0), 4.0);
            assert_eq!(r.payment(1), 4.0);
            assert_eq!(r.payment(2), 0.0);
            assert_eq!(r.welfare_true, Some(16.0));
        }
    }

    #[test]
    fn ample_capacity_is_free() {
        let (d, _, cat) = three_users();
        let topo = single_cell(15, 100e9, 3);
        let r = auction(&d, &topo, &cat, PricingMode::Definitional).unwrap();
        assert_eq!(r.winners, vec![0, 1, 2]);
        assert!(r.payments.values().all(|&p| p == 0.0));
    }

    #[test]
    fn foreign_allocation_is_rejected() {
        let (d, topo, cat) = three_users();
        let mut r = admit(&d, &topo, &cat).unwrap();
        r.winners = vec![0, 2];
        assert_eq!(
            critical_payments(&d, &topo, &cat, &r, PricingMode::Definitional).unwrap_err(),
            MarketError::ModeMismatch
        );
        let mut r = admit(&d, &topo, &cat).unwrap();
        r.rank_order.swap(0, 2);
        assert_eq!(
            critical_payments(&d, &topo, &cat, &r, PricingMode::Definitional).unwrap_err(),
            MarketError::ModeMismatch
        );
    }

    #[test]
    fn three_user_probe() {
        let (d, topo, cat) = three_users();
        let rows = truthfulness_probe(&d, &topo, &cat, 0, &[10.0, 3.0, 20.0, 4.0], PricingMode::Definitional).unwrap();
        assert_eq!((rows[0].win, rows[0].payment, rows[0].utility), (true, 4.0, 6.0));
        assert_eq!((rows[1].win, rows[1].utility), (false, 0.0));
        assert_eq!((rows[2].win, rows[2].payment, rows[2].utility), (true, 4.0, 6.0));
        // claiming exactly the critical value: tie-break on the equal metric
        assert!(rows[3].utility <= 6.0);
    }

    #[test]
    fn station_restricted_loop_misses_cloud_competitor() {
        // two stations share one cloud; the only competitor is at the other station
        let cat = VmCatalog::new(vec![10e9]).unwrap();
        let topo = Topology::new(
            vec![
                Station { id: 0, subchannels: 15, bandwidth_hz: 1e6 },
                Station { id: 1, subchannels: 15, bandwidth_hz: 1e6 },
            ],
            vec![Cloud { id: 0, capacity_hz: 10e9 }],
            vec![0, 0],
            [(0, 0), (1, 1)],
        )
        .unwrap();
        let d = vec![bid(0, 1, 0, 9.0), bid(1, 1, 0, 5.0)];
        let def = auction(&d, &topo, &cat, PricingMode::Definitional).unwrap();
        let lit = auction(&d, &topo, &cat, PricingMode::Literal).unwrap();
        assert_eq!(def.winners, vec![0]);
        assert!(close(def.payment(0), 5.0));
        assert_eq!(lit.payment(0), 0.0);
    }

    #[test]
    fn seeded_tie_break_is_reproducible() {
        let cat = VmCatalog::new(vec![5e9]).unwrap();
        let topo = single_cell(2, 10e9, 4);
        let d: Vec<_> = (0..4).map(|u| bid(u, 1, 0, 5.0)).collect();
        let a = admit_with(&d, &topo, &cat, TieBreak::Seeded(7)).unwrap();
        let b = admit_with(&d, &topo, &cat, TieBreak::Seeded(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.winners.len(), 2);
        assert_eq!(admit(&d, &topo, &cat).unwrap().winners, vec![0, 1]);
    }

    #[test]
    fn topology_rejects_inconsistent_wiring() {
        assert!(Topology::new(vec![], vec![Cloud { id: 0, capacity_hz: 1.0 }], vec![], []).is_err());
        assert!(Topology::new(
            vec![Station { id: 0, subchannels: 1, bandwidth_hz: 1.0 }],
            vec![Cloud { id: 0, capacity_hz: 1.0 }],
            vec![3],
            [],
        )
        .is_err());
        let json = serde_json::json!({
            "stations": [{"id": 0, "subchannels": 2, "bandwidth_hz": 1e6}],
            "clouds": [{"id": 0, "capacity_hz": 1e9}, {"id": 1, "capacity_hz": 1e9}],
            "station_cloud": [0],
            "associations": {"0": {"station": 0, "cloud": 1}}
        });
        assert!(serde_json::from_value::<Topology>(json).is_err());
    }

    #[test]
    fn uniform_special_case_detection() {
        let (d, topo, _) = three_users();
        assert!(is_uniform_special_case(&topo, &d));
        let (d, topo, _) = adversarial();
        assert!(!is_uniform_special_case(&topo, &d));
    }
}
