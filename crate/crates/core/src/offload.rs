//! Per-user offloading: execution/transfer delay models, delay-aware
//! partition of a task graph between device and edge cloud, and the search
//! for the cheapest (subchannels, VM type) profile that still meets the
//! user's deadline.

use std::cmp::Ordering;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taskgraph::{topo_sort, ComponentId, TaskGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OffloadError {
    #[error("data must cross the link but the uplink rate is zero")]
    ZeroRate,
    #[error("profile exceeds capacity: {0}")]
    CapacityExceeded(String),
    #[error("unknown VM type {0}")]
    UnknownVmType(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("placement must cover every component and keep the output on the device")]
    InvalidPlacement,
}

/// Where a component runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Device,
    Cloud,
}

impl Location {
    pub const BOTH: [Location; 2] = [Location::Device, Location::Cloud];
}

/// Completion deadline, serialized as seconds or `null` for unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Deadline {
    Seconds(f64),
    Unbounded,
}

impl Deadline {
    pub fn admits(self, delay: f64) -> bool {
        match self {
            Deadline::Seconds(t) => delay <= t,
            Deadline::Unbounded => true,
        }
    }
}

impl From<Option<f64>> for Deadline {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Deadline::Unbounded, Deadline::Seconds)
    }
}

impl From<Deadline> for Option<f64> {
    fn from(d: Deadline) -> Self {
        match d {
            Deadline::Seconds(t) => Some(t),
            Deadline::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    /// Local CPU speed, cycles per second.
    pub cpu_hz: f64,
    pub tx_power_w: f64,
    /// Gain towards the serving station, dimensionless.
    pub channel_gain: f64,
    pub noise_w: f64,
    #[serde(rename = "deadline_s")]
    pub deadline: Deadline,
}

impl DeviceProfile {
    pub fn check(&self) -> Result<(), OffloadError> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(OffloadError::InvalidProfile(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.cpu_hz, "cpu_hz")?;
        positive(self.tx_power_w, "tx_power_w")?;
        positive(self.channel_gain, "channel_gain")?;
        positive(self.noise_w, "noise_w")?;
        if let Deadline::Seconds(t) = self.deadline {
            positive(t, "deadline_s")?;
        }
        Ok(())
    }

    pub fn snr(&self) -> f64 {
        self.tx_power_w * self.channel_gain / self.noise_w
    }
}

/// VM types offered by every edge cloud, indexed from 0 in increasing speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct VmCatalog(Vec<f64>);

impl VmCatalog {
    pub fn new(capabilities_hz: Vec<f64>) -> Result<Self, OffloadError> {
        if capabilities_hz.is_empty() {
            return Err(OffloadError::InvalidProfile("VM catalog is empty".into()));
        }
        if capabilities_hz.iter().any(|&f| !(f.is_finite() && f > 0.0)) {
            return Err(OffloadError::InvalidProfile("VM capabilities must be positive".into()));
        }
        if capabilities_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OffloadError::InvalidProfile(
                "VM capabilities must be strictly increasing".into(),
            ));
        }
        Ok(VmCatalog(capabilities_hz))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn capability(&self, s: usize) -> Result<f64, OffloadError> {
        self.0.get(s).copied().ok_or(OffloadError::UnknownVmType(s))
    }

    pub fn capabilities(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for VmCatalog {
    type Error = OffloadError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        VmCatalog::new(v)
    }
}

impl From<VmCatalog> for Vec<f64> {
    fn from(c: VmCatalog) -> Self {
        c.0
    }
}

/// A concrete link: the subchannel demand `q` plus the capacities of the
/// user's station and cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub subchannels: usize,
    pub bandwidth_hz: f64,
    pub station_subchannels: usize,
    pub cloud_capacity_hz: f64,
}

impl LinkConfig {
    pub fn with_subchannels(template: &LinkTemplate, q: usize) -> Self {
        LinkConfig {
            subchannels: q,
            bandwidth_hz: template.bandwidth_hz,
            station_subchannels: template.station_subchannels,
            cloud_capacity_hz: template.cloud_capacity_hz,
        }
    }
}

/// Capacities seen by a user before it picks a subchannel count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTemplate {
    pub station_subchannels: usize,
    pub bandwidth_hz: f64,
    pub cloud_capacity_hz: f64,
}

/// Delay of a (partial) schedule. `Unreachable` loses every comparison
/// against a finite delay and absorbs addition.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Delay {
    Finite(f64),
    Unreachable,
}

impl Delay {
    pub const ZERO: Delay = Delay::Finite(0.0);

    pub fn min(self, other: Delay) -> Delay {
        if other < self { other } else { self }
    }

    pub fn max(self, other: Delay) -> Delay {
        if other > self { other } else { self }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Delay::Finite(v) => Some(v),
            Delay::Unreachable => None,
        }
    }
}

impl Add for Delay {
    type Output = Delay;
    fn add(self, rhs: Delay) -> Delay {
        match (self, rhs) {
            (Delay::Finite(a), Delay::Finite(b)) => Delay::Finite(a + b),
            _ => Delay::Unreachable,
        }
    }
}

pub fn local_exec_time(cycles: f64, cpu_hz: f64) -> f64 {
    cycles / cpu_hz
}

pub fn cloud_exec_time(cycles: f64, vm_hz: f64) -> f64 {
    cycles / vm_hz
}

/// Shannon-rate uplink over `q` orthogonal subchannels, bits per second.
pub fn uplink_rate(link: &LinkConfig, dev: &DeviceProfile) -> f64 {
    link.subchannels as f64 * link.bandwidth_hz * (1.0 + dev.snr()).log2()
}

pub fn transfer_time(bits: f64, rate: f64) -> Result<f64, OffloadError> {
    if bits == 0.0 {
        Ok(0.0)
    } else if rate > 0.0 {
        Ok(bits / rate)
    } else {
        Err(OffloadError::ZeroRate)
    }
}

/// Placement of every component with the residual delay `Z(i)`: time from
/// starting component `i` until the output completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub placement: Vec<Location>,
    pub residual_delay: Vec<f64>,
    pub total_delay: f64,
}

impl PartitionPlan {
    /// Constraint (5) style check: every residual delay within the deadline.
    pub fn meets(&self, deadline: Deadline) -> bool {
        self.residual_delay.iter().all(|&z| deadline.admits(z))
    }

    pub fn offloaded(&self) -> usize {
        self.placement.iter().filter(|&&y| y == Location::Cloud).count()
    }
}

/// How [`partition_with`] resolves the backward recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// Backward induction over both locations of every successor; exact on
    /// chains. The returned plan is never worse than the literal recursion,
    /// all-device or all-cloud.
    #[default]
    Joint,
    /// The recursion with each successor's location frozen at its own optimum
    /// before the predecessor is considered.
    Literal,
}

// Per-instance execution/transfer times; `cloud` is Unreachable when the
// link carries nothing.
struct Costs<'a> {
    graph: &'a TaskGraph,
    device: Vec<Delay>,
    cloud: Vec<Delay>,
    rate: f64,
}

impl<'a> Costs<'a> {
    fn new(graph: &'a TaskGraph, dev: &DeviceProfile, link: &LinkConfig, vm_hz: f64) -> Self {
        let rate = uplink_rate(link, dev);
        let offload_possible = link.subchannels > 0 && rate > 0.0;
        let n = graph.len();
        let device = (0..n).map(|i| Delay::Finite(local_exec_time(graph.cycles(i), dev.cpu_hz))).collect();
        let cloud = (0..n)
            .map(|i| {
                if offload_possible {
                    Delay::Finite(cloud_exec_time(graph.cycles(i), vm_hz))
                } else {
                    Delay::Unreachable
                }
            })
            .collect();
        Costs { graph, device, cloud, rate }
    }

    fn exec(&self, i: ComponentId, y: Location) -> Delay {
        match y {
            Location::Device => self.device[i],
            Location::Cloud => self.cloud[i],
        }
    }

    fn transfer(&self, bits: f64, from: Location, to: Location) -> Delay {
        if from == to {
            return Delay::ZERO;
        }
        match transfer_time(bits, self.rate) {
            Ok(t) => Delay::Finite(t),
            Err(_) => Delay::Unreachable,
        }
    }

    // Fixed-assignment evaluation of the residual-delay recursion.
    fn evaluate(&self, placement: &[Location]) -> Vec<Delay> {
        let g = self.graph;
        let mut z = vec![Delay::ZERO; g.len()];
        for &i in topo_sort(g).iter().rev() {
            let tail = g
                .out_edges(i)
                .iter()
                .map(|&(j, bits)| self.transfer(bits, placement[i], placement[j]) + z[j])
                .fold(Delay::ZERO, Delay::max);
            z[i] = self.exec(i, placement[i]) + tail;
        }
        z
    }
}

fn argmin_device_first(score: impl Fn(Location) -> Delay) -> (Location, Delay) {
    let d = score(Location::Device);
    let c = score(Location::Cloud);
    if c < d {
        (Location::Cloud, c)
    } else {
        (Location::Device, d)
    }
}

fn literal_placement(costs: &Costs<'_>) -> Vec<Location> {
    let g = costs.graph;
    let mut y = vec![Location::Device; g.len()];
    let mut z = vec![Delay::ZERO; g.len()];
    for &i in topo_sort(g).iter().rev() {
        if i == g.output() {
            z[i] = costs.device[i];
            continue;
        }
        let (loc, best) = argmin_device_first(|loc| {
            g.out_edges(i)
                .iter()
                .map(|&(j, bits)| costs.exec(i, loc) + costs.transfer(bits, loc, y[j]) + z[j])
                .fold(Delay::ZERO, Delay::max)
        });
        y[i] = loc;
        z[i] = best;
    }
    y
}

fn joint_placement(costs: &Costs<'_>) -> Vec<Location> {
    let g = costs.graph;
    let order = topo_sort(g);
    // best[i][y]: least residual delay from i given i runs at y, letting every
    // successor pick its own location
    let mut best = vec![[Delay::Unreachable; 2]; g.len()];
    for &i in order.iter().rev() {
        if i == g.output() {
            best[i] = [costs.device[i], Delay::Unreachable];
            continue;
        }
        for loc in Location::BOTH {
            let tail = g
                .out_edges(i)
                .iter()
                .map(|&(j, bits)| {
                    Location::BOTH
                        .iter()
                        .map(|&yj| costs.transfer(bits, loc, yj) + best[j][yj as usize])
                        .fold(Delay::Unreachable, Delay::min)
                })
                .fold(Delay::ZERO, Delay::max);
            best[i][loc as usize] = costs.exec(i, loc) + tail;
        }
    }

    // forward extraction: each component takes the location that is best for
    // its already placed predecessors
    let mut y = vec![Location::Device; g.len()];
    for &i in order.iter() {
        if i == g.output() {
            continue;
        }
        let preds = g.in_edges(i);
        let (loc, _) = argmin_device_first(|loc| {
            if preds.is_empty() {
                best[i][loc as usize]
            } else {
                preds
                    .iter()
                    .map(|&(p, bits)| costs.transfer(bits, y[p], loc) + best[i][loc as usize])
                    .fold(Delay::ZERO, Delay::max)
            }
        });
        y[i] = loc;
    }
    y
}

fn plan_from(graph: &TaskGraph, placement: Vec<Location>, z: &[Delay]) -> Option<PartitionPlan> {
    let residual: Option<Vec<f64>> = z.iter().map(|d| d.finite()).collect();
    let residual_delay = residual?;
    let total_delay = graph.sources().map(|i| residual_delay[i]).fold(0.0, f64::max);
    Some(PartitionPlan { placement, residual_delay, total_delay })
}

/// All components on the device.
pub fn all_device(graph: &TaskGraph) -> Vec<Location> {
    vec![Location::Device; graph.len()]
}

/// Every component except the output on the cloud.
pub fn all_cloud(graph: &TaskGraph) -> Vec<Location> {
    let mut y = vec![Location::Cloud; graph.len()];
    y[graph.output()] = Location::Device;
    y
}

/// Delay-aware partition with the default [`PartitionMode::Joint`].
pub fn partition(graph: &TaskGraph, dev: &DeviceProfile, link: &LinkConfig, vm_hz: f64) -> PartitionPlan {
    partition_with(PartitionMode::Joint, graph, dev, link, vm_hz)
}

pub fn partition_with(
    mode: PartitionMode,
    graph: &TaskGraph,
    dev: &DeviceProfile,
    link: &LinkConfig,
    vm_hz: f64,
) -> PartitionPlan {
    let costs = Costs::new(graph, dev, link, vm_hz);
    let mut candidates = vec![];
    match mode {
        PartitionMode::Literal => candidates.push(literal_placement(&costs)),
        PartitionMode::Joint => {
            candidates.push(joint_placement(&costs));
            candidates.push(literal_placement(&costs));
            candidates.push(all_device(graph));
            candidates.push(all_cloud(graph));
        }
    }
    candidates
        .into_iter()
        .filter_map(|y| {
            let z = costs.evaluate(&y);
            plan_from(graph, y, &z)
        })
        .reduce(|best, plan| if plan.total_delay < best.total_delay { plan } else { best })
        .expect("the all-device placement is always finite")
}

/// Residual delays for a fixed placement. Fails with `ZeroRate` when a
/// placement uses the cloud over a link with no rate.
pub fn evaluate_placement(
    graph: &TaskGraph,
    placement: &[Location],
    dev: &DeviceProfile,
    link: &LinkConfig,
    vm_hz: f64,
) -> Result<PartitionPlan, OffloadError> {
    if placement.len() != graph.len() || placement[graph.output()] != Location::Device {
        return Err(OffloadError::InvalidPlacement);
    }
    let costs = Costs::new(graph, dev, link, vm_hz);
    let z = costs.evaluate(placement);
    plan_from(graph, placement.to_vec(), &z).ok_or(OffloadError::ZeroRate)
}

/// Total delay for a fixed placement.
pub fn plan_delay(
    graph: &TaskGraph,
    placement: &[Location],
    dev: &DeviceProfile,
    link: &LinkConfig,
    vm_hz: f64,
) -> Result<f64, OffloadError> {
    evaluate_placement(graph, placement, dev, link, vm_hz).map(|p| p.total_delay)
}

/// Normalized occupancy `q/M + F_s/B`.
pub fn resource_occupancy(
    q: usize,
    s: usize,
    station_subchannels: usize,
    cloud_capacity_hz: f64,
    catalog: &VmCatalog,
) -> Result<f64, OffloadError> {
    let vm = catalog.capability(s)?;
    if q > station_subchannels {
        return Err(OffloadError::CapacityExceeded(format!(
            "{q} subchannels requested, station has {station_subchannels}"
        )));
    }
    if vm > cloud_capacity_hz {
        return Err(OffloadError::CapacityExceeded(format!(
            "VM type {s} needs {vm} Hz, cloud has {cloud_capacity_hz}"
        )));
    }
    Ok(q as f64 / station_subchannels as f64 + vm / cloud_capacity_hz)
}

/// A demand profile: `q` subchannels and VM type `s` with occupancy `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub q: usize,
    pub s: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DemandOutcome {
    Offload(Demand),
    /// Running everything locally already meets the deadline.
    NoOffloadNeeded,
    /// No profile meets the deadline.
    Infeasible,
}

impl DemandOutcome {
    pub fn demand(&self) -> Option<Demand> {
        match self {
            DemandOutcome::Offload(d) => Some(*d),
            _ => None,
        }
    }
}

/// Every admissible `(q, s)` for the template, sorted by occupancy, then
/// smaller `q`, then smaller `s`.
pub fn ranked_profiles(template: &LinkTemplate, catalog: &VmCatalog) -> Vec<Demand> {
    let mut profiles = Vec::new();
    for q in 1..=template.station_subchannels {
        for s in 0..catalog.len() {
            if let Ok(phi) =
                resource_occupancy(q, s, template.station_subchannels, template.cloud_capacity_hz, catalog)
            {
                profiles.push(Demand { q, s, phi });
            }
        }
    }
    profiles.sort_by(|a, b| {
        a.phi.partial_cmp(&b.phi).unwrap_or(Ordering::Equal).then(a.q.cmp(&b.q)).then(a.s.cmp(&b.s))
    });
    profiles
}

/// Sequential search over profiles in occupancy order with an arbitrary
/// placement rule; stops at the first profile whose plan meets the deadline
/// at every component.
pub fn search_demand<P>(
    graph: &TaskGraph,
    dev: &DeviceProfile,
    template: &LinkTemplate,
    catalog: &VmCatalog,
    planner: P,
) -> DemandOutcome
where
    P: Fn(&LinkConfig, f64) -> PartitionPlan,
{
    let local_link = LinkConfig::with_subchannels(template, 0);
    let local = evaluate_placement(graph, &all_device(graph), dev, &local_link, 1.0)
        .expect("all-device placement never crosses the link");
    if local.meets(dev.deadline) {
        return DemandOutcome::NoOffloadNeeded;
    }
    for profile in ranked_profiles(template, catalog) {
        let link = LinkConfig::with_subchannels(template, profile.q);
        let vm = catalog.capabilities()[profile.s];
        if planner(&link, vm).meets(dev.deadline) {
            return DemandOutcome::Offload(profile);
        }
    }
    DemandOutcome::Infeasible
}

/// Minimum-occupancy profile under delay-aware partition.
pub fn optimal_demand(
    graph: &TaskGraph,
    dev: &DeviceProfile,
    template: &LinkTemplate,
    catalog: &VmCatalog,
) -> DemandOutcome {
    search_demand(graph, dev, template, catalog, |link, vm| partition(graph, dev, link, vm))
}
