//! Seeded problem instances: users scattered over a square area, stations on
//! a regular grid, clouds on a coarser grid, and per-user devices, task
//! graphs and valuations drawn from configured sets.
//!
//! Units throughout: meters, seconds, Hz (cycles per second), watts, cycles,
//! bits and dollars.

mod instances;
mod templates;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use instances::{market_instance, InstanceConfig, MarketInstance};
pub use templates::{graph_template, TemplateName, TemplateParams};

use crate::market::{Cloud, DemandProfile, Station, Topology, UserId};
use crate::offload::{
    optimal_demand, resource_occupancy, Deadline, Demand, DemandOutcome, DeviceProfile, LinkTemplate, VmCatalog,
};
use crate::taskgraph::TaskGraph;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario needs at least one user")]
    ZeroUsers,
    #[error("scenario needs at least one station")]
    ZeroStations,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown task-graph template {0:?}")]
    UnknownTemplate(String),
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("scenario invariant violated: {0}")]
    InvariantViolation(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_users: usize,
    pub n_stations: usize,
    pub n_clouds: usize,
    /// Side of the square deployment area.
    pub area_m: f64,
    pub subchannels: usize,
    /// Bandwidth of one subchannel.
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub noise_w: f64,
    pub path_loss_exp: f64,
    pub deadlines_s: Vec<f64>,
    pub cpu_hz: Vec<f64>,
    pub vm_hz: Vec<f64>,
    pub cloud_capacity_hz: Vec<f64>,
    pub valuations: Vec<f64>,
    pub templates: Vec<TemplateName>,
    pub template_params: TemplateParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_users: 100,
            n_stations: 16,
            n_clouds: 4,
            area_m: 2000.0,
            subchannels: 15,
            bandwidth_hz: 1e6,
            tx_power_w: 0.1,
            noise_w: 1e-13,
            path_loss_exp: 4.0,
            deadlines_s: vec![0.3, 0.5, 1.0, 2.0, 5.0],
            cpu_hz: vec![0.5e9, 0.8e9, 1.0e9],
            vm_hz: vec![5e9, 10e9, 20e9],
            cloud_capacity_hz: vec![50e9, 100e9, 200e9],
            valuations: (1..=20).map(f64::from).collect(),
            templates: vec![TemplateName::FaceLike, TemplateName::QrLike],
            template_params: TemplateParams::default(),
            seed: 0,
        }
    }
}

fn positive_set(name: &str, values: &[f64]) -> Result<(), ScenarioError> {
    if values.is_empty() {
        return Err(ScenarioError::InvalidConfig(format!("{name} set is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(ScenarioError::InvalidConfig(format!("{name} value {v} must be finite and positive")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn check(&self) -> Result<(), ScenarioError> {
        if self.n_users == 0 {
            return Err(ScenarioError::ZeroUsers);
        }
        if self.n_stations == 0 {
            return Err(ScenarioError::ZeroStations);
        }
        if self.n_clouds == 0 {
            return Err(ScenarioError::InvalidConfig("scenario needs at least one cloud".into()));
        }
        if self.subchannels == 0 {
            return Err(ScenarioError::InvalidConfig("stations need at least one subchannel".into()));
        }
        if self.templates.is_empty() {
            return Err(ScenarioError::InvalidConfig("template set is empty".into()));
        }
        positive_set("area", &[self.area_m])?;
        positive_set("bandwidth", &[self.bandwidth_hz])?;
        positive_set("tx power", &[self.tx_power_w])?;
        positive_set("noise", &[self.noise_w])?;
        positive_set("path-loss exponent", &[self.path_loss_exp])?;
        positive_set("deadline", &self.deadlines_s)?;
        positive_set("device CPU", &self.cpu_hz)?;
        positive_set("cloud capacity", &self.cloud_capacity_hz)?;
        positive_set("valuation", &self.valuations)?;
        VmCatalog::new(self.vm_hz.clone()).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        self.template_params.check().map_err(ScenarioError::InvalidConfig)
    }

    pub fn catalog(&self) -> VmCatalog {
        VmCatalog::new(self.vm_hz.clone()).expect("checked config")
    }

    /// Station sites, row-major on a regular grid over the area.
    pub fn station_sites(&self) -> Vec<[f64; 2]> {
        grid(self.n_stations, self.area_m)
    }

    pub fn cloud_sites(&self) -> Vec<[f64; 2]> {
        grid(self.n_clouds, self.area_m)
    }
}

// Cell centers of a near-square grid with `n` cells filled row by row.
fn grid(n: usize, side: f64) -> Vec<[f64; 2]> {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols);
    (0..n)
        .map(|i| {
            let (col, row) = (i % cols, i / cols);
            [(col as f64 + 0.5) * side / cols as f64, (row as f64 + 0.5) * side / rows as f64]
        })
        .collect()
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Index of the nearest site and its distance; ties go to the smaller index.
pub fn nearest(point: [f64; 2], sites: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, distance(point, sites[0]));
    for (i, &s) in sites.iter().enumerate().skip(1) {
        let d = distance(point, s);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Distances below this are clamped so the gain stays finite.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Power-law channel gain `d^-alpha`.
pub fn channel_gain(distance_m: f64, alpha: f64) -> f64 {
    distance_m.max(MIN_DISTANCE_M).powf(-alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub id: UserId,
    pub position: [f64; 2],
    pub station: usize,
    pub distance_m: f64,
    pub device: DeviceProfile,
    pub template: TemplateName,
    pub graph: TaskGraph,
    /// True valuation in dollars.
    pub value: f64,
    /// Demand profile, when one has been computed or supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Demand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    pub config: ScenarioConfig,
    pub topology: Topology,
    pub users: Vec<UserSpec>,
}

/// Draws a scenario from a single ChaCha8 stream seeded by `config.seed`.
///
/// Draw order: one capacity per cloud, then `(x, y)` for every user, then
/// per user in id order its CPU speed, deadline, valuation, template and the
/// template's own weight draws.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pick = |rng: &mut ChaCha8Rng, set: &[f64]| *set.choose(rng).expect("checked non-empty");

    let clouds: Vec<Cloud> = (0..config.n_clouds)
        .map(|id| Cloud { id, capacity_hz: pick(&mut rng, &config.cloud_capacity_hz) })
        .collect();
    let positions: Vec<[f64; 2]> = (0..config.n_users)
        .map(|_| [rng.gen_range(0.0..config.area_m), rng.gen_range(0.0..config.area_m)])
        .collect();

    let station_sites = config.station_sites();
    let cloud_sites = config.cloud_sites();
    let stations: Vec<Station> = (0..config.n_stations)
        .map(|id| Station { id, subchannels: config.subchannels, bandwidth_hz: config.bandwidth_hz })
        .collect();
    let station_cloud: Vec<usize> = station_sites.iter().map(|&s| nearest(s, &cloud_sites).0).collect();

    let mut users = Vec::with_capacity(config.n_users);
    for (id, &position) in positions.iter().enumerate() {
        let cpu_hz = pick(&mut rng, &config.cpu_hz);
        let deadline = pick(&mut rng, &config.deadlines_s);
        let value = pick(&mut rng, &config.valuations);
        let template = *config.templates.choose(&mut rng).expect("checked non-empty");
        let graph = templates::template_from_rng(template, &config.template_params, &mut rng)?;
        let (station, distance_m) = nearest(position, &station_sites);
        users.push(UserSpec {
            id,
            position,
            station,
            distance_m,
            device: DeviceProfile {
                cpu_hz,
                tx_power_w: config.tx_power_w,
                channel_gain: channel_gain(distance_m, config.path_loss_exp),
                noise_w: config.noise_w,
                deadline: Deadline::Seconds(deadline),
            },
            template,
            graph,
            value,
            demand: None,
        });
    }
    let topology = Topology::new(stations, clouds, station_cloud, users.iter().map(|u| (u.id, u.station)))
        .map_err(|e| ScenarioError::InvariantViolation(e.to_string()))?;
    Ok(Scenario { version: SCENARIO_VERSION, config: config.clone(), topology, users })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl Scenario {
    pub fn catalog(&self) -> VmCatalog {
        self.config.catalog()
    }

    pub fn link_template(&self, user: UserId) -> LinkTemplate {
        let station = self.users[user].station;
        LinkTemplate {
            station_subchannels: self.topology.station_capacity(station),
            bandwidth_hz: self.topology.stations()[station].bandwidth_hz,
            cloud_capacity_hz: self.topology.cloud_capacity(self.topology.station_cloud(station)),
        }
    }

    pub fn optimal_demand(&self, user: UserId) -> DemandOutcome {
        let u = &self.users[user];
        optimal_demand(&u.graph, &u.device, &self.link_template(user), &self.catalog())
    }

    /// Runs the demand search for every user and stores the results.
    pub fn compute_demands(&mut self) -> Vec<DemandOutcome> {
        let outcomes: Vec<DemandOutcome> = (0..self.users.len()).map(|u| self.optimal_demand(u)).collect();
        for (u, o) in self.users.iter_mut().zip(&outcomes) {
            u.demand = o.demand();
        }
        outcomes
    }

    /// Truthful bids of every user that carries a demand.
    pub fn demand_profiles(&self) -> Vec<DemandProfile> {
        self.users
            .iter()
            .filter_map(|u| {
                u.demand.map(|d| DemandProfile { user: u.id, q: d.q, s: d.s, claimed: u.value, true_value: u.value })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if header.version != SCENARIO_VERSION {
            return Err(ScenarioError::Parse(format!(
                "version {} is not supported (expected {SCENARIO_VERSION})",
                header.version
            )));
        }
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        scenario.check()?;
        Ok(scenario)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        fs::write(path, self.to_json() + "\n").map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    /// Re-validates every generation invariant.
    pub fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvariantViolation(m));
        let c = &self.config;
        c.check().map_err(|e| ScenarioError::InvariantViolation(e.to_string()))?;
        let topo = &self.topology;
        if topo.stations().len() != c.n_stations || topo.clouds().len() != c.n_clouds || self.users.len() != c.n_users
        {
            return bad("entity counts differ from config".into());
        }
        for s in topo.stations() {
            if s.subchannels != c.subchannels || s.bandwidth_hz != c.bandwidth_hz {
                return bad(format!("station {} differs from config", s.id));
            }
        }
        for cl in topo.clouds() {
            if !c.cloud_capacity_hz.contains(&cl.capacity_hz) {
                return bad(format!("cloud {} capacity {} is not in the config set", cl.id, cl.capacity_hz));
            }
        }
        let station_sites = c.station_sites();
        let cloud_sites = c.cloud_sites();
        for (k, &site) in station_sites.iter().enumerate() {
            if topo.station_cloud(k) != nearest(site, &cloud_sites).0 {
                return bad(format!("station {k} is not attached to its nearest cloud"));
            }
        }
        let catalog = c.catalog();
        for (i, u) in self.users.iter().enumerate() {
            if u.id != i {
                return bad(format!("user ids must be dense, found {} at {i}", u.id));
            }
            let (station, d) = nearest(u.position, &station_sites);
            if u.station != station || topo.association(u.id).map(|a| a.station) != Ok(station) {
                return bad(format!("user {i} is not associated with its nearest station"));
            }
            if !close(u.distance_m, d) || !close(u.device.channel_gain, channel_gain(d, c.path_loss_exp)) {
                return bad(format!("user {i} distance or channel gain is inconsistent"));
            }
            let dev = &u.device;
            let sampled = c.cpu_hz.contains(&dev.cpu_hz)
                && matches!(dev.deadline, Deadline::Seconds(t) if c.deadlines_s.contains(&t))
                && c.valuations.contains(&u.value)
                && c.templates.contains(&u.template)
                && dev.tx_power_w == c.tx_power_w
                && dev.noise_w == c.noise_w;
            if !sampled {
                return bad(format!("user {i} carries a value outside the config sets"));
            }
            if let Some(d) = u.demand {
                let t = self.link_template(i);
                if d.q == 0 {
                    return bad(format!("user {i} demands zero subchannels"));
                }
                match resource_occupancy(d.q, d.s, t.station_subchannels, t.cloud_capacity_hz, &catalog) {
                    Ok(phi) if close(phi, d.phi) => {}
                    Ok(phi) => return bad(format!("user {i} demand occupancy {} should be {phi}", d.phi)),
                    Err(e) => return bad(format!("user {i} demand: {e}")),
                }
            }
        }
        Ok(())
    }
}
