//! Bare admission instances (topology, catalog and bids) without task graphs
//! or geometry, for sweeping the mechanism and its oracles directly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::market::{Cloud, DemandProfile, Station, Topology};
use crate::offload::VmCatalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub n_users: usize,
    pub n_stations: usize,
    pub n_clouds: usize,
    /// Subchannel counts a station may draw from.
    pub subchannels: Vec<usize>,
    /// Largest subchannel request a user may draw.
    pub max_q: usize,
    pub vm_hz: Vec<f64>,
    pub cloud_capacity_hz: Vec<f64>,
    /// Claims are uniform on this interval.
    pub value_range: (f64, f64),
    /// Every station gets the first subchannel count and every bid asks for
    /// `max_q` subchannels.
    pub uniform: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            n_users: 16,
            n_stations: 3,
            n_clouds: 1,
            subchannels: vec![15],
            max_q: 5,
            vm_hz: vec![5e9, 10e9, 20e9],
            cloud_capacity_hz: vec![50e9, 100e9, 200e9],
            value_range: (1.0, 20.0),
            uniform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub seed: u64,
    pub topology: Topology,
    pub catalog: VmCatalog,
    pub demands: Vec<DemandProfile>,
}

/// Draw order: station subchannel counts, cloud capacities, then per user its
/// station, `q`, VM type and claim. Station `k` attaches to cloud
/// `k mod n_clouds`.
pub fn market_instance(config: &InstanceConfig, seed: u64) -> MarketInstance {
    assert!(config.n_stations >= config.n_clouds && config.n_clouds > 0, "every cloud needs a station");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = VmCatalog::new(config.vm_hz.clone()).expect("valid VM set");
    let stations: Vec<Station> = (0..config.n_stations)
        .map(|id| Station {
            id,
            subchannels: if config.uniform {
                config.subchannels[0]
            } else {
                *config.subchannels.choose(&mut rng).expect("non-empty")
            },
            bandwidth_hz: 1e6,
        })
        .collect();
    let clouds: Vec<Cloud> = (0..config.n_clouds)
        .map(|id| Cloud { id, capacity_hz: *config.cloud_capacity_hz.choose(&mut rng).expect("non-empty") })
        .collect();
    let station_cloud: Vec<usize> = (0..config.n_stations).map(|k| k % config.n_clouds).collect();
    let mut assoc = Vec::with_capacity(config.n_users);
    let mut demands = Vec::with_capacity(config.n_users);
    for user in 0..config.n_users {
        let station = rng.gen_range(0..config.n_stations);
        let m = stations[station].subchannels;
        let cap = clouds[station_cloud[station]].capacity_hz;
        let q = if config.uniform { config.max_q.min(m) } else { rng.gen_range(1..=config.max_q.min(m)) };
        let fitting = catalog.capabilities().iter().take_while(|&&f| f <= cap).count().max(1);
        let s = rng.gen_range(0..fitting);
        let (lo, hi) = config.value_range;
        let claimed = if lo == hi { lo } else { rng.gen_range(lo..hi) };
        assoc.push((user, station));
        demands.push(DemandProfile { user, q, s, claimed, true_value: claimed });
    }
    let topology = Topology::new(stations, clouds, station_cloud, assoc).expect("generated topology is consistent");
    MarketInstance { seed, topology, catalog, demands }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::is_uniform_special_case;

    #[test]
    fn uniform_flag_gives_special_case() {
        let c = InstanceConfig { uniform: true, subchannels: vec![12, 15], max_q: 3, ..InstanceConfig::default() };
        for seed in 0..20 {
            let inst = market_instance(&c, seed);
            assert!(is_uniform_special_case(&inst.topology, &inst.demands));
        }
    }

    #[test]
    fn replay() {
        let c = InstanceConfig::default();
        assert_eq!(market_instance(&c, 3), market_instance(&c, 3));
    }
}
