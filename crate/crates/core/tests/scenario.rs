use std::path::PathBuf;

use jcc_core::scenario::{generate, Scenario, ScenarioConfig};
use jcc_core::Deadline;

#[test]
fn sampled_values_come_from_config_sets() {
    let c = ScenarioConfig { n_users: 1000, seed: 11, ..ScenarioConfig::default() };
    let s = generate(&c).unwrap();
    assert_eq!(s.users.len(), 1000);
    for u in &s.users {
        assert!(c.cpu_hz.contains(&u.device.cpu_hz));
        assert!(matches!(u.device.deadline, Deadline::Seconds(t) if c.deadlines_s.contains(&t)));
        assert!(c.valuations.contains(&u.value));
        assert!(c.templates.contains(&u.template));
        assert!((0.0..c.area_m).contains(&u.position[0]) && (0.0..c.area_m).contains(&u.position[1]));
    }
    for cl in s.topology.clouds() {
        assert!(c.cloud_capacity_hz.contains(&cl.capacity_hz));
    }
    s.check().unwrap();
}

#[test]
fn file_round_trip() {
    let mut s = generate(&ScenarioConfig { n_users: 50, seed: 3, ..ScenarioConfig::default() }).unwrap();
    s.compute_demands();
    let path: PathBuf = std::env::temp_dir().join(format!("jcc-scenario-{}.json", std::process::id()));
    s.save(&path).unwrap();
    let back = Scenario::load(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(back, s);
}
