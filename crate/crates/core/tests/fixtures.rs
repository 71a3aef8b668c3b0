mod common;

use windrisk_core::feeder::{load_feeder, SwitchKind};
use windrisk_core::FeederNetwork;

fn feeder(name: &str) -> FeederNetwork {
    load_feeder(common::scenario_path("../feeders").join(name)).unwrap()
}

#[test]
fn ieee123_like_has_two_ties_and_three_dgs() {
    let net = feeder("ieee123_like.toml");
    let ties: Vec<&str> = net
        .switches()
        .iter()
        .filter(|s| s.normally_open)
        .map(|s| s.id.as_str())
        .collect();
    assert_eq!(ties, vec!["sw54-94", "sw151-300"]);
    let dg_buses: Vec<&str> = net.dgs().iter().map(|d| d.bus.as_str()).collect();
    assert_eq!(dg_buses, vec!["250", "450", "95"]);
    assert!(net.dgs().iter().all(|d| d.grid_forming));
    assert_eq!(net.substation().id, "150");
    assert!((net.total_load_kw() - 3490.0).abs() < 1e-9);
}

#[test]
fn ieee37_like_has_six_remote_ties() {
    let net = feeder("ieee37_like.toml");
    let ties: Vec<_> = net.switches().iter().filter(|s| s.normally_open).collect();
    assert_eq!(ties.len(), 6);
    assert!(ties.iter().all(|s| s.kind == SwitchKind::Remote));
    assert_eq!(net.dgs().len(), 3);
    assert_eq!(net.substation().id, "799");
}

#[test]
fn fixtures_round_trip() {
    for name in ["ieee123_like.toml", "ieee37_like.toml"] {
        let net = feeder(name);
        let again = FeederNetwork::from_toml_str(&net.to_toml_string(), name).unwrap();
        assert_eq!(net.document(), again.document());
    }
}

#[test]
fn bundled_scenarios_build() {
    let dir = common::scenario_path("");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = windrisk_core::ScenarioConfig::load(&path).unwrap();
            cfg.build_network().unwrap();
            count += 1;
        }
    }
    assert!(count >= 9);
}

#[test]
fn robust_scenarios_harden_trunk_lines() {
    let base = common::scenario("ieee123_base.toml").build_network().unwrap();
    let robust = common::scenario("ieee123_robust.toml").build_network().unwrap();
    assert!(base.same_topology(&robust));
    let hardened = robust.lines().iter().filter(|l| l.hardened).count();
    assert_eq!(hardened, 16);
    let i = robust.line_index("149-1").unwrap();
    assert_eq!(robust.effective_curve(i).omega_critical, 35.0);
    assert_eq!(base.effective_curve(i).omega_critical, 20.0);
}
