//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use rand::Rng;
use windrisk_core::damage::{energized_after_damage, DamageScenario};
use windrisk_core::feeder::{Bus, DistributedGenerator, FeederDocument, Line, Switch, SwitchKind};
use windrisk_core::fragility::FragilityCurve;
use windrisk_core::mcengine::{EmpiricalLossDistribution, LossPoint};
use windrisk_core::rescurve::ResilienceCurve;
use windrisk_core::{ConfigLabel, FeederNetwork, ScenarioConfig};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/scenarios")
        .join(name)
}

pub fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(scenario_path(name)).expect("bundled scenario loads")
}

pub fn distribution(points: &[(f64, f64)]) -> EmpiricalLossDistribution {
    EmpiricalLossDistribution {
        points: points
            .iter()
            .map(|&(loss_mwh, weight)| LossPoint {
                wind_speed: 0.0,
                loss_mwh,
                weight,
            })
            .collect(),
        normalized: true,
    }
}

/// Sort-and-scan VaR.
pub fn var_oracle(points: &[(f64, f64)], alpha: f64) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cum = 0.0;
    for (i, &(loss, w)) in sorted.iter().enumerate() {
        cum += w;
        let last_of_value = i + 1 == sorted.len() || sorted[i + 1].0 != loss;
        if last_of_value && cum >= alpha {
            return loss;
        }
    }
    sorted.last().unwrap().0
}

/// Expected loss over the worst `1 - alpha` of probability mass, splitting
/// the atom that straddles the boundary.
pub fn tail_expectation_oracle(points: &[(f64, f64)], alpha: f64) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut remaining = 1.0 - alpha;
    let mut acc = 0.0;
    for &(loss, w) in &sorted {
        if remaining <= 0.0 {
            break;
        }
        let take = w.min(remaining);
        acc += take * loss;
        remaining -= take;
    }
    acc / (1.0 - alpha)
}

/// Composite Simpson integral of the piecewise-linear curve, MWh.
pub fn integrate_curve(curve: &ResilienceCurve, panels: usize) -> f64 {
    let t = curve.times;
    let l = curve.loss_peak;
    let end = curve.loss_end;
    let f = |x: f64| -> f64 {
        if x <= t.t_pe {
            if t.t_pe > t.t_e {
                l * (x - t.t_e) / (t.t_pe - t.t_e)
            } else {
                l
            }
        } else if x <= t.t_r {
            l
        } else if t.t_ir > t.t_r {
            l + (end - l) * (x - t.t_r) / (t.t_ir - t.t_r)
        } else {
            end
        }
    };
    let simpson = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    (simpson(t.t_e, t.t_pe) + simpson(t.t_pe, t.t_r) + simpson(t.t_r, t.t_ir)) / 1000.0
}

/// Random radial tree feeder with up to `max_switches` switches: some tree
/// edges become closed switches, the rest are normally open ties.
pub fn random_feeder<R: Rng>(rng: &mut R, n_buses: usize, max_switches: usize, label: ConfigLabel) -> FeederNetwork {
    let mut curves = BTreeMap::new();
    curves.insert("c".to_string(), FragilityCurve::linear(0.3, 20.0, 60.0).unwrap());
    let mut buses = vec![Bus {
        id: "b0".into(),
        load_kw: 0.0,
        is_critical: false,
        is_substation: true,
    }];
    for i in 1..n_buses {
        buses.push(Bus {
            id: format!("b{i}"),
            load_kw: rng.random_range(0..20) as f64 * 10.0,
            is_critical: rng.random_bool(0.2),
            is_substation: false,
        });
    }
    buses[1].load_kw += 10.0;
    let mut lines = Vec::new();
    let mut switches = Vec::new();
    let n_tree_switches = rng.random_range(0..=max_switches / 2);
    for i in 1..n_buses {
        let parent = rng.random_range(0..i);
        if switches.len() < n_tree_switches && rng.random_bool(0.4) {
            switches.push(Switch {
                id: format!("s{i}"),
                from_bus: format!("b{parent}"),
                to_bus: format!("b{i}"),
                kind: if rng.random_bool(0.5) {
                    SwitchKind::Remote
                } else {
                    SwitchKind::Manual
                },
                normally_open: false,
            });
        } else {
            lines.push(Line {
                id: format!("l{i}"),
                from_bus: format!("b{parent}"),
                to_bus: format!("b{i}"),
                fragility: "c".into(),
                hardened: false,
            });
        }
    }
    let mut k = 0;
    while switches.len() < max_switches && k < 4 * max_switches {
        k += 1;
        let a = rng.random_range(0..n_buses);
        let b = rng.random_range(0..n_buses);
        if a == b || rng.random_bool(0.3) {
            continue;
        }
        switches.push(Switch {
            id: format!("t{k}"),
            from_bus: format!("b{a}"),
            to_bus: format!("b{b}"),
            kind: SwitchKind::Remote,
            normally_open: true,
        });
    }
    let n_dg = rng.random_range(0..=3);
    let dgs = (0..n_dg)
        .map(|d| DistributedGenerator {
            id: format!("g{d}"),
            bus: format!("b{}", rng.random_range(1..n_buses)),
            capacity_kw: rng.random_range(1..40) as f64 * 10.0,
            grid_forming: rng.random_bool(0.8),
        })
        .collect();
    FeederNetwork::from_document(FeederDocument {
        label,
        hardening_shift: 15.0,
        curves,
        buses,
        lines,
        switches,
        dgs,
    })
    .expect("generated feeder is valid")
}

/// Best (weighted, raw) restored load over every state of every switch,
/// subject to keeping the post-damage substation region energized.
pub fn brute_force_restoration(net: &FeederNetwork, scenario: &DamageScenario, critical_weight: f64) -> (f64, f64) {
    let n_bus = net.buses().len();
    let n_sw = net.switches().len();
    assert!(n_sw <= 16);
    let before = energized_after_damage(net, scenario);
    let mut adj: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); n_bus];
    for (i, failed) in scenario.line_failed.iter().enumerate() {
        if !failed {
            let (a, b) = net.line_ends(i);
            adj[a].push((b, None));
            adj[b].push((a, None));
        }
    }
    for s in 0..n_sw {
        let (a, b) = net.switch_ends(s);
        adj[a].push((b, Some(s)));
        adj[b].push((a, Some(s)));
    }
    let weight = |bus: usize| {
        let b = &net.buses()[bus];
        if b.is_critical {
            b.load_kw * critical_weight
        } else {
            b.load_kw
        }
    };
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1u32 << n_sw) {
        let closed = |s: usize| mask >> s & 1 == 1;
        let mut comp = vec![usize::MAX; n_bus];
        let mut n_comp = 0;
        for start in 0..n_bus {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            comp[start] = n_comp;
            while let Some(u) = queue.pop_front() {
                for &(v, sw) in &adj[u] {
                    if sw.is_none_or(closed) && comp[v] == usize::MAX {
                        comp[v] = n_comp;
                        queue.push_back(v);
                    }
                }
            }
            n_comp += 1;
        }
        let grid = comp[net.substation_index()];
        if (0..n_bus).any(|b| before[b] && comp[b] != grid) {
            continue;
        }
        let mut load = vec![0.0; n_comp];
        let mut dg_caps: Vec<Vec<f64>> = vec![Vec::new(); n_comp];
        for b in 0..n_bus {
            load[comp[b]] += net.buses()[b].load_kw;
        }
        for (d, dg) in net.dgs().iter().enumerate() {
            if dg.grid_forming {
                dg_caps[comp[net.dg_bus(d)]].push(dg.capacity_kw);
            }
        }
        let served = |c: usize| c == grid || (dg_caps[c].len() == 1 && load[c] <= dg_caps[c][0] + 1e-9);
        let (mut w, mut r) = (0.0, 0.0);
        for b in 0..n_bus {
            if !before[b] && served(comp[b]) {
                w += weight(b);
                r += net.buses()[b].load_kw;
            }
        }
        let better = w > best.0 + 1e-9 || ((w - best.0).abs() <= 1e-9 && r > best.1 + 1e-9);
        if better {
            best = (w, r);
        }
    }
    best
}
