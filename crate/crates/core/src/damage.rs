//! Per-trial line damage sampling and the resulting initial load loss.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::feeder::FeederNetwork;
use crate::streams::TrialStreams;

/// Operational state of every line for one trial. Only lines fail;
/// switches, DGs and buses are immune.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageScenario {
    pub wind_speed: f64,
    pub trial_index: u64,
    /// Indexed by line ordinal.
    pub line_failed: Vec<bool>,
}

impl DamageScenario {
    pub fn intact(net: &FeederNetwork, wind_speed: f64) -> Self {
        DamageScenario {
            wind_speed,
            trial_index: 0,
            line_failed: vec![false; net.lines().len()],
        }
    }

    pub fn failure_count(&self) -> usize {
        self.line_failed.iter().filter(|f| **f).count()
    }

    pub fn failed_line_ids<'a>(&self, net: &'a FeederNetwork) -> Vec<&'a str> {
        net.lines()
            .iter()
            .zip(&self.line_failed)
            .filter(|(_, failed)| **failed)
            .map(|(l, _)| l.id.as_str())
            .collect()
    }

    pub fn as_map(&self, net: &FeederNetwork) -> BTreeMap<String, bool> {
        net.lines()
            .iter()
            .zip(&self.line_failed)
            .map(|(l, f)| (l.id.clone(), *f))
            .collect()
    }

    pub fn lines_up(&self) -> Vec<bool> {
        self.line_failed.iter().map(|f| !f).collect()
    }
}

/// Draws one uniform per line, in line order, and fails line `c` iff
/// `r_c < P_c(omega)`. Equality counts as survival.
pub fn sample_damage_scenario<R: Rng + ?Sized>(net: &FeederNetwork, omega: f64, rng: &mut R) -> DamageScenario {
    let line_failed = (0..net.lines().len())
        .map(|i| {
            let r: f64 = rng.random();
            r < net.effective_curve(i).failure_probability(omega)
        })
        .collect();
    DamageScenario {
        wind_speed: omega,
        trial_index: 0,
        line_failed,
    }
}

/// Samples the scenario of trial `trial` from its own damage stream.
pub fn sample_trial_scenario(net: &FeederNetwork, omega: f64, master_seed: u64, trial: u64) -> DamageScenario {
    let mut rng = TrialStreams::new(master_seed, trial).damage();
    let mut scenario = sample_damage_scenario(net, omega, &mut rng);
    scenario.trial_index = trial;
    scenario
}

/// Buses still energized by the substation with normal switch states.
pub fn energized_after_damage(net: &FeederNetwork, scenario: &DamageScenario) -> Vec<bool> {
    net.energized_mask(&scenario.lines_up(), &net.normal_switch_states())
}

/// Load (kW) cut off from the substation by the damage, before any
/// restoration.
pub fn initial_load_loss(net: &FeederNetwork, scenario: &DamageScenario) -> f64 {
    energized_after_damage(net, scenario)
        .iter()
        .zip(net.buses())
        .filter(|(on, _)| !**on)
        .map(|(_, b)| b.load_kw)
        .sum()
}
