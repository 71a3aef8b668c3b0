//! Scenario configuration files.
//!
//! A scenario names a feeder file, a wind profile, edits applied to the
//! feeder (fragility overrides, hardening, DG relocations) and the run
//! parameters. `feeder_path` is resolved against the directory holding the
//! configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeder::{load_feeder, ConfigLabel, FeederNetwork};
use crate::fragility::{FragilityCurve, ProfileLabel, WindProfile, DEFAULT_HARDENING_SHIFT};
use crate::mcengine::{
    DistributionMode, SimParams, DEFAULT_CONVERGENCE_TOL, DEFAULT_CONVERGENCE_WINDOW, DEFAULT_GRID_SIZE, DEFAULT_TRIALS,
};
use crate::rescurve::ResponseParams;
use crate::restoration::RestorationParams;
use crate::risk::DEFAULT_ALPHA;

pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// Either a bundled preset or an explicit profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Preset { preset: ProfileLabel },
    Explicit(WindProfile),
}

impl ProfileSpec {
    pub fn resolve(&self) -> Result<WindProfile> {
        let profile = match self {
            ProfileSpec::Preset { preset } => {
                WindProfile::preset(*preset).ok_or_else(|| Error::config("profile.preset", "`custom` has no preset"))?
            }
            ProfileSpec::Explicit(p) => p.clone(),
        };
        profile
            .validate()
            .map_err(|e| Error::config("profile", e.to_string()))?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FragilityOverrides {
    /// Curves added to, or replacing those of, the feeder file.
    pub curves: BTreeMap<String, FragilityCurve>,
    /// Curve assigned to every line before per-line overrides.
    pub default: Option<String>,
    /// Line id to curve name.
    pub lines: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardeningSpec {
    #[serde(default)]
    pub lines: Vec<String>,
    #[serde(default = "default_shift")]
    pub shift: f64,
}

fn default_shift() -> f64 {
    DEFAULT_HARDENING_SHIFT
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_bins() -> usize {
    DEFAULT_HISTOGRAM_BINS
}
fn default_tol() -> f64 {
    DEFAULT_CONVERGENCE_TOL
}
fn default_window() -> usize {
    DEFAULT_CONVERGENCE_WINDOW
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub feeder_path: PathBuf,
    /// Overrides the label stored in the feeder file.
    #[serde(default)]
    pub config_label: Option<ConfigLabel>,
    pub profile: ProfileSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default)]
    pub distribution_mode: DistributionMode,
    #[serde(default = "default_tol")]
    pub convergence_tolerance: f64,
    #[serde(default = "default_window")]
    pub convergence_window: usize,
    /// Write every trial's damage scenario and plan as JSON lines.
    #[serde(default)]
    pub dump_scenarios: bool,
    #[serde(default)]
    pub fragility: FragilityOverrides,
    #[serde(default)]
    pub hardening: Option<HardeningSpec>,
    /// DG id to destination bus.
    #[serde(default)]
    pub dg_relocations: BTreeMap<String, String>,
    #[serde(default)]
    pub response: ResponseParams,
    #[serde(default)]
    pub restoration: RestorationParams,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text, &path.display().to_string())?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    /// Range checks that do not need the feeder.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if self.n_trials < 1 {
            return Err(Error::config("n_trials", "must be at least 1"));
        }
        if self.grid_size < 1 {
            return Err(Error::config("grid_size", "must be at least 1"));
        }
        if self.histogram_bins < 1 {
            return Err(Error::config("histogram_bins", "must be at least 1"));
        }
        if self.convergence_tolerance.is_nan() || self.convergence_tolerance <= 0.0 {
            return Err(Error::config("convergence_tolerance", "must be positive"));
        }
        if self.convergence_window < 2 {
            return Err(Error::config("convergence_window", "must be at least 2"));
        }
        if let Some(h) = &self.hardening {
            if !(h.shift >= 0.0 && h.shift.is_finite()) {
                return Err(Error::config("hardening.shift", "must be finite and nonnegative"));
            }
        }
        let r = &self.response;
        if !(r.event_duration_h >= 0.0 && r.da_normal_h >= 0.0 && r.smart_assessment_factor > 0.0) {
            return Err(Error::config(
                "response",
                "durations must be nonnegative and the factor positive",
            ));
        }
        self.profile.resolve()?;
        Ok(())
    }

    pub fn feeder_file(&self) -> PathBuf {
        self.base_dir.join(&self.feeder_path)
    }

    pub fn wind_profile(&self) -> Result<WindProfile> {
        self.profile.resolve()
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            response: self.response,
            restoration: self.restoration,
        }
    }

    /// Loads the feeder and applies every edit in the configuration.
    pub fn build_network(&self) -> Result<FeederNetwork> {
        let base = load_feeder(self.feeder_file())?;
        self.apply_to(&base)
    }

    /// Applies the configuration's edits to an already loaded feeder.
    pub fn apply_to(&self, base: &FeederNetwork) -> Result<FeederNetwork> {
        let f = &self.fragility;
        let mut net = base.modified(|doc| {
            doc.curves.extend(f.curves.iter().map(|(k, v)| (k.clone(), *v)));
            let known = |name: &str, field: &str| {
                if doc.curves.contains_key(name) {
                    Ok(())
                } else {
                    Err(Error::config(field, format!("unknown curve `{name}`")))
                }
            };
            if let Some(name) = &f.default {
                known(name, "fragility.default")?;
            }
            for (line, name) in &f.lines {
                known(name, "fragility.lines")?;
                if !doc.lines.iter().any(|l| &l.id == line) {
                    return Err(Error::config("fragility.lines", format!("unknown line `{line}`")));
                }
            }
            for line in &mut doc.lines {
                if let Some(name) = f.lines.get(&line.id).or(f.default.as_ref()) {
                    line.fragility = name.clone();
                }
            }
            if let Some(label) = self.config_label {
                doc.label = label;
            }
            Ok(())
        })?;
        if let Some(h) = &self.hardening {
            net = net.with_hardening(&h.lines, h.shift)?;
        }
        for (dg, bus) in &self.dg_relocations {
            if net.bus_index(bus).is_none() {
                return Err(Error::config("dg_relocations", format!("unknown bus `{bus}`")));
            }
            net = net.with_dg_at(dg, bus)?;
        }
        Ok(net)
    }
}
