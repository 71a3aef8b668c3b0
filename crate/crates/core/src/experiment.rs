//! Experiment drivers behind the command-line tool and the artifacts they
//! write.
//!
//! Tables are comma-separated with a header row; records are TOML. Every
//! writer has a matching reader so artifacts can be checked after the fact.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::feeder::{ConfigLabel, FeederNetwork};
use crate::fragility::{ProfileLabel, WindProfile};
use crate::mcengine::{
    build_loss_distribution, convergence, default_grid, run_trial_records, EmpiricalLossDistribution, LossStudy,
};
use crate::risk::{risk_metrics, RiskMetrics};

pub const LOSS_DISTRIBUTION_FILE: &str = "loss_distribution.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const METRICS_FILE: &str = "metrics.toml";
pub const CONVERGENCE_FILE: &str = "convergence.toml";
pub const RUNNING_MEANS_FILE: &str = "convergence.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SCENARIOS_FILE: &str = "scenarios.jsonl";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const COMPARISON_BY_SPEED_FILE: &str = "comparison_by_speed.csv";
pub const PHASE_REPORT_FILE: &str = "phase_report.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub alpha: f64,
    pub var_mwh: f64,
    pub cvar_mwh: f64,
    pub config_label: ConfigLabel,
    pub profile_label: ProfileLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub wind_speed: f64,
    pub mean_loss_mwh: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub wind_speed: f64,
    pub trial: u64,
    pub loss_mwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanRow {
    pub wind_speed: f64,
    pub trial: u64,
    pub running_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedConvergence {
    pub wind_speed: f64,
    pub n_trials: usize,
    pub converged_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub tolerance: f64,
    pub window: usize,
    pub speeds: Vec<SpeedConvergence>,
}

/// Everything a `simulate` run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub network: FeederNetwork,
    pub profile: WindProfile,
    pub study: LossStudy,
    pub metrics: MetricsReport,
    pub convergence: ConvergenceSummary,
    pub running_means: Vec<RunningMeanRow>,
    pub histogram: Vec<HistogramBin>,
}

/// Equal-width bins over the loss range, each holding the probability
/// weight of the points inside it. The last bin is closed on the right.
pub fn loss_histogram(dist: &EmpiricalLossDistribution, bins: usize) -> Vec<HistogramBin> {
    if dist.points.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = dist.points.iter().map(|p| p.loss_mwh).fold(f64::INFINITY, f64::min);
    let hi = dist.points.iter().map(|p| p.loss_mwh).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0 / bins as f64
    };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            bin_lo: lo + width * i as f64,
            bin_hi: lo + width * (i + 1) as f64,
            probability: 0.0,
        })
        .collect();
    for p in &dist.points {
        let k = (((p.loss_mwh - lo) / width) as usize).min(bins - 1);
        out[k].probability += p.weight;
    }
    out
}

/// Runs the scenario: loss distribution over the grid, risk metrics,
/// convergence at every grid speed and the plotting histogram.
pub fn run_simulation(config: &ScenarioConfig) -> Result<Simulation> {
    config.validate()?;
    let network = config.build_network()?;
    let profile = config.wind_profile()?;
    let grid = default_grid(&profile, config.grid_size);
    let study = build_loss_distribution(
        &network,
        &profile,
        &grid,
        config.n_trials,
        config.master_seed,
        &config.sim_params(),
        config.distribution_mode,
    )?;
    let risk = risk_metrics(&study.distribution, config.alpha)?;
    let metrics = MetricsReport {
        alpha: risk.alpha,
        var_mwh: risk.var_mwh,
        cvar_mwh: risk.cvar_mwh,
        config_label: network.label(),
        profile_label: profile.label,
    };
    let window = config.convergence_window.min(config.n_trials);
    let mut speeds = Vec::new();
    let mut running_means = Vec::new();
    for batch in &study.batches {
        let converged_at = if window >= 2 {
            let report = convergence(batch, config.convergence_tolerance, window)?;
            running_means.extend(report.running_means.iter().enumerate().map(|(i, &m)| RunningMeanRow {
                wind_speed: batch.wind_speed,
                trial: i as u64,
                running_mean: m,
            }));
            report.converged_at
        } else {
            None
        };
        speeds.push(SpeedConvergence {
            wind_speed: batch.wind_speed,
            n_trials: batch.losses_mwh.len(),
            converged_at,
        });
    }
    let histogram = loss_histogram(&study.distribution, config.histogram_bins);
    Ok(Simulation {
        network,
        profile,
        study,
        metrics,
        convergence: ConvergenceSummary {
            tolerance: config.convergence_tolerance,
            window,
            speeds,
        },
        running_means,
        histogram,
    })
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Output(format!("{}: {e}", path.display()))
}

pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        origin: path.display().to_string(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Parse {
            origin: path.display().to_string(),
            message: e.to_string(),
        })
}

pub fn write_record<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let text = toml::to_string(record).map_err(|e| output_error(path, e))?;
    fs::write(path, text).map_err(|e| output_error(path, e))
}

pub fn read_record<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        origin: path.display().to_string(),
        message: e.to_string(),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))
}

/// Writes every artifact of a simulation into `dir`; returns the paths.
pub fn write_simulation(sim: &Simulation, config: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();

    let path = dir.join(LOSS_DISTRIBUTION_FILE);
    let rows: Vec<DistributionRow> = sim
        .study
        .distribution
        .points
        .iter()
        .map(|p| DistributionRow {
            wind_speed: p.wind_speed,
            mean_loss_mwh: p.loss_mwh,
            weight: p.weight,
        })
        .collect();
    write_table(&path, &rows)?;
    written.push(path);

    let path = dir.join(TRIALS_FILE);
    let rows: Vec<TrialRow> = sim
        .study
        .batches
        .iter()
        .flat_map(|b| {
            b.losses_mwh.iter().enumerate().map(|(i, &loss)| TrialRow {
                wind_speed: b.wind_speed,
                trial: i as u64,
                loss_mwh: loss,
            })
        })
        .collect();
    write_table(&path, &rows)?;
    written.push(path);

    let path = dir.join(METRICS_FILE);
    write_record(&path, &sim.metrics)?;
    written.push(path);

    let path = dir.join(CONVERGENCE_FILE);
    write_record(&path, &sim.convergence)?;
    written.push(path);

    let path = dir.join(RUNNING_MEANS_FILE);
    write_table(&path, &sim.running_means)?;
    written.push(path);

    let path = dir.join(HISTOGRAM_FILE);
    write_table(&path, &sim.histogram)?;
    written.push(path);

    if config.dump_scenarios {
        let path = dir.join(SCENARIOS_FILE);
        write_scenarios(sim, config, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDump {
    pub wind_speed: f64,
    pub trial: u64,
    pub failed_lines: Vec<String>,
    pub initial_loss_kw: f64,
    pub assessment_h: f64,
    pub plan: crate::restoration::RestorationPlan,
    pub loss_mwh: f64,
}

fn write_scenarios(sim: &Simulation, config: &ScenarioConfig, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| output_error(path, e))?;
    let mut w = BufWriter::new(file);
    for batch in &sim.study.batches {
        let records = run_trial_records(
            &sim.network,
            batch.wind_speed,
            config.n_trials,
            config.master_seed,
            &config.sim_params(),
        );
        for r in records {
            let dump = ScenarioDump {
                wind_speed: batch.wind_speed,
                trial: r.scenario.trial_index,
                failed_lines: r
                    .scenario
                    .failed_line_ids(&sim.network)
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                initial_loss_kw: r.initial_loss_kw,
                assessment_h: r.assessment_h(),
                plan: r.plan.clone(),
                loss_mwh: r.loss_mwh,
            };
            let line = serde_json::to_string(&dump).map_err(|e| output_error(path, e))?;
            writeln!(w, "{line}").map_err(|e| output_error(path, e))?;
        }
    }
    w.flush().map_err(|e| output_error(path, e))
}

pub fn read_scenarios(path: &Path) -> Result<Vec<ScenarioDump>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                origin: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub config: ConfigLabel,
    pub var_mwh: f64,
    pub cvar_mwh: f64,
    /// Both VaR and CVaR strictly below the reference row.
    pub below_base: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedMeanRow {
    pub config: ConfigLabel,
    pub wind_speed: f64,
    pub mean_loss_mwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub by_speed: Vec<SpeedMeanRow>,
    pub metrics: Vec<RiskMetrics>,
}

impl Comparison {
    /// Rows that fail to improve on the reference, excluding the reference.
    pub fn flagged(&self) -> Vec<&ComparisonRow> {
        self.rows.iter().skip(1).filter(|r| !r.below_base).collect()
    }
}

/// Paired-seed comparison. The first configuration labelled `base` (or the
/// first one if none is) is the reference; run parameters (seed, trials,
/// grid, alpha) come from it.
pub fn run_comparison(configs: &[ScenarioConfig]) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(Error::config("configs", "nothing to compare"));
    }
    let nets = configs
        .iter()
        .map(|c| {
            c.validate()?;
            c.build_network()
        })
        .collect::<Result<Vec<_>>>()?;
    let ref_idx = nets.iter().position(|n| n.label() == ConfigLabel::Base).unwrap_or(0);
    let reference = &configs[ref_idx];
    let profile = reference.wind_profile()?;
    for (c, n) in configs.iter().zip(&nets) {
        if !n.same_topology(&nets[ref_idx]) {
            return Err(Error::TopologyMismatch(format!(
                "{} differs from {}",
                c.feeder_file().display(),
                reference.feeder_file().display()
            )));
        }
        if c.wind_profile()? != profile {
            return Err(Error::config("profile", "configurations use different wind profiles"));
        }
        if c.master_seed != reference.master_seed {
            return Err(Error::config("master_seed", "configurations use different seeds"));
        }
    }
    let grid = default_grid(&profile, reference.grid_size);
    let mut order: Vec<usize> = vec![ref_idx];
    order.extend((0..configs.len()).filter(|&i| i != ref_idx));
    let mut rows: Vec<ComparisonRow> = Vec::new();
    let mut by_speed = Vec::new();
    let mut metrics = Vec::new();
    for i in order {
        let study = build_loss_distribution(
            &nets[i],
            &profile,
            &grid,
            reference.n_trials,
            reference.master_seed,
            &configs[i].sim_params(),
            reference.distribution_mode,
        )?;
        let m = risk_metrics(&study.distribution, reference.alpha)?;
        let below_base = match rows.first() {
            Some(base) => m.var_mwh < base.var_mwh && m.cvar_mwh < base.cvar_mwh,
            None => false,
        };
        rows.push(ComparisonRow {
            config: nets[i].label(),
            var_mwh: m.var_mwh,
            cvar_mwh: m.cvar_mwh,
            below_base,
        });
        by_speed.extend(study.batches.iter().map(|b| SpeedMeanRow {
            config: nets[i].label(),
            wind_speed: b.wind_speed,
            mean_loss_mwh: b.mean(),
        }));
        metrics.push(m);
    }
    Ok(Comparison {
        rows,
        by_speed,
        metrics,
    })
}

pub fn write_comparison(cmp: &Comparison, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let a = dir.join(COMPARISON_FILE);
    write_table(&a, &cmp.rows)?;
    let b = dir.join(COMPARISON_BY_SPEED_FILE);
    write_table(&b, &cmp.by_speed)?;
    Ok(vec![a, b])
}

/// Mean per-phase indicators over the configured number of trials at one
/// wind speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub config: ConfigLabel,
    pub wind_speed: f64,
    pub n_trials: usize,
    pub phase1_load_loss_kw: f64,
    pub phase2_duration_h: f64,
    pub phase3_restored_kw: f64,
    pub loss_mwh: f64,
}

pub fn run_phase_report(config: &ScenarioConfig, omega: f64) -> Result<PhaseReport> {
    config.validate()?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::config("omega", "must be finite and nonnegative"));
    }
    let net = config.build_network()?;
    let records = run_trial_records(&net, omega, config.n_trials, config.master_seed, &config.sim_params());
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&crate::mcengine::TrialRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(PhaseReport {
        config: net.label(),
        wind_speed: omega,
        n_trials: records.len(),
        phase1_load_loss_kw: mean(&|r| r.initial_loss_kw),
        phase2_duration_h: mean(&|r| r.assessment_h()),
        phase3_restored_kw: mean(&|r| r.curve.restored_kw()),
        loss_mwh: mean(&|r| r.loss_mwh),
    })
}

pub fn write_phase_report(report: &PhaseReport, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(PHASE_REPORT_FILE);
    write_table(&path, std::slice::from_ref(report))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcengine::LossPoint;

    #[test]
    fn histogram_conserves_probability() {
        let dist = EmpiricalLossDistribution {
            points: vec![
                LossPoint {
                    wind_speed: 1.0,
                    loss_mwh: 0.0,
                    weight: 0.25,
                },
                LossPoint {
                    wind_speed: 2.0,
                    loss_mwh: 5.0,
                    weight: 0.25,
                },
                LossPoint {
                    wind_speed: 3.0,
                    loss_mwh: 10.0,
                    weight: 0.5,
                },
            ],
            normalized: true,
        };
        let h = loss_histogram(&dist, 50);
        assert_eq!(h.len(), 50);
        assert_eq!(h[0].probability, 0.25);
        assert_eq!(h[25].probability, 0.25);
        assert_eq!(h[49].probability, 0.5);
        assert_eq!(h[49].bin_hi, 10.0);
    }

    #[test]
    fn degenerate_histogram() {
        let dist = EmpiricalLossDistribution {
            points: vec![LossPoint {
                wind_speed: 1.0,
                loss_mwh: 3.0,
                weight: 1.0,
            }],
            normalized: true,
        };
        let h = loss_histogram(&dist, 4);
        assert_eq!(h[0].probability, 1.0);
        assert!(h.iter().all(|b| b.bin_hi > b.bin_lo));
    }
}
