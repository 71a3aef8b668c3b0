//! Monte Carlo orchestration: trials at a fixed wind speed, convergence of
//! the running mean, and assembly of the probability-weighted loss
//! distribution over a wind-speed grid.
//!
//! Trials are independent and run on the rayon pool; results are collected
//! in trial order and every trial draws from streams keyed by
//! `(master_seed, trial_index)`, so outputs do not depend on the pool size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::damage::{initial_load_loss, sample_trial_scenario, DamageScenario};
use crate::error::{Error, Result};
use crate::feeder::{ConfigLabel, FeederNetwork};
use crate::fragility::{wind_density, WindProfile};
use crate::rescurve::{build_resilience_curve, performance_loss, ResilienceCurve, ResponseParams};
use crate::restoration::{plan_restoration, RestorationParams, RestorationPlan};
use crate::streams::TrialStreams;

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_GRID_SIZE: usize = 25;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 0.01;
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 100;
/// Grid spans these profile quantiles.
pub const GRID_QUANTILES: (f64, f64) = (0.001, 0.999);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SimParams {
    #[serde(default)]
    pub response: ResponseParams,
    #[serde(default)]
    pub restoration: RestorationParams,
}

/// How trial losses at one speed enter the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistributionMode {
    /// One point per speed carrying the mean trial loss.
    #[default]
    SpeedMean,
    /// One point per trial, each with `1/n` of its speed's weight.
    TrialLevel,
}

/// Everything computed for one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scenario: DamageScenario,
    pub initial_loss_kw: f64,
    pub plan: RestorationPlan,
    pub curve: ResilienceCurve,
    pub loss_mwh: f64,
}

impl TrialRecord {
    pub fn assessment_h(&self) -> f64 {
        self.curve.times.t_r - self.curve.times.t_pe
    }
}

/// Runs trial `trial` at wind speed `omega`.
pub fn run_trial(net: &FeederNetwork, omega: f64, master_seed: u64, trial: u64, params: &SimParams) -> TrialRecord {
    let scenario = sample_trial_scenario(net, omega, master_seed, trial);
    let initial_loss_kw = initial_load_loss(net, &scenario);
    let plan = if net.label() == ConfigLabel::Smart && initial_loss_kw > 0.0 {
        plan_restoration(net, &scenario, &params.restoration)
    } else {
        RestorationPlan::empty()
    };
    let mut rng = TrialStreams::new(master_seed, trial).assessment();
    let curve = build_resilience_curve(
        initial_loss_kw,
        Some(&plan),
        omega,
        &mut rng,
        &params.response,
        net.label(),
    );
    let loss_mwh = performance_loss(&curve);
    TrialRecord {
        scenario,
        initial_loss_kw,
        plan,
        curve,
        loss_mwh,
    }
}

/// All records for trials `0..n`, in trial order.
pub fn run_trial_records(
    net: &FeederNetwork,
    omega: f64,
    n: usize,
    master_seed: u64,
    params: &SimParams,
) -> Vec<TrialRecord> {
    (0..n as u64)
        .into_par_iter()
        .map(|t| run_trial(net, omega, master_seed, t, params))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatch {
    pub wind_speed: f64,
    pub losses_mwh: Vec<f64>,
    pub config_label: ConfigLabel,
    pub master_seed: u64,
}

impl TrialBatch {
    pub fn mean(&self) -> f64 {
        if self.losses_mwh.is_empty() {
            return 0.0;
        }
        self.losses_mwh.iter().sum::<f64>() / self.losses_mwh.len() as f64
    }
}

pub fn run_trials(net: &FeederNetwork, omega: f64, n: usize, master_seed: u64, params: &SimParams) -> TrialBatch {
    let losses_mwh = (0..n as u64)
        .into_par_iter()
        .map(|t| run_trial(net, omega, master_seed, t, params).loss_mwh)
        .collect();
    TrialBatch {
        wind_speed: omega,
        losses_mwh,
        config_label: net.label(),
        master_seed,
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Degenerate(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub running_means: Vec<f64>,
    /// 1-based trial count at which the running mean has stayed within
    /// tolerance for `window` consecutive trials.
    pub converged_at: Option<usize>,
    pub tolerance: f64,
    pub window: usize,
}

/// Checks the running mean against the mean of its last `window` values.
pub fn convergence(batch: &TrialBatch, tol: f64, window: usize) -> Result<ConvergenceReport> {
    let n = batch.losses_mwh.len();
    if window < 2 {
        return Err(Error::Degenerate(format!("window must be at least 2, got {window}")));
    }
    if n < window {
        return Err(Error::Degenerate(format!(
            "{n} trials is fewer than the window of {window}"
        )));
    }
    let mut running_means = Vec::with_capacity(n);
    let mut sum = 0.0;
    for (i, loss) in batch.losses_mwh.iter().enumerate() {
        sum += loss;
        running_means.push(sum / (i + 1) as f64);
    }
    let reference = running_means[n - window..].iter().sum::<f64>() / window as f64;
    let bound = tol * reference.abs();
    let mut run = 0;
    let mut converged_at = None;
    for (i, m) in running_means.iter().enumerate() {
        if (m - reference).abs() <= bound {
            run += 1;
            if run == window {
                converged_at = Some(i + 1);
                break;
            }
        } else {
            run = 0;
        }
    }
    Ok(ConvergenceReport {
        running_means,
        converged_at,
        tolerance: tol,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub wind_speed: f64,
    pub loss_mwh: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLossDistribution {
    pub points: Vec<LossPoint>,
    pub normalized: bool,
}

impl EmpiricalLossDistribution {
    pub fn new(points: Vec<LossPoint>) -> Self {
        EmpiricalLossDistribution {
            points,
            normalized: false,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let total = self.total_weight();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Degenerate("distribution has no positive weight".into()));
        }
        for p in &mut self.points {
            p.weight /= total;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Returns a copy with every loss mapped through `f`.
    pub fn map_losses(&self, f: impl Fn(f64) -> f64) -> Self {
        EmpiricalLossDistribution {
            points: self
                .points
                .iter()
                .map(|p| LossPoint {
                    loss_mwh: f(p.loss_mwh),
                    ..*p
                })
                .collect(),
            normalized: self.normalized,
        }
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|p| p.loss_mwh * p.weight).sum::<f64>() / self.total_weight()
    }
}

/// `count` evenly spaced speeds between the profile's
/// [`GRID_QUANTILES`]. A point-mass profile yields its atom.
pub fn default_grid(profile: &WindProfile, count: usize) -> Vec<f64> {
    if let Some(atom) = profile.atom() {
        return vec![atom];
    }
    let lo = profile.quantile(GRID_QUANTILES.0);
    let hi = profile.quantile(GRID_QUANTILES.1);
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("grid", "wind-speed grid is empty"));
    }
    if grid.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::config("grid", "speeds must be finite and nonnegative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("grid", "speeds must be strictly increasing"));
    }
    Ok(())
}

/// Normalized probability weight of each grid speed, proportional to the
/// profile density. A point-mass profile puts all weight on the grid speed
/// nearest its atom.
pub fn grid_weights(profile: &WindProfile, grid: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let raw: Vec<f64> = if let Some(atom) = profile.atom() {
        let nearest = grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - atom).abs().total_cmp(&(b.1 - atom).abs()))
            .map(|(i, _)| i)
            .expect("grid is nonempty");
        (0..grid.len()).map(|i| if i == nearest { 1.0 } else { 0.0 }).collect()
    } else {
        grid.iter().map(|&w| wind_density(profile, w)).collect()
    };
    if raw.iter().any(|w| !w.is_finite()) {
        return Err(Error::Degenerate("profile density is unbounded on the grid".into()));
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("profile has zero density on every grid speed".into()));
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Maps per-speed losses onto the profile weights.
pub fn assemble_distribution(
    profile: &WindProfile,
    batches: &[TrialBatch],
    mode: DistributionMode,
) -> Result<EmpiricalLossDistribution> {
    let grid: Vec<f64> = batches.iter().map(|b| b.wind_speed).collect();
    let weights = grid_weights(profile, &grid)?;
    let mut points = Vec::new();
    for (batch, weight) in batches.iter().zip(weights) {
        match mode {
            DistributionMode::SpeedMean => points.push(LossPoint {
                wind_speed: batch.wind_speed,
                loss_mwh: batch.mean(),
                weight,
            }),
            DistributionMode::TrialLevel => {
                let share = weight / batch.losses_mwh.len().max(1) as f64;
                points.extend(batch.losses_mwh.iter().map(|&loss| LossPoint {
                    wind_speed: batch.wind_speed,
                    loss_mwh: loss,
                    weight: share,
                }));
            }
        }
    }
    let total: f64 = points.iter().map(|p| p.weight).sum();
    for p in &mut points {
        p.weight /= total;
    }
    Ok(EmpiricalLossDistribution {
        points,
        normalized: true,
    })
}

/// Per-speed batches plus the distribution assembled from them.
#[derive(Debug, Clone, PartialEq)]
pub struct LossStudy {
    pub batches: Vec<TrialBatch>,
    pub distribution: EmpiricalLossDistribution,
}

/// Runs `n` trials at every grid speed with the same master seed and weights
/// the results by the wind profile.
pub fn build_loss_distribution(
    net: &FeederNetwork,
    profile: &WindProfile,
    grid: &[f64],
    n: usize,
    master_seed: u64,
    params: &SimParams,
    mode: DistributionMode,
) -> Result<LossStudy> {
    check_grid(grid)?;
    if n == 0 {
        return Err(Error::config("n_trials", "must be at least 1"));
    }
    let batches: Vec<TrialBatch> = grid
        .iter()
        .map(|&w| run_trials(net, w, n, master_seed, params))
        .collect();
    let distribution = assemble_distribution(profile, &batches, mode)?;
    Ok(LossStudy { batches, distribution })
}
