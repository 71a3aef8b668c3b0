//! Wind-event probability model and component fragility curves.
//!
//! A [`WindProfile`] is the regional distribution of peak wind speed. A
//! [`FragilityCurve`] maps wind speed to the failure probability of a line:
//! flat at the normal-weather rate below `omega_critical`, certain failure at
//! and past `omega_collapse`, and a monotone ramp in between. Hardening moves
//! both thresholds to the right by a fixed shift.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of an empirical profile.
pub const EMPIRICAL_MASS_TOLERANCE: f64 = 1e-6;

/// Default rightward shift applied to hardened lines, m/s.
pub const DEFAULT_HARDENING_SHIFT: f64 = 15.0;

/// Steepness of the logistic ramp between the two thresholds.
const LOGISTIC_STEEPNESS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProfileLabel {
    Extreme,
    High,
    Normal,
    #[default]
    Custom,
}

impl ProfileLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileLabel::Extreme => "extreme",
            ProfileLabel::High => "high",
            ProfileLabel::Normal => "normal",
            ProfileLabel::Custom => "custom",
        }
    }
}

impl std::fmt::Display for ProfileLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape of the wind-speed distribution.
///
/// `Empirical` bins are `(speed, density)` pairs with strictly increasing
/// speeds. With two or more entries the density is piecewise constant:
/// entry `i` holds on `[speed_i, speed_{i+1})` and the final entry closes the
/// support (its density must be zero). A single entry is a point mass at that
/// speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindModel {
    Weibull { shape: f64, scale: f64 },
    Empirical { bins: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindProfile {
    #[serde(flatten)]
    pub model: WindModel,
    #[serde(default)]
    pub label: ProfileLabel,
}

impl WindProfile {
    pub fn weibull(shape: f64, scale: f64, label: ProfileLabel) -> Result<Self> {
        let profile = WindProfile {
            model: WindModel::Weibull { shape, scale },
            label,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn empirical(bins: Vec<(f64, f64)>, label: ProfileLabel) -> Result<Self> {
        let profile = WindProfile {
            model: WindModel::Empirical { bins },
            label,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn point_mass(speed: f64) -> Result<Self> {
        Self::empirical(vec![(speed, 1.0)], ProfileLabel::Custom)
    }

    /// Bundled regional profiles: Weibull with shape 2 and scale 30/18/8 m/s
    /// for extreme/high/normal. `Custom` has no preset.
    pub fn preset(label: ProfileLabel) -> Option<Self> {
        let scale = match label {
            ProfileLabel::Extreme => 30.0,
            ProfileLabel::High => 18.0,
            ProfileLabel::Normal => 8.0,
            ProfileLabel::Custom => return None,
        };
        Some(WindProfile {
            model: WindModel::Weibull { shape: 2.0, scale },
            label,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            WindModel::Weibull { shape, scale } => {
                if !(shape.is_finite() && *shape > 0.0) {
                    return Err(Error::config("profile.shape", "must be positive"));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::config("profile.scale", "must be positive"));
                }
            }
            WindModel::Empirical { bins } => {
                if bins.is_empty() {
                    return Err(Error::config("profile.bins", "at least one bin required"));
                }
                for (i, &(speed, density)) in bins.iter().enumerate() {
                    if !(speed.is_finite() && speed >= 0.0) {
                        return Err(Error::config(
                            "profile.bins",
                            format!("bin {i}: speed must be finite and nonnegative"),
                        ));
                    }
                    if !(density.is_finite() && density >= 0.0) {
                        return Err(Error::config(
                            "profile.bins",
                            format!("bin {i}: density must be finite and nonnegative"),
                        ));
                    }
                }
                if bins.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config("profile.bins", "speeds must be strictly increasing"));
                }
                if bins.len() > 1 {
                    if bins[bins.len() - 1].1 != 0.0 {
                        return Err(Error::config(
                            "profile.bins",
                            "final entry closes the support and must have zero density",
                        ));
                    }
                    let mass = histogram_mass(bins);
                    if (mass - 1.0).abs() > EMPIRICAL_MASS_TOLERANCE {
                        return Err(Error::config(
                            "profile.bins",
                            format!("densities integrate to {mass}, expected 1"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The single support point of a degenerate profile.
    pub fn atom(&self) -> Option<f64> {
        match &self.model {
            WindModel::Empirical { bins } if bins.len() == 1 => Some(bins[0].0),
            _ => None,
        }
    }

    pub fn cdf(&self, omega: f64) -> f64 {
        if omega < 0.0 {
            return 0.0;
        }
        match &self.model {
            WindModel::Weibull { shape, scale } => 1.0 - (-(omega / scale).powf(*shape)).exp(),
            WindModel::Empirical { bins } if bins.len() == 1 => {
                if omega >= bins[0].0 {
                    1.0
                } else {
                    0.0
                }
            }
            WindModel::Empirical { bins } => {
                let mut acc = 0.0;
                for w in bins.windows(2) {
                    let (lo, density) = w[0];
                    let hi = w[1].0;
                    if omega >= hi {
                        acc += density * (hi - lo);
                    } else {
                        if omega > lo {
                            acc += density * (omega - lo);
                        }
                        break;
                    }
                }
                acc.min(1.0)
            }
        }
    }

    /// Inverse CDF for `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.model {
            WindModel::Weibull { shape, scale } => scale * (-(1.0 - p).ln()).powf(1.0 / shape),
            WindModel::Empirical { bins } if bins.len() == 1 => bins[0].0,
            WindModel::Empirical { bins } => {
                let mut acc = 0.0;
                for w in bins.windows(2) {
                    let (lo, density) = w[0];
                    let hi = w[1].0;
                    let mass = density * (hi - lo);
                    if mass > 0.0 && acc + mass >= p {
                        return lo + (p - acc) / density;
                    }
                    acc += mass;
                }
                // p beyond the accumulated mass (rounding): last positive-density edge.
                bins.windows(2)
                    .rev()
                    .find(|w| w[0].1 > 0.0)
                    .map(|w| w[1].0)
                    .unwrap_or(bins[bins.len() - 1].0)
            }
        }
    }
}

fn histogram_mass(bins: &[(f64, f64)]) -> f64 {
    bins.windows(2).map(|w| w[0].1 * (w[1].0 - w[0].0)).sum()
}

/// Probability density of the profile at `omega`.
///
/// A point-mass profile reports `f64::INFINITY` at its atom and zero
/// elsewhere.
pub fn wind_density(profile: &WindProfile, omega: f64) -> f64 {
    if omega < 0.0 {
        return 0.0;
    }
    match &profile.model {
        WindModel::Weibull { shape, scale } => {
            let x = omega / scale;
            if omega == 0.0 {
                return match shape.partial_cmp(&1.0) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                    _ => f64::INFINITY,
                };
            }
            (shape / scale) * x.powf(shape - 1.0) * (-x.powf(*shape)).exp()
        }
        WindModel::Empirical { bins } if bins.len() == 1 => {
            if omega == bins[0].0 {
                f64::INFINITY
            } else {
                0.0
            }
        }
        WindModel::Empirical { bins } => bins
            .windows(2)
            .find(|w| w[0].0 <= omega && omega < w[1].0)
            .map(|w| w[0].1)
            .unwrap_or(0.0),
    }
}

/// Draws one wind speed by inverse-transform sampling.
pub fn sample_wind_speed<R: Rng + ?Sized>(profile: &WindProfile, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    profile.quantile(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
    Logistic,
}

/// Failure probability of a line as a function of wind speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityCurve {
    pub p_normal: f64,
    pub omega_critical: f64,
    pub omega_collapse: f64,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl FragilityCurve {
    pub fn new(p_normal: f64, omega_critical: f64, omega_collapse: f64, interpolation: Interpolation) -> Result<Self> {
        let curve = FragilityCurve {
            p_normal,
            omega_critical,
            omega_collapse,
            interpolation,
        };
        curve.validate("fragility")?;
        Ok(curve)
    }

    pub fn linear(p_normal: f64, omega_critical: f64, omega_collapse: f64) -> Result<Self> {
        Self::new(p_normal, omega_critical, omega_collapse, Interpolation::Linear)
    }

    /// Checks the curve invariants; `name` is used in the error.
    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.p_normal >= 0.0 && self.p_normal < 1.0) {
            return Err(Error::validation(name, "p_normal must lie in [0, 1)"));
        }
        if !(self.omega_critical.is_finite() && self.omega_collapse.is_finite()) {
            return Err(Error::validation(name, "thresholds must be finite"));
        }
        if self.omega_critical >= self.omega_collapse {
            return Err(Error::validation(name, "omega_critical must be below omega_collapse"));
        }
        Ok(())
    }

    pub fn failure_probability(&self, omega: f64) -> f64 {
        failure_probability(self, omega)
    }

    pub fn hardened(&self, shift: f64) -> FragilityCurve {
        apply_hardening(self, shift)
    }
}

pub fn failure_probability(curve: &FragilityCurve, omega: f64) -> f64 {
    if omega < curve.omega_critical {
        return curve.p_normal;
    }
    if omega >= curve.omega_collapse {
        return 1.0;
    }
    let x = (omega - curve.omega_critical) / (curve.omega_collapse - curve.omega_critical);
    let ramp = match curve.interpolation {
        Interpolation::Linear => x,
        Interpolation::Logistic => {
            let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
            let half = LOGISTIC_STEEPNESS / 2.0;
            let lo = sigmoid(-half);
            let hi = sigmoid(half);
            ((sigmoid(LOGISTIC_STEEPNESS * (x - 0.5)) - lo) / (hi - lo)).clamp(0.0, 1.0)
        }
    };
    (curve.p_normal + (1.0 - curve.p_normal) * ramp).clamp(curve.p_normal, 1.0)
}

/// Shifts both thresholds right by `shift` m/s (negative shifts are treated as zero).
pub fn apply_hardening(curve: &FragilityCurve, shift: f64) -> FragilityCurve {
    let shift = shift.max(0.0);
    FragilityCurve {
        omega_critical: curve.omega_critical + shift,
        omega_collapse: curve.omega_collapse + shift,
        ..*curve
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> FragilityCurve {
        FragilityCurve::linear(0.01, 20.0, 60.0).unwrap()
    }

    #[test]
    fn weibull_density_values() {
        let p = WindProfile::weibull(2.0, 10.0, ProfileLabel::Custom).unwrap();
        assert_eq!(wind_density(&p, 0.0), 0.0);
        // 2*10/100 * exp(-1)
        let expected = 0.2 * (-1.0f64).exp();
        assert!((wind_density(&p, 10.0) - expected).abs() < 1e-15);
        assert!((wind_density(&p, 10.0) - 0.0736).abs() < 5e-5);
    }

    #[test]
    fn weibull_density_integrates_to_one() {
        let p = WindProfile::weibull(2.0, 10.0, ProfileLabel::Custom).unwrap();
        // composite Simpson over [0, 100]
        let n = 20_000;
        let h = 100.0 / n as f64;
        let mut acc = wind_density(&p, 0.0) + wind_density(&p, 100.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * wind_density(&p, i as f64 * h);
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empirical_uniform_density() {
        let p = WindProfile::empirical(vec![(0.0, 0.02), (50.0, 0.0)], ProfileLabel::Custom).unwrap();
        assert_eq!(wind_density(&p, 25.0), 0.02);
        assert_eq!(wind_density(&p, 50.0), 0.0);
        assert!((p.quantile(0.5) - 25.0).abs() < 1e-12);
        assert!((p.cdf(10.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empirical_rejects_bad_mass() {
        let err = WindProfile::empirical(vec![(0.0, 0.03), (50.0, 0.0)], ProfileLabel::Custom).unwrap_err();
        assert!(err.to_string().contains("profile.bins"));
        assert!(WindProfile::weibull(0.0, 10.0, ProfileLabel::Custom).is_err());
        assert!(WindProfile::weibull(2.0, -1.0, ProfileLabel::Custom).is_err());
    }

    #[test]
    fn point_mass_always_samples_atom() {
        let p = WindProfile::point_mass(25.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            assert_eq!(sample_wind_speed(&p, &mut rng), 25.0);
        }
        assert!(wind_density(&p, 25.0).is_infinite());
        assert_eq!(wind_density(&p, 24.0), 0.0);
    }

    #[test]
    fn weibull_sample_mean() {
        let p = WindProfile::weibull(2.0, 10.0, ProfileLabel::Custom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample_wind_speed(&p, &mut rng)).sum::<f64>() / n as f64;
        // 10 * Gamma(1.5) = 5 * sqrt(pi)
        let expected = 5.0 * std::f64::consts::PI.sqrt();
        assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
    }

    #[test]
    fn independent_streams_reproduce() {
        let p = WindProfile::weibull(2.0, 10.0, ProfileLabel::Custom).unwrap();
        let draw = |stream: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            rng.set_stream(stream);
            (0..16).map(|_| sample_wind_speed(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(1), draw(1));
        assert_eq!(draw(2), draw(2));
        assert_ne!(draw(1), draw(2));
    }

    #[test]
    fn fragility_cases() {
        let c = reference();
        assert_eq!(failure_probability(&c, 10.0), 0.01);
        assert_eq!(failure_probability(&c, 70.0), 1.0);
        assert_eq!(failure_probability(&c, 60.0), 1.0);
        assert!((failure_probability(&c, 40.0) - 0.505).abs() < 1e-12);
    }

    #[test]
    fn logistic_hits_endpoints() {
        let c = FragilityCurve::new(0.05, 20.0, 60.0, Interpolation::Logistic).unwrap();
        assert!((failure_probability(&c, 20.0) - 0.05).abs() < 1e-12);
        assert!((failure_probability(&c, 60.0 - 1e-9) - 1.0).abs() < 1e-6);
        assert!((failure_probability(&c, 40.0) - 0.525).abs() < 1e-12);
    }

    #[test]
    fn curve_validation() {
        assert!(FragilityCurve::linear(1.0, 20.0, 60.0).is_err());
        assert!(FragilityCurve::linear(-0.1, 20.0, 60.0).is_err());
        assert!(FragilityCurve::linear(0.01, 60.0, 60.0).is_err());
    }

    #[test]
    fn hardening_shift() {
        let c = reference();
        assert_eq!(apply_hardening(&c, 0.0), c);
        let h = apply_hardening(&c, 15.0);
        assert_eq!(h, FragilityCurve::linear(0.01, 35.0, 75.0).unwrap());
        for i in 0..=1000 {
            let w = i as f64 * 0.1;
            assert!(failure_probability(&h, w) <= failure_probability(&c, w));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn curve() -> impl Strategy<Value = FragilityCurve> {
            (0.0..0.99f64, 0.0..80.0f64, 0.5..60.0f64, any::<bool>()).prop_map(|(p, crit, width, logistic)| {
                FragilityCurve {
                    p_normal: p,
                    omega_critical: crit,
                    omega_collapse: crit + width,
                    interpolation: if logistic {
                        Interpolation::Logistic
                    } else {
                        Interpolation::Linear
                    },
                }
            })
        }

        proptest! {
            #[test]
            fn monotone_and_bounded(c in curve()) {
                let mut prev = 0.0;
                for i in 0..=2000 {
                    let p = failure_probability(&c, i as f64 * 0.075);
                    prop_assert!((0.0..=1.0).contains(&p));
                    prop_assert!(p >= prev);
                    prev = p;
                }
            }

            #[test]
            fn hardening_dominates(c in curve(), shift in 0.0..40.0f64) {
                let h = apply_hardening(&c, shift);
                for i in 0..=2000 {
                    let w = i as f64 * 0.075;
                    prop_assert!(failure_probability(&h, w) <= failure_probability(&c, w));
                }
            }
        }
    }
}
