//! Loss CDF, value-at-risk and conditional value-at-risk of a discrete loss
//! distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcengine::EmpiricalLossDistribution;

pub const DEFAULT_ALPHA: f64 = 0.95;
/// Slack when comparing an accumulated probability with `alpha`, so that
/// round-off in the weights cannot skip a support point.
pub const CDF_TOLERANCE: f64 = 1e-12;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMetrics {
    pub alpha: f64,
    pub var_mwh: f64,
    pub cvar_mwh: f64,
}

fn check_normalized(dist: &EmpiricalLossDistribution) -> Result<()> {
    if dist.points.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if !dist.normalized || (dist.total_weight() - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized);
    }
    if dist.points.iter().any(|p| p.weight.is_nan() || p.weight < 0.0) {
        return Err(Error::Unnormalized);
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

/// Probability that the loss does not exceed `zeta`.
pub fn loss_cdf(dist: &EmpiricalLossDistribution, zeta: f64) -> Result<f64> {
    check_normalized(dist)?;
    let p: f64 = dist
        .points
        .iter()
        .filter(|p| p.loss_mwh <= zeta)
        .map(|p| p.weight)
        .sum();
    Ok(p.min(1.0))
}

/// Smallest support loss whose CDF reaches `alpha`.
pub fn var(dist: &EmpiricalLossDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_normalized(dist)?;
    let mut pts: Vec<(f64, f64)> = dist.points.iter().map(|p| (p.loss_mwh, p.weight)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let loss = pts[i].0;
        while i < pts.len() && pts[i].0 == loss {
            cum += pts[i].1;
            i += 1;
        }
        if cum >= alpha - CDF_TOLERANCE {
            return Ok(loss);
        }
    }
    Ok(pts[pts.len() - 1].0)
}

/// Discrete Rockafellar–Uryasev estimator
/// `var + (1 - alpha)^-1 * sum w_j max(U_j - var, 0)`.
pub fn cvar(dist: &EmpiricalLossDistribution, alpha: f64) -> Result<f64> {
    let zeta = var(dist, alpha)?;
    let excess: f64 = dist
        .points
        .iter()
        .map(|p| p.weight * (p.loss_mwh - zeta).max(0.0))
        .sum();
    Ok(zeta + excess / (1.0 - alpha))
}

pub fn risk_metrics(dist: &EmpiricalLossDistribution, alpha: f64) -> Result<RiskMetrics> {
    Ok(RiskMetrics {
        alpha,
        var_mwh: var(dist, alpha)?,
        cvar_mwh: cvar(dist, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcengine::LossPoint;
    use proptest::prelude::*;

    fn dist(points: &[(f64, f64)]) -> EmpiricalLossDistribution {
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

    fn hundred() -> EmpiricalLossDistribution {
        let pts: Vec<(f64, f64)> = (1..=100).map(|i| (i as f64, 0.01)).collect();
        dist(&pts)
    }

    #[test]
    fn cdf_steps() {
        let d = dist(&[(1.0, 0.5), (3.0, 0.5)]);
        assert_eq!(loss_cdf(&d, 0.5).unwrap(), 0.0);
        assert_eq!(loss_cdf(&d, 2.0).unwrap(), 0.5);
        assert_eq!(loss_cdf(&d, 3.0).unwrap(), 1.0);
        assert_eq!(var(&d, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn point_mass() {
        let d = dist(&[(5.0, 1.0)]);
        for a in [0.01, 0.5, 0.95, 0.999] {
            assert_eq!(var(&d, a).unwrap(), 5.0);
            assert_eq!(cvar(&d, a).unwrap(), 5.0);
        }
    }

    #[test]
    fn hundred_equal_losses() {
        let d = hundred();
        assert_eq!(var(&d, 0.95).unwrap(), 95.0);
        // the worst 5% of mass is {96, ..., 100}
        assert!((cvar(&d, 0.95).unwrap() - 98.0).abs() < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        let mut d = dist(&[(1.0, 0.5), (3.0, 0.25)]);
        assert!(matches!(var(&d, 0.5), Err(Error::Unnormalized)));
        d.points.clear();
        d.normalized = true;
        assert!(matches!(var(&d, 0.5), Err(Error::EmptyDistribution)));
        assert!(var(&hundred(), 1.2).is_err());
        assert!(var(&hundred(), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn cvar_dominates_var_and_var_in_support(
            raw in prop::collection::vec((0.0f64..100.0, 0.01f64..1.0), 1..20),
            alpha in 0.05f64..0.99,
        ) {
            let total: f64 = raw.iter().map(|p| p.1).sum();
            let pts: Vec<(f64, f64)> = raw.iter().map(|&(l, w)| (l, w / total)).collect();
            let d = dist(&pts);
            let v = var(&d, alpha).unwrap();
            let c = cvar(&d, alpha).unwrap();
            prop_assert!(c >= v);
            prop_assert!(pts.iter().any(|p| p.0 == v));
        }
    }
}
