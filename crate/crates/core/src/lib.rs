//! Monte Carlo resilience assessment of distribution feeders under
//! probabilistic wind events.
//!
//! A run samples line damage from fragility curves at a grid of wind speeds,
//! plans restoration by switching and DG islanding, integrates the resilience
//! curve into energy not served, and reports VaR and CVaR of the resulting
//! loss distribution.

pub mod config;
pub mod damage;
pub mod error;
pub mod experiment;
pub mod feeder;
pub mod fragility;
pub mod mcengine;
pub mod rescurve;
pub mod restoration;
pub mod risk;
pub mod streams;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use feeder::{ConfigLabel, FeederNetwork};
pub use fragility::{FragilityCurve, WindProfile};
pub use mcengine::{EmpiricalLossDistribution, TrialBatch};
pub use risk::RiskMetrics;
