//! Resilience curve over the event, damage-assessment and restorative
//! phases, and its integral, the energy not served.
//!
//! The curve is piecewise linear in the unserved load: it ramps from zero to
//! the initial loss `L` during the event, holds at `L` while damage is
//! assessed, and ramps down to `L - P_res` while the restoration switching
//! runs. Infrastructure repair after the restorative phase is not modelled.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::feeder::ConfigLabel;
use crate::restoration::RestorationPlan;

/// Phase timing and damage-assessment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResponseParams {
    /// Duration of the event itself, hours.
    pub event_duration_h: f64,
    /// Damage-assessment time under normal weather, hours.
    pub da_normal_h: f64,
    /// Multiplier on the assessment time of smart networks.
    pub smart_assessment_factor: f64,
}

impl Default for ResponseParams {
    fn default() -> Self {
        ResponseParams {
            event_duration_h: 2.0,
            da_normal_h: 2.0,
            smart_assessment_factor: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub t_e: f64,
    pub t_pe: f64,
    pub t_r: f64,
    pub t_ir: f64,
}

impl PhaseTimes {
    pub fn is_ordered(&self) -> bool {
        self.t_e <= self.t_pe && self.t_pe <= self.t_r && self.t_r <= self.t_ir
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceCurve {
    pub times: PhaseTimes,
    pub loss_start: f64,
    pub loss_peak: f64,
    pub loss_end: f64,
    pub config_label: ConfigLabel,
}

impl ResilienceCurve {
    /// Restored load, `loss_peak - loss_end`.
    pub fn restored_kw(&self) -> f64 {
        self.loss_peak - self.loss_end
    }

    /// `(time h, unserved kW)` breakpoints of the piecewise-linear curve.
    pub fn breakpoints(&self) -> [(f64, f64); 4] {
        let t = &self.times;
        [
            (t.t_e, self.loss_start),
            (t.t_pe, self.loss_peak),
            (t.t_r, self.loss_peak),
            (t.t_ir, self.loss_end),
        ]
    }
}

/// Damage-assessment time for a wind speed: `da_normal_h` up to 20 m/s,
/// `n1 * da_normal_h` with `n1 ~ U(3, 4)` up to 40 m/s and
/// `n2 * da_normal_h` with `n2 ~ U(5, 6)` beyond. One uniform is drawn in
/// every case.
pub fn damage_assessment_time<R: Rng + ?Sized>(omega: f64, rng: &mut R, da_normal_h: f64) -> f64 {
    let u: f64 = rng.random();
    if omega <= 20.0 {
        da_normal_h
    } else if omega <= 40.0 {
        (3.0 + u) * da_normal_h
    } else {
        (5.0 + u) * da_normal_h
    }
}

/// Builds the curve for one trial from the initial loss `initial_loss_kw`
/// and the restoration plan (if any).
pub fn build_resilience_curve<R: Rng + ?Sized>(
    initial_loss_kw: f64,
    plan: Option<&RestorationPlan>,
    omega: f64,
    rng: &mut R,
    params: &ResponseParams,
    label: ConfigLabel,
) -> ResilienceCurve {
    let mut assessment = damage_assessment_time(omega, rng, params.da_normal_h);
    if label == ConfigLabel::Smart {
        assessment *= params.smart_assessment_factor;
    }
    let (restored, switching) = plan
        .map(|p| (p.restored_kw.min(initial_loss_kw), p.switching_time_h))
        .unwrap_or((0.0, 0.0));
    let t_pe = params.event_duration_h;
    let t_r = t_pe + assessment;
    ResilienceCurve {
        times: PhaseTimes {
            t_e: 0.0,
            t_pe,
            t_r,
            t_ir: t_r + switching,
        },
        loss_start: 0.0,
        loss_peak: initial_loss_kw,
        loss_end: initial_loss_kw - restored,
        config_label: label,
    }
}

/// Energy not served between the start of the event and the end of the
/// restorative phase, MWh.
pub fn performance_loss(curve: &ResilienceCurve) -> f64 {
    let PhaseTimes { t_e, t_pe, t_r, t_ir } = curve.times;
    let l = curve.loss_peak;
    let kwh = match curve.config_label {
        ConfigLabel::Base | ConfigLabel::Robust => 0.5 * ((t_ir - t_pe) + (t_ir - t_e)) * l,
        ConfigLabel::Smart => {
            let p_res = curve.restored_kw();
            0.5 * (2.0 * t_r - t_e - t_pe) * l + 0.5 * (2.0 * l - p_res) * (t_ir - t_r)
        }
    };
    kwh / 1000.0
}
