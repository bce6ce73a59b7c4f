//! Lead-vehicle forward prediction feeding the safety-distance constraint,
//! and the intelligent-driver car-following law used to script lead vehicles
//! in closed-loop scenarios.

use serde::{Deserialize, Serialize};

use crate::{PlanError, Result};

/// Observed lead-vehicle state: rear-bumper position, velocity, acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadState {
    pub s: f64,
    pub v: f64,
    pub a: f64,
}

impl LeadState {
    pub fn new(s: f64, v: f64, a: f64) -> Self {
        LeadState { s, v, a }
    }

    pub fn translated(&self, ds: f64) -> Self {
        LeadState::new(self.s + ds, self.v, self.a)
    }
}

/// Per-stage lead prediction; stage k corresponds to time k·t_d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadPrediction {
    pub stages: Vec<LeadState>,
}

impl LeadPrediction {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn translated(&self, ds: f64) -> Self {
        LeadPrediction {
            stages: self.stages.iter().map(|l| l.translated(ds)).collect(),
        }
    }
}

/// Exact lead position/velocity at time `t` for the piecewise profile:
/// acceleration `a0` until `t_acc`, zero afterwards, velocity clamped at
/// zero (position frozen once stopped).
fn lead_at(s0: f64, v0: f64, a0: f64, t_acc: f64, t: f64) -> LeadState {
    // Segment 1: constant a0 on [0, t_acc], cut short if v hits zero.
    let t_stop = if a0 < 0.0 && v0 > 0.0 {
        v0 / (-a0)
    } else if a0 <= 0.0 && v0 <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let t1 = t_acc.min(t_stop);

    if t <= t1 {
        let v = (v0 + a0 * t).max(0.0);
        let s = s0 + v0 * t + 0.5 * a0 * t * t;
        return LeadState::new(s, v, if t < t_acc { a0 } else { 0.0 });
    }

    // State at the end of segment 1.
    let v1 = (v0 + a0 * t1).max(0.0);
    let s1 = s0 + v0 * t1 + 0.5 * a0 * t1 * t1;

    if t1 == t_stop && t_stop < t_acc {
        // Stopped while still "holding" a negative acceleration: stay put.
        return LeadState::new(s1, 0.0, 0.0);
    }

    // Segment 2: zero acceleration, constant velocity v1.
    LeadState::new(s1 + v1 * (t - t1), v1, 0.0)
}

/// Kinematic forward prediction: the lead keeps its observed acceleration
/// for `t_acc` seconds and coasts afterwards. Velocity is clamped at zero
/// and the position frozen once the vehicle stops.
pub fn forward_predict(
    lead: &LeadState,
    t_acc: f64,
    t_d: f64,
    n_stages: usize,
) -> Result<LeadPrediction> {
    if t_d <= 0.0 || !t_d.is_finite() {
        return Err(PlanError::invalid(format!("t_d must be positive, got {t_d}")));
    }
    if t_acc < 0.0 || !t_acc.is_finite() {
        return Err(PlanError::invalid(format!("t_acc must be >= 0, got {t_acc}")));
    }
    if n_stages == 0 {
        return Err(PlanError::invalid("prediction needs at least one stage"));
    }
    let v0 = lead.v.max(0.0);
    let stages = (0..n_stages)
        .map(|k| lead_at(lead.s, v0, lead.a, t_acc, k as f64 * t_d))
        .collect();
    Ok(LeadPrediction { stages })
}

/// Intelligent-driver-model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdmConfig {
    /// Desired free-road velocity v₀ (m/s).
    pub v_desired: f64,
    /// Desired time headway T (s).
    pub time_headway: f64,
    /// Minimum standstill gap s₀ (m).
    pub min_gap: f64,
    /// Maximum acceleration a (m/s²).
    pub max_accel: f64,
    /// Comfortable deceleration b (m/s²).
    pub comfort_decel: f64,
    /// Free-road acceleration exponent δ.
    pub exponent: f64,
    /// Hard deceleration bound used to clamp the output and as the
    /// emergency response when the gap has collapsed (m/s²).
    pub emergency_decel: f64,
}

impl IdmConfig {
    pub fn with_desired_speed(v_desired: f64) -> Self {
        IdmConfig {
            v_desired,
            time_headway: 1.5,
            min_gap: 2.0,
            max_accel: 1.5,
            comfort_decel: 2.0,
            exponent: 4.0,
            emergency_decel: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_desired", self.v_desired),
            ("time_headway", self.time_headway),
            ("min_gap", self.min_gap),
            ("max_accel", self.max_accel),
            ("comfort_decel", self.comfort_decel),
            ("exponent", self.exponent),
            ("emergency_decel", self.emergency_decel),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(PlanError::invalid(format!(
                    "IDM parameter {name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Gap and closing speed to the vehicle ahead of the one being driven.
#[derive(Debug, Clone, Copy)]
pub struct IdmLeader {
    /// Bumper-to-bumper gap (m).
    pub gap: f64,
    /// Closing speed Δv = v − v_leader (m/s).
    pub closing_speed: f64,
}

/// IDM acceleration for a vehicle at velocity `v`, optionally interacting
/// with a leader. A collapsed gap returns the emergency braking value.
pub fn idm_accel(v: f64, leader: Option<IdmLeader>, cfg: &IdmConfig) -> f64 {
    let free = 1.0 - (v / cfg.v_desired).powf(cfg.exponent);
    let interaction = match leader {
        None => 0.0,
        Some(l) => {
            if l.gap <= 0.0 {
                return -cfg.emergency_decel;
            }
            let desired_gap = cfg.min_gap
                + v * cfg.time_headway
                + v * l.closing_speed / (2.0 * (cfg.max_accel * cfg.comfort_decel).sqrt());
            -(desired_gap / l.gap).powi(2)
        }
    };
    (cfg.max_accel * (free + interaction)).clamp(-cfg.emergency_decel, cfg.max_accel)
}
