use serde::{Deserialize, Serialize};

use super::window_active;
use crate::rng::RngStream;
use crate::{Error, Result};

/// Which way a battery-following alteration pushes consumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowMode {
    /// Consumption offset `−sign(battery) · magnitude`: the alteration moves
    /// frequency the same way the battery is pushing it.
    Reinforce,
    /// Consumption offset `+sign(battery) · magnitude`.
    Oppose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowSpec {
    pub magnitude_mw: f64,
    pub mode: FollowMode,
}

/// Load altering: offsets grid consumption directly. `interval` is in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadAlterSpec {
    pub interval: u32,
    pub offset_mw: f64,
    pub randomness_mw: (f64, f64),
    pub follow_battery: Option<FollowSpec>,
    pub start_s: f64,
    pub stop_s: Option<f64>,
}

impl Default for LoadAlterSpec {
    fn default() -> Self {
        LoadAlterSpec {
            interval: 50,
            offset_mw: 0.0,
            randomness_mw: (0.0, 0.0),
            follow_battery: None,
            start_s: 0.0,
            stop_s: None,
        }
    }
}

impl LoadAlterSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.interval == 0 {
            return Err(Error::invalid(format!("{prefix}.interval"), "must be >= 1"));
        }
        if !(self.randomness_mw.0 <= self.randomness_mw.1) {
            return Err(Error::invalid(format!("{prefix}.randomness_mw"), "lower bound exceeds upper bound"));
        }
        if ![self.offset_mw, self.randomness_mw.0, self.randomness_mw.1, self.start_s]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid(prefix, "all parameters must be finite"));
        }
        if let Some(f) = self.follow_battery {
            if !(f.magnitude_mw >= 0.0 && f.magnitude_mw.is_finite()) {
                return Err(Error::invalid(format!("{prefix}.follow_battery.magnitude_mw"), "must be >= 0"));
            }
        }
        if let Some(stop) = self.stop_s {
            if !(stop >= self.start_s) {
                return Err(Error::invalid(format!("{prefix}.stop_s"), "must be >= start_s"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadAlterState {
    held_mw: f64,
    primed: bool,
}

impl LoadAlterState {
    pub fn held_mw(&self) -> f64 {
        self.held_mw
    }
}

/// Consumption offset in MW for this tick. A new value is drawn on interval
/// boundaries (and on the first active tick) and held in between.
pub fn apply_load_alteration(
    spec: &LoadAlterSpec,
    t_s: f64,
    tick: u64,
    battery_power_mw: f64,
    state: &mut LoadAlterState,
    rng: &mut RngStream,
) -> f64 {
    if !window_active(t_s, spec.start_s, spec.stop_s) {
        *state = LoadAlterState::default();
        return 0.0;
    }
    if !state.primed || tick.is_multiple_of(spec.interval as u64) {
        let (lo, hi) = spec.randomness_mw;
        let random = if lo != 0.0 || hi != 0.0 { rng.uniform(lo, hi) } else { 0.0 };
        let follow = spec.follow_battery.map_or(0.0, |f| {
            let sign = if battery_power_mw > 0.0 {
                1.0
            } else if battery_power_mw < 0.0 {
                -1.0
            } else {
                0.0
            };
            match f.mode {
                FollowMode::Reinforce => -sign * f.magnitude_mw,
                FollowMode::Oppose => sign * f.magnitude_mw,
            }
        });
        state.held_mw = spec.offset_mw + random + follow;
        state.primed = true;
    }
    state.held_mw
}
