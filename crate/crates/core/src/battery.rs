//! Battery management system and battery plant.

use serde::{Deserialize, Serialize};

use crate::link::Payload;
use crate::{Error, Result};

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySpec {
    pub power_rating_mw: f64,
    pub capacity_mwh: f64,
    pub initial_soc_mwh: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec {
            power_rating_mw: 2.0,
            capacity_mwh: 2.0,
            initial_soc_mwh: 1.0,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_rating_mw > 0.0) {
            return Err(Error::invalid("battery.power_rating_mw", "must be > 0"));
        }
        if !(self.capacity_mwh > 0.0) {
            return Err(Error::invalid("battery.capacity_mwh", "must be > 0"));
        }
        if !(self.initial_soc_mwh > 0.0 && self.initial_soc_mwh <= self.capacity_mwh) {
            return Err(Error::invalid(
                "battery.initial_soc_mwh",
                "must be in (0, capacity_mwh]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc_mwh: f64,
    /// Positive while discharging into the grid.
    pub delivered_power_mw: f64,
}

/// Result of one actuation: the new state and whether any limit bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuation {
    pub state: BatteryState,
    pub clamped: bool,
}

/// Applies `command_mw` for `dt_s`, limited by the power rating and by the
/// energy left in the direction of travel.
pub fn actuate(command_mw: f64, state: BatteryState, spec: &BatterySpec, dt_s: f64) -> Actuation {
    debug_assert!(dt_s > 0.0);
    let command = if command_mw.is_finite() { command_mw } else { 0.0 };
    let mut delivered = command.clamp(-spec.power_rating_mw, spec.power_rating_mw);
    let max_discharge = state.soc_mwh.max(0.0) * SECONDS_PER_HOUR / dt_s;
    let max_charge = (spec.capacity_mwh - state.soc_mwh).max(0.0) * SECONDS_PER_HOUR / dt_s;
    delivered = delivered.clamp(-max_charge, max_discharge);
    let soc = (state.soc_mwh - delivered * dt_s / SECONDS_PER_HOUR).clamp(0.0, spec.capacity_mwh);
    Actuation {
        state: BatteryState {
            soc_mwh: soc,
            delivered_power_mw: delivered,
        },
        clamped: delivered != command,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatusPacket {
    pub seq: u64,
    pub sent_tick: u64,
    pub bms: usize,
    pub soc_mwh: f64,
    pub delivered_power_mw: f64,
}

impl Payload for StatusPacket {
    fn value(&self) -> f64 {
        self.delivered_power_mw
    }
    fn set_value(&mut self, v: f64) {
        self.delivered_power_mw = v;
    }
    fn sent_tick(&self) -> u64 {
        self.sent_tick
    }
}

/// One BMS with a single battery behind it. Holds the last received command
/// until a new one arrives.
#[derive(Debug, Clone)]
pub struct Bms {
    id: usize,
    spec: BatterySpec,
    state: BatteryState,
    held_command_mw: f64,
    status_interval_ticks: u32,
    next_status_seq: u64,
    clamp_ticks: u64,
}

impl Bms {
    pub fn new(id: usize, spec: BatterySpec, status_interval_ticks: u32) -> Result<Self> {
        spec.validate()?;
        if status_interval_ticks == 0 {
            return Err(Error::invalid("battery.status_interval_ticks", "must be >= 1"));
        }
        Ok(Bms {
            id,
            spec,
            state: BatteryState {
                soc_mwh: spec.initial_soc_mwh,
                delivered_power_mw: 0.0,
            },
            held_command_mw: 0.0,
            status_interval_ticks,
            next_status_seq: 0,
            clamp_ticks: 0,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn spec(&self) -> &BatterySpec {
        &self.spec
    }

    pub fn state(&self) -> BatteryState {
        self.state
    }

    pub fn held_command_mw(&self) -> f64 {
        self.held_command_mw
    }

    pub fn clamp_ticks(&self) -> u64 {
        self.clamp_ticks
    }

    pub fn receive_command(&mut self, command_mw: f64) {
        self.held_command_mw = command_mw;
    }

    /// Actuates the held command over one tick.
    pub fn actuate(&mut self, dt_s: f64) -> BatteryState {
        let a = actuate(self.held_command_mw, self.state, &self.spec, dt_s);
        if a.clamped {
            self.clamp_ticks += 1;
        }
        self.state = a.state;
        self.state
    }

    pub fn emit_status(&mut self, tick: u64) -> Option<StatusPacket> {
        if !tick.is_multiple_of(self.status_interval_ticks as u64) {
            return None;
        }
        let pkt = StatusPacket {
            seq: self.next_status_seq,
            sent_tick: tick,
            bms: self.id,
            soc_mwh: self.state.soc_mwh,
            delivered_power_mw: self.state.delivered_power_mw,
        };
        self.next_status_seq += 1;
        Some(pkt)
    }
}
