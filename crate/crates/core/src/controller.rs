//! Cloud control system: a PID law on frequency error that commands the
//! batteries over the control link.

use serde::{Deserialize, Serialize};

use crate::battery::{BatterySpec, StatusPacket};
use crate::link::Payload;
use crate::meter::MeasurementPacket;
use crate::{Error, Result, NOMINAL_HZ};

/// PID gains and limits. Units: `kp` MW/Hz, `ki` MW/(Hz·s), `kd` MW·s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub setpoint_hz: f64,
    /// Defaults to the total battery power rating when absent.
    pub output_limit_mw: Option<f64>,
}

impl PidConfig {
    /// Reference tuning produced by the calibration grid search (see
    /// [`crate::calibrate`]).
    pub const REFERENCE_KP: f64 = 1.2;
    pub const REFERENCE_KI: f64 = 1.6;
    pub const REFERENCE_KD: f64 = 0.0;

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("controller.{name}"), "must be >= 0"));
            }
        }
        if !self.setpoint_hz.is_finite() {
            return Err(Error::invalid("controller.setpoint_hz", "must be finite"));
        }
        if let Some(limit) = self.output_limit_mw {
            if !(limit > 0.0) {
                return Err(Error::invalid("controller.output_limit_mw", "must be > 0"));
            }
        }
        Ok(())
    }
}

impl Default for PidConfig {
    fn default() -> Self {
        PidConfig {
            kp: Self::REFERENCE_KP,
            ki: Self::REFERENCE_KI,
            kd: Self::REFERENCE_KD,
            setpoint_hz: NOMINAL_HZ,
            output_limit_mw: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    /// Accumulated error, Hz·s.
    pub integral: f64,
    pub last_error: Option<f64>,
    pub last_update_tick: Option<u64>,
}

/// One PID update. The integral is only committed when the resulting output
/// is not saturated, and `|ki · integral|` never exceeds the limit.
pub fn pid_step(error_hz: f64, dt_s: f64, state: &mut PidState, cfg: &PidConfig, limit_mw: f64) -> Result<f64> {
    if !(dt_s > 0.0) {
        return Err(Error::invalid("dt_s", "must be > 0"));
    }
    let derivative = match state.last_error {
        Some(prev) => (error_hz - prev) / dt_s,
        None => 0.0,
    };
    state.last_error = Some(error_hz);

    let mut integral = state.integral + error_hz * dt_s;
    if cfg.ki > 0.0 {
        let cap = limit_mw / cfg.ki;
        integral = integral.clamp(-cap, cap);
    }
    let raw = cfg.kp * error_hz + cfg.ki * integral + cfg.kd * derivative;
    if raw.abs() <= limit_mw {
        state.integral = integral;
        return Ok(raw);
    }
    let held = cfg.kp * error_hz + cfg.ki * state.integral + cfg.kd * derivative;
    Ok(held.clamp(-limit_mw, limit_mw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPacket {
    pub seq: u64,
    pub sent_tick: u64,
    pub bms: usize,
    /// Positive = discharge into the grid.
    pub power_command_mw: f64,
}

impl Payload for ControlPacket {
    fn value(&self) -> f64 {
        self.power_command_mw
    }
    fn set_value(&mut self, v: f64) {
        self.power_command_mw = v;
    }
    fn sent_tick(&self) -> u64 {
        self.sent_tick
    }
}

/// Horizon over which a BMS must be able to sustain its share.
const DISPATCH_HORIZON_S: f64 = 900.0;

/// What the controller knows about one registered BMS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmsInfo {
    pub spec: BatterySpec,
    pub last_soc_mwh: f64,
}

impl BmsInfo {
    pub fn new(spec: BatterySpec) -> Self {
        BmsInfo {
            spec,
            last_soc_mwh: spec.initial_soc_mwh,
        }
    }

    /// Power the unit can sustain over the dispatch horizon in the direction
    /// of `command_mw`.
    pub fn headroom_mw(&self, command_mw: f64) -> f64 {
        let energy = if command_mw >= 0.0 {
            self.last_soc_mwh
        } else {
            self.spec.capacity_mwh - self.last_soc_mwh
        };
        (energy.max(0.0) * 3600.0 / DISPATCH_HORIZON_S).min(self.spec.power_rating_mw)
    }
}

/// Splits a total command across BMSs in proportion to their headroom.
/// Returns all zeros when no unit has headroom.
pub fn dispatch(command_mw: f64, headrooms_mw: &[f64]) -> Vec<f64> {
    let total: f64 = headrooms_mw.iter().sum();
    if headrooms_mw.len() == 1 {
        return vec![if total > 0.0 { command_mw } else { 0.0 }];
    }
    if !(total > 0.0) {
        return vec![0.0; headrooms_mw.len()];
    }
    headrooms_mw.iter().map(|h| command_mw * h / total).collect()
}

/// Counters for conditions the controller tolerated rather than failed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerEvents {
    pub non_finite_measurements: u64,
    pub zero_headroom_dispatches: u64,
    pub status_received: u64,
}

#[derive(Debug, Clone)]
pub struct CloudController {
    cfg: PidConfig,
    state: PidState,
    registry: Vec<BmsInfo>,
    limit_mw: f64,
    nominal_dt_s: f64,
    tick_hz: u32,
    next_seq: u64,
    last_measured_hz: Option<f64>,
    last_command_mw: f64,
    events: ControllerEvents,
}

impl CloudController {
    /// `nominal_dt_s` is the sensor interval, used as `dt` for the very first
    /// measurement.
    pub fn new(cfg: PidConfig, registry: Vec<BmsInfo>, tick_hz: u32, nominal_dt_s: f64) -> Result<Self> {
        cfg.validate()?;
        if registry.is_empty() {
            return Err(Error::invalid("battery.count", "at least one BMS is required"));
        }
        let total_rating: f64 = registry.iter().map(|b| b.spec.power_rating_mw).sum();
        Ok(CloudController {
            limit_mw: cfg.output_limit_mw.unwrap_or(total_rating),
            cfg,
            state: PidState::default(),
            registry,
            nominal_dt_s,
            tick_hz,
            next_seq: 0,
            last_measured_hz: None,
            last_command_mw: 0.0,
            events: ControllerEvents::default(),
        })
    }

    pub fn config(&self) -> &PidConfig {
        &self.cfg
    }

    pub fn set_config(&mut self, cfg: PidConfig) -> Result<()> {
        cfg.validate()?;
        if let Some(limit) = cfg.output_limit_mw {
            self.limit_mw = limit;
        }
        self.cfg = cfg;
        Ok(())
    }

    pub fn set_nominal_dt(&mut self, dt_s: f64) {
        self.nominal_dt_s = dt_s;
    }

    pub fn output_limit_mw(&self) -> f64 {
        self.limit_mw
    }

    pub fn pid_state(&self) -> &PidState {
        &self.state
    }

    pub fn last_measured_hz(&self) -> Option<f64> {
        self.last_measured_hz
    }

    pub fn last_command_mw(&self) -> f64 {
        self.last_command_mw
    }

    pub fn events(&self) -> ControllerEvents {
        self.events
    }

    pub fn registry(&self) -> &[BmsInfo] {
        &self.registry
    }

    /// Runs the PID on one delivered measurement and returns one control
    /// packet per BMS. Stale packets are processed like fresh ones.
    pub fn on_measurement(&mut self, pkt: &MeasurementPacket, now_tick: u64) -> Vec<ControlPacket> {
        let total = if pkt.frequency_hz.is_finite() {
            self.last_measured_hz = Some(pkt.frequency_hz);
            let error = self.cfg.setpoint_hz - pkt.frequency_hz;
            let dt_s = match self.state.last_update_tick {
                Some(last) => now_tick.saturating_sub(last).max(1) as f64 / self.tick_hz as f64,
                None => self.nominal_dt_s,
            };
            self.state.last_update_tick = Some(now_tick);
            pid_step(error, dt_s, &mut self.state, &self.cfg, self.limit_mw)
                .expect("dt is at least one tick")
        } else {
            self.events.non_finite_measurements += 1;
            0.0
        };
        self.last_command_mw = total;

        let headrooms: Vec<f64> = self.registry.iter().map(|b| b.headroom_mw(total)).collect();
        if headrooms.iter().sum::<f64>() <= 0.0 && total != 0.0 {
            self.events.zero_headroom_dispatches += 1;
        }
        dispatch(total, &headrooms)
            .into_iter()
            .enumerate()
            .map(|(bms, cmd)| {
                let seq = self.next_seq;
                self.next_seq += 1;
                ControlPacket {
                    seq,
                    sent_tick: now_tick,
                    bms,
                    power_command_mw: cmd,
                }
            })
            .collect()
    }

    pub fn on_status(&mut self, pkt: &StatusPacket) {
        self.events.status_received += 1;
        if let Some(info) = self.registry.get_mut(pkt.bms) {
            if pkt.soc_mwh.is_finite() {
                info.last_soc_mwh = pkt.soc_mwh;
            }
        }
    }
}
