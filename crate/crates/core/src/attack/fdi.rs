use serde::{Deserialize, Serialize};

use super::window_active;
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub magnitude: f64,
    /// Pulse on every n-th mutated packet.
    pub every_n: u32,
}

/// False data injection parameters. Units follow the link: Hz on the sensor
/// link, MW on the control link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdiSpec {
    /// Mutate every `interval`-th packet (1 = all, 2 = every other, ...).
    pub interval: u32,
    pub offset: f64,
    pub randomness: (f64, f64),
    /// Replaces the original value when set.
    pub base: Option<f64>,
    pub scale: f64,
    /// Added per second since `start_s`.
    pub ramp_rate: f64,
    pub pulse: Option<PulseSpec>,
    pub start_s: f64,
    pub stop_s: Option<f64>,
}

impl Default for FdiSpec {
    fn default() -> Self {
        FdiSpec {
            interval: 1,
            offset: 0.0,
            randomness: (0.0, 0.0),
            base: None,
            scale: 1.0,
            ramp_rate: 0.0,
            pulse: None,
            start_s: 0.0,
            stop_s: None,
        }
    }
}

impl FdiSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.interval == 0 {
            return Err(Error::invalid(format!("{prefix}.interval"), "must be >= 1"));
        }
        if !(self.randomness.0 <= self.randomness.1) {
            return Err(Error::invalid(format!("{prefix}.randomness"), "lower bound exceeds upper bound"));
        }
        if let Some(p) = self.pulse {
            if p.every_n == 0 {
                return Err(Error::invalid(format!("{prefix}.pulse.every_n"), "must be >= 1"));
            }
        }
        let finite = [self.offset, self.scale, self.ramp_rate, self.start_s, self.randomness.0, self.randomness.1];
        if finite.iter().any(|v| !v.is_finite()) || self.base.is_some_and(|b| !b.is_finite()) {
            return Err(Error::invalid(prefix, "all parameters must be finite"));
        }
        if let Some(stop) = self.stop_s {
            if !(stop >= self.start_s) {
                return Err(Error::invalid(format!("{prefix}.stop_s"), "must be >= start_s"));
            }
        }
        Ok(())
    }

    pub fn is_active(&self, t_s: f64) -> bool {
        window_active(t_s, self.start_s, self.stop_s)
    }

    fn has_randomness(&self) -> bool {
        self.randomness.0 != 0.0 || self.randomness.1 != 0.0
    }
}

/// Mutates one payload value. `packet_index` counts packets seen on the link
/// while the attack is active, starting at 0.
///
/// Selected packets pass through base → ramp → scale → offset → randomness →
/// pulse, in that order. The pulse fires on every `every_n`-th mutated packet.
pub fn apply_fdi(value: f64, spec: &FdiSpec, packet_index: u64, t_s: f64, rng: &mut RngStream) -> f64 {
    if !spec.is_active(t_s) || !packet_index.is_multiple_of(spec.interval as u64) {
        return value;
    }
    let mut v = spec.base.unwrap_or(value);
    v += spec.ramp_rate * (t_s - spec.start_s);
    v *= spec.scale;
    v += spec.offset;
    if spec.has_randomness() {
        v += rng.uniform(spec.randomness.0, spec.randomness.1);
    }
    if let Some(pulse) = spec.pulse {
        let mutated_ordinal = packet_index / spec.interval as u64 + 1;
        if mutated_ordinal.is_multiple_of(pulse.every_n as u64) {
            v += pulse.magnitude;
        }
    }
    v
}
