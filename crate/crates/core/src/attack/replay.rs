use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Record link traffic for `record_duration_s` starting at `start_s`, then
/// substitute the recording for `replay_duration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySpec {
    pub start_s: f64,
    pub record_duration_s: f64,
    pub replay_duration_s: f64,
}

impl ReplaySpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.start_s >= 0.0 && self.start_s.is_finite()) {
            return Err(Error::invalid(format!("{prefix}.start_s"), "must be >= 0"));
        }
        if !(self.record_duration_s > 0.0 && self.record_duration_s.is_finite()) {
            return Err(Error::invalid(format!("{prefix}.record_duration_s"), "must be > 0"));
        }
        if !(self.replay_duration_s > 0.0 && self.replay_duration_s.is_finite()) {
            return Err(Error::invalid(format!("{prefix}.replay_duration_s"), "must be > 0"));
        }
        Ok(())
    }

    pub fn phase(&self, t_s: f64) -> ReplayPhase {
        let record_end = self.start_s + self.record_duration_s;
        if t_s < self.start_s {
            ReplayPhase::Passthrough
        } else if t_s < record_end {
            ReplayPhase::Record
        } else if t_s < record_end + self.replay_duration_s {
            ReplayPhase::Replay
        } else {
            ReplayPhase::Done
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayPhase {
    Passthrough,
    Record,
    Replay,
    Done,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayState {
    buffer: Vec<f64>,
    cursor: usize,
    empty_replays: u64,
}

impl ReplayState {
    pub fn buffer(&self) -> &[f64] {
        &self.buffer
    }

    /// Packets that hit the replay phase with nothing recorded.
    pub fn empty_replays(&self) -> u64 {
        self.empty_replays
    }
}

/// Records or substitutes one payload value depending on the phase at `t_s`.
/// During replay the buffer is cycled if it runs out.
pub fn replay_step(value: f64, spec: &ReplaySpec, t_s: f64, state: &mut ReplayState) -> f64 {
    match spec.phase(t_s) {
        ReplayPhase::Record => {
            state.buffer.push(value);
            value
        }
        ReplayPhase::Replay if state.buffer.is_empty() => {
            state.empty_replays += 1;
            value
        }
        ReplayPhase::Replay => {
            let v = state.buffer[state.cursor % state.buffer.len()];
            state.cursor += 1;
            v
        }
        ReplayPhase::Passthrough | ReplayPhase::Done => value,
    }
}
