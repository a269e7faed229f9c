//! Logical simulation time.

use serde::{Deserialize, Serialize};

/// Tick counter. One tick is `1 / tick_hz` simulated seconds; with the default
/// 50 Hz a tick is 20 ms and the sensor interval of 50 ticks is one second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimClock {
    tick: u64,
    tick_hz: u32,
}

impl SimClock {
    pub const DEFAULT_TICK_HZ: u32 = 50;

    pub fn new(tick_hz: u32) -> Self {
        assert!(tick_hz >= 1, "tick_hz must be at least 1");
        SimClock { tick: 0, tick_hz }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn tick_hz(&self) -> u32 {
        self.tick_hz
    }

    pub fn time_s(&self) -> f64 {
        self.tick as f64 / self.tick_hz as f64
    }

    pub fn dt_s(&self) -> f64 {
        1.0 / self.tick_hz as f64
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }

    /// Seconds to the nearest whole tick, never negative.
    pub fn seconds_to_ticks(&self, seconds: f64) -> u64 {
        (seconds * self.tick_hz as f64).round().max(0.0) as u64
    }
}

impl Default for SimClock {
    fn default() -> Self {
        SimClock::new(Self::DEFAULT_TICK_HZ)
    }
}
