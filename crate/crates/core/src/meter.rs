//! Frequency meter: samples true grid frequency on a fixed cadence.

use serde::{Deserialize, Serialize};

use crate::link::Payload;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPacket {
    pub seq: u64,
    pub sent_tick: u64,
    pub frequency_hz: f64,
}

impl Payload for MeasurementPacket {
    fn value(&self) -> f64 {
        self.frequency_hz
    }
    fn set_value(&mut self, v: f64) {
        self.frequency_hz = v;
    }
    fn sent_tick(&self) -> u64 {
        self.sent_tick
    }
}

pub fn packetize(seq: u64, tick: u64, hz: f64) -> Result<MeasurementPacket> {
    if !hz.is_finite() {
        return Err(Error::NonFinite("measured frequency"));
    }
    Ok(MeasurementPacket {
        seq,
        sent_tick: tick,
        frequency_hz: hz,
    })
}

#[derive(Debug, Clone)]
pub struct FrequencyMeter {
    interval_ticks: u32,
    next_seq: u64,
}

impl FrequencyMeter {
    pub fn new(interval_ticks: u32) -> Result<Self> {
        if interval_ticks == 0 {
            return Err(Error::invalid("meter.interval_ticks", "must be >= 1"));
        }
        Ok(FrequencyMeter {
            interval_ticks,
            next_seq: 0,
        })
    }

    pub fn interval_ticks(&self) -> u32 {
        self.interval_ticks
    }

    pub fn set_interval_ticks(&mut self, interval_ticks: u32) -> Result<()> {
        if interval_ticks == 0 {
            return Err(Error::invalid("meter.interval_ticks", "must be >= 1"));
        }
        self.interval_ticks = interval_ticks;
        Ok(())
    }

    /// Emits a packet iff `tick` is a multiple of the interval.
    pub fn maybe_sample(&mut self, tick: u64, frequency_hz: f64) -> Result<Option<MeasurementPacket>> {
        if !tick.is_multiple_of(self.interval_ticks as u64) {
            return Ok(None);
        }
        let pkt = packetize(self.next_seq, tick, frequency_hz)?;
        self.next_seq += 1;
        Ok(Some(pkt))
    }
}
