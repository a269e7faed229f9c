//! Grid frequency from the production/consumption ratio.
//!
//! There is no inertia: frequency is an algebraic function of the current
//! balance, `f = production / consumption × 50 Hz`. Production is a constant
//! baseline fixed at the first consumption sample plus whatever the batteries
//! deliver, so a run starts balanced and the batteries are the only balancing
//! actor.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::{Error, Result, NOMINAL_HZ};

/// Lower bound on consumption used in the frequency computation.
pub const CONSUMPTION_FLOOR_MW: f64 = 1.0;

/// Minute-wise consumption, rebased so the first retained sample is minute 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionSeries {
    samples: Vec<(u32, f64)>,
    scale: f64,
}

impl ConsumptionSeries {
    /// Builds a series from raw samples, applying `scale` and an optional
    /// inclusive minute window.
    pub fn from_samples(
        raw: Vec<(u32, f64)>,
        scale: f64,
        window: Option<(u32, u32)>,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Consumption(format!("scale must be > 0, got {scale}")));
        }
        for pair in raw.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Consumption(format!(
                    "minute index not strictly increasing at minute {}",
                    pair[1].0
                )));
            }
        }
        if let Some(&(m, v)) = raw.iter().find(|(_, v)| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Consumption(format!(
                "invalid consumption {v} at minute {m}"
            )));
        }
        let kept: Vec<(u32, f64)> = match window {
            Some((start, end)) => {
                if end <= start {
                    return Err(Error::Consumption(format!("empty window ({start}, {end})")));
                }
                let first = raw.first().map(|s| s.0).unwrap_or(0);
                let last = raw.last().map(|s| s.0).unwrap_or(0);
                if raw.is_empty() || start < first || end > last {
                    return Err(Error::Consumption(format!(
                        "window ({start}, {end}) outside series bounds ({first}, {last})"
                    )));
                }
                raw.into_iter()
                    .filter(|(m, _)| (start..=end).contains(m))
                    .collect()
            }
            None => raw,
        };
        if kept.len() < 2 {
            return Err(Error::Consumption(format!(
                "need at least 2 samples, have {}",
                kept.len()
            )));
        }
        let origin = kept[0].0;
        let samples: Vec<(u32, f64)> = kept
            .into_iter()
            .map(|(m, v)| (m - origin, v * scale))
            .collect();
        if let Some(&(m, _)) = samples.iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::Consumption(format!(
                "non-positive consumption after scaling at minute {m}"
            )));
        }
        Ok(ConsumptionSeries { samples, scale })
    }

    pub fn samples(&self) -> &[(u32, f64)] {
        &self.samples
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Covered time span in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(0) as f64 * 60.0
    }

    /// Linear interpolation between minute samples.
    pub fn consumption_at(&self, time_s: f64) -> Result<f64> {
        if !(time_s >= 0.0) || time_s > self.duration_s() + 1e-9 {
            return Err(Error::Consumption(format!(
                "time {time_s} s outside series span [0, {}]",
                self.duration_s()
            )));
        }
        let minute = time_s / 60.0;
        let idx = self
            .samples
            .partition_point(|&(m, _)| (m as f64) <= minute)
            .clamp(1, self.samples.len() - 1);
        let (m0, v0) = self.samples[idx - 1];
        let (m1, v1) = self.samples[idx];
        let frac = ((minute - m0 as f64) / (m1 - m0) as f64).clamp(0.0, 1.0);
        Ok(v0 + (v1 - v0) * frac)
    }
}

/// Reads a `minute,consumption_mw` CSV.
pub fn load_consumption_csv(
    path: impl AsRef<Path>,
    scale: f64,
    window: Option<(u32, u32)>,
) -> Result<ConsumptionSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_consumption_csv(file, scale, window)
}

pub fn read_consumption_csv(
    reader: impl std::io::Read,
    scale: f64,
    window: Option<(u32, u32)>,
) -> Result<ConsumptionSeries> {
    #[derive(Deserialize)]
    struct Row {
        minute: u32,
        consumption_mw: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["minute", "consumption_mw"] {
        return Err(Error::Consumption(format!(
            "expected header `minute,consumption_mw`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut raw = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        raw.push((row.minute, row.consumption_mw));
    }
    ConsumptionSeries::from_samples(raw, scale, window)
}

/// `samples[k] = base + k·drift + U(−noise, +noise)` for `k` in `0..minutes`.
/// Values are already in post-scaling MW.
pub fn generate_synthetic_consumption(
    base_mw: f64,
    drift_mw_per_min: f64,
    noise_mw: f64,
    minutes: u32,
    rng: &mut RngStream,
) -> Result<ConsumptionSeries> {
    if !(base_mw > 0.0) {
        return Err(Error::invalid("base_mw", "must be > 0"));
    }
    if minutes < 2 {
        return Err(Error::invalid("minutes", "must be >= 2"));
    }
    if !(noise_mw >= 0.0) {
        return Err(Error::invalid("noise_mw", "must be >= 0"));
    }
    let raw: Vec<(u32, f64)> = (0..minutes)
        .map(|k| {
            let jitter = if noise_mw > 0.0 {
                rng.uniform(-noise_mw, noise_mw)
            } else {
                0.0
            };
            (k, base_mw + k as f64 * drift_mw_per_min + jitter)
        })
        .collect();
    ConsumptionSeries::from_samples(raw, 1.0, None)
        .map_err(|e| Error::invalid("synthetic consumption", e.to_string()))
}

/// `production / consumption × 50`, with consumption clamped to the floor.
/// The flag reports whether the clamp was applied.
pub fn compute_frequency(production_mw: f64, consumption_mw: f64) -> (f64, bool) {
    let clamped = !(consumption_mw >= CONSUMPTION_FLOOR_MW);
    let c = if clamped {
        CONSUMPTION_FLOOR_MW
    } else {
        consumption_mw
    };
    (production_mw / c * NOMINAL_HZ, clamped)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub consumption_mw: f64,
    pub production_base_mw: f64,
    /// Positive when the batteries inject into the grid.
    pub battery_power_mw: f64,
    pub frequency_hz: f64,
}

impl GridState {
    pub fn production_mw(&self) -> f64 {
        self.production_base_mw + self.battery_power_mw
    }
}

/// Consumption source plus per-tick noise.
#[derive(Debug, Clone)]
pub struct GridModel {
    series: ConsumptionSeries,
    noise_mw: f64,
    noise_rng: RngStream,
    production_base_mw: f64,
    floor_events: u64,
}

impl GridModel {
    pub fn new(series: ConsumptionSeries, noise_mw: f64, noise_rng: RngStream) -> Result<Self> {
        if !(noise_mw >= 0.0) {
            return Err(Error::invalid("grid.noise_mw", "must be >= 0"));
        }
        let production_base_mw = series.consumption_at(0.0)?;
        Ok(GridModel {
            series,
            noise_mw,
            noise_rng,
            production_base_mw,
            floor_events: 0,
        })
    }

    pub fn series(&self) -> &ConsumptionSeries {
        &self.series
    }

    pub fn production_base_mw(&self) -> f64 {
        self.production_base_mw
    }

    pub fn set_noise_mw(&mut self, noise_mw: f64) {
        self.noise_mw = noise_mw;
    }

    /// Number of ticks where the consumption floor was hit.
    pub fn floor_events(&self) -> u64 {
        self.floor_events
    }

    /// Consumption at `t` including per-tick noise.
    pub fn consumption_at(&mut self, time_s: f64) -> Result<f64> {
        let base = self.series.consumption_at(time_s)?;
        let noise = if self.noise_mw > 0.0 {
            self.noise_rng.uniform(-self.noise_mw, self.noise_mw)
        } else {
            0.0
        };
        Ok(base + noise)
    }

    /// Advances the grid one tick. `battery_power_mw` is what the batteries
    /// delivered during the previous tick.
    pub fn step(&mut self, time_s: f64, la_effect_mw: f64, battery_power_mw: f64) -> Result<GridState> {
        let raw = self.consumption_at(time_s)? + la_effect_mw;
        let production = self.production_base_mw + battery_power_mw;
        let (frequency_hz, clamped) = compute_frequency(production, raw);
        let consumption_mw = if clamped {
            self.floor_events += 1;
            CONSUMPTION_FLOOR_MW
        } else {
            raw
        };
        Ok(GridState {
            consumption_mw,
            production_base_mw: self.production_base_mw,
            battery_power_mw,
            frequency_hz,
        })
    }
}
