//! Headless runs and parameter sweeps.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::Engine;
use crate::metrics::{self, classify_stability, Classification, RunReport, StabilityReport, TelemetryLog};
use crate::scenario::{number_value, ScenarioConfig};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub log: TelemetryLog,
    pub stability: StabilityReport,
    pub report: RunReport,
}

/// Runs `config` to completion in memory.
pub fn simulate(config: &ScenarioConfig) -> Result<RunOutcome> {
    let mut engine = Engine::new(config.clone())?;
    engine.run_to_end()?;
    let tick_hz = config.clock.tick_hz;
    let log = engine.into_log();
    let stability = classify_stability(&log.true_frequency(), tick_hz, &config.classifier)?;
    let report = RunReport::new(&stability, config.seed, config.hash());
    Ok(RunOutcome { log, stability, report })
}

/// Runs `config` and writes `telemetry.csv` and `report.json` into `out_dir`.
pub fn run_headless(config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome> {
    let outcome = simulate(config)?;
    metrics::export(&outcome.log, &outcome.report, out_dir, config.outputs.telemetry_decimation)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub classification: Classification,
    pub abnormal_share: f64,
    pub settled_mean_hz: f64,
    pub peak_to_peak_hz: f64,
    pub settled_band_violations: u64,
}

/// One run per value of the scalar at `path`, in parallel; rows come back
/// in value order.
pub fn sweep(config: &ScenarioConfig, path: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "must not be empty"));
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut cfg = config.clone();
            cfg.set_param(path, number_value(v))?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(cfg, &value)| {
            let out = simulate(cfg)?;
            Ok(SweepRow {
                value,
                classification: out.stability.classification,
                abnormal_share: out.stability.abnormal_share,
                settled_mean_hz: out.stability.settled_mean_hz,
                peak_to_peak_hz: out.stability.peak_to_peak_hz,
                settled_band_violations: out.stability.settled_band_violations,
            })
        })
        .collect()
}

/// Writes sweep rows as CSV.
pub fn write_sweep_csv(rows: &[SweepRow], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| Error::io("sweep.csv", e))?;
    Ok(())
}
