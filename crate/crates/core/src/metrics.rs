//! Telemetry, stability classification and result export.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::{Error, Result, NOMINAL_BAND_HZ, NOMINAL_HZ};

/// Which attacks were active at a tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct AttackFlags(u16);

impl AttackFlags {
    pub const NONE: AttackFlags = AttackFlags(0);

    const LABELS: [&'static str; 13] = [
        "s2c:delay",
        "s2c:drop",
        "s2c:fdi",
        "s2c:replay-record",
        "s2c:replay",
        "c2b:delay",
        "c2b:drop",
        "c2b:fdi",
        "c2b:replay-record",
        "c2b:replay",
        "b2c-status:any",
        "grid:load-alter",
        "trigger",
    ];

    pub fn from_label(label: &str) -> Option<AttackFlags> {
        Self::LABELS
            .iter()
            .position(|l| *l == label)
            .map(|i| AttackFlags(1 << i))
    }

    pub fn insert(&mut self, label: &str) {
        if let Some(f) = Self::from_label(label) {
            self.0 |= f.0;
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        Self::from_label(label).is_some_and(|f| self.0 & f.0 != 0)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for AttackFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, label) in Self::LABELS.iter().enumerate() {
            if self.0 & (1 << i) != 0 {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(label)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl Serialize for AttackFlags {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttackFlags {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut flags = AttackFlags::NONE;
        for label in s.split('|').filter(|l| !l.is_empty()) {
            let f = AttackFlags::from_label(label)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown attack flag `{label}`")))?;
            flags.0 |= f.0;
        }
        Ok(flags)
    }
}

/// One row of telemetry per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub tick: u64,
    pub time_s: f64,
    pub consumption_mw: f64,
    pub production_mw: f64,
    pub true_f_hz: f64,
    /// Last value the controller saw; absent before the first delivery.
    pub measured_f_hz: Option<f64>,
    pub command_mw: f64,
    pub delivered_mw: f64,
    pub soc_mwh: f64,
    pub attacks: AttackFlags,
}

pub const TELEMETRY_HEADER: &str =
    "tick,time_s,consumption_mw,production_mw,true_f_hz,measured_f_hz,command_mw,delivered_mw,soc_mwh,attacks";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TelemetryLog {
    records: Vec<TelemetryRecord>,
}

impl TelemetryLog {
    pub fn with_capacity(n: usize) -> Self {
        TelemetryLog {
            records: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, rec: TelemetryRecord) {
        debug_assert_eq!(rec.tick, self.records.len() as u64);
        self.records.push(rec);
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn true_frequency(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.true_f_hz).collect()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    /// Writes every `decimation`-th record as CSV.
    pub fn write_csv(&self, mut w: impl Write, decimation: u32) -> std::io::Result<()> {
        let step = decimation.max(1) as usize;
        writeln!(w, "{TELEMETRY_HEADER}")?;
        for r in self.records.iter().step_by(step) {
            write!(
                w,
                "{},{},{},{},{},",
                r.tick, r.time_s, r.consumption_mw, r.production_mw, r.true_f_hz
            )?;
            if let Some(m) = r.measured_f_hz {
                write!(w, "{m}")?;
            }
            writeln!(
                w,
                ",{},{},{},{}",
                r.command_mw, r.delivered_mw, r.soc_mwh, r.attacks
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Oscillating,
    Deviating,
    SteadyStateError,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Oscillating => "oscillating",
            Classification::Deviating => "deviating",
            Classification::SteadyStateError => "steady_state_error",
        })
    }
}

/// Thresholds of the stability decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierParams {
    /// Settled window as a fraction of the run, taken from the end.
    pub settled_fraction: f64,
    pub min_window_s: f64,
    /// Hz/s.
    pub slope_thresh: f64,
    /// Minimum peak-to-peak for an oscillation, Hz.
    pub osc_thresh: f64,
    pub zc_thresh: u32,
    /// An oscillation must keep the signal away from its median: at most this
    /// share of the window may sit within `calm_band_hz` of the median.
    pub calm_max_share: f64,
    pub calm_band_hz: f64,
    pub sse_std: f64,
    pub sse_offset_hz: f64,
    /// Half-width of the band used for the abnormal share.
    pub abnormal_half_band_hz: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            settled_fraction: 0.25,
            min_window_s: 60.0,
            slope_thresh: 5e-4,
            osc_thresh: 0.05,
            zc_thresh: 10,
            calm_max_share: 0.5,
            calm_band_hz: 0.02,
            sse_std: 0.01,
            sse_offset_hz: 0.005,
            abnormal_half_band_hz: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub classification: Classification,
    pub settled_mean_hz: f64,
    pub settled_std_hz: f64,
    pub peak_to_peak_hz: f64,
    /// Share of the whole series outside ±`abnormal_half_band_hz`.
    pub abnormal_share: f64,
    /// Samples of the whole series outside the nominal band.
    pub band_violations: u64,
    pub settled_slope_hz_per_s: f64,
    pub settled_zero_crossings: u32,
    pub settled_calm_share: f64,
    pub settled_band_violations: u64,
    pub window_len: usize,
}

/// Fraction of samples with `|f − 50| > half_band_hz`.
pub fn abnormal_share(series: &[f64], half_band_hz: f64) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let n = series.iter().filter(|f| (*f - NOMINAL_HZ).abs() > half_band_hz).count();
    n as f64 / series.len() as f64
}

pub fn band_violations(series: &[f64]) -> u64 {
    series
        .iter()
        .filter(|f| **f < NOMINAL_BAND_HZ.0 || **f > NOMINAL_BAND_HZ.1)
        .count() as u64
}

fn in_band(f: f64) -> bool {
    (NOMINAL_BAND_HZ.0..=NOMINAL_BAND_HZ.1).contains(&f)
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Least-squares slope of `xs` against time, in units per second.
pub(crate) fn slope_per_s(xs: &[f64], tick_hz: u32) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = xs.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, x) in xs.iter().enumerate() {
        let dt = i as f64 - t_mean;
        num += dt * (x - x_mean);
        den += dt * dt;
    }
    num / den * tick_hz as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Number of samples in the settled window for a series of `len` samples.
pub fn settled_window_len(len: usize, tick_hz: u32, params: &ClassifierParams) -> usize {
    let min = (params.min_window_s * tick_hz as f64).ceil() as usize;
    let frac = (len as f64 * params.settled_fraction).ceil() as usize;
    frac.max(min)
}

/// Classifies a per-tick frequency series from its settled window `W`.
///
/// Rules, first match wins:
/// 1. deviating: `|slope(W)| > slope_thresh` and the last second of `W`
///    is outside the nominal band;
/// 2. oscillating: `p2p(W) > osc_thresh`, more than `zc_thresh` crossings of
///    `mean(W)`, and less than `calm_max_share` of `W` near its median;
/// 3. steady-state error: `std(W) < sse_std` and `|mean(W) − 50| > sse_offset_hz`;
/// 4. stable: all of `W` inside the nominal band;
/// 5. otherwise stable if `median(W)` is inside the band (isolated
///    excursions that recover), else steady-state error.
pub fn classify_stability(series: &[f64], tick_hz: u32, params: &ClassifierParams) -> Result<StabilityReport> {
    let wlen = settled_window_len(series.len(), tick_hz, params);
    if series.len() < wlen || series.is_empty() {
        return Err(Error::SeriesTooShort {
            needed: wlen.max(1),
            have: series.len(),
        });
    }
    if series.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite("frequency series"));
    }
    let w = &series[series.len() - wlen..];
    let (mean, std) = mean_std(w);
    let max = w.iter().copied().fold(f64::MIN, f64::max);
    let min = w.iter().copied().fold(f64::MAX, f64::min);
    let p2p = max - min;
    let slope = slope_per_s(w, tick_hz);
    let tail = &w[w.len().saturating_sub(tick_hz as usize)..];
    let endpoint = tail.iter().sum::<f64>() / tail.len() as f64;

    let mut crossings = 0u32;
    let mut prev_sign = 0i8;
    for x in w {
        let d = x - mean;
        let sign = if d > 0.0 { 1 } else if d < 0.0 { -1 } else { 0 };
        if sign != 0 {
            if prev_sign != 0 && sign != prev_sign {
                crossings += 1;
            }
            prev_sign = sign;
        }
    }
    let med = median(w);
    let calm_share = w.iter().filter(|x| (*x - med).abs() <= params.calm_band_hz).count() as f64 / w.len() as f64;
    let settled_band_violations = band_violations(w);

    let classification = if slope.abs() > params.slope_thresh && !in_band(endpoint) {
        Classification::Deviating
    } else if p2p > params.osc_thresh && crossings > params.zc_thresh && calm_share < params.calm_max_share {
        Classification::Oscillating
    } else if std < params.sse_std && (mean - NOMINAL_HZ).abs() > params.sse_offset_hz {
        Classification::SteadyStateError
    } else if settled_band_violations == 0 || in_band(med) {
        Classification::Stable
    } else {
        Classification::SteadyStateError
    };

    Ok(StabilityReport {
        classification,
        settled_mean_hz: mean,
        settled_std_hz: std,
        peak_to_peak_hz: p2p,
        abnormal_share: abnormal_share(series, params.abnormal_half_band_hz),
        band_violations: band_violations(series),
        settled_slope_hz_per_s: slope,
        settled_zero_crossings: crossings,
        settled_calm_share: calm_share,
        settled_band_violations,
        window_len: wlen,
    })
}

/// The exported report, with a fixed key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub classification: Classification,
    pub settled_mean_hz: f64,
    pub settled_std_hz: f64,
    pub peak_to_peak_hz: f64,
    pub abnormal_share: f64,
    pub band_violations: u64,
    pub seed: u64,
    pub scenario_hash: String,
}

impl RunReport {
    pub fn new(report: &StabilityReport, seed: u64, scenario_hash: impl Into<String>) -> Self {
        RunReport {
            classification: report.classification,
            settled_mean_hz: report.settled_mean_hz,
            settled_std_hz: report.settled_std_hz,
            peak_to_peak_hz: report.peak_to_peak_hz,
            abnormal_share: report.abnormal_share,
            band_violations: report.band_violations,
            seed,
            scenario_hash: scenario_hash.into(),
        }
    }
}

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const REPORT_FILE: &str = "report.json";

/// Writes `telemetry.csv` and `report.json` into `dir`.
pub fn export(log: &TelemetryLog, report: &RunReport, dir: &Path, decimation: u32) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(TELEMETRY_FILE);
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    log.write_csv(&mut w, decimation)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}
