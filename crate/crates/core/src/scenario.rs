//! Scenario files: the full, validated description of one run.
//!
//! Scenarios are TOML documents. Every section except `grid.consumption` has
//! defaults (2 MW / 2 MWh battery, one-second sensor interval, 0.02
//! consumption scaling), so a minimal file only names its consumption source:
//!
//! ```toml
//! [grid.consumption]
//! kind = "synthetic"
//! base_mw = 210.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{LoadAlterSpec, TriggerRule};
use crate::battery::BatterySpec;
use crate::controller::PidConfig;
use crate::grid::{self, ConsumptionSeries};
use crate::link::{LinkAttacks, LinkId, LinkTransport};
use crate::metrics::ClassifierParams;
use crate::rng::{RngStream, StreamId};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub clock: ClockConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub meter: MeterConfig,
    #[serde(default)]
    pub battery: BatteryConfig,
    #[serde(default)]
    pub controller: PidConfig,
    #[serde(default)]
    pub links: LinksConfig,
    #[serde(default)]
    pub attacks: AttackConfig,
    #[serde(default)]
    pub classifier: ClassifierParams,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Directory relative CSV paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClockConfig {
    pub tick_hz: u32,
    pub duration_s: f64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        // Minutes 38 to 120 of the reference day: 82 minutes.
        ClockConfig {
            tick_hz: 50,
            duration_s: 4920.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub consumption: ConsumptionSource,
    /// Applied to CSV data only; synthetic series are generated in scaled MW.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Per-tick uniform consumption noise, ±MW.
    #[serde(default = "default_noise")]
    pub noise_mw: f64,
}

fn default_scale() -> f64 {
    0.02
}

fn default_noise() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConsumptionSource {
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<(u32, u32)>,
    },
    Synthetic {
        #[serde(default = "default_base")]
        base_mw: f64,
        #[serde(default)]
        drift_mw_per_min: f64,
        /// Per-minute-sample jitter, ±MW.
        #[serde(default)]
        noise_mw: f64,
        /// Sample count; defaults to enough minutes to cover the run.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        minutes: Option<u32>,
    },
}

fn default_base() -> f64 {
    210.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeterConfig {
    pub interval_ticks: u32,
}

impl Default for MeterConfig {
    fn default() -> Self {
        MeterConfig { interval_ticks: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    pub power_rating_mw: f64,
    pub capacity_mwh: f64,
    pub initial_soc_mwh: f64,
    /// Number of identical BMS/battery units.
    pub count: u32,
    pub status_interval_ticks: u32,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        let spec = BatterySpec::default();
        BatteryConfig {
            power_rating_mw: spec.power_rating_mw,
            capacity_mwh: spec.capacity_mwh,
            initial_soc_mwh: spec.initial_soc_mwh,
            count: 1,
            status_interval_ticks: 50,
        }
    }
}

impl BatteryConfig {
    pub fn spec(&self) -> BatterySpec {
        BatterySpec {
            power_rating_mw: self.power_rating_mw,
            capacity_mwh: self.capacity_mwh,
            initial_soc_mwh: self.initial_soc_mwh,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinksConfig {
    pub s2c: LinkTransport,
    pub c2b: LinkTransport,
    #[serde(rename = "b2c-status")]
    pub b2c_status: LinkTransport,
}

impl LinksConfig {
    pub fn get(&self, id: LinkId) -> &LinkTransport {
        match id {
            LinkId::S2c => &self.s2c,
            LinkId::C2b => &self.c2b,
            LinkId::B2cStatus => &self.b2c_status,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    #[serde(skip_serializing_if = "LinkAttacks::is_empty")]
    pub s2c: LinkAttacks,
    #[serde(skip_serializing_if = "LinkAttacks::is_empty")]
    pub c2b: LinkAttacks,
    #[serde(rename = "b2c-status", skip_serializing_if = "LinkAttacks::is_empty")]
    pub b2c_status: LinkAttacks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load_alter: Option<LoadAlterSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub triggers: Vec<TriggerRule>,
}

impl AttackConfig {
    pub fn link(&self, id: LinkId) -> &LinkAttacks {
        match id {
            LinkId::S2c => &self.s2c,
            LinkId::C2b => &self.c2b,
            LinkId::B2cStatus => &self.b2c_status,
        }
    }

    pub fn link_mut(&mut self, id: LinkId) -> &mut LinkAttacks {
        match id {
            LinkId::S2c => &mut self.s2c,
            LinkId::C2b => &mut self.c2b,
            LinkId::B2cStatus => &mut self.b2c_status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub telemetry_decimation: u32,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            telemetry_decimation: 1,
        }
    }
}

impl ScenarioConfig {
    /// Default system with a flat synthetic 210 MW consumption and no attacks.
    pub fn baseline() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            clock: ClockConfig::default(),
            grid: GridConfig {
                consumption: ConsumptionSource::Synthetic {
                    base_mw: 210.0,
                    drift_mw_per_min: 0.0,
                    noise_mw: 0.05,
                    minutes: None,
                },
                scale: default_scale(),
                noise_mw: default_noise(),
            },
            meter: MeterConfig::default(),
            battery: BatteryConfig::default(),
            controller: PidConfig::default(),
            links: LinksConfig::default(),
            attacks: AttackConfig::default(),
            classifier: ClassifierParams::default(),
            outputs: OutputConfig::default(),
            base_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn total_ticks(&self) -> u64 {
        (self.clock.duration_s * self.clock.tick_hz as f64).round() as u64
    }

    /// Field checks plus a dry run of every trigger patch against this
    /// scenario.
    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        self.probe_triggers()
    }

    /// Each trigger patch must apply cleanly to the scenario as it stands.
    /// Patches are probed one at a time; a later patch that conflicts with an
    /// earlier one is only caught when it fires.
    pub fn probe_triggers(&self) -> Result<()> {
        for (i, t) in self.attacks.triggers.iter().enumerate() {
            for p in &t.set {
                let mut probe = self.clone();
                probe.attacks.triggers.clear();
                probe
                    .set_param(&p.path, p.value.clone())
                    .map_err(|e| Error::invalid(format!("attacks.triggers[{i}]"), e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn validate_fields(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.clock.tick_hz == 0 {
            return Err(Error::invalid("clock.tick_hz", "must be >= 1"));
        }
        if !(self.clock.duration_s > 0.0 && self.clock.duration_s.is_finite()) {
            return Err(Error::invalid("clock.duration_s", "must be > 0"));
        }
        if !(self.grid.scale > 0.0 && self.grid.scale.is_finite()) {
            return Err(Error::invalid("grid.scale", "must be > 0"));
        }
        if !(self.grid.noise_mw >= 0.0 && self.grid.noise_mw.is_finite()) {
            return Err(Error::invalid("grid.noise_mw", "must be >= 0"));
        }
        match &self.grid.consumption {
            ConsumptionSource::Synthetic { base_mw, noise_mw, minutes, .. } => {
                if !(*base_mw > 0.0) {
                    return Err(Error::invalid("grid.consumption.base_mw", "must be > 0"));
                }
                if !(*noise_mw >= 0.0) {
                    return Err(Error::invalid("grid.consumption.noise_mw", "must be >= 0"));
                }
                if minutes.is_some_and(|m| m < 2) {
                    return Err(Error::invalid("grid.consumption.minutes", "must be >= 2"));
                }
            }
            ConsumptionSource::Csv { path, window } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::invalid("grid.consumption.path", "must not be empty"));
                }
                if window.is_some_and(|(a, b)| b <= a) {
                    return Err(Error::invalid("grid.consumption.window", "end must exceed start"));
                }
            }
        }
        if self.meter.interval_ticks == 0 {
            return Err(Error::invalid("meter.interval_ticks", "must be >= 1"));
        }
        self.battery.spec().validate()?;
        if self.battery.count == 0 {
            return Err(Error::invalid("battery.count", "must be >= 1"));
        }
        if self.battery.status_interval_ticks == 0 {
            return Err(Error::invalid("battery.status_interval_ticks", "must be >= 1"));
        }
        self.controller.validate()?;
        for id in LinkId::ALL {
            self.links.get(id).validate(&format!("links.{id}"))?;
            self.attacks.link(id).validate(&format!("attacks.{id}"))?;
        }
        if let Some(la) = &self.attacks.load_alter {
            la.validate("attacks.load_alter")?;
        }
        for (i, t) in self.attacks.triggers.iter().enumerate() {
            if t.set.is_empty() {
                return Err(Error::invalid(format!("attacks.triggers[{i}].set"), "must not be empty"));
            }
        }
        let c = &self.classifier;
        if !(c.settled_fraction > 0.0 && c.settled_fraction <= 1.0) {
            return Err(Error::invalid("classifier.settled_fraction", "must be in (0, 1]"));
        }
        if self.outputs.telemetry_decimation == 0 {
            return Err(Error::invalid("outputs.telemetry_decimation", "must be >= 1"));
        }
        Ok(())
    }

    /// Loads or generates the consumption series and checks it covers the run.
    pub fn load_consumption(&self) -> Result<ConsumptionSeries> {
        let series = match &self.grid.consumption {
            ConsumptionSource::Csv { path, window } => {
                let resolved = match &self.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                grid::load_consumption_csv(resolved, self.grid.scale, *window)?
            }
            ConsumptionSource::Synthetic { base_mw, drift_mw_per_min, noise_mw, minutes } => {
                let minutes = minutes.unwrap_or_else(|| (self.clock.duration_s / 60.0).ceil() as u32 + 1);
                let mut rng = RngStream::new(self.seed, StreamId::SyntheticConsumption);
                grid::generate_synthetic_consumption(*base_mw, *drift_mw_per_min, *noise_mw, minutes.max(2), &mut rng)?
            }
        };
        if series.duration_s() + 1e-9 < self.clock.duration_s {
            return Err(Error::Consumption(format!(
                "series covers {} s but the run lasts {} s",
                series.duration_s(),
                self.clock.duration_s
            )));
        }
        Ok(series)
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes to JSON");
        hex::encode(Sha256::digest(&json))
    }

    /// Sets the scalar or table at dotted `path` and revalidates. Missing
    /// optional tables along the path are created with their defaults.
    /// Trigger patches are re-probed only when the trigger list changes.
    pub fn set_param(&mut self, path: &str, value: serde_json::Value) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(Error::BadPath(path.to_string()));
        }
        let mut node = &mut doc;
        for key in &keys[..keys.len() - 1] {
            let obj = node.as_object_mut().ok_or_else(|| Error::BadPath(path.to_string()))?;
            let child = obj
                .entry(key.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
            if child.is_null() {
                *child = serde_json::Value::Object(Default::default());
            }
            node = child;
        }
        let obj = node.as_object_mut().ok_or_else(|| Error::BadPath(path.to_string()))?;
        obj.insert(keys[keys.len() - 1].to_string(), value);

        let mut next: ScenarioConfig = serde_json::from_value(doc).map_err(|e| {
            if e.to_string().contains("unknown field") {
                Error::BadPath(path.to_string())
            } else {
                Error::invalid(path, e.to_string())
            }
        })?;
        next.base_dir = self.base_dir.clone();
        next.validate_fields()?;
        if next.attacks.triggers != self.attacks.triggers {
            next.probe_triggers()?;
        }
        *self = next;
        Ok(())
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = ScenarioConfig::from_toml_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

/// JSON number for a sweep value, integral when the value has no fraction so
/// integer fields accept it.
pub fn number_value(v: f64) -> serde_json::Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        serde_json::Value::from(v as i64)
    } else {
        serde_json::Value::from(v)
    }
}
