//! The tick scheduler.
//!
//! Per tick, in this order: pending commands, grid step (consumption, load
//! altering, frequency), meter sample, link deliveries (s2c, then c2b, then
//! status), controller, battery actuation, telemetry. Triggers are evaluated
//! after the telemetry record and their patches land on the next boundary.

use std::collections::{BTreeMap, VecDeque};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attack::{
    apply_load_alteration, evaluate_triggers, window_active, LoadAlterSpec, LoadAlterState, TriggerSnapshot,
    TriggerState,
};
use crate::battery::{Bms, StatusPacket};
use crate::clock::SimClock;
use crate::controller::{BmsInfo, CloudController, ControlPacket};
use crate::grid::{ConsumptionSeries, GridModel};
use crate::link::{Link, LinkAttacks, LinkId, LinkStats};
use crate::meter::{FrequencyMeter, MeasurementPacket};
use crate::metrics::{AttackFlags, TelemetryLog, TelemetryRecord};
use crate::rng::{RngStream, StreamId};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

/// What a `patch_attack` command addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackTarget {
    Link(LinkId),
    /// Load altering and triggers.
    Grid,
}

impl std::str::FromStr for AttackTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "grid" {
            Ok(AttackTarget::Grid)
        } else {
            s.parse().map(AttackTarget::Link)
        }
    }
}

impl std::fmt::Display for AttackTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackTarget::Link(id) => id.fmt(f),
            AttackTarget::Grid => f.write_str("grid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineCommand {
    Pause,
    Resume,
    /// Back to tick 0 with the same seed and the current effective scenario.
    Reset,
    /// Simulated seconds per wall-clock second when paced (1.0 = real time);
    /// never affects results.
    SetSpeed(f64),
    /// Partial attack spec. Keys may be nested tables or dotted paths
    /// (`{"fdi.offset": 0.2}`); `null` removes an attack.
    PatchAttack { target: AttackTarget, patch: Value },
    PatchScenario { path: String, value: Value },
    Stop,
}

#[derive(Debug, Clone)]
struct QueuedCommand {
    cmd: EngineCommand,
    #[allow(dead_code)]
    issued_at: SystemTime,
    from_trigger: Option<usize>,
}

/// Acknowledgement of an accepted command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ack {
    /// First tick executed with the command applied.
    pub effective_tick: u64,
    /// Full effective spec of the patched target, as it will be after the
    /// command applies.
    pub effective: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Paused,
    Finished,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    Paused,
    Finished,
    Stopped,
}

/// Counters for things the engine tolerated during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EngineEvents {
    pub trigger_fires: u64,
    pub rejected_trigger_patches: u64,
    pub misaddressed_commands: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineSnapshot {
    pub tick: u64,
    pub time_s: f64,
    pub total_ticks: u64,
    pub status: RunStatus,
    /// Pacing factor, simulated seconds per wall-clock second.
    pub speed: f64,
    pub last: Option<TelemetryRecord>,
    pub links: BTreeMap<LinkId, LinkStats>,
    pub events: EngineEvents,
}

pub struct Engine {
    config: ScenarioConfig,
    /// Config with every queued command applied; commands validate against it.
    shadow: ScenarioConfig,
    series: ConsumptionSeries,
    clock: SimClock,
    total_ticks: u64,
    grid: GridModel,
    meter: FrequencyMeter,
    controller: CloudController,
    bmss: Vec<Bms>,
    s2c: Link<MeasurementPacket>,
    c2b: Link<ControlPacket>,
    b2c: Link<StatusPacket>,
    la_state: LoadAlterState,
    la_rng: RngStream,
    trigger_states: Vec<TriggerState>,
    battery_power_mw: f64,
    pending: VecDeque<QueuedCommand>,
    scheduled: BTreeMap<u64, Vec<EngineCommand>>,
    status: RunStatus,
    speed: f64,
    events: EngineEvents,
    log: TelemetryLog,
}

struct Federates {
    grid: GridModel,
    meter: FrequencyMeter,
    controller: CloudController,
    bmss: Vec<Bms>,
    s2c: Link<MeasurementPacket>,
    c2b: Link<ControlPacket>,
    b2c: Link<StatusPacket>,
}

fn build(cfg: &ScenarioConfig, series: &ConsumptionSeries) -> Result<Federates> {
    let tick_hz = cfg.clock.tick_hz;
    let grid = GridModel::new(
        series.clone(),
        cfg.grid.noise_mw,
        RngStream::new(cfg.seed, StreamId::ConsumptionNoise),
    )?;
    let meter = FrequencyMeter::new(cfg.meter.interval_ticks)?;
    let spec = cfg.battery.spec();
    let registry = (0..cfg.battery.count).map(|_| BmsInfo::new(spec)).collect();
    let controller = CloudController::new(
        cfg.controller,
        registry,
        tick_hz,
        cfg.meter.interval_ticks as f64 / tick_hz as f64,
    )?;
    let bmss = (0..cfg.battery.count as usize)
        .map(|i| Bms::new(i, spec, cfg.battery.status_interval_ticks))
        .collect::<Result<_>>()?;
    let link = |id| (*cfg.links.get(id), *cfg.attacks.link(id));
    let (t, a) = link(LinkId::S2c);
    let s2c = Link::new(LinkId::S2c, t, a, tick_hz, cfg.seed)?;
    let (t, a) = link(LinkId::C2b);
    let c2b = Link::new(LinkId::C2b, t, a, tick_hz, cfg.seed)?;
    let (t, a) = link(LinkId::B2cStatus);
    let b2c = Link::new(LinkId::B2cStatus, t, a, tick_hz, cfg.seed)?;
    Ok(Federates {
        grid,
        meter,
        controller,
        bmss,
        s2c,
        c2b,
        b2c,
    })
}

/// Turns `{"fdi.offset": 0.2}` into `{"fdi": {"offset": 0.2}}`.
fn expand_dotted(patch: &Value) -> Result<Value> {
    let obj = patch
        .as_object()
        .ok_or_else(|| Error::invalid("patch", "must be a JSON object"))?;
    let mut out = serde_json::Map::new();
    for (key, v) in obj {
        let v = if v.is_object() { expand_dotted(v)? } else { v.clone() };
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().expect("split yields one part");
        let mut node = &mut out;
        for p in parts {
            let child = node
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
            if !child.is_object() {
                *child = Value::Object(Default::default());
            }
            node = child.as_object_mut().expect("just made an object");
        }
        match (node.get_mut(last), v) {
            (Some(existing @ Value::Object(_)), Value::Object(incoming)) => {
                merge(existing, &Value::Object(incoming));
            }
            (_, v) => {
                node.insert(last.to_string(), v);
            }
        }
    }
    Ok(Value::Object(out))
}

/// Deep merge; `null` in `patch` removes the key.
fn merge(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else if let Some(existing) = t.get_mut(k).filter(|e| e.is_object() && v.is_object()) {
                    merge(existing, v);
                } else {
                    t.insert(k.clone(), v.clone());
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GridAttacks {
    #[serde(skip_serializing_if = "Option::is_none")]
    load_alter: Option<LoadAlterSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    triggers: Vec<crate::attack::TriggerRule>,
}

fn unknown_field_to_invalid(prefix: String, e: serde_json::Error) -> Error {
    Error::invalid(prefix, e.to_string())
}

/// `cfg` with an attack patch merged in, validated.
fn patched_attacks(cfg: &ScenarioConfig, target: AttackTarget, patch: &Value) -> Result<ScenarioConfig> {
    let patch = expand_dotted(patch)?;
    let mut next = cfg.clone();
    match target {
        AttackTarget::Link(id) => {
            let mut doc = serde_json::to_value(cfg.attacks.link(id))?;
            merge(&mut doc, &patch);
            let attacks: LinkAttacks =
                serde_json::from_value(doc).map_err(|e| unknown_field_to_invalid(format!("attacks.{id}"), e))?;
            *next.attacks.link_mut(id) = attacks;
        }
        AttackTarget::Grid => {
            let current = GridAttacks {
                load_alter: cfg.attacks.load_alter,
                triggers: cfg.attacks.triggers.clone(),
            };
            let mut doc = serde_json::to_value(&current)?;
            merge(&mut doc, &patch);
            let grid: GridAttacks =
                serde_json::from_value(doc).map_err(|e| unknown_field_to_invalid("attacks".into(), e))?;
            next.attacks.load_alter = grid.load_alter;
            next.attacks.triggers = grid.triggers;
        }
    }
    next.validate_fields()?;
    if next.attacks.triggers != cfg.attacks.triggers {
        next.probe_triggers()?;
    }
    Ok(next)
}

fn target_view(cfg: &ScenarioConfig, target: AttackTarget) -> Value {
    match target {
        AttackTarget::Link(id) => serde_json::to_value(cfg.attacks.link(id)),
        AttackTarget::Grid => serde_json::to_value(GridAttacks {
            load_alter: cfg.attacks.load_alter,
            triggers: cfg.attacks.triggers.clone(),
        }),
    }
    .expect("attack specs serialize")
}

/// Rejects changes to fields fixed for the lifetime of a run.
fn check_live_patchable(from: &ScenarioConfig, to: &ScenarioConfig) -> Result<()> {
    let fixed = [
        ("seed", from.seed != to.seed),
        ("clock", from.clock != to.clock),
        ("grid.consumption", from.grid.consumption != to.grid.consumption),
        ("grid.scale", from.grid.scale != to.grid.scale),
        ("battery", from.battery != to.battery),
    ];
    for (field, changed) in fixed {
        if changed {
            return Err(Error::invalid(field, "cannot change while a run is loaded"));
        }
    }
    Ok(())
}

impl Engine {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let series = config.load_consumption()?;
        Self::with_series(config, series)
    }

    /// Builds an engine over an already loaded consumption series.
    pub fn with_series(config: ScenarioConfig, series: ConsumptionSeries) -> Result<Self> {
        config.validate()?;
        if series.duration_s() + 1e-9 < config.clock.duration_s {
            return Err(Error::Consumption(format!(
                "series covers {} s but the run lasts {} s",
                series.duration_s(),
                config.clock.duration_s
            )));
        }
        let f = build(&config, &series)?;
        let total_ticks = config.total_ticks();
        Ok(Engine {
            shadow: config.clone(),
            clock: SimClock::new(config.clock.tick_hz),
            total_ticks,
            grid: f.grid,
            meter: f.meter,
            controller: f.controller,
            bmss: f.bmss,
            s2c: f.s2c,
            c2b: f.c2b,
            b2c: f.b2c,
            la_state: LoadAlterState::default(),
            la_rng: RngStream::new(config.seed, StreamId::LoadAlterRandom),
            trigger_states: vec![TriggerState::default(); config.attacks.triggers.len()],
            battery_power_mw: 0.0,
            pending: VecDeque::new(),
            scheduled: BTreeMap::new(),
            status: RunStatus::Running,
            speed: 1.0,
            events: EngineEvents::default(),
            log: TelemetryLog::with_capacity(total_ticks as usize),
            series,
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn total_ticks(&self) -> u64 {
        self.total_ticks
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn log(&self) -> &TelemetryLog {
        &self.log
    }

    pub fn into_log(self) -> TelemetryLog {
        self.log
    }

    pub fn events(&self) -> EngineEvents {
        self.events
    }

    pub fn controller(&self) -> &CloudController {
        &self.controller
    }

    pub fn grid(&self) -> &GridModel {
        &self.grid
    }

    pub fn bmss(&self) -> &[Bms] {
        &self.bmss
    }

    pub fn trigger_states(&self) -> &[TriggerState] {
        &self.trigger_states
    }

    pub fn link_stats(&self) -> BTreeMap<LinkId, LinkStats> {
        BTreeMap::from([
            (LinkId::S2c, self.s2c.stats()),
            (LinkId::C2b, self.c2b.stats()),
            (LinkId::B2cStatus, self.b2c.stats()),
        ])
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            tick: self.clock.tick(),
            time_s: self.clock.time_s(),
            total_ticks: self.total_ticks,
            status: self.status,
            speed: self.speed,
            last: self.log.records().last().copied(),
            links: self.link_stats(),
            events: self.events,
        }
    }

    /// Validates `cmd` and queues it for the next tick boundary.
    pub fn enqueue_command(&mut self, cmd: EngineCommand) -> Result<Ack> {
        if self.status == RunStatus::Stopped && cmd != EngineCommand::Reset {
            return Err(Error::Stopped);
        }
        let effective = self.validate_against_shadow(&cmd)?;
        self.pending.push_back(QueuedCommand {
            cmd,
            issued_at: SystemTime::now(),
            from_trigger: None,
        });
        Ok(Ack {
            effective_tick: self.clock.tick(),
            effective,
        })
    }

    /// Queues `cmd` to apply at the boundary before `tick` executes. Used for
    /// reproducible command schedules.
    pub fn schedule_command(&mut self, tick: u64, cmd: EngineCommand) -> Result<()> {
        if tick < self.clock.tick() {
            return Err(Error::invalid("tick", "already executed"));
        }
        self.validate_against_shadow(&cmd)?;
        self.scheduled.entry(tick).or_default().push(cmd);
        Ok(())
    }

    fn validate_against_shadow(&mut self, cmd: &EngineCommand) -> Result<Value> {
        match cmd {
            EngineCommand::PatchAttack { target, patch } => {
                let next = patched_attacks(&self.shadow, *target, patch)?;
                let view = target_view(&next, *target);
                self.shadow = next;
                Ok(view)
            }
            EngineCommand::PatchScenario { path, value } => {
                let mut next = self.shadow.clone();
                next.set_param(path, value.clone())?;
                check_live_patchable(&self.shadow, &next)?;
                self.shadow = next;
                Ok(serde_json::to_value(&self.shadow)?)
            }
            EngineCommand::SetSpeed(s) => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::invalid("speed", "must be > 0"));
                }
                Ok(Value::from(*s))
            }
            EngineCommand::Pause | EngineCommand::Resume | EngineCommand::Reset | EngineCommand::Stop => {
                Ok(serde_json::to_value(&self.shadow)?)
            }
        }
    }

    fn reset(&mut self) -> Result<()> {
        let f = build(&self.config, &self.series)?;
        self.clock = SimClock::new(self.config.clock.tick_hz);
        self.grid = f.grid;
        self.meter = f.meter;
        self.controller = f.controller;
        self.bmss = f.bmss;
        self.s2c = f.s2c;
        self.c2b = f.c2b;
        self.b2c = f.b2c;
        self.la_state = LoadAlterState::default();
        self.la_rng = RngStream::new(self.config.seed, StreamId::LoadAlterRandom);
        self.trigger_states = vec![TriggerState::default(); self.config.attacks.triggers.len()];
        self.battery_power_mw = 0.0;
        self.scheduled.clear();
        self.events = EngineEvents::default();
        self.log.clear();
        if self.status != RunStatus::Paused {
            self.status = RunStatus::Running;
        }
        Ok(())
    }

    /// Pushes a new effective config into the live federates.
    fn apply_config(&mut self, next: ScenarioConfig) -> Result<()> {
        check_live_patchable(&self.config, &next)?;
        let tick_hz = next.clock.tick_hz;
        self.controller.set_config(next.controller)?;
        if next.meter != self.config.meter {
            self.meter.set_interval_ticks(next.meter.interval_ticks)?;
            self.controller
                .set_nominal_dt(next.meter.interval_ticks as f64 / tick_hz as f64);
        }
        self.grid.set_noise_mw(next.grid.noise_mw);
        self.s2c.set_transport(next.links.s2c)?;
        self.c2b.set_transport(next.links.c2b)?;
        self.b2c.set_transport(next.links.b2c_status)?;
        self.s2c.set_attacks(next.attacks.s2c)?;
        self.c2b.set_attacks(next.attacks.c2b)?;
        self.b2c.set_attacks(next.attacks.b2c_status)?;
        if next.attacks.load_alter != self.config.attacks.load_alter {
            self.la_state = LoadAlterState::default();
        }
        if next.attacks.triggers != self.config.attacks.triggers {
            self.trigger_states = vec![TriggerState::default(); next.attacks.triggers.len()];
        }
        self.config = next;
        Ok(())
    }

    fn apply(&mut self, q: QueuedCommand) -> Result<()> {
        match q.cmd {
            EngineCommand::Pause => {
                if self.status == RunStatus::Running {
                    self.status = RunStatus::Paused;
                }
            }
            EngineCommand::Resume => {
                if self.status == RunStatus::Paused {
                    self.status = RunStatus::Running;
                }
            }
            EngineCommand::Reset => self.reset()?,
            EngineCommand::SetSpeed(s) => self.speed = s,
            EngineCommand::Stop => self.status = RunStatus::Stopped,
            EngineCommand::PatchAttack { target, patch } => {
                let next = patched_attacks(&self.config, target, &patch)?;
                self.apply_config(next)?;
            }
            EngineCommand::PatchScenario { path, value } => {
                let mut next = self.config.clone();
                let applied = next.set_param(&path, value).and_then(|_| self.apply_config(next));
                if let Err(e) = applied {
                    match q.from_trigger {
                        Some(rule) => {
                            self.events.rejected_trigger_patches += 1;
                            if let Some(st) = self.trigger_states.get_mut(rule) {
                                st.disabled = true;
                            }
                        }
                        None => return Err(e),
                    }
                }
            }
        }
        Ok(())
    }

    fn drain_commands(&mut self) -> Result<()> {
        let tick = self.clock.tick();
        if let Some(cmds) = self.scheduled.remove(&tick) {
            for cmd in cmds {
                self.pending.push_back(QueuedCommand {
                    cmd,
                    issued_at: SystemTime::now(),
                    from_trigger: None,
                });
            }
        }
        while let Some(q) = self.pending.pop_front() {
            // Validated at enqueue time against the same sequence of
            // states, so this only fails for scheduled commands that raced a
            // reset.
            if self.apply(q).is_err() {
                self.events.misaddressed_commands += 1;
            }
        }
        self.shadow = self.config.clone();
        Ok(())
    }

    /// Executes one tick unless paused, stopped or finished.
    pub fn step(&mut self) -> Result<StepOutcome> {
        self.drain_commands()?;
        match self.status {
            RunStatus::Paused => return Ok(StepOutcome::Paused),
            RunStatus::Stopped => return Ok(StepOutcome::Stopped),
            _ => {}
        }
        if self.clock.tick() >= self.total_ticks {
            self.status = RunStatus::Finished;
            return Ok(StepOutcome::Finished);
        }

        let tick = self.clock.tick();
        let t_s = self.clock.time_s();
        let dt_s = self.clock.dt_s();
        let mut flags = AttackFlags::NONE;

        let la_effect = match &self.config.attacks.load_alter {
            Some(spec) => {
                if window_active(t_s, spec.start_s, spec.stop_s) {
                    flags.insert("grid:load-alter");
                }
                apply_load_alteration(spec, t_s, tick, self.battery_power_mw, &mut self.la_state, &mut self.la_rng)
            }
            None => 0.0,
        };
        let grid = self.grid.step(t_s, la_effect, self.battery_power_mw)?;

        if let Some(pkt) = self.meter.maybe_sample(tick, grid.frequency_hz)? {
            self.s2c.transmit(pkt, tick);
        }

        let measurements = self.s2c.deliver_due(tick);
        let commands = self.c2b.deliver_due(tick);
        let statuses = self.b2c.deliver_due(tick);

        for st in &statuses {
            self.controller.on_status(st);
        }
        for m in &measurements {
            for cp in self.controller.on_measurement(m, tick) {
                self.c2b.transmit(cp, tick);
            }
        }

        for cp in &commands {
            if let Some(bms) = self.bmss.get_mut(cp.bms) {
                bms.receive_command(cp.power_command_mw);
            }
        }
        let mut delivered = 0.0;
        let mut soc = 0.0;
        for bms in &mut self.bmss {
            let s = bms.actuate(dt_s);
            delivered += s.delivered_power_mw;
            soc += s.soc_mwh;
            if let Some(pkt) = bms.emit_status(tick) {
                self.b2c.transmit(pkt, tick);
            }
        }
        self.battery_power_mw = delivered;

        for id in [LinkId::S2c, LinkId::C2b] {
            for label in self.config.attacks.link(id).active_labels(t_s) {
                flags.insert(&format!("{id}:{label}"));
            }
        }
        if !self.config.attacks.b2c_status.is_empty() {
            flags.insert("b2c-status:any");
        }
        if self.trigger_states.iter().any(|s| s.fired > 0) {
            flags.insert("trigger");
        }

        self.log.push(TelemetryRecord {
            tick,
            time_s: t_s,
            consumption_mw: grid.consumption_mw,
            production_mw: grid.production_mw(),
            true_f_hz: grid.frequency_hz,
            measured_f_hz: self.controller.last_measured_hz(),
            command_mw: self.controller.last_command_mw(),
            delivered_mw: delivered,
            soc_mwh: soc,
            attacks: flags,
        });

        if !self.config.attacks.triggers.is_empty() {
            let snap = TriggerSnapshot {
                time_s: t_s,
                true_f_hz: grid.frequency_hz,
                measured_f_hz: self.controller.last_measured_hz(),
                battery_power_mw: delivered,
                soc_mwh: soc,
            };
            let fired = evaluate_triggers(&self.config.attacks.triggers, &mut self.trigger_states, &snap);
            for rule in fired {
                self.events.trigger_fires += 1;
                for p in &self.config.attacks.triggers[rule].set {
                    self.pending.push_back(QueuedCommand {
                        cmd: EngineCommand::PatchScenario {
                            path: p.path.clone(),
                            value: p.value.clone(),
                        },
                        issued_at: SystemTime::now(),
                        from_trigger: Some(rule),
                    });
                }
            }
        }

        self.clock.advance();
        if self.clock.tick() >= self.total_ticks {
            self.status = RunStatus::Finished;
        }
        Ok(StepOutcome::Advanced)
    }

    /// Executes up to `ticks` ticks; returns early when paused, stopped or
    /// finished. Returns the number of ticks executed.
    pub fn run_ticks(&mut self, ticks: u64) -> Result<u64> {
        let mut done = 0;
        while done < ticks {
            match self.step()? {
                StepOutcome::Advanced => done += 1,
                _ => break,
            }
        }
        Ok(done)
    }

    /// Runs `duration_s` of simulated time (or less if stopped).
    pub fn run(&mut self, duration_s: f64) -> Result<&TelemetryLog> {
        if !(duration_s > 0.0) {
            return Err(Error::invalid("duration_s", "must be > 0"));
        }
        let ticks = self.clock.seconds_to_ticks(duration_s);
        self.run_ticks(ticks)?;
        Ok(&self.log)
    }

    /// Runs until the scenario duration is reached, or a pause or stop.
    pub fn run_to_end(&mut self) -> Result<&TelemetryLog> {
        self.run_ticks(u64::MAX)?;
        Ok(&self.log)
    }
}
