//! The engine thread: owns the `Engine`, paces it against the wall clock and
//! answers requests from the HTTP side.

use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use bess_sim::engine::{Ack, Engine, EngineCommand, EngineSnapshot, RunStatus, StepOutcome};
use bess_sim::metrics::{classify_stability, ClassifierParams, StabilityReport};
use bess_sim::scenario::{AttackConfig, ScenarioConfig};
use serde::Serialize;
use serde_json::Value;
use tokio::sync::{broadcast, oneshot};

use crate::telemetry::Frame;
use crate::ServiceConfig;

#[derive(Debug, Clone, Serialize)]
pub struct StateView {
    #[serde(flatten)]
    pub snapshot: EngineSnapshot,
    /// Runtime error that halted the engine thread, if any.
    pub fault: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportView {
    pub tick: u64,
    pub window_s: f64,
    pub report: Option<StabilityReport>,
}

pub(crate) enum Request {
    Command(EngineCommand, oneshot::Sender<bess_sim::Result<Ack>>),
    State(oneshot::Sender<StateView>),
    Scenario(oneshot::Sender<ScenarioConfig>),
    Report(oneshot::Sender<ReportView>),
    Shutdown,
}

/// Cheap handle to the engine thread. The thread exits when the last handle
/// is dropped.
#[derive(Clone)]
pub struct EngineHandle {
    inner: Arc<Inner>,
}

struct Inner {
    requests: mpsc::Sender<Request>,
    frames: broadcast::Sender<Arc<Frame>>,
    thread: std::sync::Mutex<Option<JoinHandle<()>>>,
}

impl Drop for Inner {
    fn drop(&mut self) {
        let _ = self.requests.send(Request::Shutdown);
        if let Some(t) = self.thread.lock().ok().and_then(|mut t| t.take()) {
            let _ = t.join();
        }
    }
}

/// The engine thread went away before answering.
#[derive(Debug, Clone, Copy)]
pub struct EngineGone;

impl EngineHandle {
    /// Builds the engine (validation errors surface here) and starts its
    /// thread, paused at tick 0.
    pub fn spawn(config: ScenarioConfig, opts: ServiceConfig) -> bess_sim::Result<Self> {
        let mut engine = Engine::new(config)?;
        engine.enqueue_command(EngineCommand::Pause)?;
        engine.step()?;
        let (req_tx, req_rx) = mpsc::channel();
        let (frames, _) = broadcast::channel(opts.frame_buffer.max(1));
        let worker = Worker::new(engine, frames.clone(), opts);
        let thread = std::thread::Builder::new()
            .name("bess-engine".into())
            .spawn(move || worker.run(req_rx))
            .expect("spawn engine thread");
        Ok(EngineHandle {
            inner: Arc::new(Inner {
                requests: req_tx,
                frames,
                thread: std::sync::Mutex::new(Some(thread)),
            }),
        })
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<Frame>> {
        self.inner.frames.subscribe()
    }

    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Request) -> Result<T, EngineGone> {
        let (tx, rx) = oneshot::channel();
        self.inner.requests.send(make(tx)).map_err(|_| EngineGone)?;
        rx.await.map_err(|_| EngineGone)
    }

    pub async fn command(&self, cmd: EngineCommand) -> Result<bess_sim::Result<Ack>, EngineGone> {
        self.ask(|tx| Request::Command(cmd, tx)).await
    }

    pub async fn state(&self) -> Result<StateView, EngineGone> {
        self.ask(Request::State).await
    }

    pub async fn scenario(&self) -> Result<ScenarioConfig, EngineGone> {
        self.ask(Request::Scenario).await
    }

    pub async fn report(&self) -> Result<ReportView, EngineGone> {
        self.ask(Request::Report).await
    }
}

struct Worker {
    engine: Engine,
    frames: broadcast::Sender<Arc<Frame>>,
    window_s: f64,
    params: ClassifierParams,
    /// Wall instant and tick from which pacing is measured.
    anchor: Option<(Instant, u64)>,
    fault: Option<String>,
    specs_for: AttackConfig,
    specs: Arc<Value>,
    report: Option<Arc<StabilityReport>>,
}

impl Worker {
    fn new(engine: Engine, frames: broadcast::Sender<Arc<Frame>>, opts: ServiceConfig) -> Self {
        let specs_for = engine.config().attacks.clone();
        let specs = Arc::new(serde_json::to_value(&specs_for).expect("attacks serialize"));
        Worker {
            engine,
            frames,
            window_s: opts.report_window_s,
            params: ClassifierParams {
                settled_fraction: 1.0,
                ..ClassifierParams::default()
            },
            anchor: None,
            fault: None,
            specs_for,
            specs,
            report: None,
        }
    }

    fn run(mut self, requests: mpsc::Receiver<Request>) {
        loop {
            let got = match self.deadline() {
                None => requests.recv().map_err(|_| RecvTimeoutError::Disconnected),
                Some(at) => requests.recv_timeout(at.saturating_duration_since(Instant::now())),
            };
            match got {
                Ok(Request::Shutdown) | Err(RecvTimeoutError::Disconnected) => return,
                Ok(req) => self.handle(req),
                Err(RecvTimeoutError::Timeout) => self.tick(),
            }
        }
    }

    /// When the next tick is due; `None` while idle.
    fn deadline(&self) -> Option<Instant> {
        if self.fault.is_some() {
            return None;
        }
        if self.engine.status() != RunStatus::Running {
            return None;
        }
        let Some((wall, tick)) = self.anchor else {
            return Some(Instant::now());
        };
        let rate = self.engine.speed() * self.engine.clock().tick_hz() as f64;
        let ahead = self.engine.clock().tick().saturating_sub(tick) as f64 / rate;
        Some(wall + Duration::from_secs_f64(ahead))
    }

    fn handle(&mut self, req: Request) {
        match req {
            Request::Command(cmd, reply) => {
                let rewind = matches!(cmd, EngineCommand::Reset | EngineCommand::Resume | EngineCommand::SetSpeed(_));
                let res = self.engine.enqueue_command(cmd);
                let accepted = res.is_ok();
                let _ = reply.send(res);
                if accepted {
                    if rewind {
                        self.anchor = None;
                    }
                    // Apply it now so the next request sees its effect.
                    self.tick();
                }
            }
            Request::State(reply) => {
                let _ = reply.send(StateView {
                    snapshot: self.engine.snapshot(),
                    fault: self.fault.clone(),
                });
            }
            Request::Scenario(reply) => {
                let _ = reply.send(self.engine.config().clone());
            }
            Request::Report(reply) => {
                let _ = reply.send(ReportView {
                    tick: self.engine.clock().tick(),
                    window_s: self.window_s,
                    report: self.report.as_deref().copied(),
                });
            }
            Request::Shutdown => {}
        }
    }

    fn tick(&mut self) {
        if self.fault.is_some() {
            return;
        }
        let before = self.engine.clock().tick();
        match self.engine.step() {
            Ok(StepOutcome::Advanced) => {
                if self.engine.clock().tick() <= before {
                    // A reset ran at this boundary.
                    self.report = None;
                }
                self.after_advance();
            }
            Ok(_) => {
                if self.engine.clock().tick() < before {
                    self.report = None;
                }
                self.anchor = None;
            }
            Err(e) => {
                self.fault = Some(e.to_string());
                self.anchor = None;
            }
        }
    }

    fn after_advance(&mut self) {
        if self.anchor.is_none() {
            let executed = self.engine.clock().tick() - 1;
            self.anchor = Some((Instant::now(), executed));
        }
        let rec = *self.engine.log().records().last().expect("advanced tick is logged");
        let tick_hz = self.engine.clock().tick_hz() as u64;
        if (rec.tick + 1).is_multiple_of(tick_hz) {
            self.refresh_report();
        }
        if self.frames.receiver_count() == 0 {
            return;
        }
        if self.engine.config().attacks != self.specs_for {
            self.specs_for = self.engine.config().attacks.clone();
            self.specs = Arc::new(serde_json::to_value(&self.specs_for).expect("attacks serialize"));
        }
        let _ = self.frames.send(Arc::new(Frame {
            record: rec,
            attack_specs: self.specs.clone(),
            report: self.report.clone(),
        }));
    }

    fn refresh_report(&mut self) {
        let tick_hz = self.engine.clock().tick_hz();
        let recs = self.engine.log().records();
        let keep = (self.window_s * tick_hz as f64).round() as usize;
        let series: Vec<f64> = recs[recs.len().saturating_sub(keep)..].iter().map(|r| r.true_f_hz).collect();
        // Too short until a minimum window exists.
        self.report = classify_stability(&series, tick_hz, &self.params).ok().map(Arc::new);
    }
}
