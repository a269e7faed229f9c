//! Telemetry frames and per-subscriber decimation with latest-wins
//! coalescing.

use std::sync::Arc;

use bess_sim::metrics::{StabilityReport, TelemetryRecord};
use serde::Serialize;
use serde_json::Value;
use tokio::sync::broadcast::{self, error::RecvError, error::TryRecvError};

/// One tick as published by the engine thread. Attack specs and the rolling
/// report are shared between frames until they change.
#[derive(Debug, Clone)]
pub struct Frame {
    pub record: TelemetryRecord,
    pub attack_specs: Arc<Value>,
    pub report: Option<Arc<StabilityReport>>,
}

/// Wire form of a frame. Record fields keep their telemetry names.
#[derive(Debug, Serialize)]
pub struct TelemetryFrame<'a> {
    #[serde(flatten)]
    pub record: &'a TelemetryRecord,
    pub attack_specs: &'a Value,
    pub report: Option<&'a StabilityReport>,
    /// Frames between this one and the previous one sent were skipped.
    pub gap: bool,
}

impl Frame {
    pub fn to_json(&self, gap: bool) -> String {
        serde_json::to_string(&TelemetryFrame {
            record: &self.record,
            attack_specs: &self.attack_specs,
            report: self.report.as_deref(),
            gap,
        })
        .expect("frame serializes")
    }
}

/// A subscriber's view of the frame stream: every `decimation`-th tick, with
/// a lagging subscriber jumped forward to the newest frame.
pub struct Subscriber {
    rx: broadcast::Receiver<Arc<Frame>>,
    decimation: u64,
    last_tick: Option<u64>,
    lagged: bool,
}

impl Subscriber {
    pub fn new(rx: broadcast::Receiver<Arc<Frame>>, decimation: u64) -> Self {
        assert!(decimation >= 1);
        Subscriber {
            rx,
            decimation,
            last_tick: None,
            lagged: false,
        }
    }

    /// Next frame to send and its gap flag; `None` once the engine is gone.
    pub async fn next(&mut self) -> Option<(Arc<Frame>, bool)> {
        loop {
            let frame = match self.rx.recv().await {
                Ok(f) => f,
                Err(RecvError::Lagged(_)) => {
                    self.lagged = true;
                    match self.newest() {
                        Some(f) => f,
                        None => continue,
                    }
                }
                Err(RecvError::Closed) => return None,
            };
            let tick = frame.record.tick;
            // Once behind, the newest frame goes out regardless of phase.
            if tick % self.decimation != 0 && !self.lagged {
                continue;
            }
            let gap = self.lagged || self.last_tick.is_some_and(|last| tick != last + self.decimation);
            self.lagged = false;
            self.last_tick = Some(tick);
            return Some((frame, gap));
        }
    }

    fn newest(&mut self) -> Option<Arc<Frame>> {
        let mut newest = None;
        loop {
            match self.rx.try_recv() {
                Ok(f) => newest = Some(f),
                Err(TryRecvError::Lagged(_)) => continue,
                Err(TryRecvError::Empty | TryRecvError::Closed) => return newest,
            }
        }
    }
}
