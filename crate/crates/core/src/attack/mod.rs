//! Attack transforms: payload mutation (false data injection), replay, load
//! altering, and telemetry-conditioned triggers that patch attack parameters
//! while a run is in progress.

mod fdi;
mod load_alter;
mod replay;
mod trigger;

pub use fdi::{apply_fdi, FdiSpec, PulseSpec};
pub use load_alter::{apply_load_alteration, FollowMode, FollowSpec, LoadAlterSpec, LoadAlterState};
pub use replay::{replay_step, ReplayPhase, ReplaySpec, ReplayState};
pub use trigger::{
    evaluate_triggers, Comparison, Condition, FireMode, ParamPatch, TelemetryField, TriggerRule,
    TriggerSnapshot, TriggerState,
};

/// `[start, stop)` activation window, `stop = None` meaning open-ended.
pub(crate) fn window_active(t_s: f64, start_s: f64, stop_s: Option<f64>) -> bool {
    t_s >= start_s && stop_s.is_none_or(|stop| t_s < stop)
}
