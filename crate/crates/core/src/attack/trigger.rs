use serde::{Deserialize, Serialize};

use crate::NOMINAL_HZ;

/// Telemetry visible to trigger conditions at a tick boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerSnapshot {
    pub time_s: f64,
    pub true_f_hz: f64,
    pub measured_f_hz: Option<f64>,
    pub battery_power_mw: f64,
    pub soc_mwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TelemetryField {
    TimeS,
    TrueFHz,
    /// `|true_f − 50|`
    AbsDeviationHz,
    MeasuredFHz,
    BatteryPowerMw,
    SocMwh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Gt,
    Ge,
    Lt,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub field: TelemetryField,
    pub op: Comparison,
    pub value: f64,
}

impl Condition {
    pub fn holds(&self, snap: &TriggerSnapshot) -> bool {
        let x = match self.field {
            TelemetryField::TimeS => snap.time_s,
            TelemetryField::TrueFHz => snap.true_f_hz,
            TelemetryField::AbsDeviationHz => (snap.true_f_hz - NOMINAL_HZ).abs(),
            TelemetryField::MeasuredFHz => match snap.measured_f_hz {
                Some(v) => v,
                None => return false,
            },
            TelemetryField::BatteryPowerMw => snap.battery_power_mw,
            TelemetryField::SocMwh => snap.soc_mwh,
        };
        match self.op {
            Comparison::Gt => x > self.value,
            Comparison::Ge => x >= self.value,
            Comparison::Lt => x < self.value,
            Comparison::Le => x <= self.value,
        }
    }
}

/// Sets the scenario field at a dotted `path` (e.g.
/// `attacks.load_alter.offset_mw`) to `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamPatch {
    pub path: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FireMode {
    /// First time the condition holds, then never again.
    #[default]
    Once,
    /// Each time the condition goes from false to true.
    Latched,
    /// Every tick the condition holds.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerRule {
    #[serde(default)]
    pub name: Option<String>,
    pub when: Condition,
    pub set: Vec<ParamPatch>,
    #[serde(default)]
    pub mode: FireMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TriggerState {
    pub fired: u64,
    pub disabled: bool,
    was_true: bool,
}

/// Indices of rules that fire on this snapshot. Updates arming state.
pub fn evaluate_triggers(rules: &[TriggerRule], states: &mut [TriggerState], snap: &TriggerSnapshot) -> Vec<usize> {
    debug_assert_eq!(rules.len(), states.len());
    let mut fired = Vec::new();
    for (i, (rule, st)) in rules.iter().zip(states.iter_mut()).enumerate() {
        if st.disabled {
            continue;
        }
        let now = rule.when.holds(snap);
        let fire = match rule.mode {
            FireMode::Once => now && st.fired == 0,
            FireMode::Latched => now && !st.was_true,
            FireMode::Continuous => now,
        };
        st.was_true = now;
        if fire {
            st.fired += 1;
            fired.push(i);
        }
    }
    fired
}
