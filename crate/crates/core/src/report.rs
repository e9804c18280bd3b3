//! Structured run reports and their text rendering.
//!
//! The JSON form is the machine interface: one entry per query with the
//! echoed inputs, the result (or error), the determination events that
//! conditioned the answer, and an elapsed field that stays null unless
//! timings were requested — identical (scenario, seed) pairs therefore
//! serialize byte-identically.

use std::fmt::Write as _;

use serde::Serialize;

use crate::boxes::NoSignalingReport;
use crate::determinacy::{DeterminationEvent, PresentRealityCounterexample, TruthValue};
use crate::quantum::QuantumRegister;
use crate::scenario::SCHEMA_VERSION;

/// A realized determination event, flattened for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub variable: String,
    pub value: u8,
    pub t: f64,
    pub x: f64,
}

impl EventRecord {
    pub fn from_event(e: &DeterminationEvent) -> Self {
        EventRecord {
            variable: e.variable.clone(),
            value: e.value,
            t: e.location.t,
            x: e.location.x,
        }
    }
}

/// A realized quantum measurement, flattened for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub variable: String,
    pub qubit: usize,
    pub basis: String,
    pub outcome: u8,
    pub t: f64,
    pub x: f64,
    pub probability: f64,
}

/// Kind-specific query results.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QueryResult {
    Truth {
        value: TruthValue,
        locally_verifiable: bool,
    },
    Propensity {
        propensity: String,
        propensity_float: f64,
        determinate: bool,
    },
    State {
        n_qubits: usize,
        amplitudes: QuantumRegister,
        ket: String,
    },
    Frontier {
        time: Option<f64>,
    },
    Falsify {
        found: bool,
        counterexample: Option<PresentRealityCounterexample>,
    },
    NoSignaling {
        passes: bool,
        report: NoSignalingReport,
    },
    Chsh {
        s: String,
        s_float: f64,
        best_s: String,
        best_s_float: f64,
        is_local: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub kind: String,
    pub inputs: serde_json::Value,
    pub result: Option<QueryResult>,
    pub error: Option<String>,
    pub conditioning_events: Vec<EventRecord>,
    pub elapsed_us: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: Option<String>,
    pub seed: u64,
    pub c: f64,
    pub epsilon: f64,
    /// All realized determination events, sorted by variable.
    pub events: Vec<EventRecord>,
    /// Realized quantum measurements in causal order.
    pub measurements: Vec<MeasurementRecord>,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn to_json(&self) -> String {
        debug_assert_eq!(self.schema, SCHEMA_VERSION);
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable rendering; `color` adds ANSI escapes.
    pub fn to_text(&self, color: bool) -> String {
        let paint = |code: &str, text: &str| -> String {
            if color {
                format!("\x1b[{code}m{text}\x1b[0m")
            } else {
                text.to_string()
            }
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} (seed {}, c = {}, epsilon = {:e})",
            self.scenario.as_deref().unwrap_or("unnamed"),
            self.seed,
            self.c,
            self.epsilon
        );
        if !self.events.is_empty() {
            let _ = writeln!(out, "determined:");
            for e in &self.events {
                let _ = writeln!(out, "  {} = {} at (t={}, x={})", e.variable, e.value, e.t, e.x);
            }
        }
        for (i, entry) in self.entries.iter().enumerate() {
            let _ = write!(out, "[{i}] {}: ", entry.kind);
            match (&entry.result, &entry.error) {
                (_, Some(err)) => {
                    let _ = writeln!(out, "{}", paint("31", &format!("error: {err}")));
                }
                (Some(result), None) => {
                    let line = render_result(result);
                    let painted = match result {
                        QueryResult::Truth { value, .. } => match value {
                            TruthValue::True => paint("32", &line),
                            TruthValue::False => paint("31", &line),
                            TruthValue::Indeterminate => paint("33", &line),
                        },
                        _ => line,
                    };
                    let _ = writeln!(out, "{painted}");
                }
                (None, None) => {
                    let _ = writeln!(out, "(no result)");
                }
            }
            if !entry.conditioning_events.is_empty() {
                let conditioning: Vec<String> = entry
                    .conditioning_events
                    .iter()
                    .map(|e| format!("{}={}@(t={}, x={})", e.variable, e.value, e.t, e.x))
                    .collect();
                let _ = writeln!(out, "    conditioned on: {}", conditioning.join(", "));
            }
            if let Some(us) = entry.elapsed_us {
                let _ = writeln!(out, "    elapsed: {us} us");
            }
        }
        out
    }
}

fn render_result(result: &QueryResult) -> String {
    match result {
        QueryResult::Truth { value, locally_verifiable } => {
            if *locally_verifiable {
                format!("{value}")
            } else {
                format!("{value} (not locally verifiable here)")
            }
        }
        QueryResult::Propensity { propensity, propensity_float, determinate } => {
            let tag = if *determinate { " (determinate)" } else { "" };
            format!("{propensity} = {propensity_float}{tag}")
        }
        QueryResult::State { n_qubits, ket, .. } => {
            format!("{n_qubits}-qubit state {ket}")
        }
        QueryResult::Frontier { time } => match time {
            Some(t) => format!("determinate from t = {t}"),
            None => "never determinate".into(),
        },
        QueryResult::Falsify { found, counterexample } => match (found, counterexample) {
            (true, Some(ce)) => format!(
                "counterexample: `{}` is {} at (t={}, x={}) but indeterminate at (t={}, x={}) \
                 on the same v={} simultaneity plane",
                ce.proposition,
                ce.determinate_value,
                ce.determinate_at.t,
                ce.determinate_at.x,
                ce.indeterminate_at.t,
                ce.indeterminate_at.x,
                ce.frame_velocity
            ),
            _ => "no counterexample constructible".into(),
        },
        QueryResult::NoSignaling { passes, report } => {
            if *passes {
                "pass".into()
            } else {
                format!("FAIL ({} violations)", report.violations.len())
            }
        }
        QueryResult::Chsh { s, s_float, best_s, best_s_float, is_local } => format!(
            "S = {s} ({s_float}), best variant {best_s} ({best_s_float}), {}",
            if *is_local { "local" } else { "non-local" }
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_report_renders_without_color() {
        let report = Report {
            schema: SCHEMA_VERSION,
            scenario: Some("demo".into()),
            seed: 3,
            c: 1.0,
            epsilon: 1e-9,
            events: vec![EventRecord { variable: "a".into(), value: 0, t: 0.0, x: 0.0 }],
            measurements: vec![],
            entries: vec![ReportEntry {
                kind: "truth".into(),
                inputs: serde_json::json!({"kind": "truth"}),
                result: Some(QueryResult::Truth {
                    value: TruthValue::Indeterminate,
                    locally_verifiable: false,
                }),
                error: None,
                conditioning_events: vec![],
                elapsed_us: None,
            }],
        };
        let text = report.to_text(false);
        assert!(text.contains("indeterminate"));
        assert!(!text.contains("\x1b["));
        let colored = report.to_text(true);
        assert!(colored.contains("\x1b[33m"));
    }
}
