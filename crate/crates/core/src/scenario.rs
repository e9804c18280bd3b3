//! Declarative scenarios and the query engine.
//!
//! A scenario is a JSON document (`"schema": 1`) declaring the invariant
//! speed, frames, observers, TRNG processes, correlation models, boxes, an
//! optional quantum setup, explicit determination events and a list of
//! queries. Parsing validates everything up front and reports positioned
//! errors; running realizes all outcomes deterministically from a 64-bit
//! seed and evaluates the queries in order into a structured report.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boxes::BoxTable;
use crate::determinacy::{
    conditioning_events, determinacy_frontier, locally_verifiable, present_reality_falsifier,
    truth_at, DeterminationEvent, EventSet, KnowledgeMark, Proposition,
};
use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::quantum::{
    realize_outcomes, state_at, validate_measurements, Basis, MeasurementEvent, QuantumRegister,
    RealizedMeasurement,
};
use crate::randomness::{draw_bit, propensity_at, substream, CorrelationModel, TrngProcess};
use crate::report::{EventRecord, MeasurementRecord, QueryResult, Report, ReportEntry};
use crate::spacetime::{Frame, Metric, SpacetimePoint, Worldline, DEFAULT_EPSILON};

pub const SCHEMA_VERSION: u32 = 1;

/// A coordinate pair as written in a scenario file, optionally expressed in
/// a declared frame (converted to the global chart during resolution).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredPoint {
    pub t: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
}

impl DeclaredPoint {
    pub fn global(t: f64, x: f64) -> Self {
        DeclaredPoint { t, x, frame: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverDecl {
    pub label: String,
    pub anchor: DeclaredPoint,
    /// Velocity relative to the global rest frame.
    #[serde(default)]
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrngDecl {
    /// Tick k is determined as variable `{prefix}{k}`.
    pub prefix: String,
    pub anchor: DeclaredPoint,
    #[serde(default)]
    pub velocity: f64,
    pub proper_period: f64,
    /// Probability of outcome 1 per tick.
    #[serde(default = "default_half")]
    pub marginal: Prob,
    /// Ticks are generated up to this global coordinate time (inclusive).
    pub horizon: f64,
}

fn default_half() -> Prob {
    Prob::ratio(1, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDecl {
    pub variable: String,
    pub location: DeclaredPoint,
    /// Omitted values are sampled (via the variable's model if any, else
    /// its marginal).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<u8>,
    /// Marginal probability of 1 when sampled independently; defaults to 1/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal: Option<Prob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDecl {
    pub label: String,
    /// 16 probabilities in lexicographic (x, y, a, b) order.
    pub table: Vec<Prob>,
}

/// Initial register: a named state (`singlet`, `w3`) or explicit amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateDecl {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementDecl {
    pub variable: String,
    pub qubit: usize,
    pub basis: Basis,
    pub location: DeclaredPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumDecl {
    pub initial: StateDecl,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurements: Vec<MeasurementDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeDecl {
    pub observer: String,
    pub variable: String,
    pub known_from: DeclaredPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldlineDecl {
    pub anchor: DeclaredPoint,
    #[serde(default)]
    pub velocity: f64,
}

/// One query, dispatched on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QueryDecl {
    /// Three-valued truth of a proposition at a point.
    Truth { proposition: String, at: DeclaredPoint },
    /// Objective propensity of `variable = value` at a point.
    Propensity { variable: String, value: u8, at: DeclaredPoint },
    /// Global quantum state assigned to a point.
    State { at: DeclaredPoint },
    /// Earliest time a proposition is determinate along a worldline.
    Frontier { proposition: String, worldline: WorldlineDecl },
    /// Search for a present-reality counterexample in a given frame.
    FalsifyPresentReality {
        #[serde(default)]
        frame_velocity: f64,
    },
    /// No-signaling check of a declared box.
    NoSignaling {
        #[serde(rename = "box")]
        box_label: String,
    },
    /// CHSH value and local-polytope membership of a declared box.
    Chsh {
        #[serde(rename = "box")]
        box_label: String,
    },
}

impl QueryDecl {
    pub fn kind(&self) -> &'static str {
        match self {
            QueryDecl::Truth { .. } => "truth",
            QueryDecl::Propensity { .. } => "propensity",
            QueryDecl::State { .. } => "state",
            QueryDecl::Frontier { .. } => "frontier",
            QueryDecl::FalsifyPresentReality { .. } => "falsify-present-reality",
            QueryDecl::NoSignaling { .. } => "no-signaling",
            QueryDecl::Chsh { .. } => "chsh",
        }
    }
}

/// The raw scenario document. Field order matters for error messages:
/// `c` is deliberately first so an empty document reports it as missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    /// Maximal signal speed in light-minutes per minute.
    pub c: f64,
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<Frame>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observers: Vec<ObserverDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trngs: Vec<TrngDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<CorrelationModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BoxDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub knowledge: Vec<KnowledgeDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryDecl>,
}

/// A positioned parse or validation problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl Issue {
    fn semantic(message: impl Into<String>) -> Self {
        Issue { message: message.into(), line: None, column: None }
    }
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{}: {}", l, c, self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

/// A fully validated scenario: the original document plus everything
/// resolved into the global chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub metric: Metric,
    pub observers: Vec<(String, Worldline)>,
    pub trng_processes: Vec<(TrngProcess, f64)>,
    /// Expanded TRNG ticks: (variable, location, marginal).
    pub ticks: Vec<(String, SpacetimePoint, Prob)>,
    pub events: Vec<(EventDecl, SpacetimePoint)>,
    pub boxes: Vec<(String, BoxTable)>,
    pub quantum: Option<(QuantumRegister, Vec<MeasurementEvent>)>,
    pub knowledge: Vec<KnowledgeMark>,
}

/// Deterministically realized outcomes of one scenario run.
#[derive(Debug, Clone)]
pub struct Realization {
    pub seed: u64,
    pub events: EventSet,
    pub measurements: Vec<RealizedMeasurement>,
    /// Fallback marginals for independently sampled variables.
    pub marginals: BTreeMap<String, Prob>,
}

impl Scenario {
    /// Parse and validate a scenario document.
    pub fn parse(text: &str) -> std::result::Result<Scenario, Vec<Issue>> {
        let doc: ScenarioDoc = match serde_json::from_str(text) {
            Ok(doc) => doc,
            Err(e) => {
                return Err(vec![Issue {
                    message: format!("{e}"),
                    line: Some(e.line()),
                    column: Some(e.column()),
                }]);
            }
        };
        Scenario::from_doc(doc)
    }

    /// Validate an already-deserialized document.
    pub fn from_doc(doc: ScenarioDoc) -> std::result::Result<Scenario, Vec<Issue>> {
        let mut issues = Vec::new();

        if doc.schema != SCHEMA_VERSION {
            issues.push(Issue::semantic(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                doc.schema
            )));
        }
        if !(doc.c > 0.0) || !doc.c.is_finite() {
            issues.push(Issue::semantic(format!(
                "c must be a positive finite number, got {}",
                doc.c
            )));
        }
        let epsilon = doc.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            issues.push(Issue::semantic(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !issues.is_empty() {
            // Without a sane metric nothing downstream can be resolved.
            return Err(issues);
        }
        let metric = Metric::with_epsilon(doc.c, epsilon);

        // Frames.
        let mut frame_labels = BTreeSet::new();
        for f in &doc.frames {
            if f.label.is_empty() {
                issues.push(Issue::semantic("frame with empty label"));
            }
            if !frame_labels.insert(f.label.clone()) {
                issues.push(Issue::semantic(format!("duplicate frame label `{}`", f.label)));
            }
            if !f.velocity.is_finite() || f.velocity.abs() >= metric.c {
                issues.push(Issue::semantic(format!(
                    "frame `{}` velocity {} is not strictly below c",
                    f.label, f.velocity
                )));
            }
        }

        let resolve = |p: &DeclaredPoint, what: &str, issues: &mut Vec<Issue>| -> SpacetimePoint {
            if !p.t.is_finite() || !p.x.is_finite() {
                issues.push(Issue::semantic(format!("{what}: coordinates must be finite")));
                return SpacetimePoint::new(0.0, 0.0);
            }
            match &p.frame {
                None => SpacetimePoint::new(p.t, p.x),
                Some(label) => match doc.frames.iter().find(|f| &f.label == label) {
                    Some(f) if f.velocity.abs() < metric.c => metric
                        .unboost(SpacetimePoint::new(p.t, p.x), f.velocity)
                        .unwrap_or(SpacetimePoint::new(p.t, p.x)),
                    Some(_) => SpacetimePoint::new(p.t, p.x),
                    None => {
                        issues.push(Issue::semantic(format!("{what}: unknown frame `{label}`")));
                        SpacetimePoint::new(p.t, p.x)
                    }
                },
            }
        };

        // Observers.
        let mut observers = Vec::new();
        let mut observer_labels = BTreeSet::new();
        for o in &doc.observers {
            if !observer_labels.insert(o.label.clone()) {
                issues.push(Issue::semantic(format!("duplicate observer label `{}`", o.label)));
            }
            if !o.velocity.is_finite() || o.velocity.abs() >= metric.c {
                issues.push(Issue::semantic(format!(
                    "observer `{}` velocity {} is not strictly below c",
                    o.label, o.velocity
                )));
            } else {
                let anchor =
                    resolve(&o.anchor, &format!("observer `{}` anchor", o.label), &mut issues);
                observers.push((o.label.clone(), Worldline::new(anchor, o.velocity)));
            }
        }

        // Unified variable namespace: explicit events, TRNG ticks, measurements.
        let mut variables: BTreeMap<String, SpacetimePoint> = BTreeMap::new();
        let mut declare = |name: &str, location: SpacetimePoint, issues: &mut Vec<Issue>| {
            if variables.insert(name.to_string(), location).is_some() {
                issues.push(Issue::semantic(format!(
                    "variable `{name}` is determined more than once"
                )));
            }
        };

        // Explicit events.
        let mut events = Vec::new();
        for e in &doc.events {
            let location = resolve(&e.location, &format!("event `{}`", e.variable), &mut issues);
            if let Some(v) = e.value {
                if v > 1 {
                    issues.push(Issue::semantic(format!(
                        "event `{}` value must be 0 or 1, got {v}",
                        e.variable
                    )));
                }
            }
            if let Some(m) = &e.marginal {
                if !m.in_unit_interval() {
                    issues.push(Issue::semantic(format!(
                        "event `{}` marginal {m} is outside [0,1]",
                        e.variable
                    )));
                }
            }
            declare(&e.variable, location, &mut issues);
            events.push((e.clone(), location));
        }

        // TRNG processes and their expanded ticks.
        let mut trng_processes = Vec::new();
        let mut ticks = Vec::new();
        for t in &doc.trngs {
            if t.prefix.is_empty() {
                issues.push(Issue::semantic("TRNG with empty variable prefix"));
                continue;
            }
            if !t.velocity.is_finite() || t.velocity.abs() >= metric.c {
                issues.push(Issue::semantic(format!(
                    "TRNG `{}` velocity {} is not strictly below c",
                    t.prefix, t.velocity
                )));
                continue;
            }
            let anchor = resolve(&t.anchor, &format!("TRNG `{}` anchor", t.prefix), &mut issues);
            let process = TrngProcess {
                variable_prefix: t.prefix.clone(),
                worldline: Worldline::new(anchor, t.velocity),
                proper_period: t.proper_period,
                marginal: t.marginal.clone(),
            };
            match process.tick_variables(t.horizon, &metric) {
                Ok(named) => {
                    for (name, location) in named {
                        declare(&name, location, &mut issues);
                        ticks.push((name, location, t.marginal.clone()));
                    }
                    trng_processes.push((process, t.horizon));
                }
                Err(e) => issues.push(Issue::semantic(format!("TRNG `{}`: {e}", t.prefix))),
            }
        }

        // Quantum setup.
        let mut quantum = None;
        if let Some(q) = &doc.quantum {
            let initial = match &q.initial {
                StateDecl::Named(name) => QuantumRegister::by_name(name).ok_or_else(|| {
                    Issue::semantic(format!("unknown initial state `{name}` (known: singlet, w3)"))
                }),
                StateDecl::Amplitudes(pairs) => {
                    let amps = pairs
                        .iter()
                        .map(|[re, im]| num_complex::Complex64::new(*re, *im))
                        .collect();
                    QuantumRegister::from_amplitudes(amps)
                        .map_err(|e| Issue::semantic(format!("initial state: {e}")))
                }
            };
            match initial {
                Err(issue) => issues.push(issue),
                Ok(initial) => {
                    let mut measurements = Vec::new();
                    for m in &q.measurements {
                        let location = resolve(
                            &m.location,
                            &format!("measurement `{}`", m.variable),
                            &mut issues,
                        );
                        declare(&m.variable, location, &mut issues);
                        measurements.push(MeasurementEvent {
                            variable: m.variable.clone(),
                            qubit: m.qubit,
                            basis: m.basis.clone(),
                            location,
                            outcome: m.outcome,
                        });
                    }
                    for issue in validate_measurements(initial.n_qubits(), &measurements, &metric) {
                        issues.push(Issue::semantic(issue));
                    }
                    quantum = Some((initial, measurements));
                }
            }
        }

        // Correlation models.
        let mut modeled: BTreeMap<String, usize> = BTreeMap::new();
        let measurement_vars: BTreeSet<String> = quantum
            .iter()
            .flat_map(|(_, ms): &(_, Vec<MeasurementEvent>)| {
                ms.iter().map(|m| m.variable.clone())
            })
            .collect();
        for (i, model) in doc.models.iter().enumerate() {
            for v in model.validate() {
                issues.push(Issue::semantic(format!("model {i}: {v}")));
            }
            for var in &model.variables {
                if let Some(previous) = modeled.insert(var.clone(), i) {
                    issues.push(Issue::semantic(format!(
                        "variable `{var}` appears in models {previous} and {i}"
                    )));
                }
                if measurement_vars.contains(var) {
                    issues.push(Issue::semantic(format!(
                        "variable `{var}` is a quantum measurement outcome and cannot \
                         also appear in a classical correlation model"
                    )));
                }
            }
            // Declared marginals (TRNG or explicit) must match the joint.
            let mut declared = BTreeMap::new();
            for (name, _, marginal) in &ticks {
                declared.insert(name.clone(), marginal.clone());
            }
            for (e, _) in &events {
                if let Some(m) = &e.marginal {
                    declared.insert(e.variable.clone(), m.clone());
                }
            }
            for v in model.check_marginals(&declared) {
                issues.push(Issue::semantic(format!("model {i}: {v}")));
            }
        }

        // Boxes.
        let mut boxes = Vec::new();
        let mut box_labels = BTreeSet::new();
        for b in &doc.boxes {
            if !box_labels.insert(b.label.clone()) {
                issues.push(Issue::semantic(format!("duplicate box label `{}`", b.label)));
            }
            let table = BoxTable { table: b.table.clone() };
            for v in table.validate() {
                issues.push(Issue::semantic(format!("box `{}`: {v}", b.label)));
            }
            boxes.push((b.label.clone(), table));
        }

        // Knowledge marks: the variable must be determined, and the mark
        // must sit inside its future cone (locations are static, so this is
        // checkable before sampling).
        let mut knowledge = Vec::new();
        for k in &doc.knowledge {
            let known_from = resolve(
                &k.known_from,
                &format!("knowledge mark for `{}`", k.variable),
                &mut issues,
            );
            match variables.get(&k.variable) {
                None => issues.push(Issue::semantic(format!(
                    "knowledge mark for `{}` (observer {}): variable is never determined",
                    k.variable, k.observer
                ))),
                Some(location) => {
                    if !metric.in_future_cone(*location, known_from) {
                        issues.push(Issue::semantic(format!(
                            "observer {} cannot know `{}` at (t={}, x={}): outside the future \
                             cone of its determination",
                            k.observer, k.variable, known_from.t, known_from.x
                        )));
                    }
                }
            }
            knowledge.push(KnowledgeMark {
                observer: k.observer.clone(),
                variable: k.variable.clone(),
                known_from,
            });
        }

        // Queries.
        let known_variable = |name: &str| {
            variables.contains_key(name)
                || doc.models.iter().any(|m| m.variables.iter().any(|v| v == name))
        };
        for (i, q) in doc.queries.iter().enumerate() {
            let ctx = format!("query {i} ({})", q.kind());
            match q {
                QueryDecl::Truth { proposition, at } => {
                    resolve(at, &ctx, &mut issues);
                    match Proposition::parse(proposition) {
                        Err(e) => issues.push(Issue::semantic(format!("{ctx}: {e}"))),
                        Ok(p) => {
                            for var in p.variables() {
                                if !known_variable(var) {
                                    issues.push(Issue::semantic(format!(
                                        "{ctx}: unknown variable `{var}`"
                                    )));
                                }
                            }
                        }
                    }
                }
                QueryDecl::Propensity { variable, value, at } => {
                    resolve(at, &ctx, &mut issues);
                    if *value > 1 {
                        issues.push(Issue::semantic(format!("{ctx}: value must be 0 or 1")));
                    }
                    if !known_variable(variable) {
                        issues.push(Issue::semantic(format!(
                            "{ctx}: unknown variable `{variable}`"
                        )));
                    }
                }
                QueryDecl::State { at } => {
                    resolve(at, &ctx, &mut issues);
                    if quantum.is_none() {
                        issues.push(Issue::semantic(format!(
                            "{ctx}: scenario declares no quantum setup"
                        )));
                    }
                }
                QueryDecl::Frontier { proposition, worldline } => {
                    resolve(&worldline.anchor, &ctx, &mut issues);
                    if !worldline.velocity.is_finite() || worldline.velocity.abs() >= metric.c {
                        issues.push(Issue::semantic(format!(
                            "{ctx}: worldline velocity {} is not strictly below c",
                            worldline.velocity
                        )));
                    }
                    match Proposition::parse(proposition) {
                        Err(e) => issues.push(Issue::semantic(format!("{ctx}: {e}"))),
                        Ok(p) => {
                            for var in p.variables() {
                                if !known_variable(var) {
                                    issues.push(Issue::semantic(format!(
                                        "{ctx}: unknown variable `{var}`"
                                    )));
                                }
                            }
                        }
                    }
                }
                QueryDecl::FalsifyPresentReality { frame_velocity } => {
                    if !frame_velocity.is_finite() || frame_velocity.abs() >= metric.c {
                        issues.push(Issue::semantic(format!(
                            "{ctx}: frame velocity {frame_velocity} is not strictly below c"
                        )));
                    }
                }
                QueryDecl::NoSignaling { box_label } | QueryDecl::Chsh { box_label } => {
                    if !box_labels.contains(box_label) {
                        issues.push(Issue::semantic(format!("{ctx}: unknown box `{box_label}`")));
                    }
                }
            }
        }

        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(Scenario {
            doc,
            metric,
            observers,
            trng_processes,
            ticks,
            events,
            boxes,
            quantum,
            knowledge,
        })
    }

    /// Canonical pretty-printed JSON of the document; `parse` of this text
    /// reproduces the scenario.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.doc).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn name(&self) -> &str {
        self.doc.name.as_deref().unwrap_or("unnamed")
    }

    /// Realize every undetermined outcome from the seed: joint draws per
    /// correlation model, independent Bernoulli draws per remaining
    /// variable, and Born-rule draws for quantum measurements. Identical
    /// seeds give identical realizations.
    pub fn realize(&self, seed: u64) -> Result<Realization> {
        let mut marginals: BTreeMap<String, Prob> = BTreeMap::new();
        for (name, _, marginal) in &self.ticks {
            marginals.insert(name.clone(), marginal.clone());
        }
        for (e, _) in &self.events {
            if let Some(m) = &e.marginal {
                marginals.insert(e.variable.clone(), m.clone());
            }
        }

        // Forced values fix the conditioning of every joint draw.
        let mut forced: BTreeMap<String, u8> = BTreeMap::new();
        for (e, _) in &self.events {
            if let Some(v) = e.value {
                forced.insert(e.variable.clone(), v);
            }
        }

        // One joint draw per model.
        let mut model_values: BTreeMap<String, u8> = BTreeMap::new();
        for (i, model) in self.doc.models.iter().enumerate() {
            let mut rng = substream(seed, &format!("model:{i}"));
            for (var, value) in model.sample(&forced, &mut rng)? {
                model_values.insert(var, value);
            }
        }

        let value_of = |variable: &str, marginal: Option<&Prob>| -> u8 {
            if let Some(v) = forced.get(variable) {
                return *v;
            }
            if let Some(v) = model_values.get(variable) {
                return *v;
            }
            let p_one = marginal.cloned().unwrap_or_else(|| Prob::ratio(1, 2));
            let mut rng = substream(seed, &format!("var:{variable}"));
            draw_bit(&p_one, &mut rng)
        };

        let mut events = EventSet::new();
        for (e, location) in &self.events {
            let value = value_of(&e.variable, e.marginal.as_ref());
            events.insert(DeterminationEvent::new(e.variable.clone(), value, *location))?;
        }
        for (name, location, marginal) in &self.ticks {
            let value = value_of(name, Some(marginal));
            events.insert(DeterminationEvent::new(name.clone(), value, *location))?;
        }
        // Model variables without a generating event stay latent but
        // declared, so truth queries on them answer "indeterminate" rather
        // than erroring.
        for model in &self.doc.models {
            for var in &model.variables {
                if !events.is_declared(var) {
                    events.declare(var.clone());
                }
            }
        }

        // Quantum outcomes become determination events too.
        let mut measurements = Vec::new();
        if let Some((initial, decls)) = &self.quantum {
            measurements = realize_outcomes(initial, decls, seed, &self.metric)?;
            for m in &measurements {
                events.insert(DeterminationEvent::new(
                    m.variable.clone(),
                    m.outcome,
                    m.location,
                ))?;
            }
        }

        Ok(Realization { seed, events, measurements, marginals })
    }

    fn resolve_point(&self, p: &DeclaredPoint) -> SpacetimePoint {
        match &p.frame {
            None => SpacetimePoint::new(p.t, p.x),
            Some(label) => {
                let v = self
                    .doc
                    .frames
                    .iter()
                    .find(|f| &f.label == label)
                    .map(|f| f.velocity)
                    .unwrap_or(0.0);
                self.metric
                    .unboost(SpacetimePoint::new(p.t, p.x), v)
                    .unwrap_or(SpacetimePoint::new(p.t, p.x))
            }
        }
    }

    fn evaluate_query(
        &self,
        q: &QueryDecl,
        r: &Realization,
    ) -> Result<(QueryResult, Vec<EventRecord>)> {
        match q {
            QueryDecl::Truth { proposition, at } => {
                let prop = Proposition::parse(proposition)?;
                let point = self.resolve_point(at);
                let value = truth_at(&r.events, &prop, point, &self.metric)?;
                let verifiable = locally_verifiable(&r.events, &prop, point, &self.metric);
                let conditioning = conditioning_events(&r.events, &prop, point, &self.metric)
                    .into_iter()
                    .map(EventRecord::from_event)
                    .collect();
                Ok((QueryResult::Truth { value, locally_verifiable: verifiable }, conditioning))
            }
            QueryDecl::Propensity { variable, value, at } => {
                let point = self.resolve_point(at);
                let assignment = propensity_at(
                    &self.doc.models,
                    &r.marginals,
                    &r.events,
                    variable,
                    *value,
                    point,
                    &self.metric,
                )?;
                let conditioning =
                    assignment.conditioned_on.iter().map(EventRecord::from_event).collect();
                Ok((
                    QueryResult::Propensity {
                        propensity: assignment.propensity.to_string(),
                        propensity_float: assignment.propensity.to_f64(),
                        determinate: assignment.determinate,
                    },
                    conditioning,
                ))
            }
            QueryDecl::State { at } => {
                let (initial, _) = self
                    .quantum
                    .as_ref()
                    .ok_or_else(|| Error::Query("no quantum setup".into()))?;
                let point = self.resolve_point(at);
                let assignment = state_at(initial, &r.measurements, point, &self.metric)?;
                let conditioning = assignment
                    .applied
                    .iter()
                    .map(|m| EventRecord {
                        variable: m.variable.clone(),
                        value: m.outcome,
                        t: m.location.t,
                        x: m.location.x,
                    })
                    .collect();
                Ok((
                    QueryResult::State {
                        n_qubits: assignment.state.n_qubits(),
                        amplitudes: assignment.state.clone(),
                        ket: assignment.state.ket_string(),
                    },
                    conditioning,
                ))
            }
            QueryDecl::Frontier { proposition, worldline } => {
                let prop = Proposition::parse(proposition)?;
                let w = Worldline::new(self.resolve_point(&worldline.anchor), worldline.velocity);
                let time = determinacy_frontier(&r.events, &prop, &w, &self.metric)?;
                let conditioning = prop
                    .variables()
                    .into_iter()
                    .filter_map(|v| r.events.get(v))
                    .map(EventRecord::from_event)
                    .collect();
                Ok((QueryResult::Frontier { time }, conditioning))
            }
            QueryDecl::FalsifyPresentReality { frame_velocity } => {
                let worldlines: Vec<Worldline> = self.observers.iter().map(|(_, w)| *w).collect();
                let counterexample = present_reality_falsifier(
                    &r.events,
                    &worldlines,
                    *frame_velocity,
                    &self.metric,
                )?;
                Ok((
                    QueryResult::Falsify { found: counterexample.is_some(), counterexample },
                    Vec::new(),
                ))
            }
            QueryDecl::NoSignaling { box_label } => {
                let (_, table) = self
                    .boxes
                    .iter()
                    .find(|(l, _)| l == box_label)
                    .ok_or_else(|| Error::Query(format!("unknown box `{box_label}`")))?;
                let report = table.no_signaling_check();
                Ok((QueryResult::NoSignaling { passes: report.passed(), report }, Vec::new()))
            }
            QueryDecl::Chsh { box_label } => {
                let (_, table) = self
                    .boxes
                    .iter()
                    .find(|(l, _)| l == box_label)
                    .ok_or_else(|| Error::Query(format!("unknown box `{box_label}`")))?;
                let s = table.chsh_value();
                let bound = table.local_bound();
                Ok((
                    QueryResult::Chsh {
                        s: s.to_string(),
                        s_float: s.to_f64(),
                        best_s: bound.best_s.to_string(),
                        best_s_float: bound.best_s.to_f64(),
                        is_local: bound.is_local,
                    },
                    Vec::new(),
                ))
            }
        }
    }

    /// Realize with `seed` and evaluate every query in order. Per-query
    /// errors are recorded in their entries; only realization itself can
    /// fail the run. With `timings` off, elapsed fields are null and the
    /// structured report is byte-identical across runs.
    pub fn run(&self, seed: u64, timings: bool) -> Result<Report> {
        let realization = self.realize(seed)?;
        let mut entries = Vec::with_capacity(self.doc.queries.len());
        for q in &self.doc.queries {
            let started = Instant::now();
            let (result, error, conditioning) = match self.evaluate_query(q, &realization) {
                Ok((result, conditioning)) => (Some(result), None, conditioning),
                Err(e) => (None, Some(e.to_string()), Vec::new()),
            };
            let elapsed_us = timings.then(|| started.elapsed().as_micros() as u64);
            entries.push(ReportEntry {
                kind: q.kind().to_string(),
                inputs: serde_json::to_value(q).expect("query serializes"),
                result,
                error,
                conditioning_events: conditioning,
                elapsed_us,
            });
        }

        let mut realized_events: Vec<EventRecord> =
            realization.events.iter().map(EventRecord::from_event).collect();
        realized_events.sort_by(|a, b| a.variable.cmp(&b.variable));
        let realized_measurements: Vec<MeasurementRecord> = realization
            .measurements
            .iter()
            .map(|m| MeasurementRecord {
                variable: m.variable.clone(),
                qubit: m.qubit,
                basis: m.basis.label().to_string(),
                outcome: m.outcome,
                t: m.location.t,
                x: m.location.x,
                probability: m.probability,
            })
            .collect();

        Ok(Report {
            schema: SCHEMA_VERSION,
            scenario: self.doc.name.clone(),
            seed,
            c: self.metric.c,
            epsilon: self.metric.epsilon,
            events: realized_events,
            measurements: realized_measurements,
            entries,
        })
    }
}

/// Names of the scenarios shipped with the crate.
pub const BUILTIN_NAMES: [&str; 5] = ["fig1", "fig2", "fig3", "prbox", "singlet"];

/// Construct a built-in scenario by name.
pub fn builtin(name: &str) -> Option<Scenario> {
    let doc = match name {
        "fig1" => builtin_fig1(),
        "fig2" => builtin_fig2(),
        "fig3" => builtin_fig3(),
        "prbox" => builtin_prbox(),
        "singlet" => builtin_singlet(),
        _ => return None,
    };
    Some(Scenario::from_doc(doc).expect("built-in scenarios validate"))
}

fn base_doc(name: &str) -> ScenarioDoc {
    ScenarioDoc {
        c: 1.0,
        schema: SCHEMA_VERSION,
        name: Some(name.to_string()),
        epsilon: None,
        seed: 1,
        frames: Vec::new(),
        observers: Vec::new(),
        trngs: Vec::new(),
        events: Vec::new(),
        models: Vec::new(),
        boxes: Vec::new(),
        quantum: None,
        knowledge: Vec::new(),
        queries: Vec::new(),
    }
}

/// Four observers, one TRNG: the classic two-frame simultaneity setup.
/// Alice's bit `a` is generated at the origin; Charlie and Debbie move at
/// v = 0.5 so that Debbie meets Alice's worldline while Charlie passes Bob.
fn builtin_fig1() -> ScenarioDoc {
    let mut doc = base_doc("fig1");
    doc.frames = vec![Frame::new("rest", 0.0), Frame::new("moving", 0.5)];
    doc.observers = vec![
        ObserverDecl {
            label: "alice".into(),
            anchor: DeclaredPoint::global(0.0, 0.0),
            velocity: 0.0,
        },
        ObserverDecl {
            label: "bob".into(),
            anchor: DeclaredPoint::global(0.0, 1.0),
            velocity: 0.0,
        },
        ObserverDecl {
            label: "charlie".into(),
            anchor: DeclaredPoint::global(0.0, 1.0),
            velocity: 0.5,
        },
        ObserverDecl {
            label: "debbie".into(),
            anchor: DeclaredPoint::global(-0.5, 0.0),
            velocity: 0.5,
        },
    ];
    doc.trngs = vec![TrngDecl {
        prefix: "a".into(),
        anchor: DeclaredPoint::global(0.0, 0.0),
        velocity: 0.0,
        proper_period: 1.0,
        marginal: Prob::ratio(1, 2),
        horizon: 2.0,
    }];
    doc.events = vec![EventDecl {
        variable: "a".into(),
        location: DeclaredPoint::global(0.0, 0.0),
        value: Some(0),
        marginal: None,
    }];
    doc.queries = vec![
        QueryDecl::Truth { proposition: "a=0".into(), at: DeclaredPoint::global(0.0, 1.0) },
        QueryDecl::Truth { proposition: "a=0".into(), at: DeclaredPoint::global(-0.5, 0.0) },
        QueryDecl::Truth { proposition: "a=0".into(), at: DeclaredPoint::global(1.0, 0.0) },
        QueryDecl::Truth { proposition: "a=0".into(), at: DeclaredPoint::global(1.0, 1.0) },
        QueryDecl::FalsifyPresentReality { frame_velocity: 0.0 },
        QueryDecl::FalsifyPresentReality { frame_velocity: 0.5 },
    ];
    doc
}

/// Two rest TRNGs one light-minute apart; the parity of their bits becomes
/// determinate only in the overlap of the future cones.
fn builtin_fig2() -> ScenarioDoc {
    let mut doc = base_doc("fig2");
    doc.frames = vec![Frame::new("rest", 0.0)];
    doc.observers = vec![
        ObserverDecl {
            label: "alice".into(),
            anchor: DeclaredPoint::global(0.0, 0.0),
            velocity: 0.0,
        },
        ObserverDecl {
            label: "bob".into(),
            anchor: DeclaredPoint::global(0.0, 1.0),
            velocity: 0.0,
        },
    ];
    doc.trngs = vec![
        TrngDecl {
            prefix: "a".into(),
            anchor: DeclaredPoint::global(0.0, 0.0),
            velocity: 0.0,
            proper_period: 1.0,
            marginal: Prob::ratio(1, 2),
            horizon: 2.0,
        },
        TrngDecl {
            prefix: "b".into(),
            anchor: DeclaredPoint::global(0.0, 1.0),
            velocity: 0.0,
            proper_period: 1.0,
            marginal: Prob::ratio(1, 2),
            horizon: 2.0,
        },
    ];
    doc.events = vec![
        EventDecl {
            variable: "a".into(),
            location: DeclaredPoint::global(0.0, 0.0),
            value: Some(0),
            marginal: None,
        },
        EventDecl {
            variable: "b".into(),
            location: DeclaredPoint::global(0.0, 1.0),
            value: Some(0),
            marginal: None,
        },
    ];
    doc.queries = vec![
        QueryDecl::Frontier {
            proposition: "(a=1) ^ (b=1)".into(),
            worldline: WorldlineDecl { anchor: DeclaredPoint::global(0.0, 0.5), velocity: 0.0 },
        },
        QueryDecl::Frontier {
            proposition: "(a=1) ^ (b=1)".into(),
            worldline: WorldlineDecl { anchor: DeclaredPoint::global(0.0, 0.0), velocity: 0.0 },
        },
        QueryDecl::Truth {
            proposition: "(a=1) == (b=1)".into(),
            at: DeclaredPoint::global(0.4, 0.5),
        },
        QueryDecl::Truth {
            proposition: "(a=1) == (b=1)".into(),
            at: DeclaredPoint::global(0.5, 0.5),
        },
        QueryDecl::Propensity { variable: "b".into(), value: 0, at: DeclaredPoint::global(0.5, 0.5) },
    ];
    doc
}

/// Three sites sharing a W state; two spacelike projective measurements
/// whose order differs between frames, with state queries in each region.
fn builtin_fig3() -> ScenarioDoc {
    let mut doc = base_doc("fig3");
    doc.frames = vec![Frame::new("rest", 0.0), Frame::new("moving", 0.5)];
    doc.observers = vec![
        ObserverDecl {
            label: "alice".into(),
            anchor: DeclaredPoint::global(0.0, 0.0),
            velocity: 0.0,
        },
        ObserverDecl {
            label: "bob".into(),
            anchor: DeclaredPoint::global(0.0, 2.0),
            velocity: 0.0,
        },
        ObserverDecl {
            label: "charlie".into(),
            anchor: DeclaredPoint::global(0.0, 4.0),
            velocity: 0.0,
        },
    ];
    doc.quantum = Some(QuantumDecl {
        initial: StateDecl::Named("w3".into()),
        measurements: vec![
            MeasurementDecl {
                variable: "m1".into(),
                qubit: 0,
                basis: Basis::Z,
                location: DeclaredPoint::global(0.0, 0.0),
                outcome: Some(0),
            },
            MeasurementDecl {
                variable: "m2".into(),
                qubit: 1,
                basis: Basis::Z,
                location: DeclaredPoint::global(0.5, 2.0),
                outcome: Some(0),
            },
        ],
    });
    doc.queries = vec![
        QueryDecl::State { at: DeclaredPoint::global(-1.0, 1.0) },
        QueryDecl::State { at: DeclaredPoint::global(0.5, 0.0) },
        QueryDecl::State { at: DeclaredPoint::global(1.0, 2.0) },
        QueryDecl::State { at: DeclaredPoint::global(4.0, 1.0) },
        QueryDecl::Truth { proposition: "m1=0".into(), at: DeclaredPoint::global(0.5, 0.0) },
        QueryDecl::Truth { proposition: "m1=0".into(), at: DeclaredPoint::global(1.0, 2.0) },
    ];
    doc
}

/// The PR box alone, with its no-signaling and CHSH certificates.
fn builtin_prbox() -> ScenarioDoc {
    let mut doc = base_doc("prbox");
    doc.boxes = vec![BoxDecl { label: "pr".into(), table: crate::boxes::pr_box().table }];
    doc.queries = vec![
        QueryDecl::NoSignaling { box_label: "pr".into() },
        QueryDecl::Chsh { box_label: "pr".into() },
    ];
    doc
}

/// The singlet measured in x by Alice and y by Bob at spacelike separation,
/// with state queries in the three regions of interest.
fn builtin_singlet() -> ScenarioDoc {
    let mut doc = base_doc("singlet");
    doc.frames = vec![Frame::new("rest", 0.0)];
    doc.observers = vec![
        ObserverDecl {
            label: "alice".into(),
            anchor: DeclaredPoint::global(0.0, 0.0),
            velocity: 0.0,
        },
        ObserverDecl {
            label: "bob".into(),
            anchor: DeclaredPoint::global(0.0, 1.0),
            velocity: 0.0,
        },
    ];
    doc.quantum = Some(QuantumDecl {
        initial: StateDecl::Named("singlet".into()),
        measurements: vec![
            MeasurementDecl {
                variable: "a".into(),
                qubit: 0,
                basis: Basis::X,
                location: DeclaredPoint::global(0.0, 0.0),
                outcome: Some(0),
            },
            MeasurementDecl {
                variable: "b".into(),
                qubit: 1,
                basis: Basis::Y,
                location: DeclaredPoint::global(0.0, 1.0),
                outcome: Some(0),
            },
        ],
    });
    doc.queries = vec![
        QueryDecl::State { at: DeclaredPoint::global(0.4, 0.1) },
        QueryDecl::State { at: DeclaredPoint::global(0.4, 0.9) },
        QueryDecl::State { at: DeclaredPoint::global(1.0, 0.5) },
        QueryDecl::Truth { proposition: "a=0".into(), at: DeclaredPoint::global(0.4, 0.9) },
        QueryDecl::Truth {
            proposition: "(a=0) & (b=0)".into(),
            at: DeclaredPoint::global(1.0, 0.5),
        },
    ];
    doc
}
