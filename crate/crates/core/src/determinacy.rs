//! Three-valued truth that propagates causally.
//!
//! A proposition about a random outcome has no truth value until the query
//! point lies inside the closed future light cone of the event that
//! determined the outcome. Connectives follow strong Kleene semantics: a
//! connective is determinate exactly when its determinate inputs already fix
//! the output, so the law of the excluded middle fails for undetermined
//! bits — `a=0 | a=1` stays indeterminate until `a` is generated.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::{Frame, Metric, SpacetimePoint, Worldline};

/// Kleene truth value. Ordered False < Indeterminate < True, which makes
/// `and` = min and `or` = max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthValue {
    False,
    Indeterminate,
    True,
}

impl TruthValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }

    pub fn is_determinate(self) -> bool {
        self != TruthValue::Indeterminate
    }

    pub fn negate(self) -> Self {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            TruthValue::Indeterminate => TruthValue::Indeterminate,
        }
    }

    pub fn and(self, other: Self) -> Self {
        self.min(other)
    }

    pub fn or(self, other: Self) -> Self {
        self.max(other)
    }

    /// Determinate iff both operands are; then true iff they differ.
    pub fn xor(self, other: Self) -> Self {
        if !self.is_determinate() || !other.is_determinate() {
            TruthValue::Indeterminate
        } else {
            TruthValue::from_bool(self != other)
        }
    }

    pub fn equals(self, other: Self) -> Self {
        self.xor(other).negate()
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TruthValue::True => "true",
            TruthValue::False => "false",
            TruthValue::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// Connective kinds accepted by [`kleene_connective`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectiveKind {
    Not,
    And,
    Or,
    Xor,
    Equals,
}

/// Strong-Kleene truth table lookup with arity checking.
pub fn kleene_connective(kind: ConnectiveKind, inputs: &[TruthValue]) -> Result<TruthValue> {
    let arity_err = |expected, name| Error::ArityMismatch {
        kind: name,
        expected,
        got: inputs.len(),
    };
    match kind {
        ConnectiveKind::Not => {
            if inputs.len() != 1 {
                return Err(arity_err(1, "not"));
            }
            Ok(inputs[0].negate())
        }
        ConnectiveKind::And => {
            if inputs.is_empty() {
                return Err(arity_err(1, "and"));
            }
            Ok(inputs.iter().copied().fold(TruthValue::True, TruthValue::and))
        }
        ConnectiveKind::Or => {
            if inputs.is_empty() {
                return Err(arity_err(1, "or"));
            }
            Ok(inputs.iter().copied().fold(TruthValue::False, TruthValue::or))
        }
        ConnectiveKind::Xor => {
            if inputs.len() != 2 {
                return Err(arity_err(2, "xor"));
            }
            Ok(inputs[0].xor(inputs[1]))
        }
        ConnectiveKind::Equals => {
            if inputs.len() != 2 {
                return Err(arity_err(2, "equals"));
            }
            Ok(inputs[0].equals(inputs[1]))
        }
    }
}

/// The spacetime point at which a named random variable acquires a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminationEvent {
    pub variable: String,
    /// The realized bit.
    pub value: u8,
    pub location: SpacetimePoint,
}

impl DeterminationEvent {
    pub fn new(variable: impl Into<String>, value: u8, location: SpacetimePoint) -> Self {
        DeterminationEvent { variable: variable.into(), value, location }
    }
}

/// The determination events of a scenario, keyed by variable.
///
/// Holds at most one event per variable, plus the set of variables that are
/// declared but (not yet) determined, so evaluation can distinguish
/// "undetermined" from "never declared".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventSet {
    events: BTreeMap<String, DeterminationEvent>,
    declared: BTreeSet<String>,
}

impl EventSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a variable without determining it.
    pub fn declare(&mut self, variable: impl Into<String>) {
        self.declared.insert(variable.into());
    }

    pub fn insert(&mut self, event: DeterminationEvent) -> Result<()> {
        if self.events.contains_key(&event.variable) {
            return Err(Error::DuplicateVariable(event.variable));
        }
        self.declared.insert(event.variable.clone());
        self.events.insert(event.variable.clone(), event);
        Ok(())
    }

    pub fn get(&self, variable: &str) -> Option<&DeterminationEvent> {
        self.events.get(variable)
    }

    pub fn is_declared(&self, variable: &str) -> bool {
        self.declared.contains(variable)
    }

    /// All events in variable order (deterministic iteration).
    pub fn iter(&self) -> impl Iterator<Item = &DeterminationEvent> {
        self.events.values()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The same events with every location boosted by `v`.
    pub fn boosted(&self, metric: &Metric, v: f64) -> Result<EventSet> {
        let mut out = EventSet::new();
        for var in &self.declared {
            out.declare(var.clone());
        }
        for e in self.events.values() {
            out.insert(DeterminationEvent::new(
                e.variable.clone(),
                e.value,
                metric.boost(e.location, v)?,
            ))?;
        }
        Ok(out)
    }
}

/// An atomic claim `variable = value` or a connective tree over atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposition {
    Atom { variable: String, value: u8 },
    Not(Box<Proposition>),
    And(Vec<Proposition>),
    Or(Vec<Proposition>),
    Xor(Box<Proposition>, Box<Proposition>),
    Equals(Box<Proposition>, Box<Proposition>),
}

impl Proposition {
    pub fn atom(variable: impl Into<String>, value: u8) -> Self {
        Proposition::Atom { variable: variable.into(), value }
    }

    /// Variables referenced by the tree, in first-appearance order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Proposition::Atom { variable, .. } => {
                if !out.contains(&variable.as_str()) {
                    out.push(variable);
                }
            }
            Proposition::Not(p) => p.collect_variables(out),
            Proposition::And(ps) | Proposition::Or(ps) => {
                for p in ps {
                    p.collect_variables(out);
                }
            }
            Proposition::Xor(p, q) | Proposition::Equals(p, q) => {
                p.collect_variables(out);
                q.collect_variables(out);
            }
        }
    }

    /// Parse the compact text syntax: atoms `a=0`, connectives
    /// `!p`, `p & q`, `p ^ q`, `p | q`, `p == q`, with parentheses.
    /// Binding strength: `!` > `&` > `^` > `|` > `==`.
    pub fn parse(input: &str) -> Result<Proposition> {
        let mut parser = PropParser { input, pos: 0 };
        let prop = parser.parse_equals()?;
        parser.skip_ws();
        if parser.pos != input.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(prop)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposition::Atom { variable, value } => write!(f, "{variable}={value}"),
            Proposition::Not(p) => write!(f, "!({p})"),
            Proposition::And(ps) => write_joined(f, ps, " & "),
            Proposition::Or(ps) => write_joined(f, ps, " | "),
            Proposition::Xor(p, q) => write!(f, "({p}) ^ ({q})"),
            Proposition::Equals(p, q) => write!(f, "({p}) == ({q})"),
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, ps: &[Proposition], sep: &str) -> fmt::Result {
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "({p})")?;
    }
    Ok(())
}

struct PropParser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> PropParser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            line: 1,
            column: self.pos + 1,
            message: format!("{message} in proposition `{}`", self.input),
        }
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn parse_equals(&mut self) -> Result<Proposition> {
        let lhs = self.parse_or()?;
        if self.eat("==") {
            let rhs = self.parse_or()?;
            return Ok(Proposition::Equals(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Proposition> {
        let mut terms = vec![self.parse_xor()?];
        loop {
            self.skip_ws();
            // `|` but not `||`; `==` handled one level up.
            if self.rest().starts_with('|') {
                self.pos += 1;
                terms.push(self.parse_xor()?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Proposition::Or(terms) })
    }

    fn parse_xor(&mut self) -> Result<Proposition> {
        let mut lhs = self.parse_and()?;
        while self.eat("^") {
            let rhs = self.parse_and()?;
            lhs = Proposition::Xor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Proposition> {
        let mut terms = vec![self.parse_unary()?];
        while self.eat("&") {
            terms.push(self.parse_unary()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Proposition::And(terms) })
    }

    fn parse_unary(&mut self) -> Result<Proposition> {
        if self.eat("!") {
            return Ok(Proposition::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat("(") {
            let inner = self.parse_equals()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Proposition> {
        self.skip_ws();
        let start = self.pos;
        let ident_len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if ident_len == 0 || !self.rest().starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            return Err(self.error("expected a variable name"));
        }
        self.pos += ident_len;
        let variable = &self.input[start..start + ident_len];
        // A single `=` (reject `==` here so `a == b` fails loudly rather
        // than silently parsing `a=...`).
        self.skip_ws();
        if !self.rest().starts_with('=') || self.rest().starts_with("==") {
            return Err(self.error("expected `=0` or `=1` after variable"));
        }
        self.pos += 1;
        self.skip_ws();
        let value = if self.rest().starts_with('0') {
            0
        } else if self.rest().starts_with('1') {
            1
        } else {
            return Err(self.error("claimed value must be 0 or 1"));
        };
        self.pos += 1;
        Ok(Proposition::atom(variable, value))
    }
}

/// Truth of a single atom at `q`: determinate iff the variable's
/// determination event causally precedes `q` (closed cone).
pub fn atom_truth_at(
    events: &EventSet,
    variable: &str,
    claimed: u8,
    q: SpacetimePoint,
    metric: &Metric,
) -> Result<TruthValue> {
    if !events.is_declared(variable) {
        return Err(Error::UnknownVariable(variable.to_string()));
    }
    Ok(match events.get(variable) {
        Some(e) if metric.in_future_cone(e.location, q) => TruthValue::from_bool(e.value == claimed),
        _ => TruthValue::Indeterminate,
    })
}

/// Recursive strong-Kleene evaluation of a proposition at a point.
pub fn truth_at(
    events: &EventSet,
    prop: &Proposition,
    q: SpacetimePoint,
    metric: &Metric,
) -> Result<TruthValue> {
    match prop {
        Proposition::Atom { variable, value } => atom_truth_at(events, variable, *value, q, metric),
        Proposition::Not(p) => Ok(truth_at(events, p, q, metric)?.negate()),
        Proposition::And(ps) => {
            let mut acc = TruthValue::True;
            for p in ps {
                acc = acc.and(truth_at(events, p, q, metric)?);
            }
            Ok(acc)
        }
        Proposition::Or(ps) => {
            let mut acc = TruthValue::False;
            for p in ps {
                acc = acc.or(truth_at(events, p, q, metric)?);
            }
            Ok(acc)
        }
        Proposition::Xor(p, r) => {
            Ok(truth_at(events, p, q, metric)?.xor(truth_at(events, r, q, metric)?))
        }
        Proposition::Equals(p, r) => {
            Ok(truth_at(events, p, q, metric)?.equals(truth_at(events, r, q, metric)?))
        }
    }
}

/// The determination events of the proposition's variables that causally
/// precede `q` — the provenance of a truth query.
pub fn conditioning_events<'a>(
    events: &'a EventSet,
    prop: &Proposition,
    q: SpacetimePoint,
    metric: &Metric,
) -> Vec<&'a DeterminationEvent> {
    prop.variables()
        .into_iter()
        .filter_map(|v| events.get(v))
        .filter(|e| metric.in_future_cone(e.location, q))
        .collect()
}

/// True when every variable of the proposition is determined in the causal
/// past of `q`, i.e. the claim is locally checkable there.
pub fn locally_verifiable(
    events: &EventSet,
    prop: &Proposition,
    q: SpacetimePoint,
    metric: &Metric,
) -> bool {
    prop.variables().into_iter().all(|v| {
        events
            .get(v)
            .map(|e| metric.in_future_cone(e.location, q))
            .unwrap_or(false)
    })
}

/// Earliest coordinate time at which `prop` is determinate along `w`, or
/// `None` if it never becomes determinate.
///
/// The set of determined atoms along a timelike worldline only changes at
/// cone entry times, and strong Kleene is monotone in determined inputs, so
/// scanning the entry times in order is exact.
pub fn determinacy_frontier(
    events: &EventSet,
    prop: &Proposition,
    w: &Worldline,
    metric: &Metric,
) -> Result<Option<f64>> {
    let mut entries: Vec<f64> = Vec::new();
    for variable in prop.variables() {
        if !events.is_declared(variable) {
            return Err(Error::UnknownVariable(variable.to_string()));
        }
        if let Some(e) = events.get(variable) {
            entries.push(metric.cone_entry_time(e.location, w)?);
        }
    }
    entries.sort_by(|a, b| a.partial_cmp(b).expect("finite entry times"));
    entries.dedup();
    for t in entries {
        if truth_at(events, prop, w.point_at(t), metric)?.is_determinate() {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// One observer's mark that a variable is known from some spacetime point on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeMark {
    pub observer: String,
    pub variable: String,
    pub known_from: SpacetimePoint,
}

/// A value can be known only where it is determinate: `known_from` must lie
/// in the closed future cone of the variable's determination event.
pub fn validate_knowledge(events: &EventSet, mark: &KnowledgeMark, metric: &Metric) -> Result<()> {
    let e = events.get(&mark.variable).ok_or_else(|| {
        Error::InvalidScenario(format!(
            "knowledge mark for `{}` (observer {}) refers to an undetermined variable",
            mark.variable, mark.observer
        ))
    })?;
    if !metric.in_future_cone(e.location, mark.known_from) {
        return Err(Error::InvalidScenario(format!(
            "observer {} cannot know `{}` at (t={}, x={}): the point is outside the \
             future cone of its determination",
            mark.observer, mark.variable, mark.known_from.t, mark.known_from.x
        )));
    }
    Ok(())
}

/// One discrepancy found by [`check_local_reality`] (none are expected:
/// truth values depend only on causal relations, which boosts preserve).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRealityDiscrepancy {
    pub proposition: String,
    pub frame_velocity: f64,
    pub value_global: TruthValue,
    pub value_in_frame: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRealityReport {
    pub point: SpacetimePoint,
    pub frames_checked: usize,
    pub propositions_checked: usize,
    pub discrepancies: Vec<LocalRealityDiscrepancy>,
}

impl LocalRealityReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Executable witness that co-located observers agree: re-evaluate each
/// proposition at the same point in every given frame's coordinates and
/// report any value that differs from the global-chart value.
pub fn check_local_reality(
    events: &EventSet,
    propositions: &[Proposition],
    q: SpacetimePoint,
    frames: &[Frame],
    metric: &Metric,
) -> Result<LocalRealityReport> {
    let mut discrepancies = Vec::new();
    for prop in propositions {
        let reference = truth_at(events, prop, q, metric)?;
        for frame in frames {
            let boosted_events = events.boosted(metric, frame.velocity)?;
            let boosted_q = metric.boost(q, frame.velocity)?;
            let value = truth_at(&boosted_events, prop, boosted_q, metric)?;
            if value != reference {
                discrepancies.push(LocalRealityDiscrepancy {
                    proposition: prop.to_string(),
                    frame_velocity: frame.velocity,
                    value_global: reference,
                    value_in_frame: value,
                });
            }
        }
    }
    Ok(LocalRealityReport {
        point: q,
        frames_checked: frames.len(),
        propositions_checked: propositions.len(),
        discrepancies,
    })
}

/// A refutation of the present-reality assumption: two points on one plane
/// of simultaneity where the same proposition is determinate at one and
/// indeterminate at the other.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresentRealityCounterexample {
    pub frame_velocity: f64,
    pub proposition: String,
    pub determinate_at: SpacetimePoint,
    pub determinate_value: TruthValue,
    pub indeterminate_at: SpacetimePoint,
}

/// Search for a present-reality counterexample in the frame moving at
/// `frame_velocity`: for each determination event, intersect the frame's
/// simultaneity plane through the event with each observer worldline and
/// test whether the event's own proposition is still indeterminate there.
pub fn present_reality_falsifier(
    events: &EventSet,
    observers: &[Worldline],
    frame_velocity: f64,
    metric: &Metric,
) -> Result<Option<PresentRealityCounterexample>> {
    let frame = Frame::new("falsifier", frame_velocity);
    for event in events.iter() {
        let prop = Proposition::atom(event.variable.clone(), event.value);
        let p = event.location;
        let value_at_p = truth_at(events, &prop, p, metric)?;
        if !value_at_p.is_determinate() {
            continue;
        }
        for w in observers {
            let q = metric.simultaneous_point_on_worldline(&frame, p, w)?;
            if !truth_at(events, &prop, q, metric)?.is_determinate() {
                return Ok(Some(PresentRealityCounterexample {
                    frame_velocity,
                    proposition: prop.to_string(),
                    determinate_at: p,
                    determinate_value: value_at_p,
                    indeterminate_at: q,
                }));
            }
        }
    }
    Ok(None)
}
