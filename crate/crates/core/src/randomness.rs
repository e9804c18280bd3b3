//! TRNG processes and classical correlated randomness.
//!
//! A TRNG rides a worldline and emits one fresh bit per `proper_period` of
//! its own proper time; in the global chart the tick spacing dilates to
//! `gamma * proper_period`. Joint biases between TRNGs are declared as
//! explicit propensity tables over outcome tuples, and a propensity query
//! at a spacetime point conditions the table on exactly those
//! determination events that lie in the point's closed causal past.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::determinacy::{DeterminationEvent, EventSet};
use crate::error::{Error, Result};
use crate::prob::{table_tolerance, Prob};
use crate::spacetime::{Metric, SpacetimePoint, Worldline};

/// An idealized true random number generator riding a worldline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrngProcess {
    /// Tick k is named `{variable_prefix}{k}`, k starting at 1.
    pub variable_prefix: String,
    pub worldline: Worldline,
    /// Proper time between fresh bits, in minutes. Must be positive.
    pub proper_period: f64,
    /// Probability that a tick realizes 1.
    pub marginal: Prob,
}

impl TrngProcess {
    pub fn validate(&self) -> Result<()> {
        if !(self.proper_period > 0.0) {
            return Err(Error::Domain(format!(
                "TRNG `{}` needs a positive proper period",
                self.variable_prefix
            )));
        }
        if !self.marginal.in_unit_interval() {
            return Err(Error::InvalidModel(format!(
                "TRNG `{}` marginal {} is outside [0,1]",
                self.variable_prefix, self.marginal
            )));
        }
        Ok(())
    }

    /// Global-chart coordinates of every tick up to coordinate time
    /// `horizon` (inclusive). The kth tick fires at proper time
    /// `k * proper_period`, i.e. coordinate time `anchor.t + k * gamma * proper_period`.
    pub fn tick_events(&self, horizon: f64, metric: &Metric) -> Result<Vec<SpacetimePoint>> {
        self.validate()?;
        if horizon < self.worldline.anchor.t {
            return Err(Error::Domain(format!(
                "tick horizon {horizon} precedes the TRNG anchor time {}",
                self.worldline.anchor.t
            )));
        }
        let gamma = metric.gamma(self.worldline.velocity)?;
        let coordinate_period = gamma * self.proper_period;
        let mut ticks = Vec::new();
        let mut k = 1u64;
        loop {
            let t = self.worldline.anchor.t + k as f64 * coordinate_period;
            if t > horizon + metric.epsilon {
                break;
            }
            ticks.push(self.worldline.point_at(t));
            k += 1;
        }
        Ok(ticks)
    }

    /// Tick coordinates paired with their variable names.
    pub fn tick_variables(&self, horizon: f64, metric: &Metric) -> Result<Vec<(String, SpacetimePoint)>> {
        Ok(self
            .tick_events(horizon, metric)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("{}{}", self.variable_prefix, i + 1), p))
            .collect())
    }
}

/// A joint propensity table over a tuple of binary variables.
///
/// `joint[i]` is the propensity of the outcome tuple whose bits spell `i`
/// with `variables[0]` as the most significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    pub variables: Vec<String>,
    pub joint: Vec<Prob>,
}

/// One structured violation found by [`CorrelationModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelViolation {
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)
    }
}

impl CorrelationModel {
    pub fn new(variables: Vec<String>, joint: Vec<Prob>) -> Self {
        CorrelationModel { variables, joint }
    }

    /// The paper's two-bit example: uniform marginals with p(a=b) = 3/4.
    pub fn matched_pair(a: &str, b: &str, p_equal: Prob) -> Self {
        let half = Prob::ratio(1, 2);
        let p_same = p_equal * half.clone();
        let p_diff = (Prob::one() - p_same.clone() - p_same.clone()) * half;
        CorrelationModel::new(
            vec![a.to_string(), b.to_string()],
            vec![p_same.clone(), p_diff.clone(), p_diff, p_same],
        )
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Normalization, range, arity and duplicate checks; returns every
    /// violation rather than stopping at the first.
    pub fn validate(&self) -> Vec<ModelViolation> {
        let mut violations = Vec::new();
        let n = self.num_variables();
        if n == 0 || n > 8 {
            violations.push(ModelViolation {
                rule: "shape",
                message: format!("expected between 1 and 8 variables, got {n}"),
            });
            return violations;
        }
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].contains(v) {
                violations.push(ModelViolation {
                    rule: "shape",
                    message: format!("variable `{v}` appears twice"),
                });
            }
        }
        if self.joint.len() != 1 << n {
            violations.push(ModelViolation {
                rule: "shape",
                message: format!(
                    "joint table over {n} variables needs {} entries, got {}",
                    1 << n,
                    self.joint.len()
                ),
            });
            return violations;
        }
        for (i, p) in self.joint.iter().enumerate() {
            if !p.in_unit_interval() {
                violations.push(ModelViolation {
                    rule: "range",
                    message: format!("entry {i} = {p} is outside [0,1]"),
                });
            }
        }
        let total: Prob = self.joint.iter().cloned().fold(Prob::zero(), |a, b| a + b);
        if !total.is_one_within(&table_tolerance()) {
            violations.push(ModelViolation {
                rule: "normalization",
                message: format!("propensities sum to {total}, expected 1"),
            });
        }
        violations
    }

    /// Check that declared per-variable marginals are recovered from the joint.
    pub fn check_marginals(&self, declared: &BTreeMap<String, Prob>) -> Vec<ModelViolation> {
        let mut violations = Vec::new();
        for (i, var) in self.variables.iter().enumerate() {
            if let Some(expected) = declared.get(var) {
                let actual = self.marginal_by_index(i);
                if (actual.clone() - expected.clone()).abs() > table_tolerance() {
                    violations.push(ModelViolation {
                        rule: "marginal",
                        message: format!(
                            "declared marginal of `{var}` is {expected} but the joint gives {actual}"
                        ),
                    });
                }
            }
        }
        violations
    }

    /// P(variables[i] = 1) from the joint.
    pub fn marginal_by_index(&self, i: usize) -> Prob {
        let n = self.num_variables();
        let mut total = Prob::zero();
        for (idx, p) in self.joint.iter().enumerate() {
            if (idx >> (n - 1 - i)) & 1 == 1 {
                total += p.clone();
            }
        }
        total
    }

    pub fn marginal(&self, variable: &str) -> Option<Prob> {
        self.variables
            .iter()
            .position(|v| v == variable)
            .map(|i| self.marginal_by_index(i))
    }

    /// P(variable = value | fixed assignments), computed exactly from the
    /// joint. Errors if the conditioning event has probability zero.
    pub fn conditional(&self, variable: &str, value: u8, given: &[(&str, u8)]) -> Result<Prob> {
        let target = self
            .variables
            .iter()
            .position(|v| v == variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        let n = self.num_variables();
        let mut fixed: Vec<Option<u8>> = vec![None; n];
        for (var, bit) in given {
            if let Some(i) = self.variables.iter().position(|v| v == var) {
                fixed[i] = Some(*bit);
            }
        }
        let mut numerator = Prob::zero();
        let mut denominator = Prob::zero();
        for (idx, p) in self.joint.iter().enumerate() {
            let bit_at = |i: usize| ((idx >> (n - 1 - i)) & 1) as u8;
            if (0..n).any(|i| fixed[i].map(|b| b != bit_at(i)).unwrap_or(false)) {
                continue;
            }
            denominator += p.clone();
            if bit_at(target) == value {
                numerator += p.clone();
            }
        }
        if denominator.is_zero() {
            return Err(Error::ZeroProbability(format!(
                "the conditioning assignment {given:?} has propensity 0 in the joint over {:?}",
                self.variables
            )));
        }
        Ok(numerator / denominator)
    }

    /// Draw one full outcome tuple, honoring forced values by conditioning.
    /// Deterministic given the generator state.
    pub fn sample(
        &self,
        forced: &BTreeMap<String, u8>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<(String, u8)>> {
        let n = self.num_variables();
        let fixed: Vec<Option<u8>> = self.variables.iter().map(|v| forced.get(v).copied()).collect();
        let bit_at = |idx: usize, i: usize| ((idx >> (n - 1 - i)) & 1) as u8;
        let mut weights = Vec::with_capacity(self.joint.len());
        let mut total = Prob::zero();
        for (idx, p) in self.joint.iter().enumerate() {
            let compatible = (0..n).all(|i| fixed[i].map(|b| b == bit_at(idx, i)).unwrap_or(true));
            let w = if compatible { p.clone() } else { Prob::zero() };
            total += w.clone();
            weights.push(w);
        }
        if total.is_zero() {
            return Err(Error::ZeroProbability(format!(
                "forced values {forced:?} have propensity 0 in the joint over {:?}",
                self.variables
            )));
        }
        let idx = draw_index_weighted(&weights, &total, rng);
        Ok(self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), bit_at(idx, i)))
            .collect())
    }
}

/// A propensity attached to a claim at a point, plus its conditioning set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropensityAssignment {
    pub variable: String,
    pub value: u8,
    pub point: SpacetimePoint,
    pub propensity: Prob,
    /// True when the claim's own determination already reached the point.
    pub determinate: bool,
    pub conditioned_on: Vec<DeterminationEvent>,
}

/// The objective propensity of `variable = value` at `q`.
///
/// The conditioning set is exactly the realized determination events whose
/// locations lie in the closed causal past of `q`. Outside every relevant
/// cone this returns the plain marginal — nothing about a remote
/// realization is visible until its light cone arrives.
pub fn propensity_at(
    models: &[CorrelationModel],
    fallback_marginals: &BTreeMap<String, Prob>,
    events: &EventSet,
    variable: &str,
    value: u8,
    q: SpacetimePoint,
    metric: &Metric,
) -> Result<PropensityAssignment> {
    if !events.is_declared(variable) && fallback_marginals.get(variable).is_none() {
        return Err(Error::UnknownVariable(variable.to_string()));
    }
    // The claim's own determination has arrived: propensity collapses to 0/1.
    if let Some(own) = events.get(variable) {
        if metric.in_future_cone(own.location, q) {
            return Ok(PropensityAssignment {
                variable: variable.to_string(),
                value,
                point: q,
                propensity: if own.value == value { Prob::one() } else { Prob::zero() },
                determinate: true,
                conditioned_on: vec![own.clone()],
            });
        }
    }
    if let Some(model) = models.iter().find(|m| m.variables.iter().any(|v| v == variable)) {
        let conditioned_on: Vec<DeterminationEvent> = model
            .variables
            .iter()
            .filter(|v| v.as_str() != variable)
            .filter_map(|v| events.get(v))
            .filter(|e| metric.in_future_cone(e.location, q))
            .cloned()
            .collect();
        let given: Vec<(&str, u8)> = conditioned_on
            .iter()
            .map(|e| (e.variable.as_str(), e.value))
            .collect();
        let propensity = model.conditional(variable, value, &given)?;
        return Ok(PropensityAssignment {
            variable: variable.to_string(),
            value,
            point: q,
            propensity,
            determinate: false,
            conditioned_on,
        });
    }
    // Independent variable: its declared marginal, untouched by anything else.
    let p_one = fallback_marginals
        .get(variable)
        .cloned()
        .unwrap_or_else(|| Prob::ratio(1, 2));
    Ok(PropensityAssignment {
        variable: variable.to_string(),
        value,
        point: q,
        propensity: if value == 1 { p_one } else { Prob::one() - p_one },
        determinate: false,
        conditioned_on: Vec::new(),
    })
}

/// A deterministic substream of the scenario seed, keyed by label, so each
/// sampled object gets its own reproducible generator regardless of
/// evaluation order.
pub fn substream(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label, mixed into the seed.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

/// Draw a Bernoulli bit with success probability `p_one`.
///
/// The uniform draw has 2^-53 resolution, so comparing against the
/// f64-rounded probability shifts the threshold by at most one ulp of the
/// exact value; the table arithmetic everywhere else stays exact.
pub fn draw_bit(p_one: &Prob, rng: &mut ChaCha8Rng) -> u8 {
    u8::from(rng.gen::<f64>() < p_one.to_f64())
}

/// Pick an index by weight. Zero-weight entries never advance the
/// cumulative sum, so they are never selected.
fn draw_index_weighted(weights: &[Prob], total: &Prob, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>() * total.to_f64();
    let mut cumulative = 0.0;
    for (i, w) in weights.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        cumulative += w.to_f64();
        if u < cumulative {
            return i;
        }
    }
    weights.iter().rposition(|w| !w.is_zero()).unwrap_or(0)
}
