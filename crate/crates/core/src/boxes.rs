//! Conditional no-signaling boxes p(a,b|x,y).
//!
//! A box is a 16-entry conditional probability table over two binary
//! inputs and two binary outputs. Arithmetic is exact, so the PR box
//! passes validation, no-signaling and CHSH checks with zero tolerance,
//! and local-polytope membership is decided by exact linear feasibility
//! over the 16 deterministic strategies rather than by thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{table_tolerance, Prob};
use crate::randomness::ModelViolation;

/// Conditional box table. Entry order is lexicographic in (x, y, a, b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxTable {
    pub table: Vec<Prob>,
}

/// Which party a conditioning refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// A box together with one party's realized input and outcome, to be
/// conditioned on relative to that party's future light cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedBox {
    pub base: BoxTable,
    pub side: Side,
    pub input: u8,
    pub outcome: u8,
}

/// One no-signaling violation: a party's outcome marginal depends on the
/// other party's input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalingViolation {
    /// The party whose marginal shifts.
    pub party: Side,
    /// That party's outcome and input.
    pub outcome: u8,
    pub input: u8,
    /// Marginals under the other party's input 0 and 1.
    pub marginal_0: Prob,
    pub marginal_1: Prob,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub violations: Vec<SignalingViolation>,
}

impl NoSignalingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Result of the local-polytope membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalBound {
    /// True iff the box is a convex combination of the 16 deterministic
    /// local strategies (exact feasibility, no tolerance).
    pub is_local: bool,
    /// The largest CHSH-type value over the 8 sign variants.
    pub best_s: Prob,
}

/// The Popescu–Rohrlich box: outputs satisfy a xor b = x and y, uniformly.
pub fn pr_box() -> BoxTable {
    let half = Prob::ratio(1, 2);
    let mut table = vec![Prob::zero(); 16];
    for x in 0..2u8 {
        for y in 0..2u8 {
            for a in 0..2u8 {
                for b in 0..2u8 {
                    if a ^ b == x & y {
                        table[BoxTable::index(x, y, a, b)] = half.clone();
                    }
                }
            }
        }
    }
    BoxTable { table }
}

impl BoxTable {
    pub fn index(x: u8, y: u8, a: u8, b: u8) -> usize {
        ((x as usize) << 3) | ((y as usize) << 2) | ((a as usize) << 1) | b as usize
    }

    pub fn get(&self, x: u8, y: u8, a: u8, b: u8) -> &Prob {
        &self.table[Self::index(x, y, a, b)]
    }

    /// Product box p(a|x) * p(b|y) from local response distributions
    /// `pa[x]` = P(a=1|x), `pb[y]` = P(b=1|y).
    pub fn product(pa: [Prob; 2], pb: [Prob; 2]) -> BoxTable {
        let mut table = vec![Prob::zero(); 16];
        for x in 0..2u8 {
            for y in 0..2u8 {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        let p_a = if a == 1 {
                            pa[x as usize].clone()
                        } else {
                            Prob::one() - pa[x as usize].clone()
                        };
                        let p_b = if b == 1 {
                            pb[y as usize].clone()
                        } else {
                            Prob::one() - pb[y as usize].clone()
                        };
                        table[Self::index(x, y, a, b)] = p_a * p_b;
                    }
                }
            }
        }
        BoxTable { table }
    }

    /// The deterministic strategy a = fa(x), b = fb(y), with the response
    /// functions encoded as two-bit tables (`fa >> x & 1`).
    pub fn deterministic(fa: u8, fb: u8) -> BoxTable {
        let mut table = vec![Prob::zero(); 16];
        for x in 0..2u8 {
            for y in 0..2u8 {
                let a = (fa >> x) & 1;
                let b = (fb >> y) & 1;
                table[Self::index(x, y, a, b)] = Prob::one();
            }
        }
        BoxTable { table }
    }

    /// Convex mixture `w * self + (1-w) * other`.
    pub fn mix(&self, other: &BoxTable, weight: Prob) -> BoxTable {
        let co = Prob::one() - weight.clone();
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| weight.clone() * p.clone() + co.clone() * q.clone())
            .collect();
        BoxTable { table }
    }

    /// Entry range and per-(x,y) normalization checks.
    pub fn validate(&self) -> Vec<ModelViolation> {
        let mut violations = Vec::new();
        if self.table.len() != 16 {
            violations.push(ModelViolation {
                rule: "shape",
                message: format!("box table needs 16 entries, got {}", self.table.len()),
            });
            return violations;
        }
        for (i, p) in self.table.iter().enumerate() {
            if !p.in_unit_interval() {
                violations.push(ModelViolation {
                    rule: "range",
                    message: format!("entry {i} = {p} is outside [0,1]"),
                });
            }
        }
        for x in 0..2u8 {
            for y in 0..2u8 {
                let mut total = Prob::zero();
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        total += self.get(x, y, a, b).clone();
                    }
                }
                if !total.is_one_within(&table_tolerance()) {
                    violations.push(ModelViolation {
                        rule: "normalization",
                        message: format!("sum over outcomes for inputs ({x},{y}) is {total}, expected 1"),
                    });
                }
            }
        }
        violations
    }

    /// P(a | x, y) for party A, or P(b | x, y) for party B.
    fn outcome_marginal(&self, party: Side, outcome: u8, x: u8, y: u8) -> Prob {
        let mut total = Prob::zero();
        for other in 0..2u8 {
            let (a, b) = match party {
                Side::A => (outcome, other),
                Side::B => (other, outcome),
            };
            total += self.get(x, y, a, b).clone();
        }
        total
    }

    /// Verify that each party's outcome marginals are independent of the
    /// other party's input.
    pub fn no_signaling_check(&self) -> NoSignalingReport {
        let tol = table_tolerance();
        let mut violations = Vec::new();
        for outcome in 0..2u8 {
            for input in 0..2u8 {
                // Party A: sum over b must not depend on y.
                let m0 = self.outcome_marginal(Side::A, outcome, input, 0);
                let m1 = self.outcome_marginal(Side::A, outcome, input, 1);
                if (m0.clone() - m1.clone()).abs() > tol {
                    let magnitude = (m0.clone() - m1.clone()).abs().to_f64();
                    violations.push(SignalingViolation {
                        party: Side::A,
                        outcome,
                        input,
                        marginal_0: m0,
                        marginal_1: m1,
                        magnitude,
                    });
                }
                // Party B: sum over a must not depend on x.
                let m0 = self.outcome_marginal(Side::B, outcome, 0, input);
                let m1 = self.outcome_marginal(Side::B, outcome, 1, input);
                if (m0.clone() - m1.clone()).abs() > tol {
                    let magnitude = (m0.clone() - m1.clone()).abs().to_f64();
                    violations.push(SignalingViolation {
                        party: Side::B,
                        outcome,
                        input,
                        marginal_0: m0,
                        marginal_1: m1,
                        magnitude,
                    });
                }
            }
        }
        NoSignalingReport { violations }
    }

    /// Correlator E_xy = sum over outcomes of (-1)^(a xor b) p(a,b|x,y).
    pub fn correlator(&self, x: u8, y: u8) -> Prob {
        let mut total = Prob::zero();
        for a in 0..2u8 {
            for b in 0..2u8 {
                let term = self.get(x, y, a, b).clone();
                total += if a ^ b == 0 { term } else { -term };
            }
        }
        total
    }

    /// The canonical CHSH functional S = E00 + E01 + E10 - E11, exact.
    pub fn chsh_value(&self) -> Prob {
        self.correlator(0, 0) + self.correlator(0, 1) + self.correlator(1, 0)
            - self.correlator(1, 1)
    }

    /// Largest |S| over the 8 CHSH sign variants (4 minus positions x 2
    /// global signs).
    pub fn best_chsh(&self) -> Prob {
        let e = [
            self.correlator(0, 0),
            self.correlator(0, 1),
            self.correlator(1, 0),
            self.correlator(1, 1),
        ];
        let mut best = Prob::zero();
        for minus in 0..4 {
            let mut s = Prob::zero();
            for (i, e_i) in e.iter().enumerate() {
                s += if i == minus { -e_i.clone() } else { e_i.clone() };
            }
            let s = s.abs();
            if s > best {
                best = s;
            }
        }
        best
    }

    /// Exact membership test for the local polytope: is this box a convex
    /// combination of the 16 deterministic strategies? Decided by phase-I
    /// simplex on rationals, so the verdict carries no tolerance at all.
    pub fn local_bound(&self) -> LocalBound {
        let mut columns: Vec<Vec<Prob>> = Vec::with_capacity(16);
        for fa in 0..4u8 {
            for fb in 0..4u8 {
                columns.push(BoxTable::deterministic(fa, fb).table);
            }
        }
        let rhs: Vec<Prob> = self.table.clone();
        let is_local = exact_feasible(&columns, &rhs);
        LocalBound { is_local, best_s: self.best_chsh() }
    }
}

impl ConditionedBox {
    pub fn new(base: BoxTable, side: Side, input: u8, outcome: u8) -> Result<Self> {
        let cb = ConditionedBox { base, side, input, outcome };
        // The conditioning outcome must be reachable whatever the remote
        // input is, or the in-cone branch would divide by zero.
        for other in 0..2u8 {
            if cb.own_marginal(other).is_zero() {
                return Err(Error::ZeroProbability(format!(
                    "outcome {} for input {} on side {:?} has probability 0 (remote input {})",
                    cb.outcome, cb.input, cb.side, other
                )));
            }
        }
        Ok(cb)
    }

    /// P(own outcome | own input, remote input).
    fn own_marginal(&self, remote_input: u8) -> Prob {
        let (x, y) = match self.side {
            Side::A => (self.input, remote_input),
            Side::B => (remote_input, self.input),
        };
        self.base.outcome_marginal(self.side, self.outcome, x, y)
    }

    /// The remote party's outcome distribution as seen at a point that is
    /// (or is not) inside the conditioning party's future light cone.
    ///
    /// Returns `dist[remote_input][remote_outcome]`. Inside the cone the
    /// realized (input, outcome) pair conditions the box; outside, the
    /// remote party keeps its unconditioned marginal.
    pub fn distribution(&self, q_in_cone: bool) -> Result<[[Prob; 2]; 2]> {
        let mut dist = [[Prob::zero(), Prob::zero()], [Prob::zero(), Prob::zero()]];
        for remote_input in 0..2u8 {
            let (x, y) = match self.side {
                Side::A => (self.input, remote_input),
                Side::B => (remote_input, self.input),
            };
            for remote_outcome in 0..2u8 {
                let (a, b) = match self.side {
                    Side::A => (self.outcome, remote_outcome),
                    Side::B => (remote_outcome, self.outcome),
                };
                let value = if q_in_cone {
                    let denom = self.own_marginal(remote_input);
                    if denom.is_zero() {
                        return Err(Error::ZeroProbability(
                            "conditioning outcome has zero marginal".into(),
                        ));
                    }
                    self.base.get(x, y, a, b).clone() / denom
                } else {
                    // Unconditioned remote marginal; for a no-signaling box
                    // it does not depend on the conditioning party's input.
                    let remote_party = match self.side {
                        Side::A => Side::B,
                        Side::B => Side::A,
                    };
                    self.base.outcome_marginal(remote_party, remote_outcome, x, y)
                };
                dist[remote_input as usize][remote_outcome as usize] = value;
            }
        }
        Ok(dist)
    }
}

/// Does `sum_i lambda_i columns[i] = rhs` admit a solution with all
/// lambda_i >= 0? Phase-I simplex with Bland's rule on exact rationals.
fn exact_feasible(columns: &[Vec<Prob>], rhs: &[Prob]) -> bool {
    let m = rhs.len();
    let n = columns.len();
    // Tableau rows: [lambda columns | artificial identity | rhs], with rows
    // flipped so every right-hand side is nonnegative.
    let mut rows: Vec<Vec<Prob>> = Vec::with_capacity(m);
    for r in 0..m {
        let flip = rhs[r] < Prob::zero();
        let mut row: Vec<Prob> = Vec::with_capacity(n + m + 1);
        for col in columns {
            let v = col[r].clone();
            row.push(if flip { -v } else { v });
        }
        for j in 0..m {
            row.push(if j == r { Prob::one() } else { Prob::zero() });
        }
        row.push(if flip { -rhs[r].clone() } else { rhs[r].clone() });
        rows.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced-cost row for minimizing the sum of artificials, with the
    // negated objective in the rhs slot so pivoting updates it uniformly.
    // Cost is 1 on each artificial and 0 elsewhere; with the artificial
    // basis this reduces to cost[j] = -sum_r rows[r][j] for lambda columns
    // and cost[rhs] = -sum_r rhs_r.
    let total_cols = n + m + 1;
    let mut cost: Vec<Prob> = vec![Prob::zero(); total_cols];
    for j in 0..n {
        let mut s = Prob::zero();
        for row in &rows {
            s += row[j].clone();
        }
        cost[j] = -s;
    }
    let mut neg_objective = Prob::zero();
    for row in &rows {
        neg_objective = neg_objective - row[total_cols - 1].clone();
    }
    cost[total_cols - 1] = neg_objective;

    loop {
        // Bland's rule: smallest column with negative reduced cost.
        let Some(enter) = (0..n + m).find(|&j| cost[j] < Prob::zero()) else {
            break;
        };
        // Ratio test, ties broken by smallest basis index (Bland again).
        let mut leave: Option<usize> = None;
        let mut best_ratio: Option<Prob> = None;
        for (r, row) in rows.iter().enumerate() {
            if row[enter] <= Prob::zero() {
                continue;
            }
            let ratio = row[total_cols - 1].clone() / row[enter].clone();
            let better = match &best_ratio {
                None => true,
                Some(b) => ratio < *b || (ratio == *b && basis[r] < basis[leave.unwrap()]),
            };
            if better {
                best_ratio = Some(ratio);
                leave = Some(r);
            }
        }
        let Some(leave) = leave else {
            // Unbounded direction cannot happen in phase I; treat as done.
            break;
        };
        // Pivot.
        let pivot = rows[leave][enter].clone();
        for v in rows[leave].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        for r in 0..m {
            if r == leave {
                continue;
            }
            let factor = rows[r][enter].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..total_cols {
                let delta = factor.clone() * rows[leave][j].clone();
                rows[r][j] = rows[r][j].clone() - delta;
            }
        }
        let factor = cost[enter].clone();
        if !factor.is_zero() {
            for j in 0..total_cols {
                let delta = factor.clone() * rows[leave][j].clone();
                cost[j] = cost[j].clone() - delta;
            }
        }
        basis[leave] = enter;
    }
    // Feasible iff the phase-I optimum (sum of artificials) is exactly zero.
    cost[total_cols - 1].is_zero()
}
