//! Small exact state-vector engine with projective measurement.
//!
//! Registers hold up to four qubits as dense amplitude vectors. Qubit 0 is
//! the leftmost ket factor (most significant bit of the index), so
//! |100> of a three-qubit register sits at index 4. Measurements are rank-1
//! projections followed by renormalization, and the global state assigned
//! to a spacetime point applies exactly the measurement events in the
//! point's closed causal past — projectors on disjoint qubits commute, so
//! every frame's ordering of spacelike measurements yields the same state.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boxes::BoxTable;
use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::randomness::substream;
use crate::spacetime::{CausalKind, Metric, SpacetimePoint};

const NORM_TOLERANCE: f64 = 1e-12;
pub const MAX_QUBITS: usize = 4;

/// A measurement basis for one qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
    Y,
    /// Explicit orthonormal pair; each vector is [[re, im], [re, im]] in the
    /// computational basis.
    Custom([[f64; 2]; 2], [[f64; 2]; 2]),
}

impl Basis {
    /// The basis vector assigned to an outcome bit, as z-basis coefficients.
    pub fn vector(&self, outcome: u8) -> [Complex64; 2] {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        match (self, outcome) {
            (Basis::Z, 0) => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            (Basis::Z, _) => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            (Basis::X, 0) => [Complex64::new(inv_sqrt2, 0.0), Complex64::new(inv_sqrt2, 0.0)],
            (Basis::X, _) => [Complex64::new(inv_sqrt2, 0.0), Complex64::new(-inv_sqrt2, 0.0)],
            (Basis::Y, 0) => [Complex64::new(inv_sqrt2, 0.0), Complex64::new(0.0, inv_sqrt2)],
            (Basis::Y, _) => [Complex64::new(inv_sqrt2, 0.0), Complex64::new(0.0, -inv_sqrt2)],
            (Basis::Custom(v0, v1), o) => {
                let v = if o == 0 { v0 } else { v1 };
                [Complex64::new(v[0][0], v[0][1]), Complex64::new(v[1][0], v[1][1])]
            }
        }
    }

    /// Orthonormality of the pair, within 1e-12.
    pub fn validate(&self) -> Result<()> {
        let v0 = self.vector(0);
        let v1 = self.vector(1);
        let n0 = v0[0].norm_sqr() + v0[1].norm_sqr();
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let cross = v0[0].conj() * v1[0] + v0[1].conj() * v1[1];
        if (n0 - 1.0).abs() > NORM_TOLERANCE
            || (n1 - 1.0).abs() > NORM_TOLERANCE
            || cross.norm() > NORM_TOLERANCE
        {
            return Err(Error::InvalidState(format!(
                "basis vectors are not orthonormal (norms {n0}, {n1}, overlap {})",
                cross.norm()
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            Basis::Z => "z",
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Custom(..) => "custom",
        }
    }

    /// Spin basis along the Bloch direction at polar angle `theta` in the
    /// x-z plane: theta = 0 is z, theta = pi/2 is x.
    pub fn bloch_xz(theta: f64) -> Basis {
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        Basis::Custom([[c, 0.0], [s, 0.0]], [[s, 0.0], [-c, 0.0]])
    }
}

/// An n-qubit pure state (n <= 4) as a dense unit-norm amplitude vector.
///
/// Serializes as a list of `[re, im]` pairs in computational-basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister {
    amps: Vec<Complex64>,
}

impl Serialize for QuantumRegister {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuantumRegister {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        let amps = pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        QuantumRegister::from_amplitudes(amps).map_err(serde::de::Error::custom)
    }
}

impl QuantumRegister {
    /// Validated construction from explicit amplitudes.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        let n = len.trailing_zeros() as usize;
        if !len.is_power_of_two() || len < 2 || n > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "amplitude vector length {len} is not a power of two in [2, 2^{MAX_QUBITS}]"
            )));
        }
        if !amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::InvalidState("amplitudes must be finite".into()));
        }
        let reg = QuantumRegister { amps };
        let norm = reg.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "state norm^2 is {norm}, expected 1 within {NORM_TOLERANCE}"
            )));
        }
        Ok(reg)
    }

    /// Tensor product of single-qubit states (each normalized here).
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "product state needs 1..={MAX_QUBITS} qubits, got {}",
                qubits.len()
            )));
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for q in qubits {
            let norm = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
            if norm <= NORM_TOLERANCE {
                return Err(Error::InvalidState("zero single-qubit state".into()));
            }
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * q[0] / norm);
                next.push(a * q[1] / norm);
            }
            amps = next;
        }
        Ok(QuantumRegister { amps })
    }

    /// The two-qubit singlet (|01> - |10>)/sqrt(2); same form in every basis.
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        QuantumRegister {
            amps: vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    /// The three-qubit W state (|100> + |010> + |001>)/sqrt(3): one particle
    /// delocalized over three sites.
    pub fn w3() -> Self {
        let s = 1.0 / 3f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0b100] = Complex64::new(s, 0.0);
        amps[0b010] = Complex64::new(s, 0.0);
        amps[0b001] = Complex64::new(s, 0.0);
        QuantumRegister { amps }
    }

    /// Registers addressable by name in scenario files.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "singlet" => Some(Self::singlet()),
            "w3" => Some(Self::w3()),
            _ => None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<usize> {
        let n = self.n_qubits();
        if qubit >= n {
            return Err(Error::QubitIndex { index: qubit, n_qubits: n });
        }
        // Bit position of the qubit in the index (qubit 0 is the MSB).
        Ok(n - 1 - qubit)
    }

    /// Inner product <self|other>.
    pub fn overlap(&self, other: &QuantumRegister) -> Result<Complex64> {
        if self.n_qubits() != other.n_qubits() {
            return Err(Error::DimensionMismatch(self.n_qubits(), other.n_qubits()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Equality up to global phase: |<self|other>| = 1 within `tol`.
    pub fn same_up_to_phase(&self, other: &QuantumRegister, tol: f64) -> bool {
        match self.overlap(other) {
            Ok(ov) => (ov.norm() - 1.0).abs() <= tol,
            Err(_) => false,
        }
    }

    /// Apply |u><u| on `qubit` without renormalizing; returns the projected
    /// vector and its squared norm (the Born probability).
    fn project_unnormalized(&self, qubit: usize, u: [Complex64; 2]) -> Result<(Vec<Complex64>, f64)> {
        let shift = self.check_qubit(qubit)?;
        let mask = 1usize << shift;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let mut norm_sqr = 0.0;
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let lo = self.amps[base];
            let hi = self.amps[base | mask];
            let coeff = u[0].conj() * lo + u[1].conj() * hi;
            out[base] = coeff * u[0];
            out[base | mask] = coeff * u[1];
            norm_sqr += coeff.norm_sqr();
        }
        Ok((out, norm_sqr))
    }

    /// Born probabilities (p0, p1) for measuring `qubit` in `basis`.
    pub fn born_probabilities(&self, qubit: usize, basis: &Basis) -> Result<(f64, f64)> {
        basis.validate()?;
        let (_, p0) = self.project_unnormalized(qubit, basis.vector(0))?;
        let (_, p1) = self.project_unnormalized(qubit, basis.vector(1))?;
        debug_assert!((p0 + p1 - 1.0).abs() <= 1e-9);
        Ok((p0, p1))
    }

    /// Projection postulate: collapse `qubit` onto the basis vector of
    /// `outcome` and renormalize. Rejects outcomes of probability <= 1e-12.
    pub fn project(&self, qubit: usize, basis: &Basis, outcome: u8) -> Result<QuantumRegister> {
        basis.validate()?;
        let (mut amps, norm_sqr) = self.project_unnormalized(qubit, basis.vector(outcome))?;
        if norm_sqr <= NORM_TOLERANCE {
            return Err(Error::ZeroProbability(format!(
                "outcome {outcome} on qubit {qubit} in the {} basis has probability {norm_sqr:.3e}",
                basis.label()
            )));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        for a in &mut amps {
            *a *= scale;
        }
        Ok(QuantumRegister { amps })
    }

    /// Reduced density matrix of `qubit` (partial trace over the rest).
    pub fn reduced_density(&self, qubit: usize) -> Result<[[Complex64; 2]; 2]> {
        let shift = self.check_qubit(qubit)?;
        let mask = 1usize << shift;
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let lo = self.amps[base];
            let hi = self.amps[base | mask];
            rho[0][0] += lo * lo.conj();
            rho[0][1] += lo * hi.conj();
            rho[1][0] += hi * lo.conj();
            rho[1][1] += hi * hi.conj();
        }
        Ok(rho)
    }

    /// Computational-basis expansion such as `(0.707+0.000i)|01>`, with
    /// near-zero terms dropped.
    pub fn ket_string(&self) -> String {
        let n = self.n_qubits();
        let mut parts = Vec::new();
        for (idx, a) in self.amps.iter().enumerate() {
            if a.norm() <= 1e-9 {
                continue;
            }
            parts.push(format!("({:.4}{:+.4}i)|{:0width$b}>", a.re, a.im, idx, width = n));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// A declared projective measurement of one qubit at a spacetime point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    /// Name of the outcome bit; doubles as a determination-event variable.
    pub variable: String,
    pub qubit: usize,
    pub basis: Basis,
    pub location: SpacetimePoint,
    /// Forced outcome; `None` samples from the Born distribution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<u8>,
}

/// A measurement event with its realized outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedMeasurement {
    pub variable: String,
    pub qubit: usize,
    pub basis: Basis,
    pub location: SpacetimePoint,
    pub outcome: u8,
    /// Born probability of this outcome given the measurements in its past.
    pub probability: f64,
}

/// The state assigned to a spacetime point: the initial register with
/// exactly the causally preceding projections applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateAssignment {
    pub point: SpacetimePoint,
    pub state: QuantumRegister,
    pub applied: Vec<RealizedMeasurement>,
}

/// Structural checks on a measurement list: qubit indices in range, bases
/// orthonormal, and no spacelike pair on the same qubit (those projectors
/// fail to commute, so no frame-independent state would exist).
pub fn validate_measurements(
    n_qubits: usize,
    measurements: &[MeasurementEvent],
    metric: &Metric,
) -> Vec<String> {
    let mut issues = Vec::new();
    for m in measurements {
        if m.qubit >= n_qubits {
            issues.push(format!(
                "measurement `{}` addresses qubit {} of a {}-qubit register",
                m.variable, m.qubit, n_qubits
            ));
        }
        if let Err(e) = m.basis.validate() {
            issues.push(format!("measurement `{}`: {e}", m.variable));
        }
        if let Some(o) = m.outcome {
            if o > 1 {
                issues.push(format!("measurement `{}` outcome must be 0 or 1", m.variable));
            }
        }
    }
    for (i, m1) in measurements.iter().enumerate() {
        for m2 in &measurements[i + 1..] {
            if m1.qubit != m2.qubit {
                continue;
            }
            let rel = metric.causal_relation(m1.location, m2.location);
            if rel.kind == CausalKind::Spacelike {
                issues.push(format!(
                    "measurements `{}` and `{}` act on qubit {} at spacelike separation",
                    m1.variable, m2.variable, m1.qubit
                ));
            } else if m1.location.approx_eq(&m2.location, metric.epsilon) {
                issues.push(format!(
                    "measurements `{}` and `{}` act on qubit {} at the same point",
                    m1.variable, m2.variable, m1.qubit
                ));
            }
        }
    }
    issues
}

/// A linear extension of the causal order: coordinate time, then position,
/// then qubit. Spacelike-separated measurements commute (disjoint qubits),
/// so any extension yields the same joint distribution and final states.
fn causal_sort(measurements: &[MeasurementEvent]) -> Vec<MeasurementEvent> {
    let mut sorted = measurements.to_vec();
    sorted.sort_by(|a, b| {
        a.location
            .t
            .total_cmp(&b.location.t)
            .then(a.location.x.total_cmp(&b.location.x))
            .then(a.qubit.cmp(&b.qubit))
    });
    sorted
}

/// Realize every measurement outcome, in causal order, drawing unforced
/// outcomes from the Born distribution conditioned on the projections
/// already applied. Deterministic per seed: each event draws from its own
/// seed substream keyed by variable name.
pub fn realize_outcomes(
    initial: &QuantumRegister,
    measurements: &[MeasurementEvent],
    seed: u64,
    metric: &Metric,
) -> Result<Vec<RealizedMeasurement>> {
    let issues = validate_measurements(initial.n_qubits(), measurements, metric);
    if let Some(first) = issues.first() {
        return Err(Error::InvalidScenario(first.clone()));
    }
    let mut state = initial.clone();
    let mut realized = Vec::with_capacity(measurements.len());
    for m in causal_sort(measurements) {
        let (p0, p1) = state.born_probabilities(m.qubit, &m.basis)?;
        let outcome = match m.outcome {
            Some(o) => o,
            None => {
                let mut rng = substream(seed, &format!("quantum:{}", m.variable));
                u8::from(rng.gen::<f64>() >= p0)
            }
        };
        let probability = if outcome == 0 { p0 } else { p1 };
        state = state.project(m.qubit, &m.basis, outcome)?;
        realized.push(RealizedMeasurement {
            variable: m.variable,
            qubit: m.qubit,
            basis: m.basis,
            location: m.location,
            outcome,
            probability,
        });
    }
    Ok(realized)
}

/// The conditional box p(a,b|x,y) obtained by measuring qubit 0 of a
/// two-qubit register in `alice_bases[x]` and qubit 1 in `bob_bases[y]`:
/// the Born-rule bridge between the quantum and box modules.
pub fn measurement_box(
    register: &QuantumRegister,
    alice_bases: [&Basis; 2],
    bob_bases: [&Basis; 2],
) -> Result<BoxTable> {
    if register.n_qubits() != 2 {
        return Err(Error::DimensionMismatch(register.n_qubits(), 2));
    }
    let mut table = vec![Prob::zero(); 16];
    for (x, alice) in alice_bases.iter().enumerate() {
        alice.validate()?;
        for (y, bob) in bob_bases.iter().enumerate() {
            bob.validate()?;
            for a in 0..2u8 {
                let (after_a, _) = register.project_unnormalized(0, alice.vector(a))?;
                let intermediate = QuantumRegister { amps: after_a };
                for b in 0..2u8 {
                    let (_, joint) = intermediate.project_unnormalized(1, bob.vector(b))?;
                    table[BoxTable::index(x as u8, y as u8, a, b)] = Prob::from_f64(joint)?;
                }
            }
        }
    }
    Ok(BoxTable { table })
}

/// The global state at `q`: apply, in causal order, exactly the realized
/// projections whose locations lie in the closed causal past of `q`.
pub fn state_at(
    initial: &QuantumRegister,
    realized: &[RealizedMeasurement],
    q: SpacetimePoint,
    metric: &Metric,
) -> Result<StateAssignment> {
    let mut applied: Vec<RealizedMeasurement> = realized
        .iter()
        .filter(|m| metric.in_future_cone(m.location, q))
        .cloned()
        .collect();
    applied.sort_by(|a, b| {
        a.location
            .t
            .total_cmp(&b.location.t)
            .then(a.location.x.total_cmp(&b.location.x))
            .then(a.qubit.cmp(&b.qubit))
    });
    let mut state = initial.clone();
    for m in &applied {
        state = state.project(m.qubit, &m.basis, m.outcome)?;
    }
    Ok(StateAssignment { point: q, state, applied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn standard_states_are_normalized() {
        assert_abs_diff_eq!(QuantumRegister::singlet().norm_sqr(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(QuantumRegister::w3().norm_sqr(), 1.0, epsilon = 1e-15);
        // The W state has no |000> component.
        assert_abs_diff_eq!(QuantumRegister::w3().amplitudes()[0].norm(), 0.0);
        assert!(QuantumRegister::by_name("singlet").is_some());
        assert!(QuantumRegister::by_name("ghz").is_none());
    }

    #[test]
    fn register_validation() {
        assert!(QuantumRegister::from_amplitudes(vec![c(1.0, 0.0)]).is_err());
        assert!(QuantumRegister::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
        assert!(QuantumRegister::from_amplitudes(vec![c(0.9, 0.0), c(0.0, 0.0)]).is_err());
        assert!(QuantumRegister::from_amplitudes(vec![c(1.0, 0.0), c(0.0, 0.0)]).is_ok());
        // 5 qubits is beyond the engine.
        assert!(QuantumRegister::from_amplitudes(vec![c(0.0, 0.0); 32]).is_err());
    }

    #[test]
    fn singlet_has_the_same_form_in_every_basis() {
        // (|0_n 1_n> - |1_n 0_n>)/sqrt(2) equals the singlet up to phase for
        // each built-in basis choice n.
        let singlet = QuantumRegister::singlet();
        for basis in [Basis::Z, Basis::X, Basis::Y] {
            let v0 = basis.vector(0);
            let v1 = basis.vector(1);
            let z01 = QuantumRegister::product(&[v0, v1]).unwrap();
            let z10 = QuantumRegister::product(&[v1, v0]).unwrap();
            let amps: Vec<Complex64> = z01
                .amplitudes()
                .iter()
                .zip(z10.amplitudes())
                .map(|(a, b)| (a - b) * std::f64::consts::FRAC_1_SQRT_2)
                .collect();
            let rebuilt = QuantumRegister::from_amplitudes(amps).unwrap();
            assert!(rebuilt.same_up_to_phase(&singlet, 1e-12), "{:?}", basis.label());
        }
    }

    #[test]
    fn born_probabilities_match_hand_computation() {
        let singlet = QuantumRegister::singlet();
        let (p0, p1) = singlet.born_probabilities(0, &Basis::X).unwrap();
        assert_abs_diff_eq!(p0, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p1, 0.5, epsilon = 1e-12);

        // W state, first qubit in z: 2/3 vs 1/3.
        let (p0, p1) = QuantumRegister::w3().born_probabilities(0, &Basis::Z).unwrap();
        assert_abs_diff_eq!(p0, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p1, 1.0 / 3.0, epsilon = 1e-12);

        // Product |00>: qubit 1 in z is certainly 0.
        let zz = QuantumRegister::product(&[Basis::Z.vector(0), Basis::Z.vector(0)]).unwrap();
        let (p0, p1) = zz.born_probabilities(1, &Basis::Z).unwrap();
        assert_abs_diff_eq!(p0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p1, 0.0, epsilon = 1e-12);

        assert!(zz.born_probabilities(2, &Basis::Z).is_err());
    }

    #[test]
    fn projection_postulate_repeats_the_w_state_story() {
        let w = QuantumRegister::w3();
        // Not found at the first site: |beta> = (|010> + |001>)/sqrt(2).
        let beta = w.project(0, &Basis::Z, 0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(beta.amplitudes()[0b010].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(beta.amplitudes()[0b001].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(beta.amplitudes()[0b100].norm(), 0.0, epsilon = 1e-12);

        // Not at the second site either: |gamma> = |001>.
        let gamma = beta.project(1, &Basis::Z, 0).unwrap();
        assert_abs_diff_eq!(gamma.amplitudes()[0b001].norm(), 1.0, epsilon = 1e-12);

        // Singlet measured in x with outcome 0 collapses to |0_x 1_x>.
        let after = QuantumRegister::singlet().project(0, &Basis::X, 0).unwrap();
        let expected =
            QuantumRegister::product(&[Basis::X.vector(0), Basis::X.vector(1)]).unwrap();
        assert!(after.same_up_to_phase(&expected, 1e-12));
    }

    #[test]
    fn projecting_onto_impossible_outcomes_fails() {
        let zz = QuantumRegister::product(&[Basis::Z.vector(0), Basis::Z.vector(0)]).unwrap();
        assert!(zz.project(0, &Basis::Z, 1).is_err());
    }

    #[test]
    fn overlaps() {
        // <beta|eta> = 1/2 for the two intermediate W-state assignments.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut beta = vec![c(0.0, 0.0); 8];
        beta[0b010] = c(s, 0.0);
        beta[0b001] = c(s, 0.0);
        let beta = QuantumRegister::from_amplitudes(beta).unwrap();
        let mut eta = vec![c(0.0, 0.0); 8];
        eta[0b100] = c(s, 0.0);
        eta[0b001] = c(s, 0.0);
        let eta = QuantumRegister::from_amplitudes(eta).unwrap();
        let ov = beta.overlap(&eta).unwrap();
        assert_abs_diff_eq!(ov.re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-12);

        let psi = QuantumRegister::singlet();
        assert_abs_diff_eq!(psi.overlap(&psi).unwrap().re, 1.0, epsilon = 1e-12);

        let z01 = QuantumRegister::product(&[Basis::Z.vector(0), Basis::Z.vector(1)]).unwrap();
        let z10 = QuantumRegister::product(&[Basis::Z.vector(1), Basis::Z.vector(0)]).unwrap();
        assert_abs_diff_eq!(z01.overlap(&z10).unwrap().norm(), 0.0, epsilon = 1e-12);

        assert!(psi.overlap(&QuantumRegister::w3()).is_err());
    }

    #[test]
    fn custom_bases_are_validated() {
        let ok = Basis::Custom(
            [[0.6, 0.0], [0.8, 0.0]],
            [[0.8, 0.0], [-0.6, 0.0]],
        );
        assert!(ok.validate().is_ok());
        let skewed = Basis::Custom(
            [[1.0, 0.0], [0.0, 0.0]],
            [[0.6, 0.0], [0.8, 0.0]],
        );
        assert!(skewed.validate().is_err());
    }

    #[test]
    fn spacelike_same_qubit_measurements_are_rejected() {
        let m = Metric::default();
        let events = vec![
            MeasurementEvent {
                variable: "a".into(),
                qubit: 0,
                basis: Basis::Z,
                location: SpacetimePoint::new(0.0, 0.0),
                outcome: None,
            },
            MeasurementEvent {
                variable: "b".into(),
                qubit: 0,
                basis: Basis::X,
                location: SpacetimePoint::new(0.0, 5.0),
                outcome: None,
            },
        ];
        let issues = validate_measurements(2, &events, &m);
        assert_eq!(issues.len(), 1);
        assert!(issues[0].contains("spacelike"));
    }

    fn singlet_xy_measurements(a_out: Option<u8>, b_out: Option<u8>) -> Vec<MeasurementEvent> {
        vec![
            MeasurementEvent {
                variable: "a".into(),
                qubit: 0,
                basis: Basis::X,
                location: SpacetimePoint::new(0.0, 0.0),
                outcome: a_out,
            },
            MeasurementEvent {
                variable: "b".into(),
                qubit: 1,
                basis: Basis::Y,
                location: SpacetimePoint::new(0.0, 1.0),
                outcome: b_out,
            },
        ]
    }

    #[test]
    fn state_assignment_is_region_dependent() {
        let m = Metric::default();
        let singlet = QuantumRegister::singlet();
        let realized =
            realize_outcomes(&singlet, &singlet_xy_measurements(Some(0), Some(0)), 1, &m).unwrap();

        // Alice's exclusive region: |0_x 1_x>.
        let sa = state_at(&singlet, &realized, SpacetimePoint::new(0.4, 0.1), &m).unwrap();
        let expected = QuantumRegister::product(&[Basis::X.vector(0), Basis::X.vector(1)]).unwrap();
        assert!(sa.state.same_up_to_phase(&expected, 1e-12));
        assert_eq!(sa.applied.len(), 1);

        // Bob's exclusive region: |1_y 0_y>.
        let sb = state_at(&singlet, &realized, SpacetimePoint::new(0.4, 0.9), &m).unwrap();
        let expected = QuantumRegister::product(&[Basis::Y.vector(1), Basis::Y.vector(0)]).unwrap();
        assert!(sb.state.same_up_to_phase(&expected, 1e-12));

        // Overlap region: |0_x 0_y> up to phase.
        let so = state_at(&singlet, &realized, SpacetimePoint::new(1.0, 0.5), &m).unwrap();
        let expected = QuantumRegister::product(&[Basis::X.vector(0), Basis::Y.vector(0)]).unwrap();
        assert!(so.state.same_up_to_phase(&expected, 1e-12));
        assert_eq!(so.applied.len(), 2);

        // Before everything: the initial state, no projections applied.
        let s0 = state_at(&singlet, &realized, SpacetimePoint::new(-1.0, 0.5), &m).unwrap();
        assert!(s0.state.same_up_to_phase(&singlet, 1e-15));
        assert!(s0.applied.is_empty());
    }

    #[test]
    fn spacelike_projections_commute() {
        let m = Metric::default();
        let w = QuantumRegister::w3();
        let e1 = MeasurementEvent {
            variable: "m1".into(),
            qubit: 0,
            basis: Basis::Z,
            location: SpacetimePoint::new(0.0, 0.0),
            outcome: Some(0),
        };
        let e2 = MeasurementEvent {
            variable: "m2".into(),
            qubit: 1,
            basis: Basis::Z,
            location: SpacetimePoint::new(0.5, 2.0),
            outcome: Some(0),
        };
        let forward = realize_outcomes(&w, &[e1.clone(), e2.clone()], 0, &m).unwrap();
        let backward = realize_outcomes(&w, &[e2, e1], 0, &m).unwrap();
        let q = SpacetimePoint::new(10.0, 1.0);
        let s1 = state_at(&w, &forward, q, &m).unwrap();
        let s2 = state_at(&w, &backward, q, &m).unwrap();
        assert!(s1.state.same_up_to_phase(&s2.state, 1e-12));
        // Both orders end in |001>.
        assert_abs_diff_eq!(s1.state.amplitudes()[0b001].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn anticorrelation_of_z_measurements_on_the_singlet() {
        let m = Metric::default();
        let singlet = QuantumRegister::singlet();
        for seed in 0..64 {
            let events = vec![
                MeasurementEvent {
                    variable: "a".into(),
                    qubit: 0,
                    basis: Basis::Z,
                    location: SpacetimePoint::new(0.0, 0.0),
                    outcome: None,
                },
                MeasurementEvent {
                    variable: "b".into(),
                    qubit: 1,
                    basis: Basis::Z,
                    location: SpacetimePoint::new(0.0, 1.0),
                    outcome: None,
                },
            ];
            let realized = realize_outcomes(&singlet, &events, seed, &m).unwrap();
            assert_ne!(realized[0].outcome, realized[1].outcome, "seed {seed}");
        }
    }

    #[test]
    fn realize_outcomes_is_seed_deterministic() {
        let m = Metric::default();
        let singlet = QuantumRegister::singlet();
        let events = singlet_xy_measurements(None, None);
        let r1 = realize_outcomes(&singlet, &events, 99, &m).unwrap();
        let r2 = realize_outcomes(&singlet, &events, 99, &m).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn forced_impossible_outcome_fails() {
        let m = Metric::default();
        let zz = QuantumRegister::product(&[Basis::Z.vector(0), Basis::Z.vector(0)]).unwrap();
        let events = vec![MeasurementEvent {
            variable: "a".into(),
            qubit: 0,
            basis: Basis::Z,
            location: SpacetimePoint::new(0.0, 0.0),
            outcome: Some(1),
        }];
        assert!(realize_outcomes(&zz, &events, 0, &m).is_err());
    }

    #[test]
    fn singlet_measurement_box_reaches_two_root_two() {
        // Optimal CHSH settings for the singlet: Alice along 0 and pi/2,
        // Bob along 5pi/4 and 3pi/4; E(ta, tb) = -cos(ta - tb).
        let pi = std::f64::consts::PI;
        let singlet = QuantumRegister::singlet();
        let a0 = Basis::bloch_xz(0.0);
        let a1 = Basis::bloch_xz(pi / 2.0);
        let b0 = Basis::bloch_xz(5.0 * pi / 4.0);
        let b1 = Basis::bloch_xz(3.0 * pi / 4.0);
        let bx = measurement_box(&singlet, [&a0, &a1], [&b0, &b1]).unwrap();
        assert!(bx.validate().is_empty());
        assert!(bx.no_signaling_check().passed());
        let s = bx.chsh_value().to_f64();
        let tsirelson = 2.0 * 2f64.sqrt();
        assert!((s - tsirelson).abs() <= 1e-9, "S = {s}");
        assert!((bx.best_chsh().to_f64() - tsirelson).abs() <= 1e-9);
        assert!(!bx.local_bound().is_local);
    }

    #[test]
    fn singlet_z_measurements_anticorrelate_in_the_box_picture() {
        let singlet = QuantumRegister::singlet();
        let z = Basis::Z;
        let bx = measurement_box(&singlet, [&z, &z], [&z, &z]).unwrap();
        for x in 0..2u8 {
            for y in 0..2u8 {
                assert_abs_diff_eq!(bx.get(x, y, 0, 0).to_f64(), 0.0, epsilon = 1e-15);
                assert_abs_diff_eq!(bx.get(x, y, 1, 1).to_f64(), 0.0, epsilon = 1e-15);
                assert_abs_diff_eq!(bx.get(x, y, 0, 1).to_f64(), 0.5, epsilon = 1e-12);
            }
        }
        // Same basis on both sides: maximal anticorrelation, E = -1.
        assert_abs_diff_eq!(bx.correlator(0, 0).to_f64(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn reduced_density_traces_out_correctly() {
        let singlet = QuantumRegister::singlet();
        let rho = singlet.reduced_density(1).unwrap();
        // Maximally mixed marginal.
        assert_abs_diff_eq!(rho[0][0].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho[1][1].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho[0][1].norm(), 0.0, epsilon = 1e-12);

        let product = QuantumRegister::product(&[Basis::X.vector(0), Basis::Z.vector(1)]).unwrap();
        let rho = product.reduced_density(0).unwrap();
        // Pure |+><+|: all entries 1/2.
        for row in rho {
            for v in row {
                assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            }
        }
    }
}
