//! Simulation of *relative* (in)determinacy on 1+1D Minkowski spacetime.
//!
//! Random outcomes acquire definite values at spacetime points and the
//! definiteness itself spreads at the maximal signal speed: a proposition
//! about an outcome is three-valued (true / false / indeterminate) and
//! becomes determinate at a query point only once that point lies inside
//! the closed future light cone of the generating event.
//!
//! The crate is organised around that single rule:
//!
//! * [`spacetime`] — exact 1+1D special-relativistic kinematics (boosts,
//!   intervals, causal order, light cones, simultaneity, worldlines).
//! * [`determinacy`] — strong-Kleene three-valued truth for proposition
//!   trees, determinacy frontiers along worldlines, and executable checks
//!   of the local-reality and present-reality assumptions.
//! * [`randomness`] — TRNG processes on worldlines plus classical joint
//!   propensity tables with light-cone conditioned updates.
//! * [`boxes`] — conditional no-signaling boxes p(a,b|x,y): the PR box,
//!   no-signaling checks, CHSH values and exact local-polytope membership.
//! * [`quantum`] — a small exact state-vector engine (≤ 4 qubits) with
//!   projective measurement and per-point global state assignment.
//! * [`scenario`] — declarative JSON scenarios, the query engine, built-in
//!   scenarios, structured reports and SVG spacetime diagrams.
//!
//! All probability-table arithmetic is exact (arbitrary-precision
//! rationals); all geometry is `f64` with a configurable absolute
//! tolerance. Sampling is deterministic per 64-bit seed.

pub mod boxes;
pub mod determinacy;
pub mod error;
pub mod prob;
pub mod quantum;
pub mod randomness;
pub mod render;
pub mod report;
pub mod scenario;
pub mod spacetime;

pub use error::{Error, Result};
pub use prob::Prob;
pub use spacetime::{CausalKind, CausalOrder, CausalRelation, Frame, Metric, SpacetimePoint, Worldline};
