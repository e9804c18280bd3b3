//! Exact 1+1D special-relativistic kinematics.
//!
//! Coordinates are `(t, x)` in minutes and light-minutes. All points are
//! held internally in one canonical chart (the global rest frame); frames
//! only enter through boosts and simultaneity queries. Light cones are
//! closed: the lightlike boundary counts as causally connected, so
//! determinacy arrives exactly at light speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for cone-membership and simultaneity
/// comparisons. Double-precision boosts at desk scale stay far below this.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// An event coordinate (t, x) in the global rest frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    /// Coordinate time in minutes.
    pub t: f64,
    /// Position in light-minutes.
    pub x: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: f64) -> Self {
        debug_assert!(t.is_finite() && x.is_finite());
        SpacetimePoint { t, x }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite()
    }

    /// Coordinate-wise equality within an absolute tolerance.
    pub fn approx_eq(&self, other: &SpacetimePoint, eps: f64) -> bool {
        (self.t - other.t).abs() <= eps && (self.x - other.x).abs() <= eps
    }
}

/// An inertial frame moving at constant velocity relative to the global
/// rest frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub label: String,
    /// Velocity in light-minutes per minute, strictly inside (-c, c).
    pub velocity: f64,
}

impl Frame {
    pub fn new(label: impl Into<String>, velocity: f64) -> Self {
        Frame { label: label.into(), velocity }
    }
}

/// An inertial trajectory: anchor point plus constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Worldline {
    pub anchor: SpacetimePoint,
    pub velocity: f64,
}

impl Worldline {
    pub fn new(anchor: SpacetimePoint, velocity: f64) -> Self {
        Worldline { anchor, velocity }
    }

    /// Position at coordinate time `t`: straight-line motion through the anchor.
    pub fn point_at(&self, t: f64) -> SpacetimePoint {
        SpacetimePoint::new(t, self.anchor.x + self.velocity * (t - self.anchor.t))
    }
}

/// Interval classification of a pair of events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalKind {
    Timelike,
    Lightlike,
    Spacelike,
}

/// Causal precedence between a pair of events (`None` iff spacelike).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalOrder {
    FirstPrecedesSecond,
    SecondPrecedesFirst,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalRelation {
    pub kind: CausalKind,
    pub order: CausalOrder,
}

/// The invariant speed and geometric tolerance of a scenario.
///
/// Every kinematic operation that depends on `c` or on the boundary
/// tolerance is a method here, so a scenario carries exactly one source of
/// truth for both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    /// Maximal signal speed in light-minutes per minute (1 in natural units).
    pub c: f64,
    /// Absolute tolerance for cone-membership and simultaneity comparisons.
    pub epsilon: f64,
}

impl Default for Metric {
    fn default() -> Self {
        Metric { c: 1.0, epsilon: DEFAULT_EPSILON }
    }
}

impl Metric {
    pub fn new(c: f64) -> Self {
        Metric { c, epsilon: DEFAULT_EPSILON }
    }

    pub fn with_epsilon(c: f64, epsilon: f64) -> Self {
        Metric { c, epsilon }
    }

    fn check_speed(&self, v: f64) -> Result<()> {
        if !v.is_finite() || v.abs() >= self.c {
            return Err(Error::Domain(format!(
                "speed {v} is not strictly below c = {}",
                self.c
            )));
        }
        Ok(())
    }

    /// Lorentz factor 1/sqrt(1 - v^2/c^2); >= 1 for all admissible speeds.
    pub fn gamma(&self, v: f64) -> Result<f64> {
        self.check_speed(v)?;
        Ok(1.0 / (1.0 - (v * v) / (self.c * self.c)).sqrt())
    }

    /// Passive Lorentz boost: coordinates of `p` in the frame moving at `v`.
    ///
    /// t' = gamma (t - v x / c^2),  x' = gamma (x - v t).
    pub fn boost(&self, p: SpacetimePoint, v: f64) -> Result<SpacetimePoint> {
        let gamma = self.gamma(v)?;
        let c2 = self.c * self.c;
        Ok(SpacetimePoint::new(
            gamma * (p.t - v * p.x / c2),
            gamma * (p.x - v * p.t),
        ))
    }

    /// Inverse of [`Metric::boost`]: frame coordinates back to the global chart.
    pub fn unboost(&self, p: SpacetimePoint, v: f64) -> Result<SpacetimePoint> {
        self.boost(p, -v)
    }

    /// Squared interval c^2 dt^2 - dx^2. Positive: timelike, zero (within
    /// epsilon): lightlike, negative: spacelike.
    pub fn interval(&self, p: SpacetimePoint, q: SpacetimePoint) -> f64 {
        let dt = q.t - p.t;
        let dx = q.x - p.x;
        self.c * self.c * dt * dt - dx * dx
    }

    pub fn causal_relation(&self, p: SpacetimePoint, q: SpacetimePoint) -> CausalRelation {
        let s2 = self.interval(p, q);
        let kind = if s2.abs() <= self.epsilon {
            CausalKind::Lightlike
        } else if s2 > 0.0 {
            CausalKind::Timelike
        } else {
            CausalKind::Spacelike
        };
        let order = if kind == CausalKind::Spacelike {
            CausalOrder::None
        } else if q.t >= p.t {
            CausalOrder::FirstPrecedesSecond
        } else {
            CausalOrder::SecondPrecedesFirst
        };
        CausalRelation { kind, order }
    }

    /// Signed distance of `q` from the boundary of the closed future cone of
    /// `source`: c dt - |dx|. Nonnegative (within epsilon, and dt >= 0)
    /// means inside.
    pub fn future_cone_margin(&self, source: SpacetimePoint, q: SpacetimePoint) -> f64 {
        self.c * (q.t - source.t) - (q.x - source.x).abs()
    }

    /// Closed future light cone membership: c dt >= |dx| with dt >= 0.
    pub fn in_future_cone(&self, source: SpacetimePoint, q: SpacetimePoint) -> bool {
        let dt = q.t - source.t;
        dt >= -self.epsilon / self.c && self.future_cone_margin(source, q) >= -self.epsilon
    }

    /// The simultaneity coordinate of `p` in frame `f`: t' = gamma (t - v x / c^2).
    /// Two points are f-simultaneous iff their values agree within epsilon.
    pub fn simultaneity_coordinate(&self, f: &Frame, p: SpacetimePoint) -> Result<f64> {
        let gamma = self.gamma(f.velocity)?;
        Ok(gamma * (p.t - f.velocity * p.x / (self.c * self.c)))
    }

    /// Relativistic velocity addition (v1 + v2)/(1 + v1 v2 / c^2); strictly
    /// inside (-c, c) for admissible inputs.
    pub fn compose_velocities(&self, v1: f64, v2: f64) -> Result<f64> {
        self.check_speed(v1)?;
        self.check_speed(v2)?;
        Ok((v1 + v2) / (1.0 + v1 * v2 / (self.c * self.c)))
    }

    /// First coordinate time at which `w` is inside the closed future cone
    /// of `source`. A timelike worldline always enters eventually; once
    /// inside it never leaves.
    pub fn cone_entry_time(&self, source: SpacetimePoint, w: &Worldline) -> Result<f64> {
        self.check_speed(w.velocity)?;
        let c = self.c;
        let v = w.velocity;
        // x(t) - source.x = v t + delta
        let delta = w.anchor.x - v * w.anchor.t - source.x;
        // c (t - te) - |v t + delta| is strictly increasing in t (slopes
        // c -/+ v are both positive), so it has a single root: the entry time.
        let t_plus = (c * source.t + delta) / (c - v);
        let t_minus = (c * source.t - delta) / (c + v);
        let mut entry = f64::INFINITY;
        if v * t_plus + delta >= -self.epsilon {
            entry = entry.min(t_plus);
        }
        if v * t_minus + delta <= self.epsilon {
            entry = entry.min(t_minus);
        }
        debug_assert!(entry.is_finite());
        Ok(entry.max(source.t))
    }

    /// The point where the simultaneity plane of `f` through `through`
    /// crosses worldline `w`. Always exists: |f.velocity|, |w.velocity| < c.
    pub fn simultaneous_point_on_worldline(
        &self,
        f: &Frame,
        through: SpacetimePoint,
        w: &Worldline,
    ) -> Result<SpacetimePoint> {
        self.check_speed(w.velocity)?;
        let sigma = self.simultaneity_coordinate(f, through)?;
        let gamma = self.gamma(f.velocity)?;
        let c2 = self.c * self.c;
        let beta = w.anchor.x - w.velocity * w.anchor.t;
        // Solve gamma (t - v_f x(t) / c^2) = sigma for t.
        let t = (sigma / gamma + f.velocity * beta / c2)
            / (1.0 - f.velocity * w.velocity / c2);
        Ok(w.point_at(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m() -> Metric {
        Metric::default()
    }

    #[test]
    fn identity_boost_is_identity() {
        let p = m().boost(SpacetimePoint::new(1.0, 0.0), 0.0).unwrap();
        assert_abs_diff_eq!(p.t, 1.0);
        assert_abs_diff_eq!(p.x, 0.0);
    }

    #[test]
    fn boost_matches_direct_evaluation() {
        // gamma(0.5) = 1/sqrt(0.75); boost of (t=0, x=1).
        let p = m().boost(SpacetimePoint::new(0.0, 1.0), 0.5).unwrap();
        assert_abs_diff_eq!(p.t, -0.5773502691896258, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x, 1.1547005383792517, epsilon = 1e-12);
        // Inverse boost round-trips.
        let back = m().unboost(p, 0.5).unwrap();
        assert!(back.approx_eq(&SpacetimePoint::new(0.0, 1.0), 1e-12));
    }

    #[test]
    fn boost_rejects_superluminal_frames() {
        assert!(m().boost(SpacetimePoint::new(0.0, 0.0), 1.0).is_err());
        assert!(m().boost(SpacetimePoint::new(0.0, 0.0), -1.5).is_err());
        assert!(m().gamma(f64::NAN).is_err());
    }

    #[test]
    fn interval_signs_classify() {
        let o = SpacetimePoint::new(0.0, 0.0);
        assert_abs_diff_eq!(m().interval(o, SpacetimePoint::new(1.0, 0.0)), 1.0);
        assert_abs_diff_eq!(m().interval(o, SpacetimePoint::new(0.0, 1.0)), -1.0);
        assert_abs_diff_eq!(m().interval(o, SpacetimePoint::new(1.0, 1.0)), 0.0);
    }

    #[test]
    fn interval_preserved_by_boosts() {
        let p = SpacetimePoint::new(0.0, 0.0);
        let q = SpacetimePoint::new(1.0, 0.0);
        let before = m().interval(p, q);
        for v in [-0.9, -0.5, 0.0, 0.3, 0.77] {
            let after = m().interval(m().boost(p, v).unwrap(), m().boost(q, v).unwrap());
            assert_abs_diff_eq!(before, after, epsilon = 1e-9);
        }
    }

    #[test]
    fn causal_relations() {
        let o = SpacetimePoint::new(0.0, 0.0);
        let r = m().causal_relation(o, SpacetimePoint::new(2.0, 1.0));
        assert_eq!(r.kind, CausalKind::Timelike);
        assert_eq!(r.order, CausalOrder::FirstPrecedesSecond);

        let r = m().causal_relation(o, SpacetimePoint::new(0.0, 1.0));
        assert_eq!(r.kind, CausalKind::Spacelike);
        assert_eq!(r.order, CausalOrder::None);

        let r = m().causal_relation(o, SpacetimePoint::new(1.0, 1.0));
        assert_eq!(r.kind, CausalKind::Lightlike);
        assert_eq!(r.order, CausalOrder::FirstPrecedesSecond);

        let r = m().causal_relation(o, SpacetimePoint::new(-1.0, 0.5));
        assert_eq!(r.order, CausalOrder::SecondPrecedesFirst);
    }

    #[test]
    fn future_cone_boundary_is_closed() {
        let o = SpacetimePoint::new(0.0, 0.0);
        assert!(m().in_future_cone(o, SpacetimePoint::new(1.0, 0.5)));
        assert!(m().in_future_cone(o, SpacetimePoint::new(1.0, 1.0)));
        assert!(!m().in_future_cone(o, SpacetimePoint::new(0.4, 0.5)));
        // Past points are never in the future cone, even at x = 0.
        assert!(!m().in_future_cone(o, SpacetimePoint::new(-1.0, 0.0)));
        // The apex itself is inside.
        assert!(m().in_future_cone(o, o));
    }

    #[test]
    fn rest_frame_simultaneity_is_coordinate_time() {
        let f = Frame::new("rest", 0.0);
        let s = m()
            .simultaneity_coordinate(&f, SpacetimePoint::new(3.0, 7.0))
            .unwrap();
        assert_abs_diff_eq!(s, 3.0);
    }

    #[test]
    fn moving_frame_simultaneity_matches_fig1_geometry() {
        // The plane of the v = 0.5 frame through (0, 1) passes through
        // (-0.5, 0): both coordinates equal gamma * (-0.5).
        let f = Frame::new("moving", 0.5);
        let s1 = m()
            .simultaneity_coordinate(&f, SpacetimePoint::new(0.0, 1.0))
            .unwrap();
        let s2 = m()
            .simultaneity_coordinate(&f, SpacetimePoint::new(-0.5, 0.0))
            .unwrap();
        assert_abs_diff_eq!(s1, s2, epsilon = 1e-12);
        let gamma = m().gamma(0.5).unwrap();
        assert_abs_diff_eq!(s1, -0.5 * gamma, epsilon = 1e-12);

        // Relativity of simultaneity: (0, 1) and (0, 0) are not simultaneous.
        let s3 = m()
            .simultaneity_coordinate(&f, SpacetimePoint::new(0.0, 0.0))
            .unwrap();
        assert!((s1 - s3).abs() > 1e-3);
    }

    #[test]
    fn worldline_points() {
        let w = Worldline::new(SpacetimePoint::new(0.0, 0.0), 0.0);
        assert!(w.point_at(5.0).approx_eq(&SpacetimePoint::new(5.0, 0.0), 1e-12));
        let w = Worldline::new(SpacetimePoint::new(0.0, 1.0), 0.5);
        assert!(w.point_at(2.0).approx_eq(&SpacetimePoint::new(2.0, 2.0), 1e-12));
    }

    #[test]
    fn velocity_composition() {
        assert_abs_diff_eq!(m().compose_velocities(0.0, 0.4).unwrap(), 0.4);
        assert_abs_diff_eq!(m().compose_velocities(0.5, 0.5).unwrap(), 0.8);
        assert_abs_diff_eq!(m().compose_velocities(0.6, -0.6).unwrap(), 0.0);
        assert!(m().compose_velocities(1.0, 0.0).is_err());
    }

    #[test]
    fn cone_entry_times() {
        let source = SpacetimePoint::new(0.0, 0.0);
        // Rest worldline at x = 0.5 enters at t = 0.5.
        let w = Worldline::new(SpacetimePoint::new(0.0, 0.5), 0.0);
        assert_abs_diff_eq!(m().cone_entry_time(source, &w).unwrap(), 0.5, epsilon = 1e-12);
        // Worldline through the apex enters at the apex.
        let w = Worldline::new(SpacetimePoint::new(0.0, 0.0), 0.3);
        assert_abs_diff_eq!(m().cone_entry_time(source, &w).unwrap(), 0.0, epsilon = 1e-12);
        // Receding worldline still enters, later.
        let w = Worldline::new(SpacetimePoint::new(0.0, 1.0), 0.5);
        let t = m().cone_entry_time(source, &w).unwrap();
        assert_abs_diff_eq!(t, 2.0, epsilon = 1e-12);
        assert!(m().in_future_cone(source, w.point_at(t + 1e-9)));
        assert!(!m().in_future_cone(source, w.point_at(t - 1e-6)));
    }

    #[test]
    fn cone_entry_matches_grid_scan() {
        // Brute-force oracle: scan a fine t grid for first membership.
        let metric = m();
        let cases = [
            (SpacetimePoint::new(0.0, 1.0), Worldline::new(SpacetimePoint::new(0.0, 0.0), 0.0)),
            (SpacetimePoint::new(-1.0, 2.0), Worldline::new(SpacetimePoint::new(0.5, -1.0), 0.6)),
            (SpacetimePoint::new(2.0, -3.0), Worldline::new(SpacetimePoint::new(0.0, 4.0), -0.25)),
        ];
        for (source, w) in cases {
            let analytic = metric.cone_entry_time(source, &w).unwrap();
            let mut scanned = None;
            let mut t = source.t - 1.0;
            while t < source.t + 30.0 {
                if metric.in_future_cone(source, w.point_at(t)) {
                    scanned = Some(t);
                    break;
                }
                t += 1e-4;
            }
            let scanned = scanned.expect("grid scan should find entry");
            assert!((scanned - analytic).abs() <= 2e-4, "{scanned} vs {analytic}");
        }
    }

    #[test]
    fn simultaneous_point_on_worldline_matches_construction() {
        let metric = m();
        let f = Frame::new("moving", 0.5);
        // Plane through (0, 1) meets the x = 0 rest worldline at t = -0.5.
        let w = Worldline::new(SpacetimePoint::new(0.0, 0.0), 0.0);
        let p = metric
            .simultaneous_point_on_worldline(&f, SpacetimePoint::new(0.0, 1.0), &w)
            .unwrap();
        assert!(p.approx_eq(&SpacetimePoint::new(-0.5, 0.0), 1e-12));
        let s1 = metric.simultaneity_coordinate(&f, p).unwrap();
        let s2 = metric
            .simultaneity_coordinate(&f, SpacetimePoint::new(0.0, 1.0))
            .unwrap();
        assert_abs_diff_eq!(s1, s2, epsilon = 1e-12);
    }
}
