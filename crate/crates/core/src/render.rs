//! Deterministic SVG spacetime diagrams.
//!
//! Position runs along the horizontal axis (light-minutes), coordinate
//! time up the vertical axis (minutes). The renderer draws worldlines,
//! future light cones of every determination event, per-frame simultaneity
//! lines through each event, query markers, and — for each queried
//! proposition — the shaded region where all of its variables are
//! determined (the intersection of the closed future cones). Output is a
//! pure function of (scenario, report): bytes are stable across runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::determinacy::Proposition;
use crate::report::{EventRecord, Report};
use crate::scenario::{QueryDecl, Scenario};
use crate::spacetime::{Metric, SpacetimePoint};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 720.0;
const MARGIN: f64 = 56.0;

const FRAME_COLORS: [&str; 5] = ["#1d4ed8", "#dc2626", "#059669", "#9333ea", "#ea580c"];
const REGION_COLORS: [&str; 4] = ["#f59e0b", "#10b981", "#8b5cf6", "#ef4444"];

/// World-coordinate window of the diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewBounds {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl ViewBounds {
    fn include(&mut self, t: f64, x: f64) {
        self.t_min = self.t_min.min(t);
        self.t_max = self.t_max.max(t);
        self.x_min = self.x_min.min(x);
        self.x_max = self.x_max.max(x);
    }

    fn padded(mut self) -> Self {
        let t_span = (self.t_max - self.t_min).max(1.0);
        let x_span = (self.x_max - self.x_min).max(1.0);
        self.t_min -= 0.3 * t_span;
        self.t_max += 0.3 * t_span;
        self.x_min -= 0.3 * x_span;
        self.x_max += 0.3 * x_span;
        self
    }

    fn corners(&self) -> Vec<(f64, f64)> {
        vec![
            (self.x_min, self.t_min),
            (self.x_max, self.t_min),
            (self.x_max, self.t_max),
            (self.x_min, self.t_max),
        ]
    }
}

/// Clip a convex polygon against the half-plane a*x + b*t <= rhs
/// (Sutherland–Hodgman step).
fn clip_halfplane(poly: &[(f64, f64)], a: f64, b: f64, rhs: f64) -> Vec<(f64, f64)> {
    let inside = |p: &(f64, f64)| a * p.0 + b * p.1 <= rhs + 1e-12;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let current = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let c_in = inside(&current);
        let n_in = inside(&next);
        if c_in {
            out.push(current);
        }
        if c_in != n_in {
            // Intersection of the edge with the boundary line.
            let denom = a * (next.0 - current.0) + b * (next.1 - current.1);
            if denom.abs() > 1e-15 {
                let s = (rhs - a * current.0 - b * current.1) / denom;
                out.push((
                    current.0 + s * (next.0 - current.0),
                    current.1 + s * (next.1 - current.1),
                ));
            }
        }
    }
    out
}

/// The region of the view where every listed event has arrived: the
/// intersection of the closed future cones, clipped to the bounds.
/// Empty when the cones do not overlap inside the view.
pub fn joint_determinacy_region(
    locations: &[SpacetimePoint],
    metric: &Metric,
    bounds: &ViewBounds,
) -> Vec<(f64, f64)> {
    let mut poly = bounds.corners();
    for e in locations {
        // c(t - te) >= x - xe   ->   x - c t <= xe - c te
        poly = clip_halfplane(&poly, 1.0, -metric.c, e.x - metric.c * e.t);
        // c(t - te) >= -(x - xe) ->  -x - c t <= -xe - c te
        poly = clip_halfplane(&poly, -1.0, -metric.c, -e.x - metric.c * e.t);
        if poly.is_empty() {
            return poly;
        }
    }
    poly
}

fn fmt_f(v: f64) -> String {
    // Fixed four places keeps output compact and byte-stable.
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

struct Mapper {
    bounds: ViewBounds,
}

impl Mapper {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.bounds.x_min) / (self.bounds.x_max - self.bounds.x_min)
            * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, t: f64) -> f64 {
        // Time increases upward.
        HEIGHT - MARGIN
            - (t - self.bounds.t_min) / (self.bounds.t_max - self.bounds.t_min)
                * (HEIGHT - 2.0 * MARGIN)
    }

    fn line(&self, out: &mut String, class: &str, p1: (f64, f64), p2: (f64, f64)) {
        let _ = writeln!(
            out,
            r#"<line class="{class}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            fmt_f(self.px(p1.0)),
            fmt_f(self.py(p1.1)),
            fmt_f(self.px(p2.0)),
            fmt_f(self.py(p2.1)),
        );
    }

    fn text(&self, out: &mut String, class: &str, x: f64, t: f64, dx: f64, dy: f64, label: &str) {
        let _ = writeln!(
            out,
            r#"<text class="{class}" x="{}" y="{}">{}</text>"#,
            fmt_f(self.px(x) + dx),
            fmt_f(self.py(t) + dy),
            escape(label),
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn query_points(scenario: &Scenario) -> Vec<(usize, SpacetimePoint)> {
    let mut points = Vec::new();
    for (i, q) in scenario.doc.queries.iter().enumerate() {
        match q {
            QueryDecl::Truth { at, .. }
            | QueryDecl::Propensity { at, .. }
            | QueryDecl::State { at } => {
                let p = SpacetimePoint::new(at.t, at.x);
                points.push((i, resolve_for_render(scenario, at.frame.as_deref(), p)));
            }
            _ => {}
        }
    }
    points
}

fn resolve_for_render(
    scenario: &Scenario,
    frame: Option<&str>,
    p: SpacetimePoint,
) -> SpacetimePoint {
    match frame {
        None => p,
        Some(label) => {
            let v = scenario
                .doc
                .frames
                .iter()
                .find(|f| f.label == label)
                .map(|f| f.velocity)
                .unwrap_or(0.0);
            scenario.metric.unboost(p, v).unwrap_or(p)
        }
    }
}

/// Propositions whose determinacy regions should be shaded: one entry per
/// distinct variable set over the truth and frontier queries.
fn shaded_regions(scenario: &Scenario, report: &Report) -> Vec<(String, Vec<SpacetimePoint>)> {
    let event_of = |name: &str| -> Option<&EventRecord> {
        report.events.iter().find(|e| e.variable == name)
    };
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut regions = Vec::new();
    for q in &scenario.doc.queries {
        let text = match q {
            QueryDecl::Truth { proposition, .. } | QueryDecl::Frontier { proposition, .. } => {
                proposition
            }
            _ => continue,
        };
        let Ok(prop) = Proposition::parse(text) else { continue };
        let mut vars: Vec<String> = prop.variables().into_iter().map(String::from).collect();
        vars.sort();
        if !seen.insert(vars.clone()) {
            continue;
        }
        let locations: Vec<SpacetimePoint> = vars
            .iter()
            .filter_map(|v| event_of(v))
            .map(|e| SpacetimePoint::new(e.t, e.x))
            .collect();
        if locations.len() == vars.len() && !locations.is_empty() {
            regions.push((text.clone(), locations));
        }
    }
    regions
}

/// Render the spacetime diagram for a scenario run. Byte-stable for fixed
/// inputs.
pub fn render_diagram(scenario: &Scenario, report: &Report) -> String {
    let metric = scenario.metric;

    // World bounds from events, observers, ticks and query points.
    let mut bounds = ViewBounds { t_min: 0.0, t_max: 1.0, x_min: 0.0, x_max: 1.0 };
    for e in &report.events {
        bounds.include(e.t, e.x);
    }
    for m in &report.measurements {
        bounds.include(m.t, m.x);
    }
    for (_, w) in &scenario.observers {
        bounds.include(w.anchor.t, w.anchor.x);
    }
    for (_, p) in query_points(scenario) {
        bounds.include(p.t, p.x);
    }
    let bounds = bounds.padded();
    let mapper = Mapper { bounds };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" version="1.1">"#
    );
    let _ = writeln!(
        out,
        "<!-- spacetime diagram: x in [{}, {}] light-minutes, t in [{}, {}] minutes, c = {}; \
         scale {} px per light-minute, {} px per minute -->",
        fmt_f(bounds.x_min),
        fmt_f(bounds.x_max),
        fmt_f(bounds.t_min),
        fmt_f(bounds.t_max),
        metric.c,
        fmt_f((WIDTH - 2.0 * MARGIN) / (bounds.x_max - bounds.x_min)),
        fmt_f((HEIGHT - 2.0 * MARGIN) / (bounds.t_max - bounds.t_min)),
    );
    out.push_str(
        "<style>\n\
         .axis { stroke: #111827; stroke-width: 1.2; }\n\
         .grid { stroke: #e5e7eb; stroke-width: 0.6; }\n\
         .worldline { stroke: #374151; stroke-width: 1.6; fill: none; }\n\
         .cone { stroke: #6b7280; stroke-width: 1.0; stroke-dasharray: none; }\n\
         .simultaneity { stroke-width: 1.0; stroke-dasharray: 6 4; }\n\
         .event { fill: #111827; }\n\
         .measurement { fill: #7c2d12; }\n\
         .query { stroke: #0f172a; stroke-width: 1.2; }\n\
         .label { font-family: monospace; font-size: 12px; fill: #111827; }\n\
         .title { font-family: monospace; font-size: 14px; fill: #111827; }\n\
         </style>\n",
    );

    // Shaded joint-determinacy regions (under everything else).
    for (i, (prop, locations)) in shaded_regions(scenario, report).iter().enumerate() {
        let poly = joint_determinacy_region(locations, &metric, &bounds);
        if poly.len() < 3 {
            continue;
        }
        let path: Vec<String> = poly
            .iter()
            .map(|(x, t)| format!("{},{}", fmt_f(mapper.px(*x)), fmt_f(mapper.py(*t))))
            .collect();
        let color = REGION_COLORS[i % REGION_COLORS.len()];
        let _ = writeln!(
            out,
            r#"<polygon class="region" data-proposition="{}" points="{}" fill="{color}" opacity="0.18"/>"#,
            escape(prop),
            path.join(" "),
        );
    }

    // Grid at integer coordinates.
    let x_start = bounds.x_min.ceil() as i64;
    let x_end = bounds.x_max.floor() as i64;
    for gx in x_start..=x_end {
        mapper.line(&mut out, "grid", (gx as f64, bounds.t_min), (gx as f64, bounds.t_max));
        mapper.text(&mut out, "label", gx as f64, bounds.t_min, -4.0, 14.0, &format!("{gx}"));
    }
    let t_start = bounds.t_min.ceil() as i64;
    let t_end = bounds.t_max.floor() as i64;
    for gt in t_start..=t_end {
        mapper.line(&mut out, "grid", (bounds.x_min, gt as f64), (bounds.x_max, gt as f64));
        mapper.text(&mut out, "label", bounds.x_min, gt as f64, -26.0, 4.0, &format!("{gt}"));
    }
    // Axes through the origin when visible.
    if bounds.x_min <= 0.0 && bounds.x_max >= 0.0 {
        mapper.line(&mut out, "axis", (0.0, bounds.t_min), (0.0, bounds.t_max));
    }
    if bounds.t_min <= 0.0 && bounds.t_max >= 0.0 {
        mapper.line(&mut out, "axis", (bounds.x_min, 0.0), (bounds.x_max, 0.0));
    }

    // Future light cone boundaries of every determination event.
    let mut cone_sources: Vec<(f64, f64)> = report.events.iter().map(|e| (e.x, e.t)).collect();
    cone_sources.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    cone_sources.dedup();
    for (ex, et) in &cone_sources {
        if *et <= bounds.t_max {
            let dt = bounds.t_max - et;
            mapper.line(&mut out, "cone", (*ex, *et), (ex + metric.c * dt, bounds.t_max));
            mapper.line(&mut out, "cone", (*ex, *et), (ex - metric.c * dt, bounds.t_max));
        }
    }

    // Simultaneity lines of each declared frame through each event.
    for (fi, frame) in scenario.doc.frames.iter().enumerate() {
        let color = FRAME_COLORS[fi % FRAME_COLORS.len()];
        let slope = frame.velocity / (metric.c * metric.c);
        for (ex, et) in &cone_sources {
            let t_at = |x: f64| et + slope * (x - ex);
            let _ = writeln!(
                out,
                r#"<line class="simultaneity" stroke="{color}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                fmt_f(mapper.px(bounds.x_min)),
                fmt_f(mapper.py(t_at(bounds.x_min))),
                fmt_f(mapper.px(bounds.x_max)),
                fmt_f(mapper.py(t_at(bounds.x_max))),
            );
        }
        mapper.text(
            &mut out,
            "label",
            bounds.x_min,
            bounds.t_max,
            4.0,
            14.0 * (fi as f64 + 1.0),
            &format!("frame {} (v={})", frame.label, frame.velocity),
        );
    }

    // Observer worldlines.
    for (label, w) in &scenario.observers {
        let p1 = w.point_at(bounds.t_min);
        let p2 = w.point_at(bounds.t_max);
        mapper.line(&mut out, "worldline", (p1.x, p1.t), (p2.x, p2.t));
        let p_label = w.point_at(bounds.t_max - 0.05 * (bounds.t_max - bounds.t_min));
        mapper.text(&mut out, "label", p_label.x, p_label.t, 4.0, 0.0, label);
    }

    // Determination events (classical + tick + quantum).
    for e in &report.events {
        let _ = writeln!(
            out,
            r#"<circle class="event" cx="{}" cy="{}" r="3.5"/>"#,
            fmt_f(mapper.px(e.x)),
            fmt_f(mapper.py(e.t)),
        );
        mapper.text(&mut out, "label", e.x, e.t, 6.0, -6.0, &format!("{}={}", e.variable, e.value));
    }
    for m in &report.measurements {
        let _ = writeln!(
            out,
            r#"<rect class="measurement" x="{}" y="{}" width="7" height="7"/>"#,
            fmt_f(mapper.px(m.x) - 3.5),
            fmt_f(mapper.py(m.t) - 3.5),
        );
        mapper.text(
            &mut out,
            "label",
            m.x,
            m.t,
            6.0,
            14.0,
            &format!("{} ({}-basis)", m.variable, m.basis),
        );
    }

    // Query markers.
    for (i, p) in query_points(scenario) {
        let (cx, cy) = (mapper.px(p.x), mapper.py(p.t));
        let _ = writeln!(
            out,
            r#"<path class="query" d="M {} {} L {} {} M {} {} L {} {}"/>"#,
            fmt_f(cx - 4.0),
            fmt_f(cy - 4.0),
            fmt_f(cx + 4.0),
            fmt_f(cy + 4.0),
            fmt_f(cx - 4.0),
            fmt_f(cy + 4.0),
            fmt_f(cx + 4.0),
            fmt_f(cy - 4.0),
        );
        mapper.text(&mut out, "label", p.x, p.t, 6.0, 4.0, &format!("q{i}"));
    }

    mapper.text(
        &mut out,
        "title",
        bounds.x_min,
        bounds.t_max,
        4.0,
        -8.0,
        &format!(
            "{} — x (light-minutes) vs t (minutes), seed {}",
            report.scenario.as_deref().unwrap_or("scenario"),
            report.seed
        ),
    );

    out.push_str("</svg>\n");
    out
}
