//! Property-based tests over the kinematics, logic, randomness and boxes.
//!
//! These overlap with the seeded suites in the acceptance tests on
//! purpose: proptest shrinks failures to minimal counterexamples and
//! explores the edges (tiny separations, extreme boosts) that uniform
//! sampling rarely hits.

use std::collections::BTreeMap;

use proptest::prelude::*;

use relindet_core::boxes::{pr_box, BoxTable};
use relindet_core::determinacy::{
    determinacy_frontier, truth_at, DeterminationEvent, EventSet, Proposition, TruthValue,
};
use relindet_core::prob::Prob;
use relindet_core::randomness::propensity_at;
use relindet_core::scenario::{builtin, Scenario, BUILTIN_NAMES};
use relindet_core::spacetime::{Metric, SpacetimePoint, Worldline};

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn speed() -> impl Strategy<Value = f64> {
    -0.99..0.99f64
}

fn point() -> impl Strategy<Value = SpacetimePoint> {
    (coord(), coord()).prop_map(|(t, x)| SpacetimePoint::new(t, x))
}

proptest! {
    #[test]
    fn interval_is_boost_invariant(p in point(), q in point(), v in speed()) {
        let m = Metric::default();
        let before = m.interval(p, q);
        let after = m.interval(m.boost(p, v).unwrap(), m.boost(q, v).unwrap());
        prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
    }

    #[test]
    fn causal_relation_is_boost_invariant(p in point(), q in point(), v in speed()) {
        let m = Metric::default();
        let before = m.causal_relation(p, q);
        let after = m.causal_relation(m.boost(p, v).unwrap(), m.boost(q, v).unwrap());
        // The lightlike boundary can flip classification within epsilon of
        // the cone; skip the knife edge.
        let margin = m.future_cone_margin(p, q).abs().min(m.future_cone_margin(q, p).abs());
        prop_assume!(margin > 1e-6);
        prop_assert_eq!(before.kind, after.kind);
        prop_assert_eq!(before.order, after.order);
    }

    #[test]
    fn boosts_compose_via_velocity_addition(p in point(), v1 in speed(), v2 in speed()) {
        let m = Metric::default();
        let chained = m.boost(m.boost(p, v1).unwrap(), v2).unwrap();
        let composed = m.boost(p, m.compose_velocities(v1, v2).unwrap()).unwrap();
        prop_assert!((chained.t - composed.t).abs() <= 1e-9);
        prop_assert!((chained.x - composed.x).abs() <= 1e-9);
    }

    #[test]
    fn composed_velocities_stay_subluminal(v1 in speed(), v2 in speed()) {
        let m = Metric::default();
        let v = m.compose_velocities(v1, v2).unwrap();
        prop_assert!(v.abs() < 1.0);
    }

    #[test]
    fn cone_entry_time_is_the_first_membership(
        source in point(),
        anchor in point(),
        v in speed(),
    ) {
        let m = Metric::default();
        let w = Worldline::new(anchor, v);
        let entry = m.cone_entry_time(source, &w).unwrap();
        // Inside just after entry, outside shortly before (when entry is
        // not at the source time itself).
        prop_assert!(m.in_future_cone(source, w.point_at(entry + 1e-6)));
        if entry > source.t + 1e-6 {
            prop_assert!(!m.in_future_cone(source, w.point_at(entry - 1e-3)));
        }
    }

    #[test]
    fn simultaneity_planes_tilt_consistently(p in point(), q in point(), v in speed()) {
        // Two points are frame-simultaneous iff their boosted times agree.
        let m = Metric::default();
        let f = relindet_core::spacetime::Frame::new("f", v);
        let s_p = m.simultaneity_coordinate(&f, p).unwrap();
        let s_q = m.simultaneity_coordinate(&f, q).unwrap();
        let bp = m.boost(p, v).unwrap();
        let bq = m.boost(q, v).unwrap();
        prop_assert!(((s_p - s_q) - (bp.t - bq.t)).abs() <= 1e-9);
    }
}

fn truth_value() -> impl Strategy<Value = TruthValue> {
    prop_oneof![
        Just(TruthValue::True),
        Just(TruthValue::False),
        Just(TruthValue::Indeterminate),
    ]
}

proptest! {
    #[test]
    fn kleene_and_or_are_min_max(a in truth_value(), b in truth_value()) {
        prop_assert_eq!(a.and(b), a.min(b));
        prop_assert_eq!(a.or(b), a.max(b));
        // De Morgan holds in strong Kleene.
        prop_assert_eq!(a.and(b).negate(), a.negate().or(b.negate()));
    }

    #[test]
    fn kleene_refinement_never_flips(a in truth_value(), b in truth_value()) {
        for refined in [TruthValue::True, TruthValue::False] {
            if a == TruthValue::Indeterminate {
                for op in [TruthValue::and, TruthValue::or, TruthValue::xor, TruthValue::equals] {
                    let before = op(a, b);
                    let after = op(refined, b);
                    if before.is_determinate() {
                        prop_assert_eq!(before, after);
                    }
                }
            }
        }
    }
}

/// Two events with randomized locations and values.
fn two_events() -> impl Strategy<Value = (EventSet, SpacetimePoint, SpacetimePoint)> {
    (point(), point(), 0..2u8, 0..2u8).prop_map(|(p1, p2, v1, v2)| {
        let mut events = EventSet::new();
        events.insert(DeterminationEvent::new("a", v1, p1)).unwrap();
        events.insert(DeterminationEvent::new("b", v2, p2)).unwrap();
        (events, p1, p2)
    })
}

proptest! {
    #[test]
    fn parity_determinacy_equals_cone_intersection(
        (events, p1, p2) in two_events(),
        q in point(),
    ) {
        let m = Metric::default();
        let parity = Proposition::parse("(a=1) ^ (b=1)").unwrap();
        let value = truth_at(&events, &parity, q, &m).unwrap();
        let both = m.in_future_cone(p1, q) && m.in_future_cone(p2, q);
        prop_assert_eq!(value.is_determinate(), both);
    }

    #[test]
    fn truth_is_frame_invariant((events, _, _) in two_events(), q in point(), v in speed()) {
        let m = Metric::default();
        let props = [
            Proposition::parse("a=0").unwrap(),
            Proposition::parse("(a=1) == (b=1)").unwrap(),
            Proposition::parse("a=0 | b=0").unwrap(),
        ];
        let boosted = events.boosted(&m, v).unwrap();
        let bq = m.boost(q, v).unwrap();
        for prop in &props {
            // Skip queries on the knife edge of either cone.
            let near_edge = events.iter().any(|e| {
                m.future_cone_margin(e.location, q).abs() < 1e-6
            });
            prop_assume!(!near_edge);
            prop_assert_eq!(
                truth_at(&events, prop, q, &m).unwrap(),
                truth_at(&boosted, prop, bq, &m).unwrap()
            );
        }
    }

    #[test]
    fn frontier_marks_the_first_determinate_time(
        (events, _, _) in two_events(),
        anchor in point(),
        v in speed(),
    ) {
        let m = Metric::default();
        let parity = Proposition::parse("(a=1) ^ (b=1)").unwrap();
        let w = Worldline::new(anchor, v);
        let t = determinacy_frontier(&events, &parity, &w, &m).unwrap().unwrap();
        prop_assert!(truth_at(&events, &parity, w.point_at(t), &m).unwrap().is_determinate());
        prop_assert!(
            !truth_at(&events, &parity, w.point_at(t - 1e-3), &m).unwrap().is_determinate()
        );
    }

    #[test]
    fn propensity_ignores_spacelike_events(
        (events, p1, _) in two_events(),
        q in point(),
    ) {
        // For the matched-pair model, the propensity of b depends only on
        // whether a's determination causally precedes the query point.
        let m = Metric::default();
        let models = [relindet_core::randomness::CorrelationModel::matched_pair(
            "a",
            "b",
            Prob::ratio(3, 4),
        )];
        let marginals = BTreeMap::new();
        // Only meaningful where b itself is not yet determinate.
        let b_event = events.get("b").unwrap().clone();
        prop_assume!(!m.in_future_cone(b_event.location, q));
        let a_value = events.get("a").unwrap().value;
        let expected = if m.in_future_cone(p1, q) {
            // Conditioned on a: p(b = a_value | a) = 3/4.
            if a_value == 0 { Prob::ratio(3, 4) } else { Prob::ratio(1, 4) }
        } else {
            Prob::ratio(1, 2)
        };
        let assignment =
            propensity_at(&models, &marginals, &events, "b", 0, q, &m).unwrap();
        prop_assert_eq!(assignment.propensity, expected);
    }
}

fn prob_in_unit() -> impl Strategy<Value = Prob> {
    (0u32..=1000).prop_map(|n| Prob::ratio(n as i64, 1000))
}

proptest! {
    #[test]
    fn product_boxes_are_local_and_no_signaling(
        pa0 in prob_in_unit(),
        pa1 in prob_in_unit(),
        pb0 in prob_in_unit(),
        pb1 in prob_in_unit(),
    ) {
        let bx = BoxTable::product([pa0, pa1], [pb0, pb1]);
        prop_assert!(bx.validate().is_empty());
        prop_assert!(bx.no_signaling_check().passed());
        let bound = bx.local_bound();
        prop_assert!(bound.is_local);
        prop_assert!(bound.best_s <= Prob::from_int(2));
    }

    #[test]
    fn noisy_pr_mixtures_match_the_facet_rule(w in 0u32..=100) {
        // Convex mixtures of the PR box with uniform noise: local exactly
        // when the best CHSH variant stays at or below 2 (the facet
        // description of the local polytope agrees with exact feasibility).
        let weight = Prob::ratio(w as i64, 100);
        let noise = BoxTable { table: vec![Prob::ratio(1, 4); 16] };
        let bx = pr_box().mix(&noise, weight);
        let bound = bx.local_bound();
        prop_assert_eq!(bound.is_local, bound.best_s <= Prob::from_int(2));
        prop_assert!(bx.no_signaling_check().passed());
    }

    #[test]
    fn no_signaling_boxes_stay_under_chsh_4(
        weights in proptest::collection::vec(0u32..=10, 24),
    ) {
        // Mixtures over the no-signaling polytope's vertices: the 16
        // deterministic strategies plus the 8 PR-box variants
        // a xor b = xy xor alpha x xor beta y xor gamma.
        let total: u32 = weights.iter().sum();
        prop_assume!(total > 0);
        let mut vertices: Vec<BoxTable> = (0..16)
            .map(|s| BoxTable::deterministic((s / 4) as u8, (s % 4) as u8))
            .collect();
        for variant in 0..8u8 {
            let (alpha, beta, gamma) = (variant & 1, (variant >> 1) & 1, (variant >> 2) & 1);
            let mut table = vec![Prob::zero(); 16];
            for x in 0..2u8 {
                for y in 0..2u8 {
                    for a in 0..2u8 {
                        for b in 0..2u8 {
                            if a ^ b == (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma {
                                table[BoxTable::index(x, y, a, b)] = Prob::ratio(1, 2);
                            }
                        }
                    }
                }
            }
            vertices.push(BoxTable { table });
        }
        let mut table = vec![Prob::zero(); 16];
        for (weight, vertex) in weights.iter().zip(&vertices) {
            let share = Prob::ratio(*weight as i64, total as i64);
            for (slot, entry) in table.iter_mut().zip(&vertex.table) {
                *slot = slot.clone() + share.clone() * entry.clone();
            }
        }
        let bx = BoxTable { table };
        prop_assert!(bx.validate().is_empty());
        prop_assert!(bx.no_signaling_check().passed());
        prop_assert!(bx.best_chsh() <= Prob::from_int(4));
        // Local verdicts match the facet rule on the whole polytope.
        prop_assert_eq!(bx.local_bound().is_local, bx.best_chsh() <= Prob::from_int(2));
    }

    #[test]
    fn local_verdict_agrees_with_chsh_facets_on_strategy_mixtures(
        i in 0..16usize,
        j in 0..16usize,
        k in 0..16usize,
        wi in 1u32..=10,
        wj in 1u32..=10,
        wk in 1u32..=10,
    ) {
        // Any mixture of deterministic strategies is local and satisfies
        // every CHSH facet.
        let total = (wi + wj + wk) as i64;
        let strategies: Vec<BoxTable> = (0..16)
            .map(|s| BoxTable::deterministic((s / 4) as u8, (s % 4) as u8))
            .collect();
        let mut table = vec![Prob::zero(); 16];
        for (weight, idx) in [(wi, i), (wj, j), (wk, k)] {
            let share = Prob::ratio(weight as i64, total);
            for (slot, entry) in table.iter_mut().zip(&strategies[idx].table) {
                *slot = slot.clone() + share.clone() * entry.clone();
            }
        }
        let bx = BoxTable { table };
        prop_assert!(bx.validate().is_empty());
        let bound = bx.local_bound();
        prop_assert!(bound.is_local);
        prop_assert!(bound.best_s <= Prob::from_int(2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn builtin_reports_are_stable_across_seeds(seed in any::<u64>()) {
        // Determinism holds for arbitrary seeds, not just the defaults.
        let s = builtin("fig2").unwrap();
        let a = s.run(seed, false).unwrap().to_json();
        let b = s.run(seed, false).unwrap().to_json();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn builtin_scenarios_round_trip_through_text() {
    for name in BUILTIN_NAMES {
        let scenario = builtin(name).unwrap();
        let json = scenario.to_canonical_json();
        let reparsed = Scenario::parse(&json).unwrap();
        assert_eq!(reparsed.doc, scenario.doc, "{name}");
        assert_eq!(reparsed.to_canonical_json(), json, "{name}");
    }
}
