use std::f64::consts::{FRAC_PI_6, TAU};

use proptest::prelude::*;

use tpts_core::modulator::{
    conduction_map, counted_cycle, dwell_times_from_currents, dwell_times_trig, gate_edges_carrier,
    ontimes_pattern1, ontimes_pattern2, plan_period, OperatingPoint,
};
use tpts_core::refgen::{classify_abs, locate_angle, locate_sector, reference_currents, wrap_pi};
use tpts_core::{Phase, PhaseTriple, Scheme, Subsector, SwitchState};

const TS: f64 = 1.0 / 18_000.0;
const I_DC: f64 = 5.0;

fn scheme() -> impl Strategy<Value = Scheme> {
    prop::sample::select(Scheme::ALL.to_vec())
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..TAU
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn average_current_matches_reference(theta in angle(), m in 0.0..=1.0f64, s in scheme()) {
        let plan = plan_period(s, theta, m, I_DC, TS).unwrap();
        let avg = plan.average_current(I_DC);
        prop_assert!(avg.max_abs_diff(plan.refs) <= 1e-9 * I_DC, "{avg:?} vs {:?}", plan.refs);
    }

    #[test]
    fn timelines_are_symmetric_single_switch(theta in angle(), m in 0.0..=1.0f64, s in scheme()) {
        let tl = plan_period(s, theta, m, I_DC, TS).unwrap().timeline;
        prop_assert!(tl.is_palindrome());
        prop_assert!(tl.centre_states().iter().all(|seg| seg.state == SwitchState::S111));
        prop_assert!((tl.total_duration() - TS).abs() <= 1e-12 * TS);
        for p in Phase::ALL {
            let e = tl.edges(p);
            prop_assert!(e.rising <= 1 && e.falling <= 1, "{p}: {e:?}");
        }
    }

    #[test]
    fn trig_and_current_dwell_times_agree(theta in angle(), m in 0.0..=1.0f64) {
        let loc = locate_angle(theta);
        let trig = dwell_times_trig(loc.theta_local, m, TS).unwrap();
        let refs = reference_currents(theta, m, I_DC).unwrap();
        let cur = dwell_times_from_currents(refs, loc.subsector, TS, I_DC).unwrap();
        prop_assert!((trig.t1 - cur.t1).abs() <= 1e-9 * TS);
        prop_assert!((trig.t2 - cur.t2).abs() <= 1e-9 * TS);
        prop_assert!((trig.t0 - cur.t0).abs() <= 1e-9 * TS);
    }

    #[test]
    fn timeline_on_times_follow_closed_forms(theta in angle(), m in 0.0..=1.0f64) {
        let refs = reference_currents(theta, m, I_DC).unwrap();
        let ord = classify_abs(refs);
        let expected = [(Scheme::PatternI, ontimes_pattern1(&ord, TS, I_DC).unwrap()),
                        (Scheme::PatternII, ontimes_pattern2(&ord, TS, I_DC).unwrap())];
        for (s, on) in expected {
            let tl = plan_period(s, theta, m, I_DC, TS).unwrap().timeline;
            for p in Phase::ALL {
                prop_assert!((tl.on_time(p) - on.get(p)).abs() <= 1e-12 * TS, "{s} {p}");
            }
        }
    }

    #[test]
    fn classification_is_permutation_equivariant(a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let refs = PhaseTriple::new(a, b, -a - b);
        let ord = classify_abs(refs);
        for perm in [[Phase::A, Phase::C, Phase::B], [Phase::B, Phase::A, Phase::C], [Phase::C, Phase::A, Phase::B]] {
            let o = classify_abs(refs.permute(perm));
            prop_assert_eq!((o.max_val, o.mid_val, o.min_val), (ord.max_val, ord.mid_val, ord.min_val));
        }
        // a cyclic shift moves every label to the next phase
        let shifted = classify_abs(refs.permute([Phase::C, Phase::A, Phase::B]));
        prop_assert_eq!(shifted.max_phase, ord.max_phase.next());
        prop_assert_eq!(shifted.mid_phase, ord.mid_phase.next());
        prop_assert_eq!(shifted.min_phase, ord.min_phase.next());
    }

    #[test]
    fn references_sum_to_zero(theta in angle(), m in 0.0..=1.0f64) {
        let refs = reference_currents(theta, m, I_DC).unwrap();
        prop_assert!(refs.sum().abs() <= 1e-12 * I_DC);
    }

    #[test]
    fn sector_from_currents_matches_angle(theta in angle(), m in 0.01..=1.0f64) {
        let by_angle = locate_angle(theta);
        // stay clear of boundaries, where either label is correct
        prop_assume!((by_angle.theta_local.abs() > 1e-9) && (FRAC_PI_6 - by_angle.theta_local.abs() > 1e-9));
        let by_refs = locate_sector(reference_currents(theta, m, I_DC).unwrap()).unwrap();
        prop_assert_eq!(by_refs.subsector, by_angle.subsector);
        prop_assert!(wrap_pi(by_refs.theta_local - by_angle.theta_local).abs() < 1e-9);
    }

    #[test]
    fn carrier_realisation_tracks_analytic_on_times(theta in angle(), m in 0.0..=1.0f64, s in scheme()) {
        let plan = plan_period(s, theta, m, I_DC, TS).unwrap();
        let on = plan.on_times();
        let tl = gate_edges_carrier(&on, 1000);
        for p in Phase::ALL {
            prop_assert!((tl.on_time(p) - on.get(p)).abs() <= TS / 1000.0 + 1e-15);
        }
    }

    #[test]
    fn carrier_operation_counts_do_not_depend_on_data(theta in angle(), m in 0.0..=1.0f64) {
        let fixed = OperatingPoint::new(0.1, 0.5, I_DC, TS);
        let here = OperatingPoint::new(theta, m, I_DC, TS);
        for s in Scheme::ALL {
            let (_, a) = counted_cycle(s, &fixed).unwrap();
            let (_, b) = counted_cycle(s, &here).unwrap();
            if s.is_carrier() {
                prop_assert_eq!(a, b);
            } else {
                prop_assert_eq!(a.trig_evals, b.trig_evals);
            }
        }
    }
}

#[test]
fn conduction_is_three_wire() {
    for sub in Subsector::all() {
        for bits in 0..8 {
            let c = conduction_map(SwitchState::from_bits(bits).unwrap(), sub, I_DC);
            assert_eq!(c.currents.sum(), 0.0);
            assert_eq!(c.conducting, bits.count_ones() >= 2);
        }
    }
}

#[test]
fn twelve_subsectors_per_cycle_in_order() {
    let n = 360 * 16;
    let mut visited = vec![locate_angle(0.0).subsector];
    for k in 1..n {
        let s = locate_angle(TAU * k as f64 / n as f64).subsector;
        if s != *visited.last().unwrap() {
            visited.push(s);
        }
    }
    // θ = 0 lies in 1b; the walk ends back in 1a
    let order: Vec<usize> = visited.iter().map(|s| s.index()).collect();
    let expected: Vec<usize> = (1..12).chain(std::iter::once(0)).collect();
    assert_eq!(order, expected);
}

#[test]
fn pattern_zero_state_clamps_min_phase() {
    for sub in Subsector::all() {
        let theta = sub.start_angle() + 0.5 * FRAC_PI_6;
        let p1 = plan_period(Scheme::PatternI, theta, 0.7, I_DC, TS).unwrap();
        assert!(p1.timeline.is_clamped(sub.min_abs_phase()), "{sub}");
        let p2 = plan_period(Scheme::PatternII, theta, 0.7, I_DC, TS).unwrap();
        assert!(Phase::ALL.iter().all(|&p| !p2.timeline.is_clamped(p)), "{sub}");
    }
}
