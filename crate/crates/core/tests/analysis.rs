use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use tpts_core::analysis::{
    analyze_trace, balance_error, fundamental, per_period_average, resource_report, thd, AnalysisError,
    DEFAULT_HARMONICS,
};
use tpts_core::modulator::{conduction_map, counted_cycle, plan_fundamental, plan_period, OperatingPoint};
use tpts_core::{run_simulation, Phase, Scheme, SimConfig, SwitchingTimeline};

const F1: f64 = 50.0;
const PER_CYCLE: usize = 20_000;
const DT: f64 = 1.0 / (F1 * PER_CYCLE as f64);
const TS: f64 = 1.0 / 18_000.0;

fn series(cycles: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..cycles * PER_CYCLE).map(|k| f(k as f64 * DT)).collect()
}

#[test]
fn square_wave_thd() {
    // odd harmonics 3..=101 of a unit square wave relative to its fundamental
    let oracle = (1..=50).map(|j| 1.0 / ((2 * j + 1) as f64).powi(2)).sum::<f64>().sqrt();
    assert!((oracle / 0.483 - 1.0).abs() < 0.01);

    // sample at cell midpoints so no sample falls on a discontinuity
    let x = series(1, |t| if (TAU * F1 * (t + 0.5 * DT)).cos() >= 0.0 { 1.0 } else { -1.0 });
    let d = thd(&x, DT, F1, 101).unwrap();
    assert!((d / oracle - 1.0).abs() < 0.01, "{d} vs {oracle}");
    assert!((d / 0.483 - 1.0).abs() < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pure_tone_reconstructs(amp in 0.1..100.0f64, phase in -PI..PI, cycles in 1usize..3) {
        let x = series(cycles, |t| amp * (TAU * F1 * t + phase).cos());
        let s = fundamental(&x, DT, F1).unwrap();
        let err = x.iter().enumerate().map(|(k, v)| (s.value_at(k as f64 * DT) - v).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * amp, "{err}");
    }

    #[test]
    fn thd_is_scale_invariant(scale in 1e-3..1e3f64, h3 in 0.0..0.5f64, h7 in 0.0..0.2f64) {
        let x = series(1, |t| (TAU * F1 * t).cos() + h3 * (3.0 * TAU * F1 * t).cos() + h7 * (7.0 * TAU * F1 * t + 0.4).sin());
        let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let (a, b) = (thd(&x, DT, F1, 20).unwrap(), thd(&y, DT, F1, 20).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-12));
        prop_assert!((a - (h3 * h3 + h7 * h7).sqrt()).abs() < 1e-10);
    }
}

#[test]
fn non_integer_window_is_rejected() {
    let x = series(1, |t| (TAU * F1 * t).cos());
    assert!(matches!(fundamental(&x[..PER_CYCLE / 3], DT, F1), Err(AnalysisError::Window { .. })));
}

/// Exact box-filtered samples of a piecewise-constant signal.
fn box_samples(tl: &SwitchingTimeline, value: impl Fn(usize) -> f64, n: usize) -> Vec<f64> {
    let dt = tl.period() / n as f64;
    let mut bounds = Vec::new();
    let mut t = 0.0;
    for (i, seg) in tl.segments().iter().enumerate() {
        bounds.push((t, t + seg.duration, value(i)));
        t += seg.duration;
    }
    (0..n)
        .map(|k| {
            let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
            bounds.iter().map(|&(s, e, v)| v * (e.min(b) - s.max(a)).max(0.0)).sum::<f64>() / dt
        })
        .collect()
}

#[test]
fn per_period_average_of_timeline_current() {
    let plan = plan_period(Scheme::PatternI, -PI / 12.0, 0.5, 5.0, TS).unwrap();
    let sub = plan.location.subsector;
    let want = [2.414_81, -1.767_77, -0.647_05];
    for p in Phase::ALL {
        let one = box_samples(&plan.timeline, |i| conduction_map(plan.timeline.segments()[i].state, sub, 5.0).currents[p], 500);
        let x: Vec<f64> = one.iter().cycle().take(3 * one.len()).copied().collect();
        let avg = per_period_average(&x, TS / 500.0, TS);
        assert_eq!(avg.len(), 3);
        for a in avg {
            assert!((a - want[p.index()]).abs() < 1e-5, "{p}: {a}");
            assert!((a - plan.refs[p]).abs() < 1e-9 * 5.0);
        }
    }
}

#[test]
fn modulator_ideal_balance_over_a_fundamental() {
    for scheme in Scheme::ALL {
        let plans = plan_fundamental(scheme, 0.8, 5.0, 18_000.0, F1, 0.3).unwrap();
        assert!(balance_error(&plans, 5.0) <= 1e-9 * 5.0, "{scheme}");
    }
}

#[test]
fn resource_report_profiles() {
    let op = OperatingPoint::new(0.4, 0.6, 5.0, TS);
    let report = resource_report(Scheme::ALL.map(|s| (s, counted_cycle(s, &op).unwrap().1)));
    assert!(report.carrier_schemes_table_free());
    let one = report.get(Scheme::PatternI).unwrap();
    assert_eq!(one.trig_evals, 0);
    assert!(one.relational_ops >= 3);
    assert_eq!(report.get(Scheme::SvmTrig).unwrap().trig_evals, 2);
    assert_eq!(report.get(Scheme::PatternII), Some(one));
}

#[test]
fn filter_attenuates_switching_content() {
    let cfg = SimConfig { duration: 2.0 / F1, ..SimConfig::default() };
    let trace = run_simulation(&cfg).unwrap();
    // horizon wide enough to include the switching band around 18 kHz
    let r = analyze_trace(&trace, 1, 400).unwrap();
    for p in 0..3 {
        let (src, rect) = (&r.source[p], &r.rectifier[p]);
        assert!(src.thd < rect.thd, "phase {p}: {} vs {}", src.thd, rect.thd);
        assert!(src.hf_distortion < rect.hf_distortion);
    }
    let low = analyze_trace(&trace, 1, DEFAULT_HARMONICS).unwrap();
    assert!(low.thd().iter().all(|&t| t >= 0.0));
    assert!(low.transitions_per_period().iter().all(|&n| n <= 2));
    assert!(low.clamp_fraction().iter().all(|f| (0.0..=1.0).contains(f)));
}
