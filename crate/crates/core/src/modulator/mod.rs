//! On-time and dwell-time computation, symmetric sequence assembly and the
//! conduction model of the three-switch buck rectifier.
//!
//! Every sequence places state 111 in the middle, the other active state
//! beside it and a zero state at both ends, so each gate switches at most
//! once on and once off per period. Pattern I uses the zero state that keeps
//! the minimum-|i| phase on (that phase is clamped for the whole period);
//! Pattern II uses 000 and clamps nothing.

mod carrier;
mod counters;
mod state;
mod timeline;

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_6, TAU};
use core::fmt;

use libm::{cos, round, sin};

pub use carrier::{gate_edges_carrier, CarrierComparator};
pub use counters::{counted_cycle, OpCounters, OperatingPoint};
pub use state::SwitchState;
pub use timeline::{GateEdges, Segment, SwitchingTimeline};

use crate::error::ModulationError;
use crate::phase::{Phase, PhaseTriple};
use crate::refgen::{
    check_dc, check_index, locate_angle, locate_sector, reference_currents, AbsOrdering, Half,
    SectorLocation, Subsector,
};

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// Sequence family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Minimum-|i| phase clamped on for the full period.
    I,
    /// Zero state 000 at both ends; no phase clamped.
    II,
}

/// Modulation scheme driving the converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    PatternI,
    PatternII,
    /// Space-vector baseline: trigonometric dwell times, Pattern I ordering.
    SvmTrig,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::PatternI, Scheme::PatternII, Scheme::SvmTrig];

    pub fn pattern(self) -> Pattern {
        match self {
            Scheme::PatternII => Pattern::II,
            Scheme::PatternI | Scheme::SvmTrig => Pattern::I,
        }
    }

    pub fn is_carrier(self) -> bool {
        !matches!(self, Scheme::SvmTrig)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::PatternI => "pattern1",
            Scheme::PatternII => "pattern2",
            Scheme::SvmTrig => "svm",
        }
    }

    pub fn from_name(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|sc| sc.name() == s)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Zero/active vector dwell durations within one period, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellTimes {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl DwellTimes {
    pub fn total(&self) -> f64 {
        self.t0 + self.t1 + self.t2
    }
}

/// Per-phase gate on-durations within one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnTimes {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub period: f64,
    pub clamped_phase: Option<Phase>,
}

impl OnTimes {
    pub fn get(&self, p: Phase) -> f64 {
        match p {
            Phase::A => self.a,
            Phase::B => self.b,
            Phase::C => self.c,
        }
    }

    fn set(&mut self, p: Phase, v: f64) {
        match p {
            Phase::A => self.a = v,
            Phase::B => self.b = v,
            Phase::C => self.c = v,
        }
    }

    pub fn duties(&self) -> [f64; 3] {
        [self.a / self.period, self.b / self.period, self.c / self.period]
    }
}

fn check_period(ts: f64) -> Result<(), ModulationError> {
    if ts > 0.0 && ts.is_finite() {
        Ok(())
    } else {
        Err(ModulationError::InvalidPeriod(ts))
    }
}

fn check_ordering(ord: &AbsOrdering, ts: f64, i_dc: f64) -> Result<(), ModulationError> {
    check_period(ts)?;
    check_dc(i_dc)?;
    if ord.max_val > i_dc {
        return Err(ModulationError::Overmodulation(ord.max_val / i_dc));
    }
    Ok(())
}

fn on_times_from(ord: &AbsOrdering, ts: f64, i_dc: f64, min_on: f64, clamped: Option<Phase>) -> OnTimes {
    let mut on = OnTimes { a: 0.0, b: 0.0, c: 0.0, period: ts, clamped_phase: clamped };
    on.set(ord.max_phase, ord.max_val * ts / i_dc);
    on.set(ord.mid_phase, ord.mid_val * ts / i_dc);
    on.set(ord.min_phase, min_on);
    on
}

/// Pattern I: max and mid phases proportional to |i|, min phase on for `ts`.
pub fn ontimes_pattern1(ord: &AbsOrdering, ts: f64, i_dc: f64) -> Result<OnTimes, ModulationError> {
    check_ordering(ord, ts, i_dc)?;
    Ok(on_times_from(ord, ts, i_dc, ts, Some(ord.min_phase)))
}

/// Pattern II: the min phase repeats the max phase's on-time.
pub fn ontimes_pattern2(ord: &AbsOrdering, ts: f64, i_dc: f64) -> Result<OnTimes, ModulationError> {
    check_ordering(ord, ts, i_dc)?;
    Ok(on_times_from(ord, ts, i_dc, ord.max_val * ts / i_dc, None))
}

/// Dwell times read off the sampled references. `t1` is set by the
/// extremum's cyclic successor and `t2` by its predecessor; both carry the
/// opposite sign of the extremum inside a consistent sector.
pub fn dwell_times_from_currents(
    refs: PhaseTriple,
    sub: Subsector,
    ts: f64,
    i_dc: f64,
) -> Result<DwellTimes, ModulationError> {
    check_period(ts)?;
    check_dc(i_dc)?;
    let sign = if sub.extremum_positive() { -1.0 } else { 1.0 };
    let tol = 1e-12 * ts;
    let dwell = |p: Phase| {
        let t = sign * refs[p] * ts / i_dc;
        if t < -tol {
            Err(ModulationError::SectorMismatch { sector: sub.sector(), dwell: t })
        } else {
            Ok(t.max(0.0))
        }
    };
    let t1 = dwell(sub.t1_phase())?;
    let t2 = dwell(sub.t2_phase())?;
    let t0 = ts - t1 - t2;
    if t0 < -tol {
        return Err(ModulationError::Overmodulation((t1 + t2) / ts));
    }
    Ok(DwellTimes { t0: t0.max(0.0), t1, t2 })
}

/// Space-vector dwell times from the sector-local angle:
/// `t1 = m·ts·sin(π/6 − θ)`, `t2 = m·ts·sin(π/6 + θ)`, expanded so that one
/// sine and one cosine evaluation suffice.
pub fn dwell_times_trig(theta_local: f64, m: f64, ts: f64) -> Result<DwellTimes, ModulationError> {
    if !(-FRAC_PI_6..FRAC_PI_6).contains(&theta_local) {
        return Err(ModulationError::AngleOutOfRange(theta_local));
    }
    check_index(m)?;
    check_period(ts)?;
    let (s, c) = (sin(theta_local), cos(theta_local));
    let k = m * ts;
    let t1 = (k * (0.5 * c - HALF_SQRT3 * s)).max(0.0);
    let t2 = (k * (0.5 * c + HALF_SQRT3 * s)).max(0.0);
    Ok(DwellTimes { t0: (ts - t1 - t2).max(0.0), t1, t2 })
}

/// Zero state and adjacent active state used in `sub`.
pub fn sequence_states(pattern: Pattern, sub: Subsector) -> (SwitchState, SwitchState) {
    let min = sub.min_abs_phase();
    let zero = match pattern {
        Pattern::I => SwitchState::from_phases(&[min]),
        Pattern::II => SwitchState::S000,
    };
    (zero, SwitchState::from_phases(&[sub.extremum(), min]))
}

/// Six-segment symmetric sequence with halved dwell times.
pub fn assemble_timeline(pattern: Pattern, sub: Subsector, dt: &DwellTimes) -> SwitchingTimeline {
    let (zero, adjacent) = sequence_states(pattern, sub);
    let (adj_dwell, centre_dwell) = match sub.half() {
        Half::A => (dt.t2, dt.t1),
        Half::B => (dt.t1, dt.t2),
    };
    let seg = |state, d: f64| Segment { state, duration: 0.5 * d };
    let segments = alloc::vec![
        seg(zero, dt.t0),
        seg(adjacent, adj_dwell),
        seg(SwitchState::S111, centre_dwell),
        seg(SwitchState::S111, centre_dwell),
        seg(adjacent, adj_dwell),
        seg(zero, dt.t0),
    ];
    SwitchingTimeline::new(segments, dt.total())
}

/// Result of the conduction model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conduction {
    pub currents: PhaseTriple,
    /// False when the state offers no path (fewer than two switches on).
    pub conducting: bool,
}

/// Phases carrying the DC-link current out of and back into the grid: the
/// switched-on phase with the highest voltage feeds the positive rail and
/// the one with the lowest voltage returns it.
pub fn conducting_pair(state: SwitchState, sub: Subsector) -> Option<(Phase, Phase)> {
    if state.is_zero_state() {
        return None;
    }
    let order = sub.signed_order();
    let mut on = order.iter().copied().filter(|&p| state.is_on(p));
    let high = on.next()?;
    let low = on.next_back()?;
    Some((high, low))
}

pub fn conduction_map(state: SwitchState, sub: Subsector, i_dc: f64) -> Conduction {
    match conducting_pair(state, sub) {
        Some((high, low)) => {
            let mut currents = PhaseTriple::ZERO;
            currents[high] = i_dc;
            currents[low] = -i_dc;
            Conduction { currents, conducting: true }
        }
        None => Conduction { currents: PhaseTriple::ZERO, conducting: false },
    }
}

/// Everything the modulator decides for one switching period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodPlan {
    pub theta: f64,
    pub refs: PhaseTriple,
    pub location: SectorLocation,
    pub dwell: DwellTimes,
    pub timeline: SwitchingTimeline,
}

impl PeriodPlan {
    pub fn on_times(&self) -> OnTimes {
        let tl = &self.timeline;
        OnTimes {
            a: tl.on_time(Phase::A),
            b: tl.on_time(Phase::B),
            c: tl.on_time(Phase::C),
            period: tl.period(),
            clamped_phase: Phase::ALL.into_iter().find(|&p| tl.is_clamped(p)),
        }
    }

    /// Timeline-averaged rectifier currents at constant `i_dc`.
    pub fn average_current(&self, i_dc: f64) -> PhaseTriple {
        self.timeline.average_current(self.location.subsector, i_dc)
    }
}

/// Analytic (exact-edge) modulation of one period at grid angle `theta`.
///
/// Carrier patterns work from the sampled references; at `m = 0` the
/// references carry no sector information and the grid angle is used.
/// The space-vector baseline works from the angle throughout.
pub fn plan_period(scheme: Scheme, theta: f64, m: f64, i_dc: f64, ts: f64) -> Result<PeriodPlan, ModulationError> {
    let refs = reference_currents(theta, m, i_dc)?;
    let (location, dwell) = match scheme {
        Scheme::PatternI | Scheme::PatternII => {
            let loc = if refs.is_zero() { locate_angle(theta) } else { locate_sector(refs)? };
            let dwell = dwell_times_from_currents(refs, loc.subsector, ts, i_dc)?;
            (loc, dwell)
        }
        Scheme::SvmTrig => {
            let loc = locate_angle(theta);
            let dwell = dwell_times_trig(loc.theta_local, m, ts)?;
            (loc, dwell)
        }
    };
    let timeline = assemble_timeline(scheme.pattern(), location.subsector, &dwell);
    Ok(PeriodPlan { theta, refs, location, dwell, timeline })
}

/// Plans covering one fundamental period, sampled once per switching period.
pub fn plan_fundamental(
    scheme: Scheme,
    m: f64,
    i_dc: f64,
    f_sw: f64,
    f_grid: f64,
    phase_offset: f64,
) -> Result<Vec<PeriodPlan>, ModulationError> {
    check_period(1.0 / f_sw)?;
    let ts = 1.0 / f_sw;
    let n = round(f_sw / f_grid).max(1.0) as usize;
    (0..n)
        .map(|k| plan_period(scheme, phase_offset + TAU * k as f64 / n as f64, m, i_dc, ts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refgen::classify_abs;

    const TS: f64 = 1.0 / 18_000.0;
    const DEG: f64 = core::f64::consts::PI / 180.0;

    fn sub(s: &str) -> Subsector {
        Subsector::all().find(|x| alloc::format!("{x}") == s).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pattern1_examples() {
        let ord = classify_abs(PhaseTriple::new(2.5, -1.25, -1.25));
        let on = ontimes_pattern1(&ord, TS, 5.0).unwrap();
        assert!(close(on.get(ord.max_phase), 0.5 * TS, 1e-18));
        assert!(close(on.get(ord.mid_phase), 0.25 * TS, 1e-18));
        assert_eq!(on.get(ord.min_phase), TS);
        assert_eq!(on.clamped_phase, Some(ord.min_phase));

        let ord = classify_abs(PhaseTriple::new(2.414_81, -1.767_77, -0.647_05));
        let on = ontimes_pattern1(&ord, TS, 5.0).unwrap();
        assert!(close(on.a / TS, 0.482_962, 1e-6));
        assert!(close(on.b / TS, 0.353_554, 1e-6));
        assert_eq!(on.c, TS);

        let on = ontimes_pattern1(&classify_abs(PhaseTriple::ZERO), TS, 5.0).unwrap();
        let mut v = [on.a, on.b, on.c];
        v.sort_by(f64::total_cmp);
        assert_eq!(v, [0.0, 0.0, TS]);
    }

    #[test]
    fn pattern2_examples() {
        let ord = classify_abs(PhaseTriple::new(2.5, -1.25, -1.25));
        let on = ontimes_pattern2(&ord, TS, 5.0).unwrap();
        assert!(close(on.get(ord.min_phase), 0.5 * TS, 1e-18));
        assert_eq!(on.clamped_phase, None);

        let ord = classify_abs(PhaseTriple::new(2.414_81, -1.767_77, -0.647_05));
        let on = ontimes_pattern2(&ord, TS, 5.0).unwrap();
        assert!(close(on.c / TS, 0.482_962, 1e-6));

        let on = ontimes_pattern2(&classify_abs(PhaseTriple::ZERO), TS, 5.0).unwrap();
        assert_eq!([on.a, on.b, on.c], [0.0; 3]);
    }

    #[test]
    fn ontimes_reject_overmodulation() {
        let ord = classify_abs(PhaseTriple::new(6.0, -3.0, -3.0));
        assert!(matches!(ontimes_pattern1(&ord, TS, 5.0), Err(ModulationError::Overmodulation(_))));
        assert!(matches!(ontimes_pattern2(&ord, TS, 5.0), Err(ModulationError::Overmodulation(_))));
    }

    #[test]
    fn dwell_examples() {
        let refs = reference_currents(-15.0 * DEG, 0.5, 5.0).unwrap();
        let d = dwell_times_from_currents(refs, sub("1a"), TS, 5.0).unwrap();
        assert!(close(d.t1 / TS, 0.353_553_390_593_273_8, 1e-12));
        assert!(close(d.t2 / TS, 0.129_409_522_551_260_4, 1e-12));
        assert!(close(d.t0 / TS, 0.517_037_086_855_465_8, 1e-12));

        let d = dwell_times_from_currents(PhaseTriple::new(2.5, -1.25, -1.25), sub("1b"), TS, 5.0).unwrap();
        assert!(close(d.t1 / TS, 0.25, 1e-15) && close(d.t2 / TS, 0.25, 1e-15) && close(d.t0 / TS, 0.5, 1e-15));

        let d = dwell_times_from_currents(PhaseTriple::ZERO, sub("3b"), TS, 5.0).unwrap();
        assert_eq!((d.t0, d.t1, d.t2), (TS, 0.0, 0.0));
    }

    #[test]
    fn dwell_detects_sector_mismatch() {
        let refs = reference_currents(-15.0 * DEG, 0.5, 5.0).unwrap();
        assert!(matches!(
            dwell_times_from_currents(refs, sub("4a"), TS, 5.0),
            Err(ModulationError::SectorMismatch { sector: 4, .. })
        ));
    }

    #[test]
    fn trig_examples() {
        let d = dwell_times_trig(-15.0 * DEG, 0.5, TS).unwrap();
        assert!(close(d.t1 / TS, 0.353_553_390_593_273_8, 1e-12));
        assert!(close(d.t2 / TS, 0.129_409_522_551_260_4, 1e-12));
        let d = dwell_times_trig(0.0, 0.5, TS).unwrap();
        assert!(close(d.t1 / TS, 0.25, 1e-15) && close(d.t2 / TS, 0.25, 1e-15));
        let d = dwell_times_trig(0.2, 0.0, TS).unwrap();
        assert_eq!((d.t0, d.t1, d.t2), (TS, 0.0, 0.0));
        assert!(matches!(dwell_times_trig(FRAC_PI_6, 0.5, TS), Err(ModulationError::AngleOutOfRange(_))));
        assert!(dwell_times_trig(0.0, 1.01, TS).is_err());
    }

    #[test]
    fn table_one_sequences() {
        let d = DwellTimes { t0: 0.4, t1: 0.35, t2: 0.25 };
        let states = |tl: &SwitchingTimeline| -> Vec<alloc::string::String> {
            tl.segments().iter().map(|s| alloc::format!("{}", s.state)).collect()
        };
        assert_eq!(states(&assemble_timeline(Pattern::I, sub("1a"), &d)), ["001", "101", "111", "111", "101", "001"]);
        assert_eq!(states(&assemble_timeline(Pattern::I, sub("1b"), &d)), ["010", "110", "111", "111", "110", "010"]);
        assert_eq!(states(&assemble_timeline(Pattern::II, sub("1a"), &d)), ["000", "101", "111", "111", "101", "000"]);
        assert_eq!(states(&assemble_timeline(Pattern::II, sub("1b"), &d)), ["000", "110", "111", "111", "110", "000"]);

        let tl = assemble_timeline(Pattern::I, sub("1a"), &d);
        assert_eq!(tl.segments()[1].duration, 0.125);
        assert_eq!(tl.segments()[2].duration, 0.175);
    }

    #[test]
    fn pattern_gate_on_times_at_minus_15_deg() {
        let refs = reference_currents(-15.0 * DEG, 0.5, 5.0).unwrap();
        let d = dwell_times_from_currents(refs, sub("1a"), TS, 5.0).unwrap();
        let tl = assemble_timeline(Pattern::I, sub("1a"), &d);
        assert!(close(tl.on_time(Phase::A) / TS, 0.482_962_913_144_534_2, 1e-12));
        assert!(close(tl.on_time(Phase::B) / TS, 0.353_553_390_593_273_8, 1e-12));
        assert!(close(tl.on_time(Phase::C) / TS, 1.0, 1e-12));
        let tl = assemble_timeline(Pattern::II, sub("1a"), &d);
        assert!(close(tl.on_time(Phase::C) / TS, 0.482_962_913_144_534_2, 1e-12));
    }

    #[test]
    fn zero_index_collapses_to_zero_state() {
        let d = DwellTimes { t0: TS, t1: 0.0, t2: 0.0 };
        let tl = assemble_timeline(Pattern::I, sub("1a"), &d);
        assert!(tl.is_clamped(Phase::C));
        assert_eq!(tl.on_time(Phase::A), 0.0);
        assert!(Phase::ALL.iter().all(|&p| tl.edges(p).total() == 0));
    }

    #[test]
    fn conduction_examples() {
        assert_eq!(conduction_map(SwitchState::S101, sub("1a"), 5.0).currents, PhaseTriple::new(5.0, 0.0, -5.0));
        assert_eq!(conduction_map(SwitchState::S111, sub("1a"), 5.0).currents, PhaseTriple::new(5.0, -5.0, 0.0));
        assert_eq!(conduction_map(SwitchState::S111, sub("1b"), 5.0).currents, PhaseTriple::new(5.0, 0.0, -5.0));
        assert_eq!(conduction_map(SwitchState::S110, sub("1b"), 5.0).currents, PhaseTriple::new(5.0, -5.0, 0.0));
        for s in Subsector::all() {
            let c = conduction_map(SwitchState::S000, s, 5.0);
            assert_eq!(c.currents, PhaseTriple::ZERO);
            assert!(!c.conducting);
            assert!(!conduction_map(SwitchState::S010, s, 5.0).conducting);
        }
    }

    #[test]
    fn balance_in_every_subsector() {
        for s in Subsector::all() {
            let theta = s.start_angle() + 0.37 * FRAC_PI_6;
            for scheme in Scheme::ALL {
                let plan = plan_period(scheme, theta, 0.8, 5.0, TS).unwrap();
                assert_eq!(plan.location.subsector, s);
                let avg = plan.average_current(5.0);
                assert!(avg.max_abs_diff(plan.refs) < 1e-12, "{scheme} {s}: {avg:?} vs {:?}", plan.refs);
            }
        }
    }

    #[test]
    fn zero_index_plan_uses_grid_angle() {
        let plans = plan_fundamental(Scheme::PatternI, 0.0, 5.0, 18_000.0, 50.0, 0.0).unwrap();
        assert_eq!(plans.len(), 360);
        let clamped: Vec<_> = plans.iter().map(|p| p.on_times().clamped_phase.unwrap()).collect();
        assert!(Phase::ALL.iter().all(|p| clamped.contains(p)));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::from_name(s.name()), Some(s));
        }
        assert_eq!(Scheme::from_name("pattern3"), None);
    }
}
