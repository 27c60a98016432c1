//! Randomised invariant suite over the modulator. The conduction model and
//! the magnitude classifier are injectable so a deliberately broken build
//! can be shown to fail.

use std::f64::consts::{FRAC_PI_6, TAU};
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpts_core::modulator::{
    conduction_map, dwell_times_from_currents, dwell_times_trig, ontimes_pattern1, ontimes_pattern2, plan_period,
    PeriodPlan,
};
use tpts_core::refgen::{classify_abs, locate_angle, reference_currents, AbsOrdering};
use tpts_core::{Phase, PhaseTriple, Scheme, Subsector, SwitchState};

pub const DEFAULT_SEED: u64 = 0x7470_7473;

const I_DC: f64 = 5.0;
const TS: f64 = 1.0 / 18_000.0;

pub type ConductionFn = fn(SwitchState, Subsector, f64) -> PhaseTriple;
pub type ClassifyFn = fn(PhaseTriple) -> AbsOrdering;

/// Replaceable pieces of the modulator under test.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub conduction: ConductionFn,
    pub classify: ClassifyFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks { conduction: |s, sub, i| conduction_map(s, sub, i).currents, classify: classify_abs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub theta: f64,
    pub m: f64,
    pub scheme: Option<Scheme>,
    pub detail: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta = {:.9} rad ({:.4} deg), m = {:.9}", self.theta, self.theta.to_degrees(), self.m)?;
        if let Some(s) = self.scheme {
            write!(f, ", pattern {s}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub checked: usize,
    pub failure: Option<Witness>,
    /// Informational output that does not affect the verdict.
    pub log: Vec<String>,
}

impl PropertyResult {
    fn new(name: &'static str) -> Self {
        PropertyResult { name, checked: 0, failure: None, log: Vec::new() }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(witness());
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub seed: u64,
    pub points: usize,
    pub results: Vec<PropertyResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(PropertyResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = format!("seed {} ({} random operating points)\n", self.seed, self.points);
        for r in &self.results {
            match &r.failure {
                None => {
                    let _ = writeln!(out, "PASS {:<28} {} checks", r.name, r.checked);
                }
                Some(w) => {
                    let _ = writeln!(out, "FAIL {:<28} witness: {w}", r.name);
                }
            }
            for line in &r.log {
                let _ = writeln!(out, "     {line}");
            }
        }
        let failed = self.results.iter().filter(|r| !r.passed()).count();
        let _ = writeln!(out, "{} passed, {} failed", self.results.len() - failed, failed);
        out
    }
}

fn witness(theta: f64, m: f64, scheme: Option<Scheme>, detail: String) -> Witness {
    Witness { theta, m, scheme, detail }
}

pub fn run_selftest(seed: u64, points: usize, hooks: &Hooks) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(f64, f64)> =
        (0..points).map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.0..=1.0))).collect();

    let mut balance = PropertyResult::new("balance oracle");
    let mut palindrome = PropertyResult::new("palindrome");
    let mut single = PropertyResult::new("single switch per edge");
    let mut centred = PropertyResult::new("centred 111");
    let mut trig = PropertyResult::new("trig/current equivalence");
    let mut closed = PropertyResult::new("closed-form on-times");

    for &(theta, m) in &samples {
        for scheme in Scheme::ALL {
            let plan = match plan_period(scheme, theta, m, I_DC, TS) {
                Ok(p) => p,
                Err(e) => {
                    balance.check(false, || witness(theta, m, Some(scheme), e.to_string()));
                    continue;
                }
            };
            let tl = &plan.timeline;
            let sub = plan.location.subsector;
            let avg = tl.average_current_with(sub, I_DC, hooks.conduction);
            let err = avg.max_abs_diff(plan.refs);
            balance.check(err <= 1e-9 * I_DC, || {
                witness(theta, m, Some(scheme), format!("subsector {sub}: average {avg:?} vs reference {:?}", plan.refs))
            });
            palindrome.check(tl.is_palindrome(), || witness(theta, m, Some(scheme), "sequence not symmetric".into()));
            let worst = Phase::ALL.into_iter().map(|p| (p, tl.edges(p))).find(|(_, e)| e.rising > 1 || e.falling > 1);
            single.check(worst.is_none(), || witness(theta, m, Some(scheme), format!("{worst:?}")));
            centred.check(tl.centre_states().iter().all(|s| s.state == SwitchState::S111), || {
                witness(theta, m, Some(scheme), "centre state is not 111".into())
            });
            if scheme.is_carrier() {
                check_closed_form(&mut closed, hooks, &plan, scheme, m);
            }
        }

        let loc = locate_angle(theta);
        let refs = reference_currents(theta, m, I_DC).expect("index in range");
        let pair = dwell_times_trig(loc.theta_local, m, TS).and_then(|a| {
            dwell_times_from_currents(refs, loc.subsector, TS, I_DC).map(|b| (a, b))
        });
        match pair {
            Ok((a, b)) => {
                let d = (a.t0 - b.t0).abs().max((a.t1 - b.t1).abs()).max((a.t2 - b.t2).abs());
                trig.check(d <= 1e-9 * TS, || witness(theta, m, None, format!("dwell difference {:.3e} Ts", d / TS)));
            }
            Err(e) => trig.check(false, || witness(theta, m, None, e.to_string())),
        }
    }

    let results = vec![
        balance,
        palindrome,
        single,
        centred,
        trig,
        closed,
        boundary_continuity(hooks),
        tie_break_determinism(hooks),
    ];
    SelftestReport { seed, points, results }
}

fn check_closed_form(r: &mut PropertyResult, hooks: &Hooks, plan: &PeriodPlan, scheme: Scheme, m: f64) {
    let ord = (hooks.classify)(plan.refs);
    let on = match scheme {
        Scheme::PatternII => ontimes_pattern2(&ord, TS, I_DC),
        _ => ontimes_pattern1(&ord, TS, I_DC),
    };
    let Ok(on) = on else {
        r.check(false, || witness(plan.theta, m, Some(scheme), "on-time dispatch rejected the point".into()));
        return;
    };
    let worst = Phase::ALL.into_iter().map(|p| (plan.timeline.on_time(p) - on.get(p)).abs()).fold(0.0, f64::max);
    r.check(worst <= 1e-12 * TS, || {
        witness(plan.theta, m, Some(scheme), format!("timeline on-times differ from closed form by {:.3e} Ts", worst / TS))
    });
}

/// Period-averaged currents and total active time approach the same value
/// from both sides of every subsector boundary.
fn boundary_continuity(hooks: &Hooks) -> PropertyResult {
    let mut r = PropertyResult::new("boundary continuity");
    let delta = 1e-9;
    for j in 0..12 {
        let b = -FRAC_PI_6 + j as f64 * FRAC_PI_6;
        for m in [0.3, 0.7, 1.0] {
            for scheme in Scheme::ALL {
                let side = |theta: f64| {
                    plan_period(scheme, theta, m, I_DC, TS).map(|p| {
                        let avg = p.timeline.average_current_with(p.location.subsector, I_DC, hooks.conduction);
                        (avg, p.dwell.t1 + p.dwell.t2)
                    })
                };
                match (side(b - delta), side(b + delta)) {
                    (Ok((a0, t0)), Ok((a1, t1))) => {
                        let jump = a0.max_abs_diff(a1);
                        let ok = jump <= 1e-6 * I_DC && (t0 - t1).abs() <= 1e-6 * TS;
                        r.check(ok, || witness(b, m, Some(scheme), format!("current jump {jump:.3e} A")));
                    }
                    (Err(e), _) | (_, Err(e)) => r.check(false, || witness(b, m, Some(scheme), e.to_string())),
                }
            }
        }
    }
    r
}

/// Exact ties classify the same way every time; the chosen labels are logged.
fn tie_break_determinism(hooks: &Hooks) -> PropertyResult {
    let mut r = PropertyResult::new("tie-break determinism");
    let mut labels = Vec::new();
    for (name, refs) in tie_points() {
        let first = (hooks.classify)(refs);
        let again = (hooks.classify)(refs);
        let same = (first.max_phase, first.mid_phase, first.min_phase) == (again.max_phase, again.mid_phase, again.min_phase);
        r.check(same, || witness(0.0, 0.0, None, format!("{name}: labels changed between calls")));
        labels.push(format!("{name}:{}{}{}", first.max_phase, first.mid_phase, first.min_phase));
    }
    r.log.push(format!("tie labels (max,mid,min): {}", labels.join(" ")));
    r
}

/// Reference triples with exactly equal magnitudes, one per 30° boundary.
fn tie_points() -> Vec<(String, PhaseTriple)> {
    let (h, s) = (0.5, 0.866_025_403_784_438_6);
    let base = [
        ("0", [1.0, -h, -h]),
        ("30", [s, 0.0, -s]),
        ("60", [h, h, -1.0]),
        ("90", [0.0, s, -s]),
        ("120", [-h, 1.0, -h]),
        ("150", [-s, s, 0.0]),
    ];
    let mut out = Vec::new();
    for (deg, v) in base {
        out.push((format!("{deg}deg"), PhaseTriple::from_array(v)));
        let neg = v.map(|x: f64| -x);
        out.push((format!("{}deg", deg.parse::<u32>().unwrap() + 180), PhaseTriple::from_array(neg)));
    }
    out.push(("zero".into(), PhaseTriple::ZERO));
    out
}
