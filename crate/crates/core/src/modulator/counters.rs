use core::f64::consts::{FRAC_1_PI, FRAC_PI_3, FRAC_PI_6};

use libm::{cos, floor, sin};

use super::carrier::CarrierComparator;
use super::state::SwitchState;
use super::timeline::{Segment, SwitchingTimeline};
use super::{sequence_states, Scheme, HALF_SQRT3};
use crate::error::ModulationError;
use crate::phase::Phase;
use crate::refgen::{check_dc, check_index, reference_currents, wrap_2pi, Subsector};

/// Operations executed by one control cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounters {
    pub multiplications: u32,
    pub additions: u32,
    pub subtractions: u32,
    pub trig_evals: u32,
    pub abs_evals: u32,
    pub relational_ops: u32,
    pub branches: u32,
    pub table_lookups: u32,
}

impl OpCounters {
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.multiplications += 1;
        a * b
    }

    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.additions += 1;
        a + b
    }

    fn sub(&mut self, a: f64, b: f64) -> f64 {
        self.subtractions += 1;
        a - b
    }

    fn sin(&mut self, x: f64) -> f64 {
        self.trig_evals += 1;
        sin(x)
    }

    fn cos(&mut self, x: f64) -> f64 {
        self.trig_evals += 1;
        cos(x)
    }

    fn abs(&mut self, x: f64) -> f64 {
        self.abs_evals += 1;
        x.abs()
    }

    fn ge(&mut self, a: f64, b: f64) -> bool {
        self.relational_ops += 1;
        a >= b
    }

    fn lt(&mut self, a: f64, b: f64) -> bool {
        self.relational_ops += 1;
        a < b
    }

    fn non_negative(&mut self, x: f64) -> f64 {
        self.relational_ops += 1;
        x.max(0.0)
    }

    fn branch(&mut self, taken: bool) -> bool {
        self.branches += 1;
        taken
    }

    fn lookup<T: Copy>(&mut self, table: &[T], i: usize) -> T {
        self.table_lookups += 1;
        table[i]
    }

    /// Sum of all arithmetic operators.
    pub fn arithmetic(&self) -> u32 {
        self.multiplications + self.additions + self.subtractions
    }
}

/// Inputs to one instrumented control cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Grid angle at the sampling instant, rad.
    pub theta: f64,
    pub m: f64,
    pub i_dc: f64,
    pub ts: f64,
    /// Carrier ticks per period for the carrier schemes.
    pub carrier_resolution: usize,
}

impl OperatingPoint {
    pub fn new(theta: f64, m: f64, i_dc: f64, ts: f64) -> Self {
        OperatingPoint { theta, m, i_dc, ts, carrier_resolution: 1000 }
    }
}

/// Runs one control cycle with every operation counted.
///
/// Carrier schemes start from the sampled reference currents: three
/// absolute values, three comparisons and three nested decisions sort them,
/// after which the compare registers are plain assignments against a
/// carrier whose peak equals the DC-link current. The space-vector
/// baseline starts from the grid angle and evaluates one sine and one
/// cosine; sequence states come from two tables indexed by subsector.
// The tie arm repeats its sibling on purpose: the comparison is still paid for.
#[allow(clippy::if_same_then_else)]
pub fn counted_cycle(scheme: Scheme, op: &OperatingPoint) -> Result<(SwitchingTimeline, OpCounters), ModulationError> {
    check_index(op.m)?;
    check_dc(op.i_dc)?;
    if !(op.ts > 0.0) {
        return Err(ModulationError::InvalidPeriod(op.ts));
    }
    let comparator = CarrierComparator::new(op.carrier_resolution.max(CarrierComparator::MIN_RESOLUTION))
        .expect("resolution raised to the minimum");
    let mut k = OpCounters::default();
    let timeline = match scheme {
        Scheme::PatternI | Scheme::PatternII => {
            let refs = reference_currents(op.theta, op.m, op.i_dc)?;
            let mag = [k.abs(refs.a), k.abs(refs.b), k.abs(refs.c)];
            let ab = k.ge(mag[0], mag[1]);
            let bc = k.ge(mag[1], mag[2]);
            let ca = k.ge(mag[2], mag[0]);
            use Phase::{A, B, C};
            let [max, mid, min] = if k.branch(ab) {
                if k.branch(bc) {
                    if k.branch(ca) { [A, B, C] } else { [A, B, C] }
                } else if k.branch(ca) {
                    [C, A, B]
                } else {
                    [A, C, B]
                }
            } else if k.branch(bc) {
                if k.branch(ca) { [B, C, A] } else { [B, A, C] }
            } else if k.branch(ca) {
                [C, B, A]
            } else {
                [A, B, C]
            };
            let mut cmp = [0.0; 3];
            cmp[max.index()] = mag[max.index()];
            cmp[mid.index()] = mag[mid.index()];
            cmp[min.index()] = match scheme {
                Scheme::PatternI => op.i_dc,
                _ => mag[max.index()],
            };
            comparator.realize(cmp, op.i_dc, op.ts)
        }
        Scheme::SvmTrig => {
            let zero_table: [SwitchState; 12] =
                core::array::from_fn(|i| sequence_states(scheme.pattern(), Subsector::from_index(i)).0);
            let active_table: [SwitchState; 12] =
                core::array::from_fn(|i| sequence_states(scheme.pattern(), Subsector::from_index(i)).1);

            let x = k.add(wrap_2pi(op.theta + FRAC_PI_6) - FRAC_PI_6, FRAC_PI_6);
            let sector = (floor(k.mul(x, 3.0 * FRAC_1_PI)) as usize).min(5);
            let base = k.mul(sector as f64, FRAC_PI_3);
            let local = k.sub(x, base);
            let local = k.sub(local, FRAC_PI_6);
            let in_a = k.lt(local, 0.0);
            let half_b = !k.branch(in_a);
            let s = k.sin(local);
            let c = k.cos(local);
            let km = k.mul(op.m, op.ts);
            let hc = k.mul(0.5, c);
            let hs = k.mul(HALF_SQRT3, s);
            let d = k.sub(hc, hs);
            let t1 = k.mul(km, d);
            let t1 = k.non_negative(t1);
            let e = k.add(hc, hs);
            let t2 = k.mul(km, e);
            let t2 = k.non_negative(t2);
            let t0 = k.sub(op.ts, t1);
            let t0 = k.sub(t0, t2);

            let idx = 2 * sector + half_b as usize;
            let zero = k.lookup(&zero_table, idx);
            let adjacent = k.lookup(&active_table, idx);
            let (adj, centre) = if half_b { (t1, t2) } else { (t2, t1) };
            let (h0, ha, hcen) = (k.mul(0.5, t0), k.mul(0.5, adj), k.mul(0.5, centre));
            let seg = |state, duration| Segment { state, duration };
            SwitchingTimeline::new(
                alloc::vec![
                    seg(zero, h0),
                    seg(adjacent, ha),
                    seg(SwitchState::S111, hcen),
                    seg(SwitchState::S111, hcen),
                    seg(adjacent, ha),
                    seg(zero, h0),
                ],
                op.ts,
            )
        }
    };
    Ok((timeline, k))
}
