//! Fixed-step switched simulation of the rectifier: three-phase source,
//! input LC filter, ideal switches and diodes, DC-link inductor, output
//! capacitor and an electronic constant-current load.
//!
//! The modulator is sampled once per switching period at the period start.
//! The integration grid is fixed. With `exact_edges` a step that contains a
//! switching instant is integrated piecewise, one RK4 sub-step per gate
//! state; otherwise the gates are held at their step-midpoint state, which
//! snaps every edge to the grid.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use libm::{atan2, round, sqrt};
use thiserror::Error;

use crate::error::ModulationError;
use crate::modulator::{conducting_pair, plan_period, PeriodPlan, Scheme, SwitchState, SwitchingTimeline};
use crate::phase::{Phase, PhaseTriple};
use crate::refgen::{balanced_cosines, GridConfig, Subsector};

/// Passive component values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Input filter inductance per phase, H.
    pub l_in: f64,
    /// Series resistance of the input inductor, Ω.
    pub r_l_in: f64,
    /// Input filter capacitance per phase (star), F.
    pub c_in: f64,
    /// DC-link inductance, H.
    pub l_out: f64,
    /// Output capacitance, F.
    pub c_out: f64,
    /// Extra series damping resistance in the input filter branch, Ω.
    pub r_damp: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams { l_in: 230e-6, r_l_in: 0.1, c_in: 6.8e-6, l_out: 1e-3, c_out: 150e-6, r_damp: 0.0 }
    }
}

impl CircuitParams {
    pub fn is_valid(&self) -> bool {
        [self.l_in, self.r_l_in, self.c_in, self.l_out, self.c_out].iter().all(|v| *v > 0.0 && v.is_finite())
            && self.r_damp >= 0.0
            && self.r_damp.is_finite()
    }

    pub fn input_resistance(&self) -> f64 {
        self.r_l_in + self.r_damp
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub circuit: CircuitParams,
    /// Switching frequency, Hz.
    pub f_sw: f64,
    /// Peak grid-current reference over the nominal DC-link current.
    pub m: f64,
    /// Constant-current load setting, A. Also the DC-link current the
    /// modulator normalises against.
    pub load_current: f64,
    /// Below this output voltage the load current falls linearly to zero, V.
    /// Zero gives an ideal current sink.
    pub load_knee: f64,
    /// Simulated time, s.
    pub duration: f64,
    pub steps_per_period: usize,
    pub scheme: Scheme,
    /// Feed forward the input-capacitor current so the grid current, not
    /// the rectifier current, follows the reference.
    pub cap_compensation: bool,
    /// Record every n-th integration step.
    pub record_every: usize,
    /// Split integration steps at the exact switching instants instead of
    /// snapping each edge to the nearest step boundary.
    pub exact_edges: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid: GridConfig::default(),
            circuit: CircuitParams::default(),
            f_sw: 18_000.0,
            m: 0.5,
            load_current: 5.0,
            load_knee: 1.0,
            duration: 0.06,
            steps_per_period: 200,
            scheme: Scheme::PatternI,
            cap_compensation: true,
            record_every: 1,
            exact_edges: true,
        }
    }
}

/// Operating point handed to the modulator after capacitor-current feed
/// forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorDemand {
    /// Lag of the rectifier-current reference behind the grid reference, rad.
    pub angle_shift: f64,
    pub index: f64,
}

impl SimConfig {
    pub fn switching_period(&self) -> f64 {
        1.0 / self.f_sw
    }

    pub fn step(&self) -> f64 {
        self.switching_period() / self.steps_per_period as f64
    }

    pub fn switching_periods(&self) -> usize {
        round(self.duration * self.f_sw) as usize
    }

    /// Mean output voltage implied by power balance at unity power factor.
    pub fn expected_dc_voltage(&self) -> f64 {
        1.5 * self.m * self.grid.phase_peak()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &'static str| Err(SimError::InvalidConfig(what));
        if !self.grid.is_valid() {
            return bad("grid voltage and frequency must be positive");
        }
        if !self.circuit.is_valid() {
            return bad("component values must be positive");
        }
        if !(self.f_sw > 0.0 && self.f_sw.is_finite()) {
            return bad("f_sw must be positive");
        }
        if !(0.0..=1.0).contains(&self.m) {
            return Err(SimError::Modulation(ModulationError::Overmodulation(self.m)));
        }
        if !(self.load_current > 0.0 && self.load_current.is_finite()) {
            return bad("load_current must be positive");
        }
        if !(self.load_knee >= 0.0 && self.load_knee.is_finite()) {
            return bad("load_knee must be non-negative");
        }
        if self.steps_per_period < 20 {
            return bad("steps_per_period must be at least 20");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) || self.switching_periods() == 0 {
            return bad("duration must cover at least one switching period");
        }
        Ok(())
    }

    /// Modulator operating point. With compensation the rectifier reference
    /// is `m·I·cos θ + ω·C·V·sin θ`, i.e. the grid reference minus the
    /// predicted capacitor current. `m = 0` keeps the converter idle.
    pub fn demand(&self) -> Result<ModulatorDemand, SimError> {
        if !self.cap_compensation || self.m == 0.0 {
            return Ok(ModulatorDemand { angle_shift: 0.0, index: self.m });
        }
        let active = self.m * self.load_current;
        let reactive = self.grid.omega() * self.circuit.c_in * self.grid.phase_peak();
        let index = sqrt(active * active + reactive * reactive) / self.load_current;
        if index > 1.0 {
            return Err(SimError::Modulation(ModulationError::Overmodulation(index)));
        }
        Ok(ModulatorDemand { angle_shift: atan2(reactive, active), index })
    }

    pub fn load(&self, v_out: f64) -> f64 {
        if self.load_knee > 0.0 {
            self.load_current * (v_out / self.load_knee).clamp(0.0, 1.0)
        } else {
            self.load_current
        }
    }

    /// Grid-side current reference at time `t`.
    pub fn reference(&self, t: f64) -> PhaseTriple {
        balanced_cosines(self.grid.angle(t), self.m * self.load_current)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Modulation(#[from] ModulationError),
    #[error("simulation diverged at t = {time} s ({quantity} = {value})")]
    Unstable { time: f64, quantity: &'static str, value: f64 },
}

/// Circuit state vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimState {
    /// Input inductor (grid) currents, A.
    pub i_filter: PhaseTriple,
    /// Input capacitor voltages, V.
    pub v_cap: PhaseTriple,
    /// DC-link inductor current, A.
    pub i_dc: f64,
    /// Output capacitor voltage, V.
    pub v_out: f64,
}

impl SimState {
    pub fn to_array(&self) -> [f64; 8] {
        let (i, v) = (self.i_filter, self.v_cap);
        [i.a, i.b, i.c, v.a, v.b, v.c, self.i_dc, self.v_out]
    }

    pub fn from_array(x: [f64; 8]) -> Self {
        SimState {
            i_filter: PhaseTriple::new(x[0], x[1], x[2]),
            v_cap: PhaseTriple::new(x[3], x[4], x[5]),
            i_dc: x[6],
            v_out: x[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Rectifier terminal quantities for one switch state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Port {
    pub i_rect: PhaseTriple,
    /// Voltage presented to the DC-link inductor, V.
    pub v_link: f64,
    pub conducting: bool,
}

pub fn rectifier_port(state: SwitchState, sub: Subsector, i_dc: f64, v_cap: PhaseTriple) -> Port {
    match conducting_pair(state, sub) {
        Some((high, low)) => {
            let i = i_dc.max(0.0);
            let mut i_rect = PhaseTriple::ZERO;
            i_rect[high] = i;
            i_rect[low] = -i;
            Port { i_rect, v_link: v_cap[high] - v_cap[low], conducting: true }
        }
        None => Port { i_rect: PhaseTriple::ZERO, v_link: 0.0, conducting: false },
    }
}

/// Time derivative of the state for fixed gates.
pub fn derivative(x: &SimState, gates: SwitchState, sub: Subsector, t: f64, cfg: &SimConfig) -> SimState {
    let c = &cfg.circuit;
    let v_grid = cfg.grid.voltages(t);
    let port = rectifier_port(gates, sub, x.i_dc, x.v_cap);
    let r = c.input_resistance();
    let di_filter = (v_grid - x.v_cap - x.i_filter * r) * (1.0 / c.l_in);
    let dv_cap = (x.i_filter - port.i_rect) * (1.0 / c.c_in);
    let blocked = x.i_dc <= 0.0 && port.v_link < x.v_out;
    let di_dc = if blocked { 0.0 } else { (port.v_link - x.v_out) / c.l_out };
    let dv_out = (x.i_dc.max(0.0) - cfg.load(x.v_out)) / c.c_out;
    SimState { i_filter: di_filter, v_cap: dv_cap, i_dc: di_dc, v_out: dv_out }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], t: f64, y: &[f64; N], h: f64) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], s: f64| core::array::from_fn::<f64, N, _>(|i| a[i] + s * k[i]);
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    core::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn step_state(x: &SimState, gates: SwitchState, sub: Subsector, t: f64, h: f64, cfg: &SimConfig) -> SimState {
    let f = |tt: f64, y: &[f64; 8]| derivative(&SimState::from_array(*y), gates, sub, tt, cfg).to_array();
    let mut next = SimState::from_array(rk4_step(f, t, &x.to_array(), h));
    next.i_dc = next.i_dc.max(0.0);
    next
}

/// Integrates `[t0, t1]` with the gates held fixed.
pub fn integrate_fixed(
    cfg: &SimConfig,
    start: SimState,
    gates: SwitchState,
    sub: Subsector,
    t0: f64,
    t1: f64,
    steps: usize,
) -> SimState {
    let h = (t1 - t0) / steps as f64;
    (0..steps).fold(start, |x, j| step_state(&x, gates, sub, t0 + j as f64 * h, h, cfg))
}

/// Quasi-steady starting point: capacitors at the grid voltage, grid
/// currents at the demanded rectifier current plus the capacitor current,
/// DC link at the load current and the power-balance output voltage.
pub fn initial_state(cfg: &SimConfig) -> Result<SimState, SimError> {
    let demand = cfg.demand()?;
    let theta = cfg.grid.angle(0.0);
    let vp = cfg.grid.phase_peak();
    let i_rect = balanced_cosines(theta - demand.angle_shift, demand.index * cfg.load_current);
    let i_cap = balanced_cosines(theta + FRAC_PI_2, cfg.grid.omega() * cfg.circuit.c_in * vp);
    Ok(SimState {
        i_filter: i_rect + i_cap,
        v_cap: cfg.grid.voltages(0.0),
        i_dc: cfg.load_current,
        v_out: cfg.expected_dc_voltage(),
    })
}

/// Uniformly sampled simulation history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sample_interval: f64,
    /// Samples per switching period.
    pub samples_per_period: usize,
    pub f_grid: f64,
    pub load_current: f64,
    pub t: Vec<f64>,
    pub state: Vec<SimState>,
    pub gates: Vec<SwitchState>,
    pub i_rect: Vec<PhaseTriple>,
    pub i_ref: Vec<PhaseTriple>,
    pub v_grid: Vec<PhaseTriple>,
    /// Modulator decisions, one per switching period.
    pub periods: Vec<PeriodPlan>,
}

/// CSV column order of [`Trace::row`].
pub const TRACE_COLUMNS: [&str; 18] = [
    "t", "v_grid_a", "v_grid_b", "v_grid_c", "i_ref_a", "i_ref_b", "i_ref_c", "gate_a", "gate_b", "gate_c",
    "i_rect_a", "i_rect_b", "i_rect_c", "i_src_a", "i_src_b", "i_src_c", "i_dc", "v_out",
];

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Samples per fundamental period, rounded.
    pub fn samples_per_fundamental(&self) -> usize {
        round(1.0 / (self.f_grid * self.sample_interval)) as usize
    }

    pub fn row(&self, i: usize) -> [f64; 18] {
        let (vg, ir, g, r, s) = (self.v_grid[i], self.i_ref[i], self.gates[i], self.i_rect[i], &self.state[i]);
        let gate = |p: Phase| if g.is_on(p) { 1.0 } else { 0.0 };
        [
            self.t[i],
            vg.a,
            vg.b,
            vg.c,
            ir.a,
            ir.b,
            ir.c,
            gate(Phase::A),
            gate(Phase::B),
            gate(Phase::C),
            r.a,
            r.b,
            r.c,
            s.i_filter.a,
            s.i_filter.b,
            s.i_filter.c,
            s.i_dc,
            s.v_out,
        ]
    }

    pub fn i_src(&self, p: Phase) -> Vec<f64> {
        self.state.iter().map(|s| s.i_filter[p]).collect()
    }

    pub fn i_rect(&self, p: Phase) -> Vec<f64> {
        self.i_rect.iter().map(|r| r[p]).collect()
    }

    pub fn i_ref(&self, p: Phase) -> Vec<f64> {
        self.i_ref.iter().map(|r| r[p]).collect()
    }

    pub fn i_dc(&self) -> Vec<f64> {
        self.state.iter().map(|s| s.i_dc).collect()
    }

    pub fn v_out(&self) -> Vec<f64> {
        self.state.iter().map(|s| s.v_out).collect()
    }
}

/// Runs the configured simulation.
pub fn run_simulation(cfg: &SimConfig) -> Result<Trace, SimError> {
    cfg.validate()?;
    let demand = cfg.demand()?;
    let ts = cfg.switching_period();
    let steps = cfg.steps_per_period;
    let h = cfg.step();
    let periods = cfg.switching_periods();
    let total_steps = periods * steps;
    let samples = total_steps.div_ceil(cfg.record_every);

    let i_limit = 10.0 * cfg.load_current;
    let v_limit = 10.0 * cfg.grid.v_line_line_peak;

    let mut trace = Trace {
        sample_interval: h * cfg.record_every as f64,
        samples_per_period: steps / cfg.record_every,
        f_grid: cfg.grid.f_grid,
        load_current: cfg.load_current,
        t: Vec::with_capacity(samples),
        state: Vec::with_capacity(samples),
        gates: Vec::with_capacity(samples),
        i_rect: Vec::with_capacity(samples),
        i_ref: Vec::with_capacity(samples),
        v_grid: Vec::with_capacity(samples),
        periods: Vec::with_capacity(periods),
    };

    let mut x = initial_state(cfg)?;
    for k in 0..periods {
        let t_k = k as f64 * ts;
        let theta = cfg.grid.angle(t_k) - demand.angle_shift;
        let plan = plan_period(cfg.scheme, theta, demand.index, cfg.load_current, ts)?;
        let sub = plan.location.subsector;
        let pieces = gate_pieces(&plan.timeline);
        for j in 0..steps {
            let n = k * steps + j;
            let t = n as f64 * h;
            let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
            if n.is_multiple_of(cfg.record_every) {
                let gates = plan.timeline.state_at(a);
                trace.t.push(t);
                trace.state.push(x);
                trace.gates.push(gates);
                trace.i_rect.push(rectifier_port(gates, sub, x.i_dc, x.v_cap).i_rect);
                trace.i_ref.push(cfg.reference(t));
                trace.v_grid.push(cfg.grid.voltages(t));
            }
            if cfg.exact_edges {
                for (gates, from, to) in pieces_within(&pieces, a, b) {
                    x = step_state(&x, gates, sub, t_k + from, to - from, cfg);
                }
            } else {
                let gates = plan.timeline.state_at(0.5 * (a + b));
                x = step_state(&x, gates, sub, t, h, cfg);
            }
            check_bounds(&x, t + h, i_limit, v_limit)?;
        }
        trace.periods.push(plan);
    }
    Ok(trace)
}

/// Start times and states of the non-empty segments.
fn gate_pieces(tl: &SwitchingTimeline) -> Vec<(f64, SwitchState)> {
    let mut start = 0.0;
    let mut out = Vec::with_capacity(tl.segments().len());
    for seg in tl.segments() {
        if seg.duration > 0.0 {
            out.push((start, seg.state));
        }
        start += seg.duration;
    }
    out
}

/// Constant-gate sub-intervals of `[a, b)`. Slivers shorter than a
/// millionth of the step are merged into their neighbour.
fn pieces_within(pieces: &[(f64, SwitchState)], a: f64, b: f64) -> impl Iterator<Item = (SwitchState, f64, f64)> + '_ {
    let min_len = 1e-6 * (b - a);
    let mut cuts: Vec<(f64, SwitchState)> = Vec::with_capacity(4);
    for (i, &(start, state)) in pieces.iter().enumerate() {
        let end = pieces.get(i + 1).map_or(f64::INFINITY, |p| p.0);
        if end <= a || start >= b {
            continue;
        }
        let from = start.max(a);
        match cuts.last_mut() {
            Some(last) if from - last.0 < min_len => last.1 = state,
            _ => cuts.push((from, state)),
        }
    }
    if cuts.is_empty() {
        cuts.push((a, pieces.last().map_or(SwitchState::S000, |p| p.1)));
    }
    cuts[0].0 = a;
    if cuts.len() > 1 && b - cuts[cuts.len() - 1].0 < min_len {
        cuts.pop();
    }
    let ends: Vec<f64> = cuts.iter().skip(1).map(|c| c.0).chain(core::iter::once(b)).collect();
    cuts.into_iter().zip(ends).map(|((from, state), to)| (state, from, to))
}

fn check_bounds(x: &SimState, time: f64, i_limit: f64, v_limit: f64) -> Result<(), SimError> {
    let checks = [
        ("i_filter", x.i_filter.peak(), i_limit),
        ("v_cap", x.v_cap.peak(), v_limit),
        ("i_dc", x.i_dc.abs(), i_limit),
        ("v_out", x.v_out.abs(), v_limit),
    ];
    for (quantity, value, limit) in checks {
        if !(value <= limit) {
            return Err(SimError::Unstable { time, quantity, value });
        }
    }
    Ok(())
}
