//! Post-processing of traces and modulator timelines.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use libm::{atan2, cos, round, sin, sqrt};
use thiserror::Error;

use crate::modulator::{OpCounters, PeriodPlan, Scheme, SwitchingTimeline};
use crate::phase::Phase;
use crate::simulator::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalysisError {
    #[error("window covers {cycles} fundamental periods; a whole number of at least one is required")]
    Window { cycles: f64 },
    #[error("fundamental amplitude is zero, THD undefined")]
    UndefinedThd,
    #[error("at least two harmonics are required, got {0}")]
    TooFewHarmonics(usize),
    #[error("series is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub frequency: f64,
    pub amplitude: f64,
    /// Phase of the cosine component relative to the window start, rad.
    pub phase: f64,
}

impl SpectrumPoint {
    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * cos(TAU * self.frequency * t + self.phase)
    }
}

const WINDOW_TOL: f64 = 1e-6;

fn check_window(n: usize, dt: f64, f1: f64) -> Result<(), AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::Empty);
    }
    let cycles = n as f64 * dt * f1;
    if cycles < 1.0 - WINDOW_TOL || (cycles - round(cycles)).abs() > WINDOW_TOL {
        return Err(AnalysisError::Window { cycles });
    }
    Ok(())
}

/// Single-bin projection onto `f` without a window check.
pub fn harmonic(samples: &[f64], dt: f64, f: f64) -> SpectrumPoint {
    let w = TAU * f * dt;
    project(samples, f, |k| {
        let a = w * k as f64;
        (cos(a), sin(a))
    })
}

fn project(samples: &[f64], f: f64, phasor: impl Fn(usize) -> (f64, f64)) -> SpectrumPoint {
    let (re, im) = samples.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &x)| {
        let (c, s) = phasor(k);
        (re + x * c, im - x * s)
    });
    let scale = 2.0 / samples.len() as f64;
    let (re, im) = (re * scale, im * scale);
    SpectrumPoint { frequency: f, amplitude: sqrt(re * re + im * im), phase: atan2(im, re) }
}

/// Projections onto multiples of `f1`. When a fundamental period holds a
/// whole number of samples the unit phasors are tabulated once.
struct HarmonicBasis {
    dt: f64,
    f1: f64,
    table: Option<Vec<(f64, f64)>>,
}

impl HarmonicBasis {
    fn new(dt: f64, f1: f64) -> Self {
        let per_cycle = 1.0 / (f1 * dt);
        let n = round(per_cycle);
        let table = ((per_cycle - n).abs() <= 1e-9 * per_cycle && n >= 1.0).then(|| {
            let n = n as usize;
            (0..n).map(|k| TAU * k as f64 / n as f64).map(|a| (cos(a), sin(a))).collect()
        });
        HarmonicBasis { dt, f1, table }
    }

    fn order(&self, samples: &[f64], h: usize) -> SpectrumPoint {
        let f = h as f64 * self.f1;
        match &self.table {
            Some(t) => {
                let n = t.len();
                project(samples, f, |k| t[(h * (k % n)) % n])
            }
            None => harmonic(samples, self.dt, f),
        }
    }
}

fn power(s: SpectrumPoint) -> f64 {
    s.amplitude * s.amplitude
}

/// Amplitude and phase of the `f1` component over a whole number of periods.
pub fn fundamental(samples: &[f64], dt: f64, f1: f64) -> Result<SpectrumPoint, AnalysisError> {
    check_window(samples.len(), dt, f1)?;
    Ok(harmonic(samples, dt, f1))
}

/// Harmonic distortion over orders `2..=n_harmonics` relative to the fundamental.
pub fn thd(samples: &[f64], dt: f64, f1: f64, n_harmonics: usize) -> Result<f64, AnalysisError> {
    let d = distortion(samples, dt, f1, n_harmonics)?;
    Ok(d.thd)
}

/// Everything outside DC and the first `n_harmonics` orders, relative to the
/// fundamental. Captures switching ripple and its sidebands.
pub fn high_frequency_distortion(samples: &[f64], dt: f64, f1: f64, n_harmonics: usize) -> Result<f64, AnalysisError> {
    let d = distortion(samples, dt, f1, n_harmonics)?;
    Ok(d.high_frequency)
}

struct Distortion {
    fundamental: SpectrumPoint,
    thd: f64,
    high_frequency: f64,
}

fn distortion(samples: &[f64], dt: f64, f1: f64, n_harmonics: usize) -> Result<Distortion, AnalysisError> {
    if n_harmonics < 2 {
        return Err(AnalysisError::TooFewHarmonics(n_harmonics));
    }
    let fund = fundamental(samples, dt, f1)?;
    if !(fund.amplitude > 0.0) {
        return Err(AnalysisError::UndefinedThd);
    }
    let basis = HarmonicBasis::new(dt, f1);
    let harmonics: f64 = (2..=n_harmonics).map(|h| power(basis.order(samples, h))).sum();

    let n = samples.len() as f64;
    let avg = samples.iter().sum::<f64>() / n;
    let ac_power = 2.0 * samples.iter().map(|x| (x - avg) * (x - avg)).sum::<f64>() / n;
    let rest = (ac_power - power(fund) - harmonics).max(0.0);
    Ok(Distortion {
        fundamental: fund,
        thd: sqrt(harmonics) / fund.amplitude,
        high_frequency: sqrt(rest) / fund.amplitude,
    })
}

/// Mean over consecutive windows of `period`. A trailing partial window is dropped.
pub fn per_period_average(samples: &[f64], dt: f64, period: f64) -> Vec<f64> {
    let n = round(period / dt) as usize;
    if n == 0 {
        return Vec::new();
    }
    samples.chunks_exact(n).map(|c| c.iter().sum::<f64>() / n as f64).collect()
}

pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

pub fn rms(samples: &[f64]) -> f64 {
    sqrt(mean(&samples.iter().map(|x| x * x).collect::<Vec<_>>()))
}

/// Clamping and switching activity over a run of switching periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampStats {
    /// Share of periods in which each gate stays on throughout.
    pub clamp_fraction: [f64; 3],
    /// Largest number of gate edges seen in any one period.
    pub max_transitions: [u32; 3],
    /// Mean gate edges per period.
    pub mean_transitions: [f64; 3],
    /// Number of contiguous clamped runs, wrapping around the end.
    pub clamp_arcs: [usize; 3],
}

pub fn clamp_and_transition_stats<'a>(timelines: impl IntoIterator<Item = &'a SwitchingTimeline>) -> ClampStats {
    let timelines: Vec<&SwitchingTimeline> = timelines.into_iter().collect();
    let n = timelines.len();
    let mut stats = ClampStats {
        clamp_fraction: [0.0; 3],
        max_transitions: [0; 3],
        mean_transitions: [0.0; 3],
        clamp_arcs: [0; 3],
    };
    if n == 0 {
        return stats;
    }
    for p in Phase::ALL {
        let i = p.index();
        let clamped: Vec<bool> = timelines.iter().map(|tl| tl.is_clamped(p)).collect();
        let edges: Vec<u32> = timelines.iter().map(|tl| tl.edges(p).total()).collect();
        stats.clamp_fraction[i] = clamped.iter().filter(|&&c| c).count() as f64 / n as f64;
        stats.max_transitions[i] = edges.iter().copied().max().unwrap_or(0);
        stats.mean_transitions[i] = edges.iter().sum::<u32>() as f64 / n as f64;
        stats.clamp_arcs[i] = (0..n).filter(|&k| clamped[k] && !clamped[(k + n - 1) % n]).count();
        if stats.clamp_arcs[i] == 0 && clamped[0] {
            stats.clamp_arcs[i] = 1;
        }
    }
    stats
}

/// Worst per-period deviation, in amperes, of timeline-averaged currents
/// from the sampled references.
pub fn balance_error(plans: &[PeriodPlan], i_dc: f64) -> f64 {
    plans.iter().map(|p| p.average_current(i_dc).max_abs_diff(p.refs)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceRow {
    pub scheme: Scheme,
    pub counters: OpCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub rows: Vec<ResourceRow>,
}

impl ResourceReport {
    pub fn get(&self, scheme: Scheme) -> Option<&OpCounters> {
        self.rows.iter().find(|r| r.scheme == scheme).map(|r| &r.counters)
    }

    /// Carrier schemes use no trigonometry and no tables.
    pub fn carrier_schemes_table_free(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.scheme.is_carrier())
            .all(|r| r.counters.trig_evals == 0 && r.counters.table_lookups == 0)
    }
}

pub fn resource_report(counters: impl IntoIterator<Item = (Scheme, OpCounters)>) -> ResourceReport {
    ResourceReport { rows: counters.into_iter().map(|(scheme, counters)| ResourceRow { scheme, counters }).collect() }
}

/// Spectral figures of one current channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub fundamental: SpectrumPoint,
    pub thd: f64,
    pub hf_distortion: f64,
}

/// Steady-state metrics of a simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub window_start: f64,
    pub window_cycles: usize,
    pub reference: [SpectrumPoint; 3],
    pub source: [ChannelMetrics; 3],
    pub rectifier: [ChannelMetrics; 3],
    /// Source fundamental phase minus reference phase, wrapped, rad.
    pub phase_error: [f64; 3],
    pub tracking_error_rms: f64,
    pub mean_i_dc: f64,
    pub i_dc_ripple: f64,
    pub mean_v_out: f64,
    pub clamp: ClampStats,
    pub op_counters: Vec<ResourceRow>,
}

impl MetricsReport {
    pub fn thd(&self) -> [f64; 3] {
        self.source.map(|c| c.thd)
    }

    pub fn clamp_fraction(&self) -> [f64; 3] {
        self.clamp.clamp_fraction
    }

    pub fn transitions_per_period(&self) -> [u32; 3] {
        self.clamp.max_transitions
    }
}

/// Default harmonic horizon.
pub const DEFAULT_HARMONICS: usize = 50;

fn channel(samples: &[f64], dt: f64, f1: f64, n_harmonics: usize) -> Result<ChannelMetrics, AnalysisError> {
    match distortion(samples, dt, f1, n_harmonics) {
        Ok(d) => Ok(ChannelMetrics { fundamental: d.fundamental, thd: d.thd, hf_distortion: d.high_frequency }),
        Err(AnalysisError::UndefinedThd) => {
            Ok(ChannelMetrics { fundamental: fundamental(samples, dt, f1)?, thd: 0.0, hf_distortion: 0.0 })
        }
        Err(e) => Err(e),
    }
}

fn wrap_pi(x: f64) -> f64 {
    let y = x - TAU * round(x / TAU);
    if y <= -core::f64::consts::PI {
        y + TAU
    } else {
        y
    }
}

/// Analyses the trace over whole fundamental periods after discarding the
/// first `skip_cycles`.
pub fn analyze_trace(trace: &Trace, skip_cycles: usize, n_harmonics: usize) -> Result<MetricsReport, AnalysisError> {
    let per_cycle = trace.samples_per_fundamental();
    let dt = trace.sample_interval;
    let f1 = trace.f_grid;
    if per_cycle == 0 || trace.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let total_cycles = trace.len() / per_cycle;
    if total_cycles <= skip_cycles {
        return Err(AnalysisError::Window { cycles: trace.len() as f64 * dt * f1 - skip_cycles as f64 });
    }
    let cycles = total_cycles - skip_cycles;
    let window = skip_cycles * per_cycle..total_cycles * per_cycle;

    let slice = |v: Vec<f64>| v[window.clone()].to_vec();
    let mut source = [None; 3];
    let mut rectifier = [None; 3];
    let mut reference = [None; 3];
    let mut phase_error = [0.0; 3];
    let mut err_sq = 0.0;
    for p in Phase::ALL {
        let i = p.index();
        let src = slice(trace.i_src(p));
        let rect = slice(trace.i_rect(p));
        let r = slice(trace.i_ref(p));
        let s = channel(&src, dt, f1, n_harmonics)?;
        let rf = fundamental(&r, dt, f1)?;
        phase_error[i] = if rf.amplitude > 0.0 { wrap_pi(s.fundamental.phase - rf.phase) } else { 0.0 };
        err_sq += src.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        source[i] = Some(s);
        rectifier[i] = Some(channel(&rect, dt, f1, n_harmonics)?);
        reference[i] = Some(rf);
    }
    let n = window.len() as f64;
    let i_dc = slice(trace.i_dc());
    let mean_i_dc = mean(&i_dc);
    let (lo, hi) = i_dc.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));

    let per_period = trace.samples_per_period.max(1);
    let first_period = window.start / per_period;
    let last_period = window.end / per_period;
    let clamp = clamp_and_transition_stats(
        trace.periods[first_period..last_period.min(trace.periods.len())].iter().map(|p| &p.timeline),
    );

    Ok(MetricsReport {
        window_start: trace.t[window.start],
        window_cycles: cycles,
        reference: reference.map(Option::unwrap),
        source: source.map(Option::unwrap),
        rectifier: rectifier.map(Option::unwrap),
        phase_error,
        tracking_error_rms: sqrt(err_sq / (3.0 * n)),
        mean_i_dc,
        i_dc_ripple: if mean_i_dc > 0.0 { (hi - lo) / mean_i_dc } else { 0.0 },
        mean_v_out: mean(&slice(trace.v_out())),
        clamp,
        op_counters: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulator::plan_fundamental;

    const F1: f64 = 50.0;
    const DT: f64 = 1.0 / (F1 * 1000.0);

    fn tone(f: impl Fn(f64) -> f64, cycles: usize) -> Vec<f64> {
        (0..cycles * 1000).map(|k| f(k as f64 * DT)).collect()
    }

    #[test]
    fn pure_tone() {
        let x = tone(|t| 2.5 * cos(TAU * F1 * t), 2);
        let s = fundamental(&x, DT, F1).unwrap();
        assert!((s.amplitude - 2.5).abs() < 1e-12);
        assert!(s.phase.abs() < 1e-12);
        assert!(thd(&x, DT, F1, 50).unwrap() < 1e-12);
    }

    #[test]
    fn orthogonal_harmonic() {
        let x = tone(|t| 2.5 * cos(TAU * F1 * t) + 0.1 * cos(5.0 * TAU * F1 * t), 1);
        assert!((fundamental(&x, DT, F1).unwrap().amplitude - 2.5).abs() < 1e-12);
        assert!((thd(&x, DT, F1, 50).unwrap() - 0.04).abs() < 1e-12);
    }

    #[test]
    fn window_errors() {
        let x = tone(|t| cos(TAU * F1 * t), 1);
        assert!(matches!(fundamental(&x[..750], DT, F1), Err(AnalysisError::Window { .. })));
        assert!(matches!(thd(&[0.0; 1000], DT, F1, 50), Err(AnalysisError::UndefinedThd)));
        assert!(matches!(thd(&x, DT, F1, 1), Err(AnalysisError::TooFewHarmonics(1))));
    }

    #[test]
    fn averages() {
        assert_eq!(per_period_average(&[5.0; 40], 1.0, 10.0), alloc::vec![5.0; 4]);
        let ripple: Vec<f64> = (0..40).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(per_period_average(&ripple, 1.0, 10.0), alloc::vec![0.0; 4]);
    }

    #[test]
    fn pattern_clamp_fractions() {
        let plans = plan_fundamental(Scheme::PatternI, 0.5, 5.0, 18_000.0, 50.0, 0.0).unwrap();
        let s = clamp_and_transition_stats(plans.iter().map(|p| &p.timeline));
        for i in 0..3 {
            assert!((s.clamp_fraction[i] - 1.0 / 3.0).abs() <= 1.0 / 360.0, "{s:?}");
            assert_eq!(s.clamp_arcs[i], 2);
            assert!(s.max_transitions[i] <= 2);
        }
        let plans = plan_fundamental(Scheme::PatternII, 0.5, 5.0, 18_000.0, 50.0, 0.0).unwrap();
        let s = clamp_and_transition_stats(plans.iter().map(|p| &p.timeline));
        assert_eq!(s.clamp_fraction, [0.0; 3]);
    }
}
