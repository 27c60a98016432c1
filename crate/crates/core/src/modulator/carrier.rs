use alloc::vec::Vec;

use super::state::SwitchState;
use super::timeline::{Segment, SwitchingTimeline};
use super::OnTimes;
use crate::phase::Phase;

/// Symmetric triangular carrier, one down-up cycle per period and centred
/// on the period midpoint, sampled at `resolution` ticks. A gate is high
/// while `peak · carrier < compare`, so every on-interval is centred in the
/// period and each gate has at most one rising and one falling edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarrierComparator {
    resolution: usize,
}

impl CarrierComparator {
    pub const MIN_RESOLUTION: usize = 100;

    pub fn new(resolution: usize) -> Option<CarrierComparator> {
        (resolution >= Self::MIN_RESOLUTION).then_some(CarrierComparator { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Normalised carrier at tick `k`: 1 at the period edges, 0 at the centre.
    pub fn carrier(&self, k: usize) -> f64 {
        let x = (2 * k + 1) as f64 / self.resolution as f64;
        (x - 1.0).abs()
    }

    /// Compares each phase's compare value against `peak · carrier`.
    ///
    /// The carrier falls to the centre and rises back, so every gate's
    /// on-ticks form one run centred in the period and the tick counts fix
    /// the whole sequence. Layers are emitted from the outside in, including
    /// empty ones, so state 111 always sits at the centre.
    pub fn realize(&self, compare: [f64; 3], peak: f64, period: f64) -> SwitchingTimeline {
        let n = self.resolution;
        let tick = period / n as f64;
        let ticks = |p: Phase| (0..n).filter(|&k| peak * self.carrier(k) < compare[p.index()]).count();
        let mut widest = Phase::ALL.map(|p| (p, ticks(p)));
        widest.sort_by_key(|x| core::cmp::Reverse(x.1));
        let [(p1, c1), (p2, c2), (_, c3)] = widest;

        let layers = [
            (SwitchState::S000, n - c1),
            (SwitchState::S000.with(p1), c1 - c2),
            (SwitchState::S000.with(p1).with(p2), c2 - c3),
            (SwitchState::S111, c3),
        ];
        let half = |(state, w): (SwitchState, usize)| Segment { state, duration: 0.5 * w as f64 * tick };
        let mut segments: Vec<Segment> = layers.into_iter().map(half).collect();
        segments.extend(layers.into_iter().rev().map(half));
        SwitchingTimeline::new(segments, period)
    }
}

/// Gate timeline produced by comparing the on-time duties with the carrier.
/// Panics if `resolution` is below [`CarrierComparator::MIN_RESOLUTION`].
pub fn gate_edges_carrier(on: &OnTimes, resolution: usize) -> SwitchingTimeline {
    let cmp = CarrierComparator::new(resolution).expect("carrier resolution below 100 ticks");
    cmp.realize([on.a, on.b, on.c], on.period, on.period)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on(a: f64, b: f64, c: f64) -> OnTimes {
        OnTimes { a, b, c, period: 1.0, clamped_phase: None }
    }

    #[test]
    fn full_duty_never_switches() {
        let tl = gate_edges_carrier(&on(1.0, 0.3, 0.0), 1000);
        assert!(tl.is_clamped(Phase::A));
        assert_eq!(tl.edges(Phase::A).total(), 0);
        assert_eq!(tl.on_time(Phase::C), 0.0);
        assert_eq!(tl.edges(Phase::C).total(), 0);
        assert!(tl.is_palindrome());
    }

    #[test]
    fn on_interval_is_centred() {
        let tl = gate_edges_carrier(&on(0.5, 0.25, 1.0), 1000);
        let e = tl.edge_times(Phase::A);
        assert_eq!(e.len(), 2);
        assert!((e[0] - 0.25).abs() <= 1e-3 && (e[1] - 0.75).abs() <= 1e-3);
        assert!((tl.total_duration() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolution_floor() {
        assert!(CarrierComparator::new(99).is_none());
        assert_eq!(CarrierComparator::new(100).map(|c| c.resolution()), Some(100));
    }
}
