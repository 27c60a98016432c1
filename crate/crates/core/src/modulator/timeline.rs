use alloc::vec::Vec;

use super::conduction_map;
use super::state::SwitchState;
use crate::phase::{Phase, PhaseTriple};
use crate::refgen::Subsector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub state: SwitchState,
    /// s
    pub duration: f64,
}

/// Ordered switch states covering one switching period.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingTimeline {
    segments: Vec<Segment>,
    period: f64,
}

/// Edge counts of one gate inside a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateEdges {
    pub rising: u32,
    pub falling: u32,
}

impl GateEdges {
    pub fn total(self) -> u32 {
        self.rising + self.falling
    }
}

impl SwitchingTimeline {
    pub fn new(segments: Vec<Segment>, period: f64) -> Self {
        SwitchingTimeline { segments, period }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn on_time(&self, p: Phase) -> f64 {
        self.segments.iter().filter(|s| s.state.is_on(p)).map(|s| s.duration).sum()
    }

    /// Gate of `p` held high over every non-empty segment.
    pub fn is_clamped(&self, p: Phase) -> bool {
        self.segments.iter().filter(|s| s.duration > 0.0).all(|s| s.state.is_on(p))
    }

    /// Transitions of one gate, ignoring zero-length segments.
    pub fn edges(&self, p: Phase) -> GateEdges {
        let mut edges = GateEdges::default();
        let mut prev: Option<bool> = None;
        for seg in self.segments.iter().filter(|s| s.duration > 0.0) {
            let on = seg.state.is_on(p);
            match prev {
                Some(false) if on => edges.rising += 1,
                Some(true) if !on => edges.falling += 1,
                _ => {}
            }
            prev = Some(on);
        }
        edges
    }

    /// Same state sequence read forwards and backwards.
    pub fn is_palindrome(&self) -> bool {
        let n = self.segments.len();
        (0..n / 2).all(|i| self.segments[i].state == self.segments[n - 1 - i].state)
    }

    /// State(s) at the centre of the sequence.
    pub fn centre_states(&self) -> &[Segment] {
        let n = self.segments.len();
        if n == 0 {
            &[]
        } else if n.is_multiple_of(2) {
            &self.segments[n / 2 - 1..n / 2 + 1]
        } else {
            &self.segments[n / 2..n / 2 + 1]
        }
    }

    /// State active at time `t` from the period start. Past the end the last
    /// segment is returned.
    pub fn state_at(&self, t: f64) -> SwitchState {
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += seg.duration;
            if t < acc {
                return seg.state;
            }
        }
        self.segments.last().map(|s| s.state).unwrap_or(SwitchState::S000)
    }

    /// Period-averaged rectifier phase currents for a constant DC-link current.
    pub fn average_current(&self, sub: Subsector, i_dc: f64) -> PhaseTriple {
        self.average_current_with(sub, i_dc, |s, sub, i| conduction_map(s, sub, i).currents)
    }

    /// As [`average_current`](Self::average_current) with an arbitrary
    /// conduction model.
    pub fn average_current_with(
        &self,
        sub: Subsector,
        i_dc: f64,
        map: impl Fn(SwitchState, Subsector, f64) -> PhaseTriple,
    ) -> PhaseTriple {
        let sum = self
            .segments
            .iter()
            .fold(PhaseTriple::ZERO, |acc, seg| acc + map(seg.state, sub, i_dc) * seg.duration);
        sum * (1.0 / self.period)
    }

    /// Rising and falling edge instants of `p`, seconds from period start.
    pub fn edge_times(&self, p: Phase) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = 0.0;
        let mut prev: Option<bool> = None;
        for seg in self.segments.iter().filter(|s| s.duration > 0.0) {
            let on = seg.state.is_on(p);
            if prev.is_some_and(|was| was != on) {
                out.push(t);
            }
            prev = Some(on);
            t += seg.duration;
        }
        out
    }
}
