//! Modulation engine and switched-circuit simulator for the three-phase
//! three-switch (TPTS) buck-type rectifier.
//!
//! Two symmetric carrier-based switching patterns and a space-vector
//! baseline share one sequence/conduction model. [`simulator`] drives the
//! rectifier circuit with the resulting timelines and [`analysis`] extracts
//! waveform metrics. The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod modulator;
pub mod phase;
pub mod refgen;
pub mod simulator;

pub use error::ModulationError;
pub use modulator::{Pattern, Scheme, SwitchState, SwitchingTimeline};
pub use phase::{Phase, PhaseTriple};
pub use refgen::{GridConfig, SectorLocation, Subsector};
pub use simulator::{run_simulation, CircuitParams, SimConfig, SimError, Trace};

