use thiserror::Error;

/// Failures of the modulation layer (reference generation, sector logic,
/// on-time and dwell-time computation).
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ModulationError {
    #[error("modulation index {0} outside [0, 1]")]
    Overmodulation(f64),
    #[error("dc-link current must be positive, got {0} A")]
    InvalidDcCurrent(f64),
    #[error("switching period must be positive, got {0} s")]
    InvalidPeriod(f64),
    #[error("all reference currents are zero, sector is indeterminate")]
    IndeterminateSector,
    #[error("sector-local angle {0} rad outside [-pi/6, pi/6)")]
    AngleOutOfRange(f64),
    #[error("references inconsistent with sector {sector}: computed dwell {dwell} s is negative")]
    SectorMismatch { sector: u8, dwell: f64 },
}
