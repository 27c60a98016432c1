//! Reference generation and operating-point classification.
//!
//! Angle convention: θ = 0 where the phase-A reference peaks. Sector 1 spans
//! θ ∈ [−30°, 30°) and is split into half `a` = [−30°, 0°) and half `b` =
//! [0°, 30°). Every boundary belongs to the sector/half that follows it, so
//! exact ties are resolved as the limit approached from increasing θ.

use core::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI, TAU};
use core::fmt;

use libm::{atan2, cos, floor, sqrt};

use crate::error::ModulationError;
use crate::phase::{Phase, PhaseTriple};

const TWO_PI_3: f64 = 2.0 * FRAC_PI_3;

/// Grid voltage source description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Peak line-to-line voltage, V.
    pub v_line_line_peak: f64,
    /// Fundamental frequency, Hz.
    pub f_grid: f64,
    /// Angle of phase A at t = 0, rad.
    pub phase_offset: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { v_line_line_peak: 245.0, f_grid: 50.0, phase_offset: 0.0 }
    }
}

impl GridConfig {
    pub fn is_valid(&self) -> bool {
        self.v_line_line_peak > 0.0
            && self.f_grid > 0.0
            && self.v_line_line_peak.is_finite()
            && self.f_grid.is_finite()
            && self.phase_offset.is_finite()
    }

    /// Peak phase-to-neutral voltage.
    pub fn phase_peak(&self) -> f64 {
        self.v_line_line_peak / sqrt(3.0)
    }

    pub fn omega(&self) -> f64 {
        TAU * self.f_grid
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.omega() * t + self.phase_offset
    }

    pub fn voltages(&self, t: f64) -> PhaseTriple {
        balanced_cosines(self.angle(t), self.phase_peak())
    }
}

/// `amplitude · (cos θ, cos(θ − 2π/3), cos(θ + 2π/3))`.
pub fn balanced_cosines(theta: f64, amplitude: f64) -> PhaseTriple {
    PhaseTriple::new(
        amplitude * cos(theta),
        amplitude * cos(theta - TWO_PI_3),
        amplitude * cos(theta + TWO_PI_3),
    )
}

/// Balanced unity-power-factor reference currents with peak `m · i_dc`.
pub fn reference_currents(theta: f64, m: f64, i_dc: f64) -> Result<PhaseTriple, ModulationError> {
    check_index(m)?;
    check_dc(i_dc)?;
    Ok(balanced_cosines(theta, m * i_dc))
}

pub(crate) fn check_index(m: f64) -> Result<(), ModulationError> {
    if (0.0..=1.0).contains(&m) {
        Ok(())
    } else {
        Err(ModulationError::Overmodulation(m))
    }
}

pub(crate) fn check_dc(i_dc: f64) -> Result<(), ModulationError> {
    if i_dc > 0.0 && i_dc.is_finite() {
        Ok(())
    } else {
        Err(ModulationError::InvalidDcCurrent(i_dc))
    }
}

/// Absolute-amplitude ranking of the three references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsOrdering {
    pub max_phase: Phase,
    pub mid_phase: Phase,
    pub min_phase: Phase,
    pub max_val: f64,
    pub mid_val: f64,
    pub min_val: f64,
}

/// Magnitudes closer than this fraction of the largest one count as equal,
/// so rounding noise in the references cannot decide a boundary.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Ranks `|refs|` into max/mid/min.
///
/// Ties follow the boundary rule of this module: on a max/mid tie (a sector
/// boundary, one phase crossing zero) the cyclic predecessor wins; on a
/// mid/min tie (a subsector boundary) the successor of the max phase is the
/// minimum. With all three equal (only the all-zero triple) the result is
/// max = A, mid = C, min = B.
pub fn classify_abs(refs: PhaseTriple) -> AbsOrdering {
    let mag = refs.map(f64::abs);
    let tol = TIE_TOLERANCE * mag.peak();
    let above = |x: f64, y: f64| x > y + tol;
    let tied = |x: f64, y: f64| (x - y).abs() <= tol;

    let mut max_phase = Phase::A;
    for p in [Phase::B, Phase::C] {
        let (v, best) = (mag[p], mag[max_phase]);
        // p is visited after max_phase, so on a tie p wins only when it is
        // the cyclic predecessor of the current best.
        if above(v, best) || (tied(v, best) && p == max_phase.prev()) {
            max_phase = p;
        }
    }
    if tied(mag.a, mag.b) && tied(mag.b, mag.c) {
        max_phase = Phase::A;
    }

    let succ = max_phase.next();
    let pred = max_phase.prev();
    let (mid_phase, min_phase) = if above(mag[succ], mag[pred]) { (succ, pred) } else { (pred, succ) };

    AbsOrdering {
        max_phase,
        mid_phase,
        min_phase,
        max_val: mag[max_phase],
        mid_val: mag[mid_phase],
        min_val: mag[min_phase],
    }
}

/// Which 30° half of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Half {
    /// Leading half, θ_local ∈ [−30°, 0°).
    A,
    /// Trailing half, θ_local ∈ [0°, 30°).
    B,
}

/// Sector (1–6) and half, i.e. one of the twelve 30° subsectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subsector {
    sector: u8,
    half: Half,
}

impl Subsector {
    pub const fn new(sector: u8, half: Half) -> Option<Subsector> {
        if sector >= 1 && sector <= 6 {
            Some(Subsector { sector, half })
        } else {
            None
        }
    }

    /// Subsectors in order of increasing θ, starting at 1a.
    pub fn all() -> impl Iterator<Item = Subsector> {
        (0..12).map(Subsector::from_index)
    }

    /// 0 for 1a, 1 for 1b, ..., 11 for 6b.
    pub const fn index(self) -> usize {
        (self.sector as usize - 1) * 2 + matches!(self.half, Half::B) as usize
    }

    pub const fn from_index(i: usize) -> Subsector {
        let i = i % 12;
        Subsector {
            sector: (i / 2) as u8 + 1,
            half: if i.is_multiple_of(2) { Half::A } else { Half::B },
        }
    }

    pub const fn sector(self) -> u8 {
        self.sector
    }

    pub const fn half(self) -> Half {
        self.half
    }

    /// Phase with the largest |reference| throughout the sector.
    pub const fn extremum(self) -> Phase {
        match self.sector {
            1 | 4 => Phase::A,
            2 | 5 => Phase::C,
            _ => Phase::B,
        }
    }

    /// Sign of the extremal phase: positive in odd sectors.
    pub const fn extremum_positive(self) -> bool {
        self.sector % 2 == 1
    }

    /// Phase whose |current| sets the T1 dwell (the extremum's successor).
    pub const fn t1_phase(self) -> Phase {
        self.extremum().next()
    }

    /// Phase whose |current| sets the T2 dwell (the extremum's predecessor).
    pub const fn t2_phase(self) -> Phase {
        self.extremum().prev()
    }

    pub const fn min_abs_phase(self) -> Phase {
        match self.half {
            Half::A => self.t2_phase(),
            Half::B => self.t1_phase(),
        }
    }

    pub const fn mid_abs_phase(self) -> Phase {
        match self.half {
            Half::A => self.t1_phase(),
            Half::B => self.t2_phase(),
        }
    }

    /// Phases sorted by signed reference value, highest first. With the
    /// references in phase with the grid voltages this is also the order
    /// of the phase voltages.
    pub const fn signed_order(self) -> [Phase; 3] {
        let (x, mid, min) = (self.extremum(), self.mid_abs_phase(), self.min_abs_phase());
        if self.extremum_positive() {
            [x, min, mid]
        } else {
            [mid, min, x]
        }
    }

    /// Start of the subsector in grid angle, rad, in [−π/6, 11π/6).
    pub fn start_angle(self) -> f64 {
        -FRAC_PI_6 + self.index() as f64 * FRAC_PI_6
    }
}

impl fmt::Display for Subsector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match self.half {
            Half::A => 'a',
            Half::B => 'b',
        };
        write!(f, "{}{}", self.sector, h)
    }
}

/// Subsector plus the angle measured from the sector centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorLocation {
    pub subsector: Subsector,
    /// rad, in [−π/6, π/6); negative exactly in half `a`.
    pub theta_local: f64,
}

impl From<SectorLocation> for Subsector {
    fn from(loc: SectorLocation) -> Subsector {
        loc.subsector
    }
}

/// Locates a reference triple. The subsector comes from comparisons only;
/// `theta_local` is recovered from the Clarke components.
pub fn locate_sector(refs: PhaseTriple) -> Result<SectorLocation, ModulationError> {
    let ord = classify_abs(refs);
    if !(ord.max_val > 0.0) {
        return Err(ModulationError::IndeterminateSector);
    }
    let positive = refs[ord.max_phase] > 0.0;
    let sector = match (ord.max_phase, positive) {
        (Phase::A, true) => 1,
        (Phase::C, false) => 2,
        (Phase::B, true) => 3,
        (Phase::A, false) => 4,
        (Phase::C, true) => 5,
        (Phase::B, false) => 6,
    };
    let probe = Subsector { sector, half: Half::A };
    let half = if ord.min_phase == probe.t1_phase() { Half::B } else { Half::A };
    let subsector = Subsector { sector, half };

    let alpha = (2.0 * refs.a - refs.b - refs.c) / 3.0;
    let beta = (refs.b - refs.c) / sqrt(3.0);
    let theta = atan2(beta, alpha);
    let centre = (sector as f64 - 1.0) * FRAC_PI_3;
    let theta_local = clamp_local(wrap_pi(theta - centre), half);
    Ok(SectorLocation { subsector, theta_local })
}

/// Locates a grid angle directly.
pub fn locate_angle(theta: f64) -> SectorLocation {
    let x = wrap_2pi(theta + FRAC_PI_6);
    let k = (floor(x / FRAC_PI_3) as usize).min(5);
    let local = x - k as f64 * FRAC_PI_3 - FRAC_PI_6;
    let half = if local < 0.0 { Half::A } else { Half::B };
    SectorLocation {
        subsector: Subsector { sector: k as u8 + 1, half },
        theta_local: clamp_local(local, half),
    }
}

/// Wraps into [−π, π).
pub fn wrap_pi(x: f64) -> f64 {
    x - TAU * floor((x + PI) / TAU)
}

/// Wraps into [0, 2π).
pub fn wrap_2pi(x: f64) -> f64 {
    let w = x - TAU * floor(x / TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn clamp_local(x: f64, half: Half) -> f64 {
    match half {
        Half::A => x.clamp(-FRAC_PI_6, 0.0f64.next_down()),
        Half::B => x.clamp(0.0, FRAC_PI_6.next_down()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    const DEG: f64 = PI / 180.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn reference_examples() {
        let r = reference_currents(0.0, 0.5, 5.0).unwrap();
        assert!(close(r.a, 2.5, 1e-15) && close(r.b, -1.25, 1e-14) && close(r.c, -1.25, 1e-14));

        let z = reference_currents(1.234, 0.0, 5.0).unwrap();
        assert_eq!(z.peak(), 0.0);

        // 2.5·cos(−15°), 2.5·cos(−135°), 2.5·cos(105°)
        let r = reference_currents(-15.0 * DEG, 0.5, 5.0).unwrap();
        assert!(close(r.a, 2.414_814_565_722_671, 1e-12));
        assert!(close(r.b, -1.767_766_952_966_368_8, 1e-12));
        assert!(close(r.c, -0.647_047_612_756_302_2, 1e-12));
    }

    #[test]
    fn reference_errors() {
        assert_eq!(reference_currents(0.0, 1.5, 5.0), Err(ModulationError::Overmodulation(1.5)));
        assert_eq!(reference_currents(0.0, -0.1, 5.0), Err(ModulationError::Overmodulation(-0.1)));
        assert!(matches!(reference_currents(0.0, 0.5, 0.0), Err(ModulationError::InvalidDcCurrent(_))));
        assert!(reference_currents(0.0, f64::NAN, 5.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let o = classify_abs(PhaseTriple::new(2.414_81, -1.767_77, -0.647_05));
        assert_eq!((o.max_phase, o.mid_phase, o.min_phase), (Phase::A, Phase::B, Phase::C));

        // mid/min tie at θ = 0: successor of A (B) is the minimum
        let o = classify_abs(PhaseTriple::new(2.5, -1.25, -1.25));
        assert_eq!((o.max_phase, o.mid_phase, o.min_phase), (Phase::A, Phase::C, Phase::B));
        assert_eq!((o.max_val, o.mid_val, o.min_val), (2.5, 1.25, 1.25));

        let o = classify_abs(PhaseTriple::new(-1.25, 2.5, -1.25));
        assert_eq!((o.max_phase, o.mid_phase, o.min_phase), (Phase::B, Phase::A, Phase::C));
    }

    #[test]
    fn classify_max_tie_goes_to_next_sector() {
        // θ = 30°: A = −C, B = 0; sector 2 (C extremum) owns the boundary
        let o = classify_abs(PhaseTriple::new(1.0, 0.0, -1.0));
        assert_eq!(o.max_phase, Phase::C);
        assert_eq!(locate_sector(PhaseTriple::new(1.0, 0.0, -1.0)).unwrap().subsector.to_string(), "2a");
    }

    #[test]
    fn locate_examples() {
        let l = locate_sector(PhaseTriple::new(2.414_81, -1.767_77, -0.647_05)).unwrap();
        assert_eq!(l.subsector.to_string(), "1a");
        assert!(close(l.theta_local, -15.0 * DEG, 1e-5));

        let l = locate_sector(PhaseTriple::new(2.414_81, -0.647_05, -1.767_77)).unwrap();
        assert_eq!(l.subsector.to_string(), "1b");
        assert!(close(l.theta_local, 15.0 * DEG, 1e-5));

        let l = locate_sector(PhaseTriple::new(2.5, -1.25, -1.25)).unwrap();
        assert_eq!(l.subsector.to_string(), "1b");
        assert_eq!(l.theta_local, 0.0);

        assert_eq!(locate_sector(PhaseTriple::ZERO), Err(ModulationError::IndeterminateSector));
    }

    #[test]
    fn angle_and_reference_location_agree_inside_subsectors() {
        for sub in Subsector::all() {
            for frac in [0.05, 0.3, 0.5, 0.7, 0.95] {
                let theta = sub.start_angle() + frac * FRAC_PI_6;
                let refs = reference_currents(theta, 0.8, 5.0).unwrap();
                let by_refs = locate_sector(refs).unwrap();
                let by_angle = locate_angle(theta);
                assert_eq!(by_refs.subsector, sub);
                assert_eq!(by_angle.subsector, sub);
                assert!(close(by_refs.theta_local, by_angle.theta_local, 1e-12));
            }
        }
    }

    #[test]
    fn subsector_tables_match_sector_one() {
        let a = Subsector::new(1, Half::A).unwrap();
        assert_eq!(a.min_abs_phase(), Phase::C);
        assert_eq!(a.signed_order(), [Phase::A, Phase::C, Phase::B]);
        let b = Subsector::new(1, Half::B).unwrap();
        assert_eq!(b.min_abs_phase(), Phase::B);
        assert_eq!(b.signed_order(), [Phase::A, Phase::B, Phase::C]);
        assert!(Subsector::new(0, Half::A).is_none());
        assert!(Subsector::new(7, Half::B).is_none());
    }

    #[test]
    fn wraps() {
        assert!(close(wrap_pi(3.0 * PI), -PI, 1e-12));
        assert!(close(wrap_2pi(-0.5), TAU - 0.5, 1e-12));
        assert_eq!(wrap_2pi(0.0), 0.0);
    }
}
