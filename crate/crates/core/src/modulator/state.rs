use core::fmt;
use core::str::FromStr;

use crate::phase::Phase;

/// Gate pattern of the three switches, written `s_A s_B s_C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SwitchState(u8);

impl SwitchState {
    pub const S000: SwitchState = SwitchState(0b000);
    pub const S001: SwitchState = SwitchState(0b001);
    pub const S010: SwitchState = SwitchState(0b010);
    pub const S100: SwitchState = SwitchState(0b100);
    pub const S110: SwitchState = SwitchState(0b110);
    pub const S101: SwitchState = SwitchState(0b101);
    pub const S011: SwitchState = SwitchState(0b011);
    pub const S111: SwitchState = SwitchState(0b111);

    /// Returns `None` for values above `0b111`.
    pub const fn from_bits(bits: u8) -> Option<SwitchState> {
        if bits <= 0b111 {
            Some(SwitchState(bits))
        } else {
            None
        }
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    const fn mask(p: Phase) -> u8 {
        0b100 >> p.index()
    }

    pub fn from_phases(phases: &[Phase]) -> SwitchState {
        SwitchState(phases.iter().fold(0, |acc, &p| acc | Self::mask(p)))
    }

    pub const fn is_on(self, p: Phase) -> bool {
        self.0 & Self::mask(p) != 0
    }

    pub const fn with(self, p: Phase) -> SwitchState {
        SwitchState(self.0 | Self::mask(p))
    }

    pub const fn on_count(self) -> u32 {
        self.0.count_ones()
    }

    /// Fewer than two switches on: no path for the DC-link current.
    pub const fn is_zero_state(self) -> bool {
        self.on_count() < 2
    }
}

impl fmt::Display for SwitchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

impl FromStr for SwitchState {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        if s.len() != 3 {
            return Err(());
        }
        u8::from_str_radix(s, 2).ok().and_then(SwitchState::from_bits).ok_or(())
    }
}
