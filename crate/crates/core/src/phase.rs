//! Phase identifiers and ordered three-phase quantities.

use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

/// One of the three AC phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    #[inline]
    pub const fn index(self) -> usize {
        match self {
            Phase::A => 0,
            Phase::B => 1,
            Phase::C => 2,
        }
    }

    /// Panics if `i > 2`.
    #[inline]
    pub const fn from_index(i: usize) -> Phase {
        match i {
            0 => Phase::A,
            1 => Phase::B,
            2 => Phase::C,
            _ => panic!("phase index out of range"),
        }
    }

    /// Cyclic successor, A → B → C → A.
    #[inline]
    pub const fn next(self) -> Phase {
        Phase::from_index((self.index() + 1) % 3)
    }

    /// Cyclic predecessor, A → C → B → A.
    #[inline]
    pub const fn prev(self) -> Phase {
        Phase::from_index((self.index() + 2) % 3)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::A => "A",
            Phase::B => "B",
            Phase::C => "C",
        };
        f.write_str(s)
    }
}

/// An ordered (A, B, C) triple of amperes or volts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PhaseTriple {
    pub const ZERO: PhaseTriple = PhaseTriple { a: 0.0, b: 0.0, c: 0.0 };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        PhaseTriple { a, b, c }
    }

    #[inline]
    pub const fn from_array(v: [f64; 3]) -> Self {
        PhaseTriple { a: v[0], b: v[1], c: v[2] }
    }

    #[inline]
    pub const fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    #[inline]
    pub fn sum(self) -> f64 {
        self.a + self.b + self.c
    }

    #[inline]
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        PhaseTriple::new(f(self.a), f(self.b), f(self.c))
    }

    /// Largest absolute component.
    pub fn peak(self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    pub fn is_zero(self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }

    /// Relabels the phases: the output value at phase `p` is the input value
    /// at `perm[p]`.
    pub fn permute(self, perm: [Phase; 3]) -> Self {
        PhaseTriple::new(self[perm[0]], self[perm[1]], self[perm[2]])
    }

    pub fn max_abs_diff(self, other: PhaseTriple) -> f64 {
        (self - other).peak()
    }
}

impl Index<Phase> for PhaseTriple {
    type Output = f64;

    fn index(&self, p: Phase) -> &f64 {
        match p {
            Phase::A => &self.a,
            Phase::B => &self.b,
            Phase::C => &self.c,
        }
    }
}

impl IndexMut<Phase> for PhaseTriple {
    fn index_mut(&mut self, p: Phase) -> &mut f64 {
        match p {
            Phase::A => &mut self.a,
            Phase::B => &mut self.b,
            Phase::C => &mut self.c,
        }
    }
}

impl Add for PhaseTriple {
    type Output = PhaseTriple;

    fn add(self, o: PhaseTriple) -> PhaseTriple {
        PhaseTriple::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }
}

impl Sub for PhaseTriple {
    type Output = PhaseTriple;

    fn sub(self, o: PhaseTriple) -> PhaseTriple {
        PhaseTriple::new(self.a - o.a, self.b - o.b, self.c - o.c)
    }
}

impl Mul<f64> for PhaseTriple {
    type Output = PhaseTriple;

    fn mul(self, k: f64) -> PhaseTriple {
        PhaseTriple::new(self.a * k, self.b * k, self.c * k)
    }
}
