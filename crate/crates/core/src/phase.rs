//! Integer phases (degrees mod 360) and spider colours.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A phase in whole degrees, always reduced into `[0, 360)`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "i64", into = "i64")]
pub struct PhaseDeg(u16);

impl PhaseDeg {
    pub const ZERO: PhaseDeg = PhaseDeg(0);
    pub const PI: PhaseDeg = PhaseDeg(180);
    pub const HALF_PI: PhaseDeg = PhaseDeg(90);
    pub const MINUS_HALF_PI: PhaseDeg = PhaseDeg(270);

    pub fn new(deg: i64) -> Self {
        PhaseDeg(deg.rem_euclid(360) as u16)
    }

    pub fn degrees(self) -> u16 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// 0 or 180.
    pub fn is_pauli(self) -> bool {
        self.0.is_multiple_of(180)
    }

    /// 90 or 270.
    pub fn is_proper_clifford(self) -> bool {
        self.0 % 180 == 90
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0).to_radians()
    }
}

impl From<i64> for PhaseDeg {
    fn from(v: i64) -> Self {
        PhaseDeg::new(v)
    }
}

impl From<PhaseDeg> for i64 {
    fn from(p: PhaseDeg) -> Self {
        i64::from(p.0)
    }
}

impl Add for PhaseDeg {
    type Output = PhaseDeg;
    fn add(self, rhs: PhaseDeg) -> PhaseDeg {
        PhaseDeg((self.0 + rhs.0) % 360)
    }
}

impl Sub for PhaseDeg {
    type Output = PhaseDeg;
    fn sub(self, rhs: PhaseDeg) -> PhaseDeg {
        PhaseDeg((self.0 + 360 - rhs.0) % 360)
    }
}

impl Neg for PhaseDeg {
    type Output = PhaseDeg;
    fn neg(self) -> PhaseDeg {
        PhaseDeg((360 - self.0) % 360)
    }
}

impl fmt::Display for PhaseDeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Spider colour. `Z` is encoded as `+1` (green), `X` as `-1` (red).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    Z,
    X,
}

impl Color {
    pub fn sign(self) -> i64 {
        match self {
            Color::Z => 1,
            Color::X => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Color> {
        match sign {
            1 => Some(Color::Z),
            -1 => Some(Color::X),
            _ => None,
        }
    }

    pub fn flip(self) -> Color {
        match self {
            Color::Z => Color::X,
            Color::X => Color::Z,
        }
    }

    pub fn is_opposite(self, other: Color) -> bool {
        self.sign() * other.sign() == -1
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Color::Z => f.write_str("Z"),
            Color::X => f.write_str("X"),
        }
    }
}
