//! Axis-aligned vector helpers. Every direction in a gear train is a signed
//! standard basis vector, so directions are stored exactly as (index, sign).

use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }
}

/// A signed standard basis vector `sign * e_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Axis {
    pub index: u8,
    pub sign: Sign,
}

impl Axis {
    pub const X: Axis = Axis { index: 0, sign: Sign::Pos };
    pub const Y: Axis = Axis { index: 1, sign: Sign::Pos };
    pub const Z: Axis = Axis { index: 2, sign: Sign::Pos };

    pub fn new(index: u8, sign: Sign) -> Axis {
        assert!(index < 3, "axis index out of range");
        Axis { index, sign }
    }

    pub fn vector(self) -> Vec3 {
        let mut v = [0.0; 3];
        v[self.index as usize] = self.sign.value();
        v
    }

    /// The same line with positive sense.
    pub fn unsigned(self) -> Axis {
        Axis { index: self.index, sign: Sign::Pos }
    }

    /// `sign * e_{(k + step) mod 3}` where `k` is this axis' index.
    pub fn perpendicular(self, step: u8, sign: Sign) -> Axis {
        Axis { index: (self.index + step) % 3, sign }
    }

    pub fn dot(self, other: Axis) -> f64 {
        if self.index == other.index {
            self.sign.times(other.sign).value()
        } else {
            0.0
        }
    }

    /// Cross product of two perpendicular basis vectors.
    pub fn cross(self, other: Axis) -> Option<Axis> {
        if self.index == other.index {
            return None;
        }
        // e_k x e_{k+1} = e_{k+2}; e_{k+1} x e_k = -e_{k+2}
        let third = 3 - self.index - other.index;
        let cyclic = (self.index + 1) % 3 == other.index;
        let base = if cyclic { Sign::Pos } else { Sign::Neg };
        Some(Axis {
            index: third,
            sign: base.times(self.sign).times(other.sign),
        })
    }
}

impl Neg for Axis {
    type Output = Axis;
    fn neg(self) -> Axis {
        Axis { index: self.index, sign: self.sign.flip() }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Pos => '+',
            Sign::Neg => '-',
        };
        write!(f, "{}e{}", s, self.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross_vec(a: Vec3, b: Vec3) -> Vec3 {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    #[test]
    fn cross_matches_vector_formula() {
        let all: Vec<Axis> = (0..3)
            .flat_map(|i| [Axis::new(i, Sign::Pos), Axis::new(i, Sign::Neg)])
            .collect();
        for &a in &all {
            for &b in &all {
                match a.cross(b) {
                    Some(c) => assert_eq!(c.vector(), cross_vec(a.vector(), b.vector())),
                    None => assert_eq!(a.index, b.index),
                }
            }
        }
    }

    #[test]
    fn perpendicular_is_cyclic() {
        // axis e2 with (perp1, -) points along -e0
        assert_eq!(Axis::Z.perpendicular(1, Sign::Neg), Axis::new(0, Sign::Neg));
        assert_eq!(Axis::X.perpendicular(1, Sign::Pos), Axis::Y);
        assert_eq!(Axis::X.perpendicular(2, Sign::Pos), Axis::Z);
    }

    #[test]
    fn dot_and_neg() {
        assert_eq!(Axis::X.dot(-Axis::X), -1.0);
        assert_eq!(Axis::X.dot(Axis::Y), 0.0);
        assert_eq!(-(-Axis::Y), Axis::Y);
    }
}
