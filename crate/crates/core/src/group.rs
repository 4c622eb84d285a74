//! Reflection, cyclic and dihedral groups.
//!
//! Every element is a pair `(i0, i1)`: `i0` is the reflection index and `i1`
//! the rotation index. `C_N` has `reflection_order == 1`, `D_N` has
//! `reflection_order == 2`, and the reflection group itself is `D_1`.
//!
//! An element acts on planar angles as `φ ↦ (-1)^i0 · φ + θ_i1` with
//! `θ_i1 = 2π·i1/N`. On points this is "reflect `y ↦ -y` if `i0 == 1`, then
//! rotate counter-clockwise by `θ_i1`".

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    reflection_order: usize,
    rotation_order: usize,
}

impl GroupSpec {
    pub fn new(reflection_order: usize, rotation_order: usize) -> Result<Self> {
        if !(1..=2).contains(&reflection_order) {
            return Err(Error::InvalidGroup(format!(
                "reflection order {reflection_order}"
            )));
        }
        if rotation_order == 0 {
            return Err(Error::InvalidOrder(0));
        }
        Ok(Self {
            reflection_order,
            rotation_order,
        })
    }

    /// The cyclic group `C_N`.
    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    /// The dihedral group `D_N`.
    pub fn dihedral(n: usize) -> Result<Self> {
        Self::new(2, n)
    }

    /// The reflection group `D_1`.
    pub fn reflection() -> Self {
        Self {
            reflection_order: 2,
            rotation_order: 1,
        }
    }

    pub fn reflection_order(&self) -> usize {
        self.reflection_order
    }

    pub fn rotation_order(&self) -> usize {
        self.rotation_order
    }

    pub fn is_dihedral(&self) -> bool {
        self.reflection_order == 2
    }

    pub fn order(&self) -> usize {
        self.reflection_order * self.rotation_order
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            i0: 0,
            i1: 0,
            spec: *self,
        }
    }

    pub fn element(&self, i0: usize, i1: usize) -> Result<GroupElement> {
        if i0 >= self.reflection_order || i1 >= self.rotation_order {
            return Err(Error::InvalidElement {
                i0,
                i1,
                group: self.to_string(),
            });
        }
        Ok(GroupElement {
            i0,
            i1,
            spec: *self,
        })
    }

    /// All elements, `i0`-major then `i1` ascending. This is the axis order
    /// of the regular representation.
    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.reflection_order)
            .flat_map(|i0| {
                (0..self.rotation_order).map(move |i1| GroupElement {
                    i0,
                    i1,
                    spec: *self,
                })
            })
            .collect()
    }

    /// Position of `g` in [`GroupSpec::elements`].
    pub fn index_of(&self, g: &GroupElement) -> usize {
        g.i0 * self.rotation_order + g.i1
    }

    pub(crate) fn check_same(&self, other: &GroupSpec) -> Result<()> {
        if self != other {
            return Err(Error::GroupMismatch(self.to_string(), other.to_string()));
        }
        Ok(())
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.is_dihedral() { 'd' } else { 'c' };
        write!(f, "{tag}{}", self.rotation_order)
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `c<N>` or `d<N>` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGroup(s.to_string());
        let s_trim = s.trim();
        let mut chars = s_trim.chars();
        let reflection_order = match chars.next().map(|c| c.to_ascii_lowercase()) {
            Some('c') => 1,
            Some('d') => 2,
            _ => return Err(bad()),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n: usize = digits.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Self::new(reflection_order, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    i0: usize,
    i1: usize,
    spec: GroupSpec,
}

impl GroupElement {
    pub fn i0(&self) -> usize {
        self.i0
    }

    pub fn i1(&self) -> usize {
        self.i1
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn is_reflection(&self) -> bool {
        self.i0 == 1
    }

    /// Rotation angle `θ_i1` in radians.
    pub fn theta(&self) -> f64 {
        TAU * self.i1 as f64 / self.spec.rotation_order as f64
    }

    /// `(cos θ_i1, sin θ_i1)`, exact at multiples of a quarter turn.
    pub fn cos_sin(&self) -> (f64, f64) {
        cos_sin_turns(self.i1 as i64, self.spec.rotation_order)
    }

    /// `g ∘ h`: the element whose angle action is `g` applied after `h`.
    pub fn compose(&self, h: &GroupElement) -> Result<GroupElement> {
        self.spec.check_same(&h.spec)?;
        let n = self.spec.rotation_order as i64;
        let sign = if self.i0 == 0 { 1 } else { -1 };
        let i1 = (self.i1 as i64 + sign * h.i1 as i64).rem_euclid(n) as usize;
        Ok(GroupElement {
            i0: (self.i0 + h.i0) % 2,
            i1,
            spec: self.spec,
        })
    }

    pub fn inverse(&self) -> GroupElement {
        let n = self.spec.rotation_order;
        let i1 = if self.i0 == 0 {
            (n - self.i1) % n
        } else {
            self.i1
        };
        GroupElement { i1, ..*self }
    }

    /// `φ ↦ (-1)^i0 · φ + θ_i1`, not reduced modulo 2π.
    pub fn angle_action(&self, phi: f64) -> f64 {
        let sign = if self.i0 == 0 { 1.0 } else { -1.0 };
        sign * phi + self.theta()
    }

    /// Action on a planar point: reflect `y ↦ -y` when `i0 == 1`, then rotate
    /// by `θ_i1`.
    pub fn act_point(&self, x: f64, y: f64) -> (f64, f64) {
        let y = if self.i0 == 1 { -y } else { y };
        let (c, s) = self.cos_sin();
        (c * x - s * y, s * x + c * y)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i0, self.i1)
    }
}

/// `(cos, sin)` of the angle `2π·p/d`.
///
/// The fraction is reduced modulo one turn first, so `p` and `p + d` give
/// bit-identical results, and quarter turns return exact `0`/`±1`.
pub fn cos_sin_turns(p: i64, d: usize) -> (f64, f64) {
    let d = d as i64;
    let p = p.rem_euclid(d);
    if (4 * p) % d == 0 {
        return match 4 * p / d {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let angle = TAU * p as f64 / d as f64;
    (angle.cos(), angle.sin())
}
