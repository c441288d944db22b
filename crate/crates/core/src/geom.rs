//! Integer vectors, boxes and continuous-state vectors.

use core::fmt;
use core::ops::{Add, Neg, Sub};

/// A vector on the integer grid. One unit is roughly one metre (or one metre
/// per step for velocities).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridVec {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl GridVec {
    pub const ZERO: GridVec = GridVec { x: 0, y: 0, z: 0 };

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        GridVec { x, y, z }
    }

    pub const fn splat(c: i32) -> Self {
        GridVec { x: c, y: c, z: c }
    }

    pub fn to_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [i32; 3]) -> Self {
        GridVec::new(a[0], a[1], a[2])
    }

    pub fn min(self, o: GridVec) -> GridVec {
        GridVec::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: GridVec) -> GridVec {
        GridVec::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn norm_sq(self) -> i64 {
        let (x, y, z) = (self.x as i64, self.y as i64, self.z as i64);
        x * x + y * y + z * z
    }

    /// Largest absolute component.
    pub fn chebyshev(self) -> i32 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_zero(self) -> bool {
        self == GridVec::ZERO
    }
}

impl Add for GridVec {
    type Output = GridVec;
    fn add(self, o: GridVec) -> GridVec {
        GridVec::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for GridVec {
    type Output = GridVec;
    fn sub(self, o: GridVec) -> GridVec {
        GridVec::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for GridVec {
    type Output = GridVec;
    fn neg(self) -> GridVec {
        GridVec::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for GridVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// Closed axis-aligned integer box `[lo, hi]`. Empty when any `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Box3 {
    pub lo: GridVec,
    pub hi: GridVec,
}

impl Box3 {
    pub const fn new(lo: GridVec, hi: GridVec) -> Self {
        Box3 { lo, hi }
    }

    /// Cube `center ⊕ [±r]^3`.
    pub fn cube(center: GridVec, r: i32) -> Self {
        Box3::new(center - GridVec::splat(r), center + GridVec::splat(r))
    }

    /// Smallest box containing both points.
    pub fn spanning(a: GridVec, b: GridVec) -> Self {
        Box3::new(a.min(b), a.max(b))
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x > self.hi.x || self.lo.y > self.hi.y || self.lo.z > self.hi.z
    }

    pub fn contains(&self, p: GridVec) -> bool {
        p.x >= self.lo.x
            && p.x <= self.hi.x
            && p.y >= self.lo.y
            && p.y <= self.hi.y
            && p.z >= self.lo.z
            && p.z <= self.hi.z
    }

    pub fn contains_box(&self, other: &Box3) -> bool {
        other.is_empty() || (self.contains(other.lo) && self.contains(other.hi))
    }

    pub fn intersect(&self, other: &Box3) -> Box3 {
        Box3::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Grows the box by `d` in every direction (shrinks for negative `d`).
    pub fn pad(&self, d: i32) -> Box3 {
        self.pad_by(GridVec::splat(d))
    }

    pub fn pad_by(&self, d: GridVec) -> Box3 {
        Box3::new(self.lo - d, self.hi + d)
    }

    /// Extent per axis; zero on empty axes.
    pub fn dims(&self) -> [usize; 3] {
        let e = |lo: i32, hi: i32| if hi < lo { 0 } else { (hi - lo) as usize + 1 };
        [
            e(self.lo.x, self.hi.x),
            e(self.lo.y, self.hi.y),
            e(self.lo.z, self.hi.z),
        ]
    }

    pub fn volume(&self) -> usize {
        let [a, b, c] = self.dims();
        a * b * c
    }

    /// Row-major index of `p` (x slowest, z fastest). `p` must be inside.
    #[inline]
    pub fn index_of(&self, p: GridVec) -> usize {
        let [_, ny, nz] = self.dims();
        let (dx, dy, dz) = (
            (p.x - self.lo.x) as usize,
            (p.y - self.lo.y) as usize,
            (p.z - self.lo.z) as usize,
        );
        (dx * ny + dy) * nz + dz
    }

    /// Inverse of [`Box3::index_of`].
    pub fn point_at(&self, mut idx: usize) -> GridVec {
        let [_, ny, nz] = self.dims();
        let dz = idx % nz;
        idx /= nz;
        let dy = idx % ny;
        let dx = idx / ny;
        self.lo + GridVec::new(dx as i32, dy as i32, dz as i32)
    }

    /// All points in row-major order.
    pub fn iter(self) -> impl Iterator<Item = GridVec> {
        (0..self.volume()).map(move |i| self.point_at(i))
    }
}

impl fmt::Display for Box3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}]x[{},{}]x[{},{}]",
            self.lo.x, self.hi.x, self.lo.y, self.hi.y, self.lo.z, self.hi.z
        )
    }
}

/// Box over position × velocity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Box6 {
    pub p: Box3,
    pub v: Box3,
}

impl Box6 {
    pub fn is_empty(&self) -> bool {
        self.p.is_empty() || self.v.is_empty()
    }

    pub fn contains(&self, p: GridVec, v: GridVec) -> bool {
        self.p.contains(p) && self.v.contains(v)
    }

    pub fn len(&self) -> usize {
        self.p.volume() * self.v.volume()
    }
}

/// Continuous state of the vehicle: position, velocity and the 1-based index
/// of the next waypoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateVec {
    pub p: GridVec,
    pub v: GridVec,
    pub i: u32,
}

impl StateVec {
    pub const fn new(p: GridVec, v: GridVec, i: u32) -> Self {
        StateVec { p, v, i }
    }
}

impl fmt::Display for StateVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} v={} i={}", self.p, self.v, self.i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let b = Box3::new(GridVec::new(-2, 3, 0), GridVec::new(1, 5, 4));
        assert_eq!(b.volume(), 4 * 3 * 5);
        for (i, p) in b.iter().enumerate() {
            assert_eq!(b.index_of(p), i);
            assert!(b.contains(p));
        }
    }

    #[test]
    fn empty_and_intersection() {
        let a = Box3::cube(GridVec::ZERO, 2);
        let b = Box3::cube(GridVec::new(10, 0, 0), 2);
        assert!(a.intersect(&b).is_empty());
        assert_eq!(a.intersect(&b).volume(), 0);
        let c = a.intersect(&Box3::new(GridVec::ZERO, GridVec::splat(5)));
        assert_eq!(c, Box3::new(GridVec::ZERO, GridVec::splat(2)));
    }
}
