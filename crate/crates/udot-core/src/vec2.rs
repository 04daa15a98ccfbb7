//! Minimal 2-vector used throughout the crate.
//!
//! The solver only ever needs planar points, gradients, and normals, so a
//! hand-rolled POD type keeps the core `no_std`-friendly and the call sites
//! free of generic noise.

use core::ops::{Add, Mul, Neg, Sub};

use crate::num;

/// A point or vector in the source plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    /// Construct from components.
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Dot product.
    #[inline]
    pub fn dot(self, rhs: Vec2) -> f64 {
        self.x * rhs.x + self.y * rhs.y
    }

    /// Euclidean norm.
    #[inline]
    pub fn norm(self) -> f64 {
        num::hypot(self.x, self.y)
    }

    /// Squared Euclidean norm.
    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counterclockwise rotation by 90°: `(x, y) ↦ (-y, x)`.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Unit vector in the same direction, or `None` when the norm is below
    /// `floor` (callers decide how degenerate gradients should fail).
    #[inline]
    pub fn normalized(self, floor: f64) -> Option<Vec2> {
        let n = self.norm();
        if n <= floor {
            None
        } else {
            Some(Vec2::new(self.x / n, self.y / n))
        }
    }

    /// Linear interpolation `self + t (other - self)`.
    #[inline]
    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }

    /// Distance to another point.
    #[inline]
    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Component of `self` orthogonal to the *unit* vector `unit`.
    #[inline]
    pub fn reject_from_unit(self, unit: Vec2) -> Vec2 {
        self - unit * self.dot(unit)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Rect {
    /// Construct; panics if the box is inverted.
    pub fn new(lo: Vec2, hi: Vec2) -> Self {
        assert!(lo.x < hi.x && lo.y < hi.y, "inverted bounding box");
        Rect { lo, hi }
    }

    /// Box widths `(dx, dy)`.
    #[inline]
    pub fn extent(&self) -> Vec2 {
        self.hi - self.lo
    }

    /// Diagonal length.
    #[inline]
    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    /// The box grown by `margin` on every side.
    pub fn padded(&self, margin: f64) -> Rect {
        Rect::new(
            self.lo - Vec2::new(margin, margin),
            self.hi + Vec2::new(margin, margin),
        )
    }

    /// True when `x` lies inside (closed).
    #[inline]
    pub fn contains(&self, x: Vec2) -> bool {
        x.x >= self.lo.x && x.x <= self.hi.x && x.y >= self.lo.y && x.y <= self.hi.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perp_is_ccw_rotation() {
        let v = Vec2::new(1.0, 0.0);
        assert_eq!(v.perp(), Vec2::new(0.0, 1.0));
        assert_eq!(v.perp().perp(), -v);
        assert_eq!(v.dot(v.perp()), 0.0);
    }

    #[test]
    fn rejection_removes_parallel_part() {
        let u = Vec2::new(0.6, 0.8);
        let v = Vec2::new(3.0, -1.0);
        let r = v.reject_from_unit(u);
        assert!(r.dot(u).abs() < 1e-15);
        assert!((r + u * v.dot(u) - v).norm() < 1e-15);
    }

    #[test]
    fn rect_padding_and_membership() {
        let r = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 2.0));
        assert!(r.contains(Vec2::new(0.5, 1.9)));
        assert!(!r.contains(Vec2::new(1.1, 0.5)));
        let p = r.padded(0.1);
        assert!(p.contains(Vec2::new(1.05, -0.05)));
        assert!((p.extent().x - 1.2).abs() < 1e-15);
    }

    #[test]
    fn normalized_guards_small_vectors() {
        assert!(Vec2::new(1e-12, 0.0).normalized(1e-8).is_none());
        let n = Vec2::new(3.0, 4.0).normalized(1e-8).unwrap();
        assert!((n.norm() - 1.0).abs() < 1e-15);
    }
}
