//! Source and target densities.
//!
//! Densities are plain callables with a label. The planar density must
//! evaluate smoothly on a *neighborhood* of the region, not just inside it:
//! derivative formulas probe it at finite-difference offsets and quadrature
//! points that can sit a rounding error outside the boundary. Support is
//! the region's job, normalization the problem constructor's.

use alloc::boxed::Box;
use alloc::string::String;

use crate::vec2::Vec2;

/// Density on the planar source region.
pub struct Density2 {
    eval: Box<dyn Fn(Vec2) -> f64 + Send + Sync>,
    label: String,
}

impl Density2 {
    /// Density from a closure (smooth on a neighborhood of the region).
    pub fn new(label: impl Into<String>, eval: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Density2 { eval: Box::new(eval), label: label.into() }
    }

    /// Constant density.
    pub fn constant(value: f64) -> Self {
        Density2::new("constant", move |_| value)
    }

    /// Evaluate at `x`.
    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        (self.eval)(x)
    }

    /// Human-readable name used in reports.
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl core::fmt::Debug for Density2 {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Density2({})", self.label)
    }
}

/// Density on the one-dimensional target.
pub struct Density1 {
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl Density1 {
    /// Density from a closure.
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Density1 { eval: Box::new(eval), label: label.into() }
    }

    /// Constant density.
    pub fn constant(value: f64) -> Self {
        Density1::new("constant", move |_| value)
    }

    /// Evaluate at `y`.
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        (self.eval)(y)
    }

    /// Human-readable name used in reports.
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl core::fmt::Debug for Density1 {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Density1({})", self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_evaluate_and_label() {
        let f = Density2::new("ramp", |x: Vec2| x.x);
        assert_eq!(f.eval(Vec2::new(0.3, 9.0)), 0.3);
        assert_eq!(f.label(), "ramp");
        let c = Density2::constant(2.5);
        assert_eq!(c.eval(Vec2::new(-1.0, 4.0)), 2.5);

        let g = Density1::new("hat", |y: f64| 1.0 - y.abs());
        assert_eq!(g.eval(-0.25), 0.75);
        assert_eq!(Density1::constant(1.0).eval(7.0), 1.0);
    }
}
