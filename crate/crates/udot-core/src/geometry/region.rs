//! Source regions given by an implicit function.
//!
//! A [`Region`] is the closure of `{x : implicit(x) < 0}` together with a
//! tight bounding box and an outward normal field on the boundary. The
//! implicit function only needs a correct sign and a nonvanishing gradient
//! near its zero level; it is *not* required to be a signed distance.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::tol;
use crate::vec2::{Rect, Vec2};

/// One smooth parametric piece of a region boundary.
///
/// Arcs are an optional accelerator: boundary line integrals are far more
/// accurate on an explicit parametrization (corners land exactly on arc
/// endpoints, no raster rounding) than on a traced implicit zero set.
/// Orientation is irrelevant — callers take outward normals from the
/// region's implicit gradient — only the speed `|dx/dt|` matters for the
/// line element.
pub struct BoundaryArc {
    point: Box<dyn Fn(f64) -> Vec2 + Send + Sync>,
    speed: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    range: (f64, f64),
}

impl BoundaryArc {
    /// Arc from a parametrization on `[range.0, range.1]` with speed
    /// `|dx/dt|`.
    pub fn new(
        range: (f64, f64),
        point: impl Fn(f64) -> Vec2 + Send + Sync + 'static,
        speed: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BoundaryArc { point: Box::new(point), speed: Box::new(speed), range }
    }

    /// Point at parameter `t`.
    #[inline]
    pub fn point(&self, t: f64) -> Vec2 {
        (self.point)(t)
    }

    /// `|dx/dt|` at parameter `t`.
    #[inline]
    pub fn speed(&self, t: f64) -> f64 {
        (self.speed)(t)
    }

    /// Parameter interval.
    #[inline]
    pub fn range(&self) -> (f64, f64) {
        self.range
    }
}

/// Callable implicit description of the source region.
pub struct Region {
    implicit: Box<dyn Fn(Vec2) -> f64 + Send + Sync>,
    gradient: Box<dyn Fn(Vec2) -> Vec2 + Send + Sync>,
    bbox: Rect,
    label: String,
    arcs: Vec<BoundaryArc>,
}

impl core::fmt::Debug for Region {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Region")
            .field("label", &self.label)
            .field("bbox", &self.bbox)
            .finish()
    }
}

impl Region {
    /// Region from an implicit function with an analytic gradient.
    pub fn new(
        label: impl Into<String>,
        bbox: Rect,
        implicit: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        Region {
            implicit: Box::new(implicit),
            gradient: Box::new(gradient),
            bbox,
            label: label.into(),
            arcs: Vec::new(),
        }
    }

    /// Attach a parametric boundary (builder style).
    pub fn with_boundary_arcs(mut self, arcs: Vec<BoundaryArc>) -> Self {
        self.arcs = arcs;
        self
    }

    /// Parametric boundary pieces, empty when only the implicit form is
    /// known.
    pub fn boundary_arcs(&self) -> &[BoundaryArc] {
        &self.arcs
    }

    /// Region from an implicit function only; the boundary normal is then
    /// computed by central differences with step `tol::H_GEO`.
    pub fn from_implicit(
        label: impl Into<String>,
        bbox: Rect,
        implicit: impl Fn(Vec2) -> f64 + Send + Sync + Clone + 'static,
    ) -> Self {
        let for_grad = implicit.clone();
        let h = tol::H_GEO;
        Region::new(label, bbox, implicit, move |x: Vec2| {
            Vec2::new(
                (for_grad(x + Vec2::new(h, 0.0)) - for_grad(x - Vec2::new(h, 0.0))) / (2.0 * h),
                (for_grad(x + Vec2::new(0.0, h)) - for_grad(x - Vec2::new(0.0, h))) / (2.0 * h),
            )
        })
    }

    /// Implicit value at `x` (negative inside).
    #[inline]
    pub fn implicit(&self, x: Vec2) -> f64 {
        (self.implicit)(x)
    }

    /// Gradient of the implicit function at `x`.
    #[inline]
    pub fn implicit_gradient(&self, x: Vec2) -> Vec2 {
        (self.gradient)(x)
    }

    /// Strict membership: `implicit(x) ≤ 0`.
    #[inline]
    pub fn contains(&self, x: Vec2) -> bool {
        self.implicit(x) <= 0.0
    }

    /// Membership with the mesh slack `tol::EDGE_TOL`, used for level-set
    /// nodes that may sit on a face of the region up to rounding.
    #[inline]
    pub fn contains_slack(&self, x: Vec2) -> bool {
        self.implicit(x) <= tol::EDGE_TOL
    }

    /// Outward unit normal of the boundary near `x`, or `None` where the
    /// implicit gradient degenerates.
    pub fn boundary_normal(&self, x: Vec2) -> Option<Vec2> {
        self.implicit_gradient(x).normalized(tol::NONDEGENERACY_FLOOR)
    }

    /// Tight bounding box.
    #[inline]
    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    /// Human-readable name used in reports.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The annulus `1/2 ≤ |x| ≤ 1`, written as the smooth quartic
    /// `(|x|² - 1)(|x|² - 1/4) ≤ 0`, whose gradient `2x(2|x|² - 5/4)` points
    /// outward on the outer circle and toward the hole on the inner circle
    /// (both are outward for the annulus).
    pub fn annulus() -> Self {
        let tau = 2.0 * core::f64::consts::PI;
        Region::new(
            "annulus",
            Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            |x: Vec2| {
                let r2 = x.norm_sq();
                (r2 - 1.0) * (r2 - 0.25)
            },
            |x: Vec2| x * (2.0 * (2.0 * x.norm_sq() - 1.25)),
        )
        .with_boundary_arcs(alloc::vec![
            BoundaryArc::new(
                (0.0, tau),
                |t: f64| Vec2::new(crate::num::cos(t), crate::num::sin(t)),
                |_| 1.0,
            ),
            BoundaryArc::new(
                (0.0, tau),
                |t: f64| Vec2::new(0.5 * crate::num::cos(t), 0.5 * crate::num::sin(t)),
                |_| 0.5,
            ),
        ])
    }

    /// The closed unit square `[0, 1]²` as a max of four face functions; the
    /// gradient returns the outward normal of the nearest face (ties broken
    /// by face order, which only matters on the diagonals well inside the
    /// square where the normal is never consumed).
    pub fn unit_square() -> Self {
        Region::new(
            "unit-square",
            Rect::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)),
            |x: Vec2| (-x.x).max(x.x - 1.0).max(-x.y).max(x.y - 1.0),
            |x: Vec2| {
                let faces = [
                    (-x.x, Vec2::new(-1.0, 0.0)),
                    (x.x - 1.0, Vec2::new(1.0, 0.0)),
                    (-x.y, Vec2::new(0.0, -1.0)),
                    (x.y - 1.0, Vec2::new(0.0, 1.0)),
                ];
                let mut best = faces[0];
                for f in &faces[1..] {
                    if f.0 > best.0 {
                        best = *f;
                    }
                }
                best.1
            },
        )
        .with_boundary_arcs(alloc::vec![
            BoundaryArc::new((0.0, 1.0), |t| Vec2::new(t, 0.0), |_| 1.0),
            BoundaryArc::new((0.0, 1.0), |t| Vec2::new(1.0, t), |_| 1.0),
            BoundaryArc::new((0.0, 1.0), |t| Vec2::new(t, 1.0), |_| 1.0),
            BoundaryArc::new((0.0, 1.0), |t| Vec2::new(0.0, t), |_| 1.0),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_signs_and_normals() {
        let a = Region::annulus();
        assert!(a.contains(Vec2::new(0.75, 0.0)));
        assert!(!a.contains(Vec2::new(0.3, 0.0)), "hole is outside");
        assert!(!a.contains(Vec2::new(1.1, 0.0)));
        // Outer circle: outward normal is radial.
        let n = a.boundary_normal(Vec2::new(1.0, 0.0)).unwrap();
        assert!((n - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        // Inner circle: outward (from the annulus) points toward the origin.
        let n = a.boundary_normal(Vec2::new(0.5, 0.0)).unwrap();
        assert!((n - Vec2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn square_signs_and_normals() {
        let s = Region::unit_square();
        assert!(s.contains(Vec2::new(0.5, 0.5)));
        assert!(!s.contains(Vec2::new(-0.01, 0.5)));
        let n = s.boundary_normal(Vec2::new(0.5, 1.0)).unwrap();
        assert!((n - Vec2::new(0.0, 1.0)).norm() < 1e-12);
        let n = s.boundary_normal(Vec2::new(0.0, 0.4)).unwrap();
        assert!((n - Vec2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fd_gradient_fallback_matches_analytic() {
        let smooth = Region::from_implicit(
            "disc",
            Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            |x: Vec2| x.norm_sq() - 1.0,
        );
        let g = smooth.implicit_gradient(Vec2::new(0.6, -0.3));
        assert!((g - Vec2::new(1.2, -0.6)).norm() < 1e-8);
    }

    #[test]
    fn boundary_arcs_cover_the_boundary() {
        for region in [Region::annulus(), Region::unit_square()] {
            let mut total = 0.0;
            for arc in region.boundary_arcs() {
                let (t0, t1) = arc.range();
                let n = 2048;
                let h = (t1 - t0) / n as f64;
                for i in 0..n {
                    let t = t0 + (i as f64 + 0.5) * h;
                    let x = arc.point(t);
                    total += arc.speed(t) * h;
                    assert!(
                        region.implicit(x).abs() < 1e-9,
                        "{}: arc point off the zero level",
                        region.label()
                    );
                    assert!(region.boundary_normal(x).is_some());
                }
            }
            let expected = if region.label() == "annulus" {
                3.0 * core::f64::consts::PI
            } else {
                4.0
            };
            assert!(
                (total - expected).abs() < 1e-9,
                "{}: boundary length {total} vs {expected}",
                region.label()
            );
        }
    }

    #[test]
    fn slack_membership_absorbs_face_rounding() {
        let s = Region::unit_square();
        assert!(s.contains_slack(Vec2::new(1.0 + 1e-9, 0.5)));
        assert!(!s.contains_slack(Vec2::new(1.0 + 1e-3, 0.5)));
    }
}
