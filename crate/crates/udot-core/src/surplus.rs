//! Surplus models and their derivative bundles.
//!
//! A surplus `s(x, y)` couples a planar source point `x` with a scalar
//! target coordinate `y`. Everything downstream consumes `s` only through
//! the analytic derivative bundle
//! `(s, s_y, s_yy, s_yyy, ∇ₓs, ∇ₓs_y, ∇ₓs_yy)`: the level-set geometry needs
//! `∇ₓs_y`, the local operator needs `s_yy` and the mobility `1/|∇ₓs_y|`,
//! and the operator's own derivatives need the rest.
//!
//! Three presets cover the test surface:
//!
//! | Preset | `s(x, y)` | Target | Why it matters |
//! |--------|-----------|--------|----------------|
//! | `annulus` | `x · (cos y, sin y)` | circle | closed-form solution `k ≡ 0` |
//! | `strip` | `x₁ y` | interval | closed-form solution `k(y) = y` |
//! | `tilted` | `x₁ y + x₂ y²/2` | interval | curved indifference geometry |
//!
//! [`Convexified`] adds `c·y²/2` to any model. Adding a function of `y`
//! alone does not change the transport problem — the dual potential shifts
//! by the same function — but it makes `s_yy` positive where needed by the
//! convexity-based transforms. The solver can run in the convexified frame
//! and map results back exactly.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;

use crate::geometry::Region;
use crate::num;
use crate::sampling::{LowDiscrepancy1, LowDiscrepancy2};
use crate::tol;
use crate::vec2::Vec2;

/// All partial derivatives of the surplus consumed anywhere downstream,
/// evaluated at one `(x, y)`.
#[derive(Clone, Copy, Debug)]
pub struct DerivativeBundle {
    pub s: f64,
    pub s_y: f64,
    pub s_yy: f64,
    pub s_yyy: f64,
    pub grad_x: Vec2,
    pub grad_x_dy: Vec2,
    pub grad_x_dyy: Vec2,
}

/// A surplus model with analytic derivatives.
///
/// Implementations must be smooth on a neighborhood of the closed region
/// times the target interval; the geometry probes slightly outside the
/// region (grid padding, finite-difference steps), so formulas should not
/// assume membership.
pub trait SurplusModel: Send + Sync {
    fn eval(&self, x: Vec2, y: f64) -> f64;
    fn d_y(&self, x: Vec2, y: f64) -> f64;
    fn d_yy(&self, x: Vec2, y: f64) -> f64;
    fn d_yyy(&self, x: Vec2, y: f64) -> f64;
    fn grad_x(&self, x: Vec2, y: f64) -> Vec2;
    fn grad_x_dy(&self, x: Vec2, y: f64) -> Vec2;
    fn grad_x_dyy(&self, x: Vec2, y: f64) -> Vec2;
    /// Human-readable name used in reports.
    fn label(&self) -> String;
    /// Period of the target coordinate for circle targets, `None` for
    /// interval targets.
    fn period(&self) -> Option<f64> {
        None
    }
}

impl SurplusModel for Box<dyn SurplusModel> {
    fn eval(&self, x: Vec2, y: f64) -> f64 {
        self.as_ref().eval(x, y)
    }
    fn d_y(&self, x: Vec2, y: f64) -> f64 {
        self.as_ref().d_y(x, y)
    }
    fn d_yy(&self, x: Vec2, y: f64) -> f64 {
        self.as_ref().d_yy(x, y)
    }
    fn d_yyy(&self, x: Vec2, y: f64) -> f64 {
        self.as_ref().d_yyy(x, y)
    }
    fn grad_x(&self, x: Vec2, y: f64) -> Vec2 {
        self.as_ref().grad_x(x, y)
    }
    fn grad_x_dy(&self, x: Vec2, y: f64) -> Vec2 {
        self.as_ref().grad_x_dy(x, y)
    }
    fn grad_x_dyy(&self, x: Vec2, y: f64) -> Vec2 {
        self.as_ref().grad_x_dyy(x, y)
    }
    fn label(&self) -> String {
        self.as_ref().label()
    }
    fn period(&self) -> Option<f64> {
        self.as_ref().period()
    }
}

/// Evaluate the full derivative bundle at `(x, y)`.
pub fn eval_bundle(model: &dyn SurplusModel, x: Vec2, y: f64) -> DerivativeBundle {
    DerivativeBundle {
        s: model.eval(x, y),
        s_y: model.d_y(x, y),
        s_yy: model.d_yy(x, y),
        s_yyy: model.d_yyy(x, y),
        grad_x: model.grad_x(x, y),
        grad_x_dy: model.grad_x_dy(x, y),
        grad_x_dyy: model.grad_x_dyy(x, y),
    }
}

/// `s(x, y) = x · (cos y, sin y)`: the annulus-to-circle surplus.
#[derive(Clone, Copy, Debug, Default)]
pub struct Annulus;

impl SurplusModel for Annulus {
    fn eval(&self, x: Vec2, y: f64) -> f64 {
        x.x * num::cos(y) + x.y * num::sin(y)
    }
    fn d_y(&self, x: Vec2, y: f64) -> f64 {
        -x.x * num::sin(y) + x.y * num::cos(y)
    }
    fn d_yy(&self, x: Vec2, y: f64) -> f64 {
        -self.eval(x, y)
    }
    fn d_yyy(&self, x: Vec2, y: f64) -> f64 {
        -self.d_y(x, y)
    }
    fn grad_x(&self, _x: Vec2, y: f64) -> Vec2 {
        Vec2::new(num::cos(y), num::sin(y))
    }
    fn grad_x_dy(&self, _x: Vec2, y: f64) -> Vec2 {
        Vec2::new(-num::sin(y), num::cos(y))
    }
    fn grad_x_dyy(&self, _x: Vec2, y: f64) -> Vec2 {
        Vec2::new(-num::cos(y), -num::sin(y))
    }
    fn label(&self) -> String {
        String::from("annulus")
    }
    fn period(&self) -> Option<f64> {
        Some(2.0 * core::f64::consts::PI)
    }
}

/// `s(x, y) = x₁ y`: the strip surplus (indifference sets are vertical
/// lines, the local operator is the identity in `q`).
#[derive(Clone, Copy, Debug, Default)]
pub struct Strip;

impl SurplusModel for Strip {
    fn eval(&self, x: Vec2, y: f64) -> f64 {
        x.x * y
    }
    fn d_y(&self, x: Vec2, _y: f64) -> f64 {
        x.x
    }
    fn d_yy(&self, _x: Vec2, _y: f64) -> f64 {
        0.0
    }
    fn d_yyy(&self, _x: Vec2, _y: f64) -> f64 {
        0.0
    }
    fn grad_x(&self, _x: Vec2, y: f64) -> Vec2 {
        Vec2::new(y, 0.0)
    }
    fn grad_x_dy(&self, _x: Vec2, _y: f64) -> Vec2 {
        Vec2::new(1.0, 0.0)
    }
    fn grad_x_dyy(&self, _x: Vec2, _y: f64) -> Vec2 {
        Vec2::new(0.0, 0.0)
    }
    fn label(&self) -> String {
        String::from("strip")
    }
}

/// `s(x, y) = x₁ y + x₂ y²/2`: indifference lines rotate with `y`, the
/// sub-level cut moves, and every operator derivative term is exercised.
#[derive(Clone, Copy, Debug, Default)]
pub struct Tilted;

impl SurplusModel for Tilted {
    fn eval(&self, x: Vec2, y: f64) -> f64 {
        x.x * y + 0.5 * x.y * y * y
    }
    fn d_y(&self, x: Vec2, y: f64) -> f64 {
        x.x + x.y * y
    }
    fn d_yy(&self, x: Vec2, _y: f64) -> f64 {
        x.y
    }
    fn d_yyy(&self, _x: Vec2, _y: f64) -> f64 {
        0.0
    }
    fn grad_x(&self, _x: Vec2, y: f64) -> Vec2 {
        Vec2::new(y, 0.5 * y * y)
    }
    fn grad_x_dy(&self, _x: Vec2, y: f64) -> Vec2 {
        Vec2::new(1.0, y)
    }
    fn grad_x_dyy(&self, _x: Vec2, _y: f64) -> Vec2 {
        Vec2::new(0.0, 1.0)
    }
    fn label(&self) -> String {
        String::from("tilted")
    }
}

/// `inner + c·y²/2`: the convexifying wrapper. The coefficient is recorded
/// in the label so reports show which frame produced a number.
pub struct Convexified<M> {
    pub inner: M,
    pub coefficient: f64,
}

impl<M: SurplusModel> Convexified<M> {
    pub fn new(inner: M, coefficient: f64) -> Self {
        Convexified { inner, coefficient }
    }
}

impl<M: SurplusModel> SurplusModel for Convexified<M> {
    fn eval(&self, x: Vec2, y: f64) -> f64 {
        self.inner.eval(x, y) + 0.5 * self.coefficient * y * y
    }
    fn d_y(&self, x: Vec2, y: f64) -> f64 {
        self.inner.d_y(x, y) + self.coefficient * y
    }
    fn d_yy(&self, x: Vec2, y: f64) -> f64 {
        self.inner.d_yy(x, y) + self.coefficient
    }
    fn d_yyy(&self, x: Vec2, y: f64) -> f64 {
        self.inner.d_yyy(x, y)
    }
    fn grad_x(&self, x: Vec2, y: f64) -> Vec2 {
        self.inner.grad_x(x, y)
    }
    fn grad_x_dy(&self, x: Vec2, y: f64) -> Vec2 {
        self.inner.grad_x_dy(x, y)
    }
    fn grad_x_dyy(&self, x: Vec2, y: f64) -> Vec2 {
        self.inner.grad_x_dyy(x, y)
    }
    fn label(&self) -> String {
        format!("{}+{}*y^2/2", self.inner.label(), self.coefficient)
    }
    fn period(&self) -> Option<f64> {
        self.inner.period()
    }
}

/// Construct a preset model by name (`annulus`, `strip`, `tilted`).
pub fn preset_model(name: &str) -> Option<Box<dyn SurplusModel>> {
    match name {
        "annulus" => Some(Box::new(Annulus)),
        "strip" => Some(Box::new(Strip)),
        "tilted" => Some(Box::new(Tilted)),
        _ => None,
    }
}

/// Outcome of a sampled margin scan: the worst value seen and where.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginReport {
    /// Minimum of the scanned quantity.
    pub margin: f64,
    /// Source point achieving the minimum.
    pub arg_x: Vec2,
    /// Target coordinate achieving the minimum.
    pub arg_y: f64,
    /// Second target coordinate for pairwise scans (twist), else `None`.
    pub arg_y_bar: Option<f64>,
    /// Number of samples actually evaluated.
    pub samples: usize,
}

/// Surplus-layer failures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurplusError {
    /// A sampled margin fell below the degeneracy floor.
    ZeroMargin(MarginReport),
    /// The surplus-exponential target equation has no solution in range.
    NoPreimage { best_y: f64, residual: f64 },
    /// Convexity in `y` fails at a sampled point.
    NotConvex { y: f64, s_yy: f64 },
}

impl core::fmt::Display for SurplusError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SurplusError::ZeroMargin(r) => write!(
                f,
                "margin {:.3e} below floor {:.0e} at x=({}, {}), y={}",
                r.margin, tol::NONDEGENERACY_FLOOR, r.arg_x.x, r.arg_x.y, r.arg_y
            ),
            SurplusError::NoPreimage { best_y, residual } => write!(
                f,
                "no target preimage: best residual {residual:.3e} at y={best_y}"
            ),
            SurplusError::NotConvex { y, s_yy } => {
                write!(f, "surplus not convex in target: s_yy={s_yy:.3e} at y={y}")
            }
        }
    }
}

impl core::error::Error for SurplusError {}

/// Draw `n` low-discrepancy sample points inside the region (rejection on
/// the implicit sign) paired with target coordinates in `[y_lo, y_hi]`.
fn sample_in_region(
    region: &Region,
    y_lo: f64,
    y_hi: f64,
    n: usize,
    seed: u64,
    mut visit: impl FnMut(Vec2, f64),
) -> usize {
    let mut xs = LowDiscrepancy2::new(seed);
    let mut ys = LowDiscrepancy1::new(seed.wrapping_add(1));
    let bbox = region.bbox();
    let mut produced = 0usize;
    let mut attempts = 0usize;
    // The presets keep ≥ 15% of the bounding box inside the region; 100×
    // oversampling is a generous safety margin before giving up.
    while produced < n && attempts < 100 * n {
        attempts += 1;
        let x = xs.next_in(bbox.lo, bbox.hi);
        if region.contains(x) {
            visit(x, ys.next_in(y_lo, y_hi));
            produced += 1;
        }
    }
    produced
}

/// Scan `|∇ₓ s_y|` over sampled `(x, y)`: the twist margin that keeps every
/// level-set mobility finite. Errors with [`SurplusError::ZeroMargin`] when
/// the sampled minimum is below [`tol::NONDEGENERACY_FLOOR`].
pub fn check_nondegeneracy(
    model: &dyn SurplusModel,
    region: &Region,
    y_lo: f64,
    y_hi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MarginReport, SurplusError> {
    let mut report = MarginReport {
        margin: f64::INFINITY,
        arg_x: Vec2::new(f64::NAN, f64::NAN),
        arg_y: f64::NAN,
        arg_y_bar: None,
        samples: 0,
    };
    report.samples = sample_in_region(region, y_lo, y_hi, n_samples, seed, |x, y| {
        let m = model.grad_x_dy(x, y).norm();
        if m < report.margin {
            report.margin = m;
            report.arg_x = x;
            report.arg_y = y;
        }
    });
    if report.margin < tol::NONDEGENERACY_FLOOR {
        Err(SurplusError::ZeroMargin(report))
    } else {
        Ok(report)
    }
}

/// Scan the enhanced-twist margin over sampled triples `(x, y, ȳ)`:
/// the component of `∇ₓs(x, y) - ∇ₓs(x, ȳ)` orthogonal to `∇ₓs_y(x, ȳ)`,
/// normalized by `|y - ȳ|`. Zero margin means two distinct targets present
/// the same gradient direction to some source point, and level sets of
/// different targets can osculate.
pub fn check_enhanced_twist(
    model: &dyn SurplusModel,
    region: &Region,
    y_lo: f64,
    y_hi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MarginReport, SurplusError> {
    let mut report = MarginReport {
        margin: f64::INFINITY,
        arg_x: Vec2::new(f64::NAN, f64::NAN),
        arg_y: f64::NAN,
        arg_y_bar: None,
        samples: 0,
    };
    let mut ybars = LowDiscrepancy1::new(seed.wrapping_add(2));
    report.samples = sample_in_region(region, y_lo, y_hi, n_samples, seed, |x, y| {
        let y_bar = ybars.next_in(y_lo, y_hi);
        let dy = num::abs(y - y_bar);
        if dy < 1e-9 {
            return; // the normalized margin is 0/0 at coincident targets
        }
        let dir = match model.grad_x_dy(x, y_bar).normalized(tol::NONDEGENERACY_FLOOR) {
            Some(d) => d,
            None => return, // nondegeneracy scan reports this separately
        };
        let diff = model.grad_x(x, y) - model.grad_x(x, y_bar);
        let m = diff.reject_from_unit(dir).norm() / dy;
        if m < report.margin {
            report.margin = m;
            report.arg_x = x;
            report.arg_y = y;
            report.arg_y_bar = Some(y_bar);
        }
    });
    if report.margin < tol::NONDEGENERACY_FLOOR {
        Err(SurplusError::ZeroMargin(report))
    } else {
        Ok(report)
    }
}

/// Scan the scalar twist margin `s_yy` over sampled `(x, y)`: positive
/// means the slope `y ↦ s_y(x, y)` is strictly increasing, so a slope value
/// singles out one target per source point and the Legendre transform
/// ([`legendre_dual`]) is involutive. Errors with
/// [`SurplusError::ZeroMargin`] when the sampled minimum drops below
/// [`tol::NONDEGENERACY_FLOOR`] — routine for periodic targets, where the
/// slope cannot be globally monotone and only the local balance is used, so
/// callers should treat the failure as a downgraded guarantee rather than a
/// defect. Convexifying the surplus raises this margin by exactly the added
/// coefficient.
pub fn check_convexity(
    model: &dyn SurplusModel,
    region: &Region,
    y_lo: f64,
    y_hi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MarginReport, SurplusError> {
    let mut report = MarginReport {
        margin: f64::INFINITY,
        arg_x: Vec2::new(f64::NAN, f64::NAN),
        arg_y: f64::NAN,
        arg_y_bar: None,
        samples: 0,
    };
    report.samples = sample_in_region(region, y_lo, y_hi, n_samples, seed, |x, y| {
        let m = model.d_yy(x, y);
        if m < report.margin {
            report.margin = m;
            report.arg_x = x;
            report.arg_y = y;
        }
    });
    if report.margin < tol::NONDEGENERACY_FLOOR {
        Err(SurplusError::ZeroMargin(report))
    } else {
        Ok(report)
    }
}

/// Worst relative disagreement between the analytic bundle and central
/// differences of the model itself over sampled `(x, y)`.
///
/// Checks `s_y, s_yy, s_yyy` against differences in `y` and
/// `∇ₓs, ∇ₓs_y, ∇ₓs_yy` against differences in `x`, at step
/// [`tol::FD_CHECK_STEP`], normalizing by `max(1, |analytic|)`.
pub fn check_derivatives(
    model: &dyn SurplusModel,
    region: &Region,
    y_lo: f64,
    y_hi: f64,
    n_samples: usize,
    seed: u64,
) -> f64 {
    let h = tol::FD_CHECK_STEP;
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let mut worst: f64 = 0.0;
    let mut rel = |analytic: f64, fd: f64| {
        let err = num::abs(analytic - fd) / f64::max(1.0, num::abs(analytic));
        if err > worst {
            worst = err;
        }
    };
    sample_in_region(region, y_lo, y_hi, n_samples, seed, |x, y| {
        rel(
            model.d_y(x, y),
            (model.eval(x, y + h) - model.eval(x, y - h)) / (2.0 * h),
        );
        rel(
            model.d_yy(x, y),
            (model.d_y(x, y + h) - model.d_y(x, y - h)) / (2.0 * h),
        );
        rel(
            model.d_yyy(x, y),
            (model.d_yy(x, y + h) - model.d_yy(x, y - h)) / (2.0 * h),
        );
        let g = model.grad_x(x, y);
        rel(g.x, (model.eval(x + ex, y) - model.eval(x - ex, y)) / (2.0 * h));
        rel(g.y, (model.eval(x + ey, y) - model.eval(x - ey, y)) / (2.0 * h));
        let g = model.grad_x_dy(x, y);
        rel(g.x, (model.d_y(x + ex, y) - model.d_y(x - ex, y)) / (2.0 * h));
        rel(g.y, (model.d_y(x + ey, y) - model.d_y(x - ey, y)) / (2.0 * h));
        let g = model.grad_x_dyy(x, y);
        rel(g.x, (model.d_yy(x + ex, y) - model.d_yy(x - ex, y)) / (2.0 * h));
        rel(g.y, (model.d_yy(x + ey, y) - model.d_yy(x - ey, y)) / (2.0 * h));
    });
    worst
}

/// Scan resolution of the 1-d searches below (dense enough that the golden
/// polish always starts in the right basin for smooth presets).
const SCAN_POINTS: usize = 512;

/// Dense scan + golden polish for `max f` over `[a, b]`.
fn scan_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    crate::search::scan_max(f, a, b, SCAN_POINTS)
}

/// Surplus exponential: the target `y` solving `∇ₓ s(x, y) = p`.
///
/// Minimizes `|∇ₓs(x, y) - p|²` by dense scan + golden polish; succeeds when
/// the residual at the minimizer is below [`tol::S_EXP_TOL`], else returns
/// [`SurplusError::NoPreimage`] with the best candidate.
pub fn s_exp(
    model: &dyn SurplusModel,
    x: Vec2,
    p: Vec2,
    y_lo: f64,
    y_hi: f64,
) -> Result<f64, SurplusError> {
    let objective = |y: f64| -(model.grad_x(x, y) - p).norm_sq();
    let (y_star, neg_sq) = scan_max(&objective, y_lo, y_hi);
    let residual = num::sqrt(-neg_sq);
    if residual <= tol::S_EXP_TOL {
        Ok(y_star)
    } else {
        Err(SurplusError::NoPreimage { best_y: y_star, residual })
    }
}

/// Result of the scalar convex transform.
#[derive(Clone, Copy, Debug)]
pub struct LegendreDual {
    /// `sup_y (p y - s(x, y))`.
    pub value: f64,
    /// The maximizer (possibly an endpoint of the target interval).
    pub y_star: f64,
}

/// Scalar convex transform of `y ↦ s(x, y)` at slope `p`:
/// `s*(x, p) = sup_{y ∈ [y_lo, y_hi]} (p y - s(x, y))`.
///
/// Requires convexity in `y` along the interval (checked on a dense grid);
/// otherwise the transform is not involutive and the caller should
/// convexify first — the error says where convexity failed.
pub fn legendre_dual(
    model: &dyn SurplusModel,
    x: Vec2,
    p: f64,
    y_lo: f64,
    y_hi: f64,
) -> Result<LegendreDual, SurplusError> {
    for i in 0..=SCAN_POINTS {
        let y = y_lo + (y_hi - y_lo) * i as f64 / SCAN_POINTS as f64;
        let s_yy = model.d_yy(x, y);
        if s_yy <= 0.0 {
            return Err(SurplusError::NotConvex { y, s_yy });
        }
    }
    let objective = |y: f64| p * y - model.eval(x, y);
    let (y_star, value) = scan_max(&objective, y_lo, y_hi);
    Ok(LegendreDual { value, y_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;

    const PI: f64 = core::f64::consts::PI;

    /// Pure-target quadratic used by the transform edge cases; ignores `x`.
    struct QuadraticY;

    impl SurplusModel for QuadraticY {
        fn eval(&self, _x: Vec2, y: f64) -> f64 {
            0.5 * y * y
        }
        fn d_y(&self, _x: Vec2, y: f64) -> f64 {
            y
        }
        fn d_yy(&self, _x: Vec2, _y: f64) -> f64 {
            1.0
        }
        fn d_yyy(&self, _x: Vec2, _y: f64) -> f64 {
            0.0
        }
        fn grad_x(&self, _x: Vec2, _y: f64) -> Vec2 {
            Vec2::new(0.0, 0.0)
        }
        fn grad_x_dy(&self, _x: Vec2, _y: f64) -> Vec2 {
            Vec2::new(0.0, 0.0)
        }
        fn grad_x_dyy(&self, _x: Vec2, _y: f64) -> Vec2 {
            Vec2::new(0.0, 0.0)
        }
        fn label(&self) -> String {
            String::from("y^2/2")
        }
    }

    /// Analytic bundles of all presets agree with central differences to
    /// 1e-5 relative at step 1e-4 on sampled points.
    #[test]
    fn preset_bundles_pass_fd_consistency() {
        let annulus = Region::annulus();
        let square = Region::unit_square();
        let cases: [(&dyn SurplusModel, &Region, f64, f64); 4] = [
            (&Annulus, &annulus, 0.0, 2.0 * PI),
            (&Strip, &square, 0.0, 1.0),
            (&Tilted, &square, 0.0, 1.0),
            (&Convexified::new(Tilted, 0.7), &square, 0.0, 1.0),
        ];
        for (model, region, lo, hi) in cases {
            let worst = check_derivatives(model, region, lo, hi, 1000, 7);
            assert!(
                worst <= tol::FD_CHECK_REL,
                "{}: worst FD mismatch {worst:e}",
                model.label()
            );
        }
    }

    #[test]
    fn bundle_assembles_all_entries() {
        let b = eval_bundle(&Tilted, Vec2::new(0.3, 0.9), 0.5);
        assert!((b.s - (0.15 + 0.5 * 0.9 * 0.25)).abs() < 1e-15);
        assert!((b.s_y - (0.3 + 0.45)).abs() < 1e-15);
        assert!((b.s_yy - 0.9).abs() < 1e-15);
        assert_eq!(b.s_yyy, 0.0);
        assert!((b.grad_x - Vec2::new(0.5, 0.125)).norm() < 1e-15);
        assert!((b.grad_x_dy - Vec2::new(1.0, 0.5)).norm() < 1e-15);
        assert_eq!(b.grad_x_dyy, Vec2::new(0.0, 1.0));
    }

    /// Nondegeneracy margins: annulus has |∇ₓs_y| ≡ 1; tilted has
    /// |(1, y)| ≥ 1; the quadratic-in-y-only model degenerates.
    #[test]
    fn nondegeneracy_margins() {
        let annulus = Region::annulus();
        let r = check_nondegeneracy(&Annulus, &annulus, 0.0, 2.0 * PI, 500, 3).unwrap();
        assert!((r.margin - 1.0).abs() < 1e-12, "margin {}", r.margin);
        assert_eq!(r.samples, 500);

        let square = Region::unit_square();
        let r = check_nondegeneracy(&Tilted, &square, 0.0, 1.0, 500, 3).unwrap();
        assert!(r.margin >= 1.0 - 1e-12);

        let err = check_nondegeneracy(&QuadraticY, &square, 0.0, 1.0, 100, 3).unwrap_err();
        assert!(matches!(err, SurplusError::ZeroMargin(rep) if rep.margin == 0.0));
    }

    /// Enhanced twist: positive margin for annulus and tilted, zero for the
    /// strip (its gradient differences are always parallel to ∇ₓs_y).
    #[test]
    fn enhanced_twist_margins() {
        let annulus = Region::annulus();
        let r = check_enhanced_twist(&Annulus, &annulus, 0.0, 2.0 * PI, 500, 11).unwrap();
        assert!(r.margin > tol::NONDEGENERACY_FLOOR);
        assert!(r.arg_y_bar.is_some());

        let square = Region::unit_square();
        let r = check_enhanced_twist(&Tilted, &square, 0.0, 1.0, 500, 11).unwrap();
        assert!(r.margin > tol::NONDEGENERACY_FLOOR);

        let err = check_enhanced_twist(&Strip, &square, 0.0, 1.0, 200, 11).unwrap_err();
        match err {
            SurplusError::ZeroMargin(rep) => assert!(rep.margin < 1e-12),
            other => panic!("expected ZeroMargin, got {other:?}"),
        }
    }

    /// Scalar twist (convexity) margins: the raw strip sits exactly at zero
    /// and convexifying lifts it by the added coefficient; the periodic ring
    /// is genuinely non-monotone (margin −1 at the outer radius where the
    /// gradient direction opposes the point).
    #[test]
    fn convexity_margins() {
        let square = Region::unit_square();
        let err = check_convexity(&Strip, &square, 0.0, 1.0, 300, 17).unwrap_err();
        match err {
            SurplusError::ZeroMargin(rep) => assert_eq!(rep.margin, 0.0),
            other => panic!("expected ZeroMargin, got {other:?}"),
        }

        let lifted = Convexified::new(Strip, 0.5);
        let r = check_convexity(&lifted, &square, 0.0, 1.0, 300, 17).unwrap();
        assert!((r.margin - 0.5).abs() < 1e-12, "margin {}", r.margin);

        let annulus = Region::annulus();
        let err = check_convexity(&Annulus, &annulus, 0.0, 2.0 * PI, 2000, 17).unwrap_err();
        match err {
            SurplusError::ZeroMargin(rep) => {
                assert!(rep.margin < -0.9, "margin {}", rep.margin);
                assert!(rep.arg_x.norm() > 0.9, "worst point {:?}", rep.arg_x);
            }
            other => panic!("expected ZeroMargin, got {other:?}"),
        }
    }

    /// Surplus exponential on the annulus: ∇ₓs = (cos y, sin y) matches the
    /// prescribed direction at y = atan2.
    #[test]
    fn s_exp_inverts_gradient_in_target() {
        let y = s_exp(
            &Annulus,
            Vec2::new(0.8, 0.0),
            Vec2::new((0.3f64).cos(), (0.3f64).sin()),
            0.0,
            2.0 * PI,
        )
        .unwrap();
        assert!((y - 0.3).abs() < 1e-7, "y {y}");

        // A direction off the unit circle has no preimage.
        let err = s_exp(&Annulus, Vec2::new(0.8, 0.0), Vec2::new(2.0, 0.0), 0.0, 2.0 * PI)
            .unwrap_err();
        match err {
            SurplusError::NoPreimage { residual, .. } => assert!(residual > 0.5),
            other => panic!("expected NoPreimage, got {other:?}"),
        }
    }

    /// Transform values pinned by the brute-force oracle suite:
    /// sup(0.7y - y²/2) = 0.245 at 0.7; the convexified strip at
    /// (x₁, p) = (0.3, 0.8) gives 0.125 at 0.5; the raw strip is NotConvex.
    #[test]
    fn legendre_dual_matches_pinned_values() {
        let d = legendre_dual(&QuadraticY, Vec2::new(0.0, 0.0), 0.7, 0.0, 1.0).unwrap();
        assert!((d.value - 0.245).abs() < 1e-9, "value {}", d.value);
        assert!((d.y_star - 0.7).abs() < 1e-6, "y* {}", d.y_star);

        let model = Convexified::new(Strip, 1.0);
        let d = legendre_dual(&model, Vec2::new(0.3, 0.9), 0.8, 0.0, 1.0).unwrap();
        assert!((d.value - 0.125).abs() < 1e-9, "value {}", d.value);
        assert!((d.y_star - 0.5).abs() < 1e-6, "y* {}", d.y_star);

        let err = legendre_dual(&Strip, Vec2::new(0.3, 0.9), 0.8, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, SurplusError::NotConvex { s_yy, .. } if s_yy == 0.0));

        // Slope outside the attainable range: maximizer pinned to an
        // endpoint, still a valid value.
        let d = legendre_dual(&QuadraticY, Vec2::new(0.0, 0.0), 5.0, 0.0, 1.0).unwrap();
        assert!((d.y_star - 1.0).abs() < 1e-9);
        assert!((d.value - 4.5).abs() < 1e-9);
    }

    /// Scalar form of the dual smoothness bound: for s = x₁y + c y²/2 the
    /// mixed derivative of the transform in (x, p) satisfies
    /// |∂y*/∂x| = |∇ₓ s_y| / s_yy exactly (both sides equal √(1+y²)-free
    /// 1/c here since ∇ₓs_y = (1,0)).
    #[test]
    fn dual_mixed_derivative_lower_bound() {
        let c = 0.8;
        let model = Convexified::new(Strip, c);
        let x = Vec2::new(0.3, 0.5);
        let p = 0.75;
        // y*(x) is affine here, so a wide step costs no truncation error
        // while damping the ~1e-8 maximizer noise (a quadratic peak is flat
        // to machine precision over a √ε-wide window).
        let h = 1e-3;
        let y_at = |xx: Vec2| {
            legendre_dual(&model, xx, p, 0.0, 1.0).unwrap().y_star
        };
        let d1 = (y_at(x + Vec2::new(h, 0.0)) - y_at(x - Vec2::new(h, 0.0))) / (2.0 * h);
        let d2 = (y_at(x + Vec2::new(0.0, h)) - y_at(x - Vec2::new(0.0, h))) / (2.0 * h);
        let mixed = Vec2::new(d1, d2).norm();
        let y_star = y_at(x);
        let bound = model.grad_x_dy(x, y_star).norm() / model.d_yy(x, y_star);
        assert!(
            mixed >= bound - 1e-4,
            "mixed {mixed} vs lower bound {bound}"
        );
    }

    /// The convexified wrapper shifts s_y by c·y and s_yy by c and leaves
    /// the x-derivatives untouched.
    #[test]
    fn convexified_shifts_only_target_derivatives() {
        let m = Convexified::new(Tilted, 2.5);
        let x = Vec2::new(0.4, 0.6);
        let y = 0.3;
        assert!((m.d_y(x, y) - (Tilted.d_y(x, y) + 2.5 * y)).abs() < 1e-15);
        assert!((m.d_yy(x, y) - (Tilted.d_yy(x, y) + 2.5)).abs() < 1e-15);
        assert_eq!(m.d_yyy(x, y), Tilted.d_yyy(x, y));
        assert_eq!(m.grad_x_dy(x, y), Tilted.grad_x_dy(x, y));
        assert_eq!(m.grad_x_dyy(x, y), Tilted.grad_x_dyy(x, y));
        assert!(m.label().contains("tilted"));
    }

    #[test]
    fn preset_registry_resolves_names() {
        assert_eq!(preset_model("annulus").unwrap().label(), "annulus");
        assert_eq!(preset_model("strip").unwrap().label(), "strip");
        assert_eq!(preset_model("tilted").unwrap().label(), "tilted");
        assert!(preset_model("unknown").is_none());
        assert_eq!(
            preset_model("annulus").unwrap().period(),
            Some(2.0 * PI)
        );
        assert_eq!(preset_model("strip").unwrap().period(), None);
    }
}
