//! The local balance operator and its derivatives.
//!
//! For a target coordinate `y`, potential slope `p`, and potential
//! curvature `q`, the source region splits along the indifference curve
//! `X₁(y, p) = {x : s_y(x, y) = p}` and its active part
//! `X₂(y, p, q) = X₁ ∩ {s_yy(x, y) ≤ q}`. The operator
//!
//! ```text
//! G₂(y, p, q) = ∫_{X₂} (q − s_yy(x, y)) · f(x) / |∇ₓ s_y(x, y)| dH¹(x)
//! ```
//!
//! is the density of source mass swept past target `y` per unit target
//! length when the dual potential has slope `p` and curvature `q` there.
//! Matching it to the target density — solving `G₂(y, k(y), q) = g(y)` for
//! `q` — turns the transport problem into an ODE for the slope `k`.
//! [`eval_g1`] is the unrestricted companion (integral over all of `X₁`),
//! useful as a diagnostic: the two agree where `s_yy ≤ q` holds on the
//! whole curve.
//!
//! `G₂` is nondecreasing in `q` (the integrand grows pointwise and the
//! domain grows with `q`), which makes the pointwise inversion
//! ([`invert_g2`]) a safeguarded Newton iteration on a monotone function.
//! The quantitative version of that monotonicity is the ellipticity bound
//! `G₂(y, p, q′) − G₂(y, p, q) ≥ λ (q′ − q)` for `q′ ≥ q` with
//! `λ = G₂/Θ`, `Θ = max_{X₂} (q − s_yy)` ([`ellipticity_constant`]).
//!
//! # Derivatives
//!
//! The analytic derivatives ([`d_g2_dq`], [`d_g2_dp`], [`d_g2_dy`]) come
//! from transporting the curve integral: writing `a = (q − s_yy) f w` with
//! the mobility `w = 1/|∇ₓ s_y|` and the unit curve normal
//! `n̂ = ∇ₓ s_y · w`,
//!
//! - `∂G₂/∂q = ∫_{X₂} f w dH¹` — the integrand gains `1` per unit `q`, and
//!   the domain growth contributes nothing because `a = 0` on the moving
//!   cut `{s_yy = q}`;
//! - `∂G₂/∂p`: the curve translates with normal speed `w`, giving the
//!   advection integral `∫ ∇·(a n̂) w dH¹` plus a term for each endpoint
//!   sliding along `∂X`;
//! - `∂G₂/∂y`: the integrand drifts (`∂a/∂y` at fixed `x`), the curve
//!   advects with normal speed `−s_yy w`, endpoints slide along `∂X`, and
//!   the rotation of `n̂` contributes an area/boundary pair that cancels
//!   exactly in the continuum ([`TargetDerivative`] keeps the pieces).
//!
//! Endpoint terms divide by `√(1 − (n̂·n̂_X)²)`; when the curve meets `∂X`
//! nearly tangentially that factor degenerates and the derivative is
//! reported as [`OperatorError::TransversalityLoss`] rather than a huge
//! unreliable number.

use alloc::vec::Vec;

use crate::density::Density2;
use crate::geometry::{
    boundary_restricted_integral, integrate_over_mesh, restrict_sublevel, sublevel_integral,
    trace_iso, Constraint, GeometryError, LevelSetMesh, QuadPoint, Region, ScalarField,
};
use crate::num;
use crate::surplus::SurplusModel;
use crate::tol;
use crate::vec2::Vec2;

/// Everything an operator evaluation needs: the surplus, the region, the
/// source density, and the discretization knobs.
pub struct OperatorEnv<'a> {
    pub model: &'a dyn SurplusModel,
    pub region: &'a Region,
    pub source: &'a Density2,
    /// Marching-squares grid resolution (cells per axis) for curve tracing
    /// and the area term of the target derivative.
    pub cells: usize,
    /// Scan/quadrature resolution for restricted boundary line integrals.
    pub boundary_panels: usize,
}

impl<'a> OperatorEnv<'a> {
    /// Environment with the default boundary resolution (`8 × cells`).
    pub fn new(
        model: &'a dyn SurplusModel,
        region: &'a Region,
        source: &'a Density2,
        cells: usize,
    ) -> Self {
        OperatorEnv { model, region, source, cells, boundary_panels: 8 * cells }
    }
}

/// Operator-layer failures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorError {
    /// The indifference curve `{s_y(·, y) = p}` does not intersect the
    /// region: the requested slope is not attained by any source point.
    EmptyLevelSet { y: f64, p: f64 },
    /// The curve exists but carries (essentially) no source mass, or the
    /// requested operator value is not positive; the balance equation has
    /// no solution there.
    NonPositiveMass { y: f64, p: f64, mass: f64 },
    /// The curve meets `∂X` almost tangentially at `at`; endpoint terms of
    /// the analytic derivatives are ill-conditioned
    /// (`√(1 − alignment²) < 1e-4`).
    TransversalityLoss { at: Vec2, alignment: f64 },
    /// The monotonicity bound degenerates: `G₂ ≤ 0` or `Θ ≤ 0` at the
    /// evaluation point.
    NotElliptic { g2: f64, theta: f64 },
    /// The inversion failed to reach the requested tolerance within its
    /// iteration budget.
    InversionStalled { y: f64, p: f64, residual: f64 },
    /// Tracing failure underneath (degenerate gradient, bad grid).
    Geometry(GeometryError),
}

impl From<GeometryError> for OperatorError {
    fn from(e: GeometryError) -> Self {
        OperatorError::Geometry(e)
    }
}

impl core::fmt::Display for OperatorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OperatorError::EmptyLevelSet { y, p } => {
                write!(f, "empty indifference curve at y={y}, p={p}")
            }
            OperatorError::NonPositiveMass { y, p, mass } => {
                write!(f, "no positive mass on the curve at y={y}, p={p} (mass {mass:.3e})")
            }
            OperatorError::TransversalityLoss { at, alignment } => write!(
                f,
                "curve nearly tangent to the region boundary at ({}, {}) (|n̂·n̂_X| = {alignment:.6})",
                at.x, at.y
            ),
            OperatorError::NotElliptic { g2, theta } => {
                write!(f, "ellipticity degenerates: G2={g2:.3e}, theta={theta:.3e}")
            }
            OperatorError::InversionStalled { y, p, residual } => {
                write!(f, "inversion stalled at y={y}, p={p} (residual {residual:.3e})")
            }
            OperatorError::Geometry(e) => write!(f, "geometry: {e}"),
        }
    }
}

impl core::error::Error for OperatorError {}

/// Result of [`invert_g2`].
#[derive(Clone, Copy, Debug)]
pub struct Inversion {
    /// Curvature `q` with `G₂(y, p, q)` equal to the target value.
    pub q: f64,
    /// Operator value at the returned `q`.
    pub g2: f64,
    /// `∂G₂/∂q` at the returned `q`.
    pub slope: f64,
    /// Newton/bisection iterations used.
    pub iterations: usize,
}

/// Result of [`ellipticity_constant`].
#[derive(Clone, Copy, Debug)]
pub struct Ellipticity {
    /// Lower bound on the increment slope: `G₂(q′) − G₂(q) ≥ λ (q′ − q)`.
    pub lambda: f64,
    /// `Θ = max_{X₂} (q − s_yy)`, the largest integrand value.
    pub theta: f64,
    /// Operator value at the evaluation point.
    pub g2: f64,
}

/// The target derivative `∂G₂/∂y` split into its transport pieces; see the
/// module docs. `rotation_area + rotation_boundary` vanishes identically in
/// the continuum (the normal's rotation velocity is orthogonal to the
/// normal), so the pair doubles as a discretization self-check.
#[derive(Clone, Copy, Debug)]
pub struct TargetDerivative {
    /// `∫_{X₂} ∂a/∂y dH¹` at fixed `x` (surplus drift under the integral).
    pub integrand_drift: f64,
    /// Advection of the curve along its normal at speed `−s_yy w`.
    pub curve_advection: f64,
    /// Endpoints sliding along `∂X` as the curve moves.
    pub endpoint_slide: f64,
    /// Area term from the rotation of the curve normal.
    pub rotation_area: f64,
    /// Boundary companion of `rotation_area` (opposite sign in exact
    /// arithmetic).
    pub rotation_boundary: f64,
}

impl TargetDerivative {
    /// The full derivative: sum of every piece.
    pub fn total(&self) -> f64 {
        self.integrand_drift
            + self.curve_advection
            + self.endpoint_slide
            + self.rotation_area
            + self.rotation_boundary
    }
}

/// Trace the indifference curve `X₁(y, p) ∩ X`.
pub fn level_curve(env: &OperatorEnv, y: f64, p: f64) -> Result<LevelSetMesh, OperatorError> {
    let v = move |x: Vec2| env.model.d_y(x, y);
    let g = move |x: Vec2| env.model.grad_x_dy(x, y);
    let field = ScalarField::new(&v, &g);
    let mesh = trace_iso(&field, p, env.region, env.cells)?;
    check_mobility(&mesh)?;
    Ok(mesh)
}

/// Restrict a traced curve to the active part `{s_yy(·, y) ≤ q}`.
pub fn restrict_active(env: &OperatorEnv, y: f64, mesh: &LevelSetMesh, q: f64) -> LevelSetMesh {
    let cv = move |x: Vec2| env.model.d_y(x, y);
    let cg = move |x: Vec2| env.model.grad_x_dy(x, y);
    let curve = ScalarField::new(&cv, &cg);
    let av = move |x: Vec2| env.model.d_yy(x, y);
    let ag = move |x: Vec2| env.model.grad_x_dyy(x, y);
    let aux = ScalarField::new(&av, &ag);
    restrict_sublevel(mesh, &curve, &aux, q)
}

/// Trace both indifference sets at once: `(X₁, X₂)`.
pub fn indifference_sets(
    env: &OperatorEnv,
    y: f64,
    p: f64,
    q: f64,
) -> Result<(LevelSetMesh, LevelSetMesh), OperatorError> {
    let x1 = level_curve(env, y, p)?;
    let x2 = restrict_active(env, y, &x1, q);
    Ok((x1, x2))
}

/// Quadrature points must have usable mobility: `|∇ₓ s_y|` at or above the
/// degeneracy floor. Tracing already rejects degenerate sign-change cells,
/// so this only guards quad points that landed extremely close to a critical
/// point of `s_y(·, y)`.
fn check_mobility(mesh: &LevelSetMesh) -> Result<(), OperatorError> {
    for qp in &mesh.quad_points {
        if qp.grad_norm < tol::NONDEGENERACY_FLOOR {
            return Err(OperatorError::Geometry(GeometryError::DegenerateCell { at: qp.x }));
        }
    }
    Ok(())
}

/// `∫ (q − s_yy) f w dH¹` over an already-traced mesh.
fn swept_mass(env: &OperatorEnv, y: f64, q: f64, mesh: &LevelSetMesh) -> f64 {
    integrate_over_mesh(mesh, &|qp: &QuadPoint| {
        (q - env.model.d_yy(qp.x, y)) * env.source.eval(qp.x) / qp.grad_norm
    })
}

/// `∫ f w dH¹` over an already-traced mesh (the `q`-slope of the above).
fn curve_mass(env: &OperatorEnv, mesh: &LevelSetMesh) -> f64 {
    integrate_over_mesh(mesh, &|qp: &QuadPoint| env.source.eval(qp.x) / qp.grad_norm)
}

/// The local balance operator `G₂(y, p, q)` over the active curve `X₂`.
pub fn eval_g2(env: &OperatorEnv, y: f64, p: f64, q: f64) -> Result<f64, OperatorError> {
    let (_, x2) = indifference_sets(env, y, p, q)?;
    Ok(swept_mass(env, y, q, &x2))
}

/// The unrestricted companion `G₁(y, p, q)` over the whole curve `X₁`.
pub fn eval_g1(env: &OperatorEnv, y: f64, p: f64, q: f64) -> Result<f64, OperatorError> {
    let x1 = level_curve(env, y, p)?;
    Ok(swept_mass(env, y, q, &x1))
}

/// `∂G₂/∂q = ∫_{X₂} f w dH¹`.
pub fn d_g2_dq(env: &OperatorEnv, y: f64, p: f64, q: f64) -> Result<f64, OperatorError> {
    let (_, x2) = indifference_sets(env, y, p, q)?;
    Ok(curve_mass(env, &x2))
}

/// `∂G₁/∂q = ∫_{X₁} f w dH¹` (independent of `q`).
pub fn d_g1_dq(env: &OperatorEnv, y: f64, p: f64) -> Result<f64, OperatorError> {
    let x1 = level_curve(env, y, p)?;
    Ok(curve_mass(env, &x1))
}

/// The transported integrand `a = (q − s_yy) f w` as a closure.
fn integrand_a<'c>(env: &'c OperatorEnv, y: f64, q: f64) -> impl Fn(Vec2) -> f64 + 'c {
    move |x: Vec2| {
        let g1 = env.model.grad_x_dy(x, y);
        (q - env.model.d_yy(x, y)) * env.source.eval(x) / g1.norm()
    }
}

/// Unit curve normal `n̂ = ∇ₓ s_y / |∇ₓ s_y|` as a closure (zero where the
/// gradient degenerates, which [`check_mobility`] has already excluded at
/// all evaluation sites).
fn unit_normal<'c>(env: &'c OperatorEnv, y: f64) -> impl Fn(Vec2) -> Vec2 + 'c {
    move |x: Vec2| {
        env.model
            .grad_x_dy(x, y)
            .normalized(tol::NONDEGENERACY_FLOOR)
            .unwrap_or(Vec2::new(0.0, 0.0))
    }
}

/// Divergence of a planar field by central differences along an orthonormal
/// frame `(u, v)` with step `tol::H_GEO`; the estimate is frame-invariant
/// to second order.
fn divergence(field: &dyn Fn(Vec2) -> Vec2, x: Vec2, u: Vec2, v: Vec2) -> f64 {
    let h = tol::H_GEO;
    ((field(x + u * h) - field(x - u * h)).dot(u)
        + (field(x + v * h) - field(x - v * h)).dot(v))
        / (2.0 * h)
}

/// `∫ ∇·(a n̂) · scale dH¹` over the mesh, the advection core shared by the
/// `p`- and `y`-derivatives.
fn advection_integral(
    env: &OperatorEnv,
    y: f64,
    q: f64,
    mesh: &LevelSetMesh,
    scale: &dyn Fn(&QuadPoint) -> f64,
) -> f64 {
    let a = integrand_a(env, y, q);
    let n = unit_normal(env, y);
    let flux = move |x: Vec2| n(x) * a(x);
    integrate_over_mesh(mesh, &|qp: &QuadPoint| {
        divergence(&flux, qp.x, qp.normal, qp.normal.perp()) * scale(qp)
    })
}

/// `Σ_hits a w (n̂·n̂_X)/√(1 − (n̂·n̂_X)²) · factor(x)` over the boundary
/// hits of the mesh, the endpoint core shared by the `p`- and
/// `y`-derivatives. Errors when a hit is nearly tangential.
fn endpoint_sum(
    env: &OperatorEnv,
    y: f64,
    q: f64,
    mesh: &LevelSetMesh,
    factor: &dyn Fn(Vec2) -> f64,
) -> Result<f64, OperatorError> {
    let a = integrand_a(env, y, q);
    let mut acc = 0.0;
    for hit in &mesh.boundary_hits {
        let c = hit.curve_normal.dot(hit.region_normal);
        let sine = num::sqrt(f64::max(0.0, 1.0 - c * c));
        if sine < tol::TRANSVERSALITY_FLOOR {
            return Err(OperatorError::TransversalityLoss { at: hit.x, alignment: num::abs(c) });
        }
        let w = 1.0 / env.model.grad_x_dy(hit.x, y).norm();
        acc += a(hit.x) * w * (c / sine) * factor(hit.x);
    }
    Ok(acc)
}

/// `∂G₂/∂p`: advection of the curve at unit-speed-per-mobility plus
/// endpoint slide along `∂X`.
pub fn d_g2_dp(env: &OperatorEnv, y: f64, p: f64, q: f64) -> Result<f64, OperatorError> {
    let (_, x2) = indifference_sets(env, y, p, q)?;
    let interior = advection_integral(env, y, q, &x2, &|qp| 1.0 / qp.grad_norm);
    let endpoints = endpoint_sum(env, y, q, &x2, &|_| -1.0)?;
    Ok(interior + endpoints)
}

/// `∂G₂/∂y` in transport pieces; see [`TargetDerivative`].
pub fn d_g2_dy_parts(
    env: &OperatorEnv,
    y: f64,
    p: f64,
    q: f64,
) -> Result<TargetDerivative, OperatorError> {
    let (_, x2) = indifference_sets(env, y, p, q)?;

    // Integrand drift at fixed x: ∂a/∂y = f·(−s_yyy w − (q − s_yy) w³(g₁·g₂)).
    let drift = integrate_over_mesh(&x2, &|qp: &QuadPoint| {
        let x = qp.x;
        let g1 = env.model.grad_x_dy(x, y);
        let g2 = env.model.grad_x_dyy(x, y);
        let w = 1.0 / g1.norm();
        env.source.eval(x)
            * (-env.model.d_yyy(x, y) * w
                - (q - env.model.d_yy(x, y)) * w * w * w * g1.dot(g2))
    });

    // The curve moves with normal speed −s_yy·w as y varies.
    let advection = advection_integral(env, y, q, &x2, &|qp| {
        -env.model.d_yy(qp.x, y) / qp.grad_norm
    });
    let slide = endpoint_sum(env, y, q, &x2, &|x| env.model.d_yy(x, y))?;

    // Rotation pair: V = ∂n̂/∂y = w (g₂ − n̂ (n̂·g₂)) is orthogonal to n̂, so
    // ∫_Ω ∇·(aV) dH² over Ω = X ∩ {s_y ≤ p} ∩ {s_yy ≤ q} and the boundary
    // flux −∫_{∂X ∩ Ω} a V·n̂_X dH¹ cancel exactly (divergence theorem; the
    // {s_yy = q} face contributes nothing because a = 0 there).
    let a = integrand_a(env, y, q);
    let velocity = move |x: Vec2| {
        let g1 = env.model.grad_x_dy(x, y);
        let g2 = env.model.grad_x_dyy(x, y);
        let w = 1.0 / g1.norm();
        let n = g1 * w;
        (g2 - n * n.dot(g2)) * w
    };
    let rotation_flux = {
        let a = integrand_a(env, y, q);
        move |x: Vec2| velocity(x) * a(x)
    };
    let slope_field = move |x: Vec2| env.model.d_y(x, y);
    let curvature_field = move |x: Vec2| env.model.d_yy(x, y);
    let constraints = [
        Constraint { field: &slope_field, bound: p },
        Constraint { field: &curvature_field, bound: q },
    ];
    let ex = Vec2::new(1.0, 0.0);
    let ey = Vec2::new(0.0, 1.0);
    let rotation_area = sublevel_integral(
        env.region,
        &constraints,
        &|x| divergence(&rotation_flux, x, ex, ey),
        env.cells,
    );
    let boundary_integrand = |x: Vec2| {
        let n_x = env
            .region
            .boundary_normal(x)
            .unwrap_or(Vec2::new(0.0, 0.0));
        -a(x) * velocity(x).dot(n_x)
    };
    let rotation_boundary = match boundary_restricted_integral(
        env.region,
        &constraints,
        &boundary_integrand,
        env.boundary_panels,
    ) {
        Some(v) => v,
        None => boundary_mesh_integral(env, y, p, q, &boundary_integrand)?,
    };

    Ok(TargetDerivative {
        integrand_drift: drift,
        curve_advection: advection,
        endpoint_slide: slide,
        rotation_area,
        rotation_boundary,
    })
}

/// `∂G₂/∂y` (sum of the transport pieces).
pub fn d_g2_dy(env: &OperatorEnv, y: f64, p: f64, q: f64) -> Result<f64, OperatorError> {
    Ok(d_g2_dy_parts(env, y, p, q)?.total())
}

/// Fallback boundary integral for regions without parametric arcs: trace
/// `∂X` as the zero set of the implicit function (inside a container region
/// that never clips), restrict to both sub-levels, and integrate.
fn boundary_mesh_integral(
    env: &OperatorEnv,
    y: f64,
    p: f64,
    q: f64,
    integrand: &dyn Fn(Vec2) -> f64,
) -> Result<f64, OperatorError> {
    let container = Region::new(
        "container",
        env.region.bbox(),
        |_| -1.0,
        |_| Vec2::new(0.0, 0.0),
    );
    let bv = move |x: Vec2| env.region.implicit(x);
    let bg = move |x: Vec2| env.region.implicit_gradient(x);
    let boundary = ScalarField::new(&bv, &bg);
    let mesh = trace_iso(&boundary, 0.0, &container, env.cells)?;
    let sv = move |x: Vec2| env.model.d_y(x, y);
    let sg = move |x: Vec2| env.model.grad_x_dy(x, y);
    let slope = ScalarField::new(&sv, &sg);
    let cv = move |x: Vec2| env.model.d_yy(x, y);
    let cg = move |x: Vec2| env.model.grad_x_dyy(x, y);
    let curvature = ScalarField::new(&cv, &cg);
    let m1 = restrict_sublevel(&mesh, &boundary, &slope, p);
    let m2 = restrict_sublevel(&m1, &boundary, &curvature, q);
    Ok(integrate_over_mesh(&m2, &|qp: &QuadPoint| integrand(qp.x)))
}

/// Largest integrand value `Θ = max_{X₂} (q − s_yy)` over the mesh nodes
/// referenced by segments (nodes include clipped and cut endpoints, so the
/// extreme is sampled exactly on polygonal data).
fn max_excess(env: &OperatorEnv, y: f64, q: f64, mesh: &LevelSetMesh) -> f64 {
    let mut theta = f64::NEG_INFINITY;
    for seg in &mesh.segments {
        for node in [seg.a, seg.b] {
            let v = q - env.model.d_yy(mesh.nodes[node], y);
            if v > theta {
                theta = v;
            }
        }
    }
    theta
}

/// Solve `G₂(y, p, q) = target` for `q` by bracketed Newton.
///
/// The bracket starts at the smallest curvature on the curve (where `G₂ ≤ 0`)
/// and doubles upward until the operator exceeds the target; each Newton
/// step must stay inside the current bracket or it is replaced by bisection,
/// so convergence is unconditional for the monotone `G₂`. Terminates when
/// `|G₂ − target| ≤ 1e-8 · target`.
pub fn invert_g2(
    env: &OperatorEnv,
    y: f64,
    p: f64,
    target: f64,
) -> Result<Inversion, OperatorError> {
    if !(target > 0.0) {
        return Err(OperatorError::NonPositiveMass { y, p, mass: target });
    }
    let x1 = level_curve(env, y, p)?;
    if x1.is_empty() {
        return Err(OperatorError::EmptyLevelSet { y, p });
    }
    let full_mass = curve_mass(env, &x1);
    if full_mass <= tol::EMPTY_MESH_LENGTH {
        return Err(OperatorError::NonPositiveMass { y, p, mass: full_mass });
    }

    // Curvature range along the curve, from the mesh nodes.
    let mut q_min = f64::INFINITY;
    let mut q_max = f64::NEG_INFINITY;
    for seg in &x1.segments {
        for node in [seg.a, seg.b] {
            let v = env.model.d_yy(x1.nodes[node], y);
            q_min = f64::min(q_min, v);
            q_max = f64::max(q_max, v);
        }
    }

    let eval = |q: f64| -> (f64, f64) {
        let x2 = restrict_active(env, y, &x1, q);
        (swept_mass(env, y, q, &x2), curve_mass(env, &x2))
    };

    // Bracket: G₂(q_min) ≤ 0 < target; double the width until G₂ ≥ target
    // (guaranteed to terminate: G₂ grows like full_mass · q eventually).
    let lo0 = q_min;
    let mut step = f64::max(1.0, q_max - q_min);
    let mut hi = lo0 + step;
    let mut bracketed = false;
    for _ in 0..60 {
        if eval(hi).0 >= target {
            bracketed = true;
            break;
        }
        step *= 2.0;
        hi = lo0 + step;
    }
    if !bracketed {
        return Err(OperatorError::NonPositiveMass { y, p, mass: full_mass });
    }

    let (mut lo, mut hi) = (lo0, hi);
    let mut q = hi;
    for iter in 1..=200 {
        let (g2, slope) = eval(q);
        let residual = g2 - target;
        if num::abs(residual) <= tol::INVERT_REL_TOL * target {
            return Ok(Inversion { q, g2, slope, iterations: iter });
        }
        if residual > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        let newton = q - residual / slope;
        q = if slope > tol::INVERT_SLOPE_FLOOR && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let residual = eval(q).0 - target;
    Err(OperatorError::InversionStalled { y, p, residual })
}

/// The ellipticity constant `λ = G₂/Θ` at `(y, p, q)`: for any `q′ ≥ q`,
/// `G₂(y, p, q′) − G₂(y, p, q) ≥ λ (q′ − q)`, because `∂G₂/∂q` is
/// nondecreasing in `q` and already at least `G₂/Θ` at `q` itself.
pub fn ellipticity_constant(
    env: &OperatorEnv,
    y: f64,
    p: f64,
    q: f64,
) -> Result<Ellipticity, OperatorError> {
    let (x1, x2) = indifference_sets(env, y, p, q)?;
    if x1.is_empty() {
        return Err(OperatorError::EmptyLevelSet { y, p });
    }
    if x2.is_empty() {
        return Err(OperatorError::NotElliptic { g2: 0.0, theta: 0.0 });
    }
    let g2 = swept_mass(env, y, q, &x2);
    let theta = max_excess(env, y, q, &x2);
    if g2 <= tol::ELLIPTICITY_FLOOR || theta <= 0.0 {
        return Err(OperatorError::NotElliptic { g2, theta });
    }
    Ok(Ellipticity { lambda: g2 / theta, theta, g2 })
}

/// One row of an operator sweep (the CLI serializes these to CSV).
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub y: f64,
    pub p: f64,
    pub q: f64,
    pub g1: f64,
    pub g2: f64,
    pub dg2_dq: f64,
    pub lambda: f64,
}

/// Evaluate the operator family at a list of `(y, p, q)` points.
pub fn sweep(env: &OperatorEnv, points: &[(f64, f64, f64)]) -> Result<Vec<SweepRow>, OperatorError> {
    let mut rows = Vec::with_capacity(points.len());
    for &(y, p, q) in points {
        let (x1, x2) = indifference_sets(env, y, p, q)?;
        let g1 = swept_mass(env, y, q, &x1);
        let g2 = swept_mass(env, y, q, &x2);
        let dg2_dq = curve_mass(env, &x2);
        let theta = max_excess(env, y, q, &x2);
        let lambda = if theta > 0.0 && g2 > 0.0 { g2 / theta } else { 0.0 };
        rows.push(SweepRow { y, p, q, g1, g2, dg2_dq, lambda });
    }
    Ok(rows)
}
