//! The potential march: solve the balance equation globally along the
//! target.
//!
//! A [`TransportProblem`] couples a planar source density with a density on
//! a target interval (or circle). The solver looks for a scalar potential
//! `v` on the target whose slope `k = v′` satisfies, at every target point
//! `y`, the pointwise balance `G₂(y, k(y), k′(y)) = g(y)` — the
//! indifference curve of slope `k(y)` must sweep exactly the requested
//! target mass. Since [`crate::operators::invert_g2`] solves the balance
//! for the curvature `q = k′` given `(y, k)`, the global problem reduces to
//! a first-order ODE `k′(y) = q(y, k(y))` marched with classical
//! Runge–Kutta:
//!
//! - On an interval, the starting slope comes from the *nested*
//!   condition — the sub-level set `{s_y(·, y) ≤ k}` must hold the same
//!   mass as the target segment `[y_lo, y]` — solved by bisection at the
//!   first interior grid node ([`nested_initializer`]). One backward step
//!   fills the left endpoint.
//! - On a circle, the march shoots: the residual `S(k₀) = k(y_hi; k₀) − k₀`
//!   is driven to zero by a secant iteration. Some problems are *shooting
//!   degenerate* — the curvature does not depend on the slope, so `S ≡ 0`
//!   and any `k₀` closes the loop. The solver detects the flat residual and
//!   switches to the normalization `mean(k) = 0`, which pins the potential
//!   to be single-valued on the circle.
//!
//! A completed [`PotentialSolution`] stores the grid, the slope, the
//! potential (trapezoid antiderivative, zero at the first node), the
//! curvature used at each node, and the pointwise balance residuals. The
//! remaining functions interrogate a solution: [`assemble_conjugate`] builds
//! the source-side potential `u(x) = max_y (s(x, y) − v(y))`,
//! [`reconstruct_map`] evaluates the induced transport map `F`, and
//! [`verify_pushforward`] / [`verify_nonlocal`] / [`jacobian_check`] /
//! [`uniform_ellipticity_margin`] test the solution statistically and
//! differentially against the properties it is supposed to have.
//!
//! When the march hits a point where the balance cannot be solved (mass
//! exhausted, curve empty), the step is retried once at half length and the
//! solver then gives up, returning [`SolverError::Aborted`] carrying the
//! partial solution computed so far — callers can still write diagnostics
//! for the valid prefix.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::density::{Density1, Density2};
use crate::geometry::{sublevel_integral, Constraint, Region};
use crate::num;
use crate::operators::{self, OperatorEnv, OperatorError};
use crate::sampling::{LowDiscrepancy2, SplitMix64};
use crate::search;
use crate::surplus::SurplusModel;
use crate::tol;
use crate::vec2::Vec2;

/// Grid resolution used by [`TransportProblem::new`] to validate the source
/// mass (the target mass uses [`MASS_PANELS`] midpoint panels).
const MASS_CHECK_CELLS: usize = 256;
const MASS_PANELS: usize = 8192;

/// Shooting residuals with estimated slope `|ΔS/Δk₀|` below this are treated
/// as identically zero (shooting-degenerate problem) and the solver falls
/// back to the `mean(k) = 0` normalization. Genuine shooting problems have
/// slopes of order one; a degenerate one only shows inversion noise.
const FLAT_SHOOTING_SLOPE: f64 = 1e-4;

/// Maximum Newton polish iterations in [`reconstruct_map`].
const MAP_NEWTON_ITERS: usize = 12;

/// A fully specified transport problem: surplus model, source region and
/// density, target density on `[y_lo, y_hi]` (a circle when `periodic`,
/// identifying the endpoints).
pub struct TransportProblem<'a> {
    pub model: &'a dyn SurplusModel,
    pub region: &'a Region,
    pub source: &'a Density2,
    pub target: &'a Density1,
    pub y_lo: f64,
    pub y_hi: f64,
    pub periodic: bool,
    /// Source mass measured during validation.
    pub source_mass: f64,
    /// Target mass measured during validation.
    pub target_mass: f64,
}

/// Discretization knobs for [`solve_ode`].
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Number of Runge–Kutta intervals over the target (grid has
    /// `steps + 1` nodes).
    pub steps: usize,
    /// Curve-tracing resolution handed to the operator layer.
    pub cells: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { steps: 256, cells: 256 }
    }
}

/// The marched potential on the target grid.
///
/// All arrays share the grid length. `v` is the trapezoid antiderivative of
/// `k` with `v[0] = 0`; `q_used[i]` and `residual[i]` come from re-solving
/// the pointwise balance at node `i` after the march, so `residual` is an
/// honest measurement, not a copy of the ODE tolerance. Diagnostics are
/// keyed strings so downstream reports stay stable and flat.
#[derive(Clone, Debug)]
pub struct PotentialSolution {
    pub y_grid: Vec<f64>,
    /// Potential slope `k = v′` at the nodes.
    pub k: Vec<f64>,
    /// Potential values at the nodes (`v[0] = 0`).
    pub v: Vec<f64>,
    /// Curvature solving the balance at each node.
    pub q_used: Vec<f64>,
    /// `|G₂(y, k, q_used) − g(y)|` at each node.
    pub residual: Vec<f64>,
    /// Whether the grid closes into a circle.
    pub periodic: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Report from [`verify_pushforward`].
#[derive(Clone, Copy, Debug)]
pub struct PushforwardReport {
    /// Total-variation distance between the binned pushforward sample and
    /// the exact target bin masses.
    pub tv: f64,
    pub samples: usize,
    pub bins: usize,
    /// Fraction of rejection proposals that were accepted.
    pub acceptance: f64,
}

/// Report from [`jacobian_check`].
#[derive(Clone, Copy, Debug)]
pub struct JacobianReport {
    /// Worst relative mismatch between the analytic map Jacobian and its
    /// finite-difference counterpart.
    pub max_rel_error: f64,
    /// Samples actually compared.
    pub checked: usize,
    /// Samples skipped because the difference stencil left the region.
    pub skipped: usize,
}

/// Solver-layer failures.
#[derive(Debug)]
pub enum SolverError {
    /// A marginal does not integrate to one within [`tol::MARGINAL_TOL`].
    MassImbalance { label: String, mass: f64 },
    /// The nested initializer could not bracket the starting slope.
    BracketFailure { y: f64 },
    /// The shooting iteration ran out of iterations or lost its secant.
    ShootingStalled { residual: f64, iterations: usize },
    /// The march failed at `at_y` (last valid node); `partial` holds the
    /// solution prefix computed before the failure.
    Aborted { at_y: f64, source: OperatorError, partial: Box<PotentialSolution> },
    /// Rejection sampling of the source density accepted too small a
    /// fraction of proposals.
    RejectionStall { acceptance: f64 },
    /// The map Jacobian denominator `v″ − s_yy` degenerated at a sample.
    EllipticityLoss { at: Vec2, denominator: f64 },
    /// Operator failure outside the march (initialization, diagnostics).
    Operator(OperatorError),
}

impl From<OperatorError> for SolverError {
    fn from(e: OperatorError) -> Self {
        SolverError::Operator(e)
    }
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::MassImbalance { label, mass } => {
                write!(f, "marginal `{label}` has mass {mass:.6}, expected 1 ± {}", tol::MARGINAL_TOL)
            }
            SolverError::BracketFailure { y } => {
                write!(f, "no slope bracket for the nested condition at y={y}")
            }
            SolverError::ShootingStalled { residual, iterations } => {
                write!(f, "periodic shooting stalled after {iterations} iterations (residual {residual:.3e})")
            }
            SolverError::Aborted { at_y, source, .. } => {
                write!(f, "march aborted after y={at_y}: {source}")
            }
            SolverError::RejectionStall { acceptance } => {
                write!(f, "source rejection sampling stalled (acceptance {acceptance:.3e})")
            }
            SolverError::EllipticityLoss { at, denominator } => write!(
                f,
                "map Jacobian denominator degenerated at ({}, {}): v'' - s_yy = {denominator:.3e}",
                at.x, at.y
            ),
            SolverError::Operator(e) => write!(f, "operator: {e}"),
        }
    }
}

impl core::error::Error for SolverError {}

/// Composite midpoint rule for 1-d integrals (exact enough for the smooth
/// or piecewise-constant targets used here; O(n⁻²) on smooth integrands).
fn midpoint_1d(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(a + (i as f64 + 0.5) * h);
    }
    acc * h
}

impl core::fmt::Debug for TransportProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TransportProblem")
            .field("model", &self.model.label())
            .field("region", &self.region.label())
            .field("source", &self.source.label())
            .field("target", &self.target.label())
            .field("y_lo", &self.y_lo)
            .field("y_hi", &self.y_hi)
            .field("periodic", &self.periodic)
            .finish()
    }
}

impl<'a> TransportProblem<'a> {
    /// Validate and assemble a problem: both marginals must carry unit mass
    /// within [`tol::MARGINAL_TOL`] (measured on a fixed internal grid).
    pub fn new(
        model: &'a dyn SurplusModel,
        region: &'a Region,
        source: &'a Density2,
        target: &'a Density1,
        y_lo: f64,
        y_hi: f64,
        periodic: bool,
    ) -> Result<Self, SolverError> {
        let source_mass =
            sublevel_integral(region, &[], &|x| source.eval(x), MASS_CHECK_CELLS);
        if num::abs(source_mass - 1.0) > tol::MARGINAL_TOL {
            return Err(SolverError::MassImbalance {
                label: format!("source {}", source.label()),
                mass: source_mass,
            });
        }
        let target_mass = midpoint_1d(&|y| target.eval(y), y_lo, y_hi, MASS_PANELS);
        if num::abs(target_mass - 1.0) > tol::MARGINAL_TOL {
            return Err(SolverError::MassImbalance {
                label: format!("target {}", target.label()),
                mass: target_mass,
            });
        }
        Ok(TransportProblem {
            model,
            region,
            source,
            target,
            y_lo,
            y_hi,
            periodic,
            source_mass,
            target_mass,
        })
    }

    /// Operator environment at the given tracing resolution.
    pub fn env(&self, cells: usize) -> OperatorEnv<'_> {
        OperatorEnv::new(self.model, self.region, self.source, cells)
    }

    /// Target mass of `[y_lo, y]`.
    fn cumulative_target(&self, y: f64) -> f64 {
        if y <= self.y_lo {
            return 0.0;
        }
        let frac = (y - self.y_lo) / (self.y_hi - self.y_lo);
        let n = ((MASS_PANELS as f64 * frac) as usize).max(64);
        midpoint_1d(&|t| self.target.eval(t), self.y_lo, y, n)
    }

    /// Range of attainable slopes `s_y(x, y)` over the region (sampled on a
    /// bounding-box grid), slightly padded.
    fn slope_range(&self, y: f64) -> (f64, f64) {
        let bbox = self.region.bbox();
        let n = 64usize;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for iy in 0..=n {
            for ix in 0..=n {
                let x = Vec2::new(
                    bbox.lo.x + bbox.extent().x * ix as f64 / n as f64,
                    bbox.lo.y + bbox.extent().y * iy as f64 / n as f64,
                );
                if self.region.contains(x) {
                    let p = self.model.d_y(x, y);
                    lo = f64::min(lo, p);
                    hi = f64::max(hi, p);
                }
            }
        }
        let pad = 0.05 * (hi - lo) + 1e-9;
        (lo - pad, hi + pad)
    }
}

/// Starting slope from the nested condition: the slope `k` at which the
/// sub-level set `{s_y(·, y) ≤ k}` holds exactly the target mass of
/// `[y_lo, y]`. The sub-level mass is nondecreasing in `k`, so bisection on
/// the sampled slope range converges unconditionally; failure to bracket is
/// reported as [`SolverError::BracketFailure`].
pub fn nested_initializer(
    problem: &TransportProblem,
    y: f64,
    cells: usize,
) -> Result<f64, SolverError> {
    let want = problem.cumulative_target(y);
    let mu = |k: f64| -> f64 {
        let field = |x: Vec2| problem.model.d_y(x, y);
        let cons = [Constraint { field: &field, bound: k }];
        sublevel_integral(problem.region, &cons, &|x| problem.source.eval(x), cells)
    };
    let (mut lo, mut hi) = problem.slope_range(y);
    if mu(lo) - want > 0.0 || mu(hi) - want < 0.0 {
        return Err(SolverError::BracketFailure { y });
    }
    let span = hi - lo;
    for _ in 0..80 {
        if hi - lo <= 1e-15 * f64::max(1.0, span) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mu(mid) - want < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Curvature right-hand side of the march: `k′ = q` solving the balance.
fn rhs(env: &OperatorEnv, problem: &TransportProblem, y: f64, k: f64) -> Result<f64, OperatorError> {
    Ok(operators::invert_g2(env, y, k, problem.target.eval(y))?.q)
}

/// One classical Runge–Kutta step of `k′ = q(y, k)` from `y` with step `h`
/// (which may be negative).
fn rk4_step(
    env: &OperatorEnv,
    problem: &TransportProblem,
    y: f64,
    k: f64,
    h: f64,
) -> Result<f64, OperatorError> {
    let k1 = rhs(env, problem, y, k)?;
    let k2 = rhs(env, problem, y + 0.5 * h, k + 0.5 * h * k1)?;
    let k3 = rhs(env, problem, y + 0.5 * h, k + 0.5 * h * k2)?;
    let k4 = rhs(env, problem, y + h, k + h * k3)?;
    Ok(k + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// A full step with one halving retry: if the direct step fails, try two
/// half steps before giving up.
fn guarded_step(
    env: &OperatorEnv,
    problem: &TransportProblem,
    y: f64,
    k: f64,
    h: f64,
) -> Result<f64, OperatorError> {
    match rk4_step(env, problem, y, k, h) {
        Ok(next) => Ok(next),
        Err(_) => {
            let mid = rk4_step(env, problem, y, k, 0.5 * h)?;
            rk4_step(env, problem, y + 0.5 * h, mid, 0.5 * h)
        }
    }
}

/// March the slope over the whole grid from `k0` at the first node.
/// On failure returns the valid prefix `(nodes_done, error)`.
fn march(
    env: &OperatorEnv,
    problem: &TransportProblem,
    y_grid: &[f64],
    k0: f64,
) -> Result<Vec<f64>, (Vec<f64>, OperatorError)> {
    let mut k = Vec::with_capacity(y_grid.len());
    k.push(k0);
    for i in 0..y_grid.len() - 1 {
        let h = y_grid[i + 1] - y_grid[i];
        match guarded_step(env, problem, y_grid[i], k[i], h) {
            Ok(next) => k.push(next),
            Err(e) => return Err((k, e)),
        }
    }
    Ok(k)
}

/// Trapezoid antiderivative with zero at the first node.
fn trapezoid_antiderivative(y_grid: &[f64], k: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; k.len()];
    for i in 1..k.len() {
        v[i] = v[i - 1] + 0.5 * (y_grid[i] - y_grid[i - 1]) * (k[i] + k[i - 1]);
    }
    v
}

/// Assemble a [`PotentialSolution`] from a marched slope: re-solve the
/// balance at every node for honest curvatures and residuals, drop trailing
/// nodes where even the pointwise balance fails (can happen on the last
/// node of an aborted march), and integrate the potential.
fn finalize(
    env: &OperatorEnv,
    problem: &TransportProblem,
    y_grid: &[f64],
    k: &[f64],
    periodic: bool,
) -> PotentialSolution {
    let mut n = k.len();
    let mut q_used = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for i in 0..n {
        match operators::invert_g2(env, y_grid[i], k[i], problem.target.eval(y_grid[i])) {
            Ok(inv) => {
                q_used.push(inv.q);
                residual.push(num::abs(inv.g2 - problem.target.eval(y_grid[i])));
                g2.push(inv.g2);
            }
            Err(_) => {
                q_used.push(f64::NAN);
                residual.push(f64::NAN);
                g2.push(f64::NAN);
            }
        }
    }
    while n > 2 && !q_used[n - 1].is_finite() {
        n -= 1;
    }
    let y_grid = y_grid[..n].to_vec();
    let k = k[..n].to_vec();
    q_used.truncate(n);
    residual.truncate(n);
    g2.truncate(n);

    let v = trapezoid_antiderivative(&y_grid, &k);
    let mut balance = 0.0;
    let mut max_residual: f64 = 0.0;
    for i in 1..n {
        if g2[i].is_finite() && g2[i - 1].is_finite() {
            balance += 0.5 * (y_grid[i] - y_grid[i - 1]) * (g2[i] + g2[i - 1]);
        }
    }
    for &r in &residual {
        if r.is_finite() {
            max_residual = f64::max(max_residual, r);
        }
    }

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(String::from("balance_integral"), balance);
    diagnostics.insert(String::from("cells"), env.cells as f64);
    diagnostics.insert(String::from("k_first"), k[0]);
    diagnostics.insert(String::from("k_last"), k[n - 1]);
    diagnostics.insert(String::from("max_residual"), max_residual);
    diagnostics.insert(String::from("nodes"), n as f64);
    diagnostics.insert(String::from("source_mass"), problem.source_mass);
    diagnostics.insert(String::from("target_mass"), problem.target_mass);

    PotentialSolution { y_grid, k, v, q_used, residual, periodic, diagnostics }
}

/// March the balance ODE over the target and assemble the potential.
///
/// Interval targets are initialized by [`nested_initializer`] at the first
/// interior node and marched forward, with one backward step to fill the
/// left endpoint (falling back to linear extrapolation if the backward step
/// degenerates at the boundary). Periodic targets are shot as described in
/// the module docs. On a mid-march operator failure the step is retried at
/// half length once and the solver then returns [`SolverError::Aborted`]
/// with the valid prefix.
pub fn solve_ode(
    problem: &TransportProblem,
    config: &SolverConfig,
) -> Result<PotentialSolution, SolverError> {
    let env = problem.env(config.cells);
    let steps = config.steps.max(2);
    let h = (problem.y_hi - problem.y_lo) / steps as f64;
    let y_grid: Vec<f64> = (0..=steps).map(|i| problem.y_lo + i as f64 * h).collect();

    if problem.periodic {
        solve_periodic(problem, &env, &y_grid)
    } else {
        solve_interval(problem, &env, &y_grid, config.cells)
    }
}

/// March an interval problem from a prescribed left-endpoint slope instead
/// of the nested initializer.
///
/// The boundary value is the caller's claim: nothing forces the marched
/// potential to balance total mass, so consumers should judge the result by
/// the reported `balance_integral` and residuals. Useful when the nested
/// condition is not admissible near the endpoint, or to probe sensitivity
/// to the boundary choice.
pub fn solve_with_initial(
    problem: &TransportProblem,
    config: &SolverConfig,
    k0: f64,
) -> Result<PotentialSolution, SolverError> {
    let env = problem.env(config.cells);
    let steps = config.steps.max(2);
    let h = (problem.y_hi - problem.y_lo) / steps as f64;
    let y_grid: Vec<f64> = (0..=steps).map(|i| problem.y_lo + i as f64 * h).collect();
    match march(&env, problem, &y_grid, k0) {
        Ok(k) => Ok(finalize(&env, problem, &y_grid, &k, problem.periodic)),
        Err((prefix, e)) => {
            let partial = finalize(&env, problem, &y_grid[..prefix.len()], &prefix, false);
            let at_y = *partial.y_grid.last().unwrap_or(&y_grid[0]);
            let mut partial = partial;
            partial.diagnostics.insert(String::from("aborted_at"), at_y);
            Err(SolverError::Aborted { at_y, source: e, partial: Box::new(partial) })
        }
    }
}

fn solve_interval(
    problem: &TransportProblem,
    env: &OperatorEnv,
    y_grid: &[f64],
    cells: usize,
) -> Result<PotentialSolution, SolverError> {
    let h = y_grid[1] - y_grid[0];
    let k1 = nested_initializer(problem, y_grid[1], cells)?;

    // Left endpoint: one backward step from the first interior node. The
    // endpoint can sit exactly where the swept mass vanishes, so fall back
    // to linear extrapolation with the interior slope when the full
    // Runge–Kutta stencil fails there.
    let k0 = match rk4_step(env, problem, y_grid[1], k1, -h) {
        Ok(k0) => k0,
        Err(_) => k1 - h * rhs(env, problem, y_grid[1], k1).map_err(SolverError::from)?,
    };

    match march(env, problem, &y_grid[1..], k1) {
        Ok(interior) => {
            let mut k = Vec::with_capacity(y_grid.len());
            k.push(k0);
            k.extend_from_slice(&interior);
            Ok(finalize(env, problem, y_grid, &k, false))
        }
        Err((prefix, e)) => {
            let mut k = Vec::with_capacity(prefix.len() + 1);
            k.push(k0);
            k.extend_from_slice(&prefix);
            let partial = finalize(env, problem, &y_grid[..k.len()], &k, false);
            let at_y = *partial.y_grid.last().unwrap_or(&y_grid[0]);
            let mut partial = partial;
            partial.diagnostics.insert(String::from("aborted_at"), at_y);
            Err(SolverError::Aborted { at_y, source: e, partial: Box::new(partial) })
        }
    }
}

fn solve_periodic(
    problem: &TransportProblem,
    env: &OperatorEnv,
    y_grid: &[f64],
) -> Result<PotentialSolution, SolverError> {
    let steps = y_grid.len() - 1;
    let span = problem.y_hi - problem.y_lo;
    let (p_lo, p_hi) = problem.slope_range(problem.y_lo);
    let base = 0.5 * (p_lo + p_hi);

    let run = |k0: f64| -> Result<Vec<f64>, SolverError> {
        march(env, problem, y_grid, k0).map_err(|(prefix, e)| {
            let partial = finalize(env, problem, &y_grid[..prefix.len()], &prefix, false);
            let at_y = *partial.y_grid.last().unwrap_or(&y_grid[0]);
            SolverError::Aborted { at_y, source: e, partial: Box::new(partial) }
        })
    };
    let shoot = |path: &[f64]| path[steps] - path[0];
    let mean = |path: &[f64]| path[..steps].iter().sum::<f64>() / steps as f64;

    // Two probes; the second backs off toward the first if its march fails
    // (the offset can overshoot the attainable slope band).
    let path_a = run(base)?;
    let mut offset = 0.1 * f64::max(p_hi - p_lo, 1e-3);
    let (k_b, path_b) = loop {
        match run(base + offset) {
            Ok(path) => break (base + offset, path),
            Err(e) => {
                offset *= 0.5;
                if offset < 1e-6 * f64::max(p_hi - p_lo, 1e-3) {
                    return Err(e);
                }
            }
        }
    };

    let s_a = shoot(&path_a);
    let s_b = shoot(&path_b);
    let slope_est = num::abs(s_b - s_a) / num::abs(k_b - base);

    let (path, iterations, residual_s) = if slope_est <= FLAT_SHOOTING_SLOPE {
        // Shooting-degenerate: every start closes the loop. Normalize by
        // driving the mean slope to zero so the potential is single-valued.
        secant_march(run, mean, (base, mean(&path_a), path_a), (k_b, mean(&path_b), path_b))?
    } else {
        secant_march(run, |p| shoot(p), (base, s_a, path_a), (k_b, s_b, path_b))?
    };

    let mut solution = finalize(env, problem, y_grid, &path, true);
    solution.diagnostics.insert(String::from("closure_gap"), num::abs(shoot(&path)));
    solution.diagnostics.insert(String::from("mean_k"), mean(&path));
    solution.diagnostics.insert(String::from("shooting_iterations"), iterations as f64);
    solution.diagnostics.insert(String::from("shooting_residual"), residual_s);
    solution.diagnostics.insert(String::from("period"), span);
    Ok(solution)
}

/// Secant iteration on a scalar functional of the marched path. Returns the
/// final path, the iteration count, and the final functional value.
fn secant_march(
    run: impl Fn(f64) -> Result<Vec<f64>, SolverError>,
    functional: impl Fn(&[f64]) -> f64,
    mut a: (f64, f64, Vec<f64>),
    mut b: (f64, f64, Vec<f64>),
) -> Result<(Vec<f64>, usize, f64), SolverError> {
    if num::abs(a.1) <= tol::SHOOTING_TOL {
        return Ok((a.2, 0, a.1));
    }
    if num::abs(b.1) <= tol::SHOOTING_TOL {
        return Ok((b.2, 0, b.1));
    }
    for iter in 1..=tol::SHOOTING_MAX_ITERS {
        let denom = b.1 - a.1;
        if num::abs(denom) < 1e-14 {
            return Err(SolverError::ShootingStalled { residual: b.1, iterations: iter });
        }
        let next = b.0 - b.1 * (b.0 - a.0) / denom;
        let path = run(next)?;
        let value = functional(&path);
        if num::abs(value) <= tol::SHOOTING_TOL {
            return Ok((path, iter, value));
        }
        a = b;
        b = (next, value, path);
    }
    Err(SolverError::ShootingStalled { residual: b.1, iterations: tol::SHOOTING_MAX_ITERS })
}

// ---------------------------------------------------------------------------
// Interpolation on a solution grid.
// ---------------------------------------------------------------------------

fn hermite_value(t: f64, h: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1
}

fn hermite_slope(t: f64, h: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    (6.0 * t2 - 6.0 * t) * (f0 - f1) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1
}

impl PotentialSolution {
    /// Wrap (periodic) or clamp (interval) a target coordinate into the
    /// grid's range.
    fn canonical(&self, y: f64) -> f64 {
        let lo = self.y_grid[0];
        let hi = *self.y_grid.last().unwrap();
        if self.periodic {
            let span = hi - lo;
            let mut t = (y - lo) % span;
            if t < 0.0 {
                t += span;
            }
            lo + t
        } else {
            y.clamp(lo, hi)
        }
    }

    /// Locate the grid cell of `y`: `(index, local coordinate, width)`.
    fn locate(&self, y: f64) -> (usize, f64, f64) {
        let yw = self.canonical(y);
        let lo = self.y_grid[0];
        let h = self.y_grid[1] - lo;
        let i = (num::floor((yw - lo) / h) as usize).min(self.y_grid.len() - 2);
        ((i), (yw - self.y_grid[i]) / h, h)
    }

    /// Potential at an arbitrary target point (cubic Hermite with the
    /// marched slope as nodal derivative; exact for cubic potentials).
    pub fn v_at(&self, y: f64) -> f64 {
        let (i, t, h) = self.locate(y);
        hermite_value(t, h, self.v[i], self.v[i + 1], self.k[i], self.k[i + 1])
    }

    /// Slope `v′` at an arbitrary target point (cubic Hermite with the
    /// nodal curvature as derivative).
    pub fn k_at(&self, y: f64) -> f64 {
        let (i, t, h) = self.locate(y);
        hermite_value(t, h, self.k[i], self.k[i + 1], self.q_used[i], self.q_used[i + 1])
    }

    /// Curvature `v″` at an arbitrary target point (derivative of
    /// [`Self::k_at`]).
    pub fn q_at(&self, y: f64) -> f64 {
        let (i, t, h) = self.locate(y);
        hermite_slope(t, h, self.k[i], self.k[i + 1], self.q_used[i], self.q_used[i + 1])
    }
}

// ---------------------------------------------------------------------------
// Conjugate potential, transport map, verification.
// ---------------------------------------------------------------------------

/// Source-side conjugate potential `u(x) = max_y (s(x, y) − v(y))` and its
/// maximizer: node scan plus golden polish on the winning cell's
/// neighborhood. Together with `v` this yields a feasible dual pair, since
/// `u(x) + v(y) ≥ s(x, y)` for every pair by construction.
pub fn assemble_conjugate(
    problem: &TransportProblem,
    solution: &PotentialSolution,
    x: Vec2,
) -> (f64, f64) {
    let phi = |y: f64| problem.model.eval(x, y) - solution.v_at(y);
    let n = solution.y_grid.len();
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    // Scan the nodes with the stored values (cheaper and exact there).
    for i in 0..n {
        let val = problem.model.eval(x, solution.y_grid[i]) - solution.v[i];
        if val > best {
            best = val;
            best_i = i;
        }
    }
    let h = solution.y_grid[1] - solution.y_grid[0];
    let y_best = solution.y_grid[best_i];
    let (mut a, mut b) = (y_best - h, y_best + h);
    if !solution.periodic {
        a = f64::max(a, solution.y_grid[0]);
        b = f64::min(b, *solution.y_grid.last().unwrap());
    }
    let (y_star, value) = search::golden_max(&phi, a, b, 1e-12 * f64::max(1.0, h));
    (value, solution.canonical(y_star))
}

/// The transport map `F(x)`: the target point where the indifference curve
/// through `x` matches the marched slope, `s_y(x, F(x)) = k(F(x))`.
///
/// Starts from the conjugate maximizer (which satisfies the same first-order
/// condition at interior maxima) and polishes with a step-limited Newton
/// iteration on `s_y(x, y) − k(y)`; on interval targets the result is
/// clamped to the target range.
pub fn reconstruct_map(problem: &TransportProblem, solution: &PotentialSolution, x: Vec2) -> f64 {
    let (_, mut y) = assemble_conjugate(problem, solution, x);
    let h = solution.y_grid[1] - solution.y_grid[0];
    for _ in 0..MAP_NEWTON_ITERS {
        let f = problem.model.d_y(x, y) - solution.k_at(y);
        let d = problem.model.d_yy(x, y) - solution.q_at(y);
        if num::abs(d) < 1e-12 {
            break;
        }
        let step = (f / d).clamp(-h, h);
        y -= step;
        if num::abs(step) < 1e-13 * f64::max(1.0, num::abs(y)) {
            break;
        }
    }
    solution.canonical(y)
}

/// Low-discrepancy sample of region points (rejection against the bounding
/// box, capped at 200× oversampling).
fn sample_region_points(region: &Region, n: usize, seed: u64) -> Vec<Vec2> {
    let mut gen = LowDiscrepancy2::new(seed);
    let bbox = region.bbox();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n && attempts < 200 * n.max(1) {
        attempts += 1;
        let x = gen.next_in(bbox.lo, bbox.hi);
        if region.contains(x) {
            out.push(x);
        }
    }
    out
}

/// Scan the source density for a rejection-sampling cap (grid max with a
/// 25 % safety factor).
fn density_cap(problem: &TransportProblem) -> f64 {
    let bbox = problem.region.bbox();
    let n = 128usize;
    let mut cap = 0.0f64;
    for iy in 0..=n {
        for ix in 0..=n {
            let x = Vec2::new(
                bbox.lo.x + bbox.extent().x * ix as f64 / n as f64,
                bbox.lo.y + bbox.extent().y * iy as f64 / n as f64,
            );
            if self_contains(problem, x) {
                cap = f64::max(cap, problem.source.eval(x));
            }
        }
    }
    1.25 * cap
}

fn self_contains(problem: &TransportProblem, x: Vec2) -> bool {
    problem.region.contains(x)
}

/// Push source samples through the reconstructed map and compare the binned
/// histogram against the exact target bin masses in total variation.
///
/// Sampling is plain rejection from the source density with a deterministic
/// generator, so reruns with the same seed reproduce the report exactly. If
/// the acceptance rate falls below [`tol::REJECTION_MIN_RATE`] the sampler
/// reports [`SolverError::RejectionStall`] instead of spinning.
pub fn verify_pushforward(
    problem: &TransportProblem,
    solution: &PotentialSolution,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<PushforwardReport, SolverError> {
    let cap = density_cap(problem);
    let bbox = problem.region.bbox();
    let mut rng = SplitMix64::new(seed);
    let mut counts = vec![0usize; bins];
    let span = problem.y_hi - problem.y_lo;
    let max_attempts = ((samples as f64) / tol::REJECTION_MIN_RATE) as usize;

    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < samples {
        if attempts >= max_attempts {
            return Err(SolverError::RejectionStall {
                acceptance: accepted as f64 / attempts as f64,
            });
        }
        attempts += 1;
        let x = Vec2::new(
            rng.range(bbox.lo.x, bbox.hi.x),
            rng.range(bbox.lo.y, bbox.hi.y),
        );
        if !problem.region.contains(x) {
            continue;
        }
        if rng.uniform() * cap > problem.source.eval(x) {
            continue;
        }
        accepted += 1;
        let y = reconstruct_map(problem, solution, x);
        let bin = ((y - problem.y_lo) / span * bins as f64) as usize;
        counts[bin.min(bins - 1)] += 1;
    }

    let mut tv = 0.0;
    for (b, &count) in counts.iter().enumerate() {
        let lo = problem.y_lo + span * b as f64 / bins as f64;
        let hi = problem.y_lo + span * (b + 1) as f64 / bins as f64;
        let exact = midpoint_1d(&|y| problem.target.eval(y), lo, hi, 64) / problem.target_mass;
        tv += num::abs(count as f64 / samples as f64 - exact);
    }
    Ok(PushforwardReport {
        tv: 0.5 * tv,
        samples,
        bins,
        acceptance: accepted as f64 / attempts as f64,
    })
}

/// Check that the reconstructed target of each sampled source point is a
/// *global* maximizer of `s(x, ·) − v`, not merely a critical point: returns
/// the worst deficit `max_y (s − v) − (s(x, F(x)) − v(F(x)))` over the
/// samples (nonnegative up to search noise; small is good).
pub fn verify_nonlocal(
    problem: &TransportProblem,
    solution: &PotentialSolution,
    samples: usize,
    seed: u64,
) -> f64 {
    let points = sample_region_points(problem.region, samples, seed);
    let mut worst = 0.0f64;
    for &x in &points {
        let (global, _) = assemble_conjugate(problem, solution, x);
        let y = reconstruct_map(problem, solution, x);
        let at_map = problem.model.eval(x, y) - solution.v_at(y);
        worst = f64::max(worst, global - at_map);
    }
    worst
}

/// Compare the analytic Jacobian of the transport map,
/// `|∇ₓ s_y| / (v″ − s_yy)`, against a centered finite difference of
/// [`reconstruct_map`] along the curve normal at sampled source points.
///
/// Samples whose difference stencil leaves the region are skipped (and
/// counted); a degenerate denominator aborts with
/// [`SolverError::EllipticityLoss`] because the map is not differentiable
/// there.
pub fn jacobian_check(
    problem: &TransportProblem,
    solution: &PotentialSolution,
    samples: usize,
    seed: u64,
) -> Result<JacobianReport, SolverError> {
    let points = sample_region_points(problem.region, samples, seed);
    let h = 1e-4 * f64::max(1.0, problem.region.bbox().extent().norm());
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for &x in &points {
        let y = reconstruct_map(problem, solution, x);
        let grad = problem.model.grad_x_dy(x, y);
        let Some(normal) = grad.normalized(tol::NONDEGENERACY_FLOOR) else {
            skipped += 1;
            continue;
        };
        let denom = solution.q_at(y) - problem.model.d_yy(x, y);
        if denom <= tol::ELLIPTICITY_FLOOR {
            return Err(SolverError::EllipticityLoss { at: x, denominator: denom });
        }
        let analytic = grad.norm() / denom;
        let x_plus = x + normal * h;
        let x_minus = x - normal * h;
        if !problem.region.contains(x_plus) || !problem.region.contains(x_minus) {
            skipped += 1;
            continue;
        }
        let mut f_plus = reconstruct_map(problem, solution, x_plus);
        let mut f_minus = reconstruct_map(problem, solution, x_minus);
        if solution.periodic {
            // Unwrap across the seam before differencing.
            let span = problem.y_hi - problem.y_lo;
            if f_plus - f_minus > 0.5 * span {
                f_plus -= span;
            } else if f_minus - f_plus > 0.5 * span {
                f_minus -= span;
            }
        }
        let fd = (f_plus - f_minus) / (2.0 * h);
        let rel = num::abs(analytic - fd) / f64::max(1.0, f64::max(num::abs(analytic), num::abs(fd)));
        max_rel = f64::max(max_rel, rel);
        checked += 1;
    }
    Ok(JacobianReport { max_rel_error: max_rel, checked, skipped })
}

/// Smallest ellipticity constant `λ` along the marched solution path: the
/// uniform lower bound on how strongly the balance responds to curvature
/// over the whole target.
pub fn uniform_ellipticity_margin(
    problem: &TransportProblem,
    solution: &PotentialSolution,
    cells: usize,
) -> Result<f64, SolverError> {
    let env = problem.env(cells);
    let mut min_lambda = f64::INFINITY;
    for i in 0..solution.y_grid.len() {
        if !solution.q_used[i].is_finite() {
            continue;
        }
        let ell = operators::ellipticity_constant(
            &env,
            solution.y_grid[i],
            solution.k[i],
            solution.q_used[i],
        )?;
        min_lambda = f64::min(min_lambda, ell.lambda);
    }
    Ok(min_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset_problem;

    fn small() -> SolverConfig {
        SolverConfig { steps: 48, cells: 96 }
    }

    #[test]
    fn strip_march_is_exact() {
        let preset = preset_problem("strip").unwrap();
        let problem = preset.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        assert_eq!(sol.y_grid.len(), 49);
        for (i, &y) in sol.y_grid.iter().enumerate() {
            assert!((sol.k[i] - y).abs() < 1e-6, "k({y}) = {}", sol.k[i]);
            assert!((sol.v[i] - 0.5 * y * y).abs() < 1e-6);
            assert!((sol.q_used[i] - 1.0).abs() < 1e-6);
            assert!(sol.residual[i] < 1e-8);
        }
        let balance = sol.diagnostics["balance_integral"];
        assert!((balance - 1.0).abs() < tol::MASS_WINDOW, "balance {balance}");
        // Interpolants reproduce the quadratic potential everywhere.
        assert!((sol.v_at(0.31) - 0.5 * 0.31 * 0.31).abs() < 1e-9);
        assert!((sol.k_at(0.77) - 0.77).abs() < 1e-7);
        assert!((sol.q_at(0.77) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn periodic_march_is_flat_on_the_annulus() {
        let preset = preset_problem("annulus").unwrap();
        let problem = preset.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        for i in 0..sol.y_grid.len() {
            assert!(sol.k[i].abs() < 1e-6, "k = {}", sol.k[i]);
            assert!(sol.v[i].abs() < 1e-5);
            assert!(sol.residual[i] < 1e-8);
        }
        assert!(sol.diagnostics["mean_k"].abs() <= tol::SHOOTING_TOL);
        assert!(sol.diagnostics["closure_gap"] < 1e-6);
        let balance = sol.diagnostics["balance_integral"];
        assert!((balance - 1.0).abs() < tol::MASS_WINDOW, "balance {balance}");
    }

    #[test]
    fn prescribed_initial_slope_marches_the_shifted_family() {
        let preset = preset_problem("strip").unwrap();
        let problem = preset.problem().unwrap();
        // The strip's balance equation fixes k′ = 1 but not the offset, so a
        // prescribed start k(0) = 0.2 marches k(y) = 0.2 + y — until that
        // slope reaches the edge of the attainable band at 1 and the level
        // set leaves the square. The march must abort there and hand back
        // the exact prefix; only the nested condition balances globally.
        let err = solve_with_initial(&problem, &small(), 0.2).unwrap_err();
        let SolverError::Aborted { at_y, partial, .. } = err else {
            panic!("expected an abort, got {err}");
        };
        assert!((at_y - 0.8).abs() < 0.05, "aborted at {at_y}");
        for (i, &y) in partial.y_grid.iter().enumerate() {
            assert!(
                (partial.k[i] - (0.2 + y)).abs() < 1e-6,
                "k({y}) = {}",
                partial.k[i]
            );
        }
        // With the true boundary value the march matches the nested solve.
        let sol = solve_with_initial(&problem, &small(), 0.0).unwrap();
        let nested = solve_ode(&problem, &small()).unwrap();
        assert_eq!(sol.y_grid.len(), nested.y_grid.len());
        for i in 0..sol.y_grid.len() {
            assert!((sol.k[i] - nested.k[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn nested_initializer_matches_area_counting() {
        let strip = preset_problem("strip").unwrap();
        let problem = strip.problem().unwrap();
        // Sub-level mass of {x₁ ≤ k} is k, cumulative target of [0, y] is y.
        let k = nested_initializer(&problem, 0.35, 128).unwrap();
        assert!((k - 0.35).abs() < 1e-9, "k = {k}");

        let tilted = preset_problem("tilted").unwrap();
        let problem = tilted.problem().unwrap();
        // At y = 1/2 the sub-level mass of {x₁ + x₂/2 ≤ k} is k − 1/4 for
        // k in [1/2, 1], so matching the cumulative mass 1/2 gives k = 3/4.
        let k = nested_initializer(&problem, 0.5, 256).unwrap();
        assert!((k - 0.75).abs() < 1e-6, "k = {k}");
    }

    #[test]
    fn conjugate_and_map_recover_the_strip_solution() {
        let preset = preset_problem("strip").unwrap();
        let problem = preset.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        // s = x₁ y, v = y²/2 ⇒ u(x) = x₁²/2 with maximizer y = x₁.
        for &x1 in &[0.15, 0.4, 0.83] {
            let x = Vec2::new(x1, 0.5);
            let (u, y_star) = assemble_conjugate(&problem, &sol, x);
            assert!((u - 0.5 * x1 * x1).abs() < 1e-8, "u = {u}");
            assert!((y_star - x1).abs() < 1e-6);
            let y = reconstruct_map(&problem, &sol, x);
            assert!((y - x1).abs() < 1e-8, "F = {y}");
            let foc = problem.model.d_y(x, y) - sol.k_at(y);
            assert!(foc.abs() <= tol::MAP_FOC_TOL);
        }
        let deficit = verify_nonlocal(&problem, &sol, 60, 11);
        assert!(deficit <= tol::NONLOCAL_MEMBER_TOL, "deficit {deficit}");
    }

    #[test]
    fn conjugate_and_map_recover_the_annulus_solution() {
        let preset = preset_problem("annulus").unwrap();
        let problem = preset.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        // v ≈ 0 so u(x) = max_y x·(cos y, sin y) = |x| at the angle of x.
        for &(px, py) in &[(0.7, 0.3), (-0.6, 0.4), (0.1, -0.8)] {
            let x = Vec2::new(px, py);
            let (u, _) = assemble_conjugate(&problem, &sol, x);
            assert!((u - x.norm()).abs() < 1e-6, "u = {u}, |x| = {}", x.norm());
            let y = reconstruct_map(&problem, &sol, x);
            let angle = py.atan2(px).rem_euclid(2.0 * core::f64::consts::PI);
            let span = 2.0 * core::f64::consts::PI;
            let diff = (y - angle).rem_euclid(span).min((angle - y).rem_euclid(span));
            assert!(diff < 1e-6, "F = {y}, angle = {angle}");
        }
        let deficit = verify_nonlocal(&problem, &sol, 60, 12);
        assert!(deficit <= tol::NONLOCAL_MEMBER_TOL, "deficit {deficit}");
    }

    #[test]
    fn pushforward_of_the_strip_is_uniform() {
        let preset = preset_problem("strip").unwrap();
        let problem = preset.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        let report = verify_pushforward(&problem, &sol, 20_000, 20, 7).unwrap();
        assert!(report.tv < 0.02, "tv = {}", report.tv);
        // Uniform density on a square region: only the 25 % cap headroom is
        // rejected.
        assert!(report.acceptance > 0.7, "acceptance = {}", report.acceptance);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let strip = preset_problem("strip").unwrap();
        let problem = strip.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        // F(x) = x₁ exactly: gradient 1, curvature gap 1.
        let report = jacobian_check(&problem, &sol, 40, 3).unwrap();
        assert!(report.checked > 20);
        assert!(report.max_rel_error < 1e-6, "rel = {}", report.max_rel_error);

        let annulus = preset_problem("annulus").unwrap();
        let problem = annulus.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        // F(x) = angle(x): |∇F| = 1/|x| = |∇ₓs_y| / (0 − s_yy).
        let report = jacobian_check(&problem, &sol, 40, 4).unwrap();
        assert!(report.checked > 20);
        assert!(report.max_rel_error < 1e-3, "rel = {}", report.max_rel_error);
    }

    #[test]
    fn exhausted_target_aborts_with_partial_solution() {
        // All target mass sits in [0, 1/2]; past it the balance asks for a
        // positive sweep where none remains and the march must stop.
        let model = crate::surplus::preset_model("strip").unwrap();
        let region = Region::unit_square();
        let source = Density2::constant(1.0);
        let target = Density1::new("front-loaded", |y| if y < 0.5 { 2.0 } else { 0.0 });
        let problem =
            TransportProblem::new(model.as_ref(), &region, &source, &target, 0.0, 1.0, false)
                .unwrap();
        let err = solve_ode(&problem, &SolverConfig { steps: 32, cells: 96 }).unwrap_err();
        match err {
            SolverError::Aborted { at_y, partial, .. } => {
                assert!(at_y <= 0.5 + 1.0 / 32.0, "at_y = {at_y}");
                assert!(partial.y_grid.len() >= 16, "nodes = {}", partial.y_grid.len());
                for (i, &y) in partial.y_grid.iter().enumerate() {
                    // Up to the exhaustion point the slope doubles the
                    // coordinate (sweep rate 2).
                    if y < 0.45 {
                        assert!((partial.k[i] - 2.0 * y).abs() < 1e-6);
                    }
                }
                assert!(partial.diagnostics.contains_key("aborted_at"));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn ellipticity_margin_along_solutions() {
        let strip = preset_problem("strip").unwrap();
        let problem = strip.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        let lambda = uniform_ellipticity_margin(&problem, &sol, 96).unwrap();
        assert!((lambda - 1.0).abs() < 1e-6, "lambda = {lambda}");

        let annulus = preset_problem("annulus").unwrap();
        let problem = annulus.problem().unwrap();
        let sol = solve_ode(&problem, &small()).unwrap();
        let lambda = uniform_ellipticity_margin(&problem, &sol, 96).unwrap();
        let expected = 1.0 / (2.0 * core::f64::consts::PI);
        assert!((lambda - expected).abs() < 1e-3, "lambda = {lambda}");
    }

    #[test]
    fn mass_validation_rejects_imbalance() {
        let model = crate::surplus::preset_model("strip").unwrap();
        let region = Region::unit_square();
        let heavy = Density2::constant(2.0);
        let target = Density1::constant(1.0);
        let err =
            TransportProblem::new(model.as_ref(), &region, &heavy, &target, 0.0, 1.0, false)
                .unwrap_err();
        assert!(matches!(err, SolverError::MassImbalance { .. }), "{err:?}");

        let source = Density2::constant(1.0);
        let thin = Density1::constant(0.5);
        let err =
            TransportProblem::new(model.as_ref(), &region, &source, &thin, 0.0, 1.0, false)
                .unwrap_err();
        assert!(matches!(err, SolverError::MassImbalance { .. }), "{err:?}");
    }
}
