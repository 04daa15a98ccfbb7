//! Centralized numeric tolerances.
//!
//! Every threshold used by the solver and its verifiers lives here with its
//! rationale, so no module carries ad-hoc magic numbers. Three regimes:
//!
//! | Regime | Basis | Typical value |
//! |--------|-------|---------------|
//! | Machine | f64 arithmetic, short compositions | 1e-12 … 1e-10 |
//! | Iterative | declared stopping criteria of inner loops | 1e-10 … 1e-6 |
//! | Discretization | grid/quadrature resolution at default sizes | 1e-5 … 1e-3 |

/// Floor under `|∇ₓ s_y|` below which the surplus is treated as degenerate:
/// the mobility `1/|∇ₓ s_y|` in every level-set integral would blow up past
/// 1e8, outside the regime any of the quadrature error analysis covers.
pub const NONDEGENERACY_FLOOR: f64 = 1e-8;

/// Step for finite-difference consistency checks of analytic derivative
/// bundles. With O(h²) central differences and f64 rounding, 1e-4 balances
/// truncation (~1e-8 · |f'''|) against cancellation (~1e-12).
pub const FD_CHECK_STEP: f64 = 1e-4;

/// Relative mismatch allowed between analytic bundle entries and central
/// differences at [`FD_CHECK_STEP`]: 1e-5 leaves an order of magnitude over
/// the truncation floor for smooth models with O(1) third derivatives.
pub const FD_CHECK_REL: f64 = 1e-5;

/// Residual tolerance for the surplus-exponential inversion
/// `D_x s(x, ·) = p` (coarse scan + golden-section polish).
pub const S_EXP_TOL: f64 = 1e-8;

/// Parameter tolerance for bisection when clipping level-set segments
/// against the region boundary. The curves are polished to ~1e-12, so a
/// 1e-10 cut keeps clipping error below every downstream quadrature error.
pub const BOUNDARY_BISECT_TOL: f64 = 1e-10;

/// Region-membership slack for mesh nodes: a point with implicit value in
/// `(0, EDGE_TOL]` counts as inside. Needed when a level curve runs exactly
/// along a face of a polygonal region (e.g. the strip at the extreme target
/// slope), where exact-zero implicit values would make inclusion tests flip
/// on rounding noise.
pub const EDGE_TOL: f64 = 1e-7;

/// Warn when a level curve meets the region boundary with
/// `|n̂_W · n̂_X| > 1 - TANGENCY_WARN`: the clipped endpoint position becomes
/// ill-conditioned (the curve grazes the boundary).
pub const TANGENCY_WARN: f64 = 1e-6;

/// Hard floor for the transversality factors `sqrt(1 - (n̂·n̂)²)` appearing in
/// denominators of the boundary point terms. Below 1e-4 the point-term
/// weights exceed ~1e4 and the derivative formulas are meaningless at our
/// quadrature accuracy.
pub const TRANSVERSALITY_FLOOR: f64 = 1e-4;

/// Step for the one-step normal / tangential finite differences used when
/// assembling interior divergence terms of the operator derivatives.
/// Composite with analytic fields: truncation ~h², cancellation ~1e-16/h;
/// 1e-5 is the sweet spot.
pub const H_GEO: f64 = 1e-5;

/// Relative stopping tolerance of the monotone operator inversion:
/// `|G2(q) - β| ≤ INVERT_REL_TOL · β`.
pub const INVERT_REL_TOL: f64 = 1e-8;

/// Slope floor in the safeguarded Newton inversion; below this the bisection
/// fallback is used for the step.
pub const INVERT_SLOPE_FLOOR: f64 = 1e-12;

/// Periodic shooting: absolute residual target on the boundary mismatch and
/// iteration cap of the secant loop.
pub const SHOOTING_TOL: f64 = 1e-6;
pub const SHOOTING_MAX_ITERS: usize = 50;

/// Marginal normalization window checked at problem construction:
/// `∫f` and `∫g` must be within 1e-3 of 1 under the default quadrature.
pub const MARGINAL_TOL: f64 = 1e-3;

/// End-to-end mass-conservation window for an accepted solve:
/// `∫ G2(y, k, k') dy ∈ 1 ± MASS_WINDOW`.
pub const MASS_WINDOW: f64 = 5e-3;

/// Slack allowed in the conjugate-pair inequality `u(x) + v(y) ≥ s(x, y)`
/// (the assembled u is a grid max plus golden-section polish, so it can sit
/// a hair under the true sup).
pub const CONJUGATE_SLACK: f64 = 1e-8;

/// Acceptance threshold on the first-order condition of the reconstructed
/// map: `|s_y(x, F(x)) - k(F(x))| ≤ MAP_FOC_TOL`.
pub const MAP_FOC_TOL: f64 = 1e-4;

/// Membership slack in the nonlocal verification: a point belongs to the
/// global argmax set when its value is within this of the sup.
pub const NONLOCAL_MEMBER_TOL: f64 = 1e-6;

/// Rejection sampling must keep at least this acceptance rate, otherwise the
/// declared envelope is wrong and the verifier aborts.
pub const REJECTION_MIN_RATE: f64 = 1e-3;

/// Ellipticity-loss floor in the Jacobian factor `v''(F(x)) - s_yy`.
pub const ELLIPTICITY_FLOOR: f64 = 1e-8;

/// Discrete-oracle tolerances: marginal balance required of inputs, row/col
/// sums of a returned coupling, complementary slackness, and strong duality.
pub const LP_BALANCE_TOL: f64 = 1e-12;
pub const LP_MARGINAL_TOL: f64 = 1e-10;
pub const LP_SLACKNESS_TOL: f64 = 1e-9;
pub const LP_DUALITY_TOL: f64 = 1e-9;

/// Reduced-surplus threshold below which a simplex arc is not worth
/// entering; also the flow level under which a pivot counts as degenerate.
pub const LP_PIVOT_TOL: f64 = 1e-11;

/// Mesh-length floor under which an indifference set is reported empty.
pub const EMPTY_MESH_LENGTH: f64 = 1e-12;
