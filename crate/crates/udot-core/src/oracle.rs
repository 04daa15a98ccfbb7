//! Exact discrete reference solutions.
//!
//! Everything else in this crate solves the transport problem through the
//! local balance equation; this module solves small instances of the *same*
//! problem as a finite linear program, with none of that machinery, so the
//! two can be compared. A continuous problem is discretized into weighted
//! atoms ([`discretize`]), the surplus-maximizing coupling between the atom
//! sets is computed exactly with a transportation simplex ([`solve_lp`]),
//! and the marched potential can be scored against the exact optimum
//! through the dual objective ([`duality_gap`]): any feasible dual pair
//! overshoots the optimal value, and the overshoot of the marched potential
//! must shrink as the discretization refines.
//!
//! The simplex keeps a spanning-tree basis over the bipartite atom graph,
//! prices with Dantzig's rule (most positive reduced surplus), and switches
//! to Bland's rule (first eligible arc) whenever degenerate pivots stall,
//! which restores the finite-termination guarantee. Returned duals are
//! anchored at the first target atom (`v[0] = 0`) and satisfy
//! `u_i + v_j = S_ij` on every basic arc by construction, so the reported
//! plan and duals certify each other: feasibility of the duals plus a zero
//! gap on the support is exactly LP optimality.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::density::Density1;
use crate::geometry::clipped_cell;
use crate::num;
use crate::solver::TransportProblem;
use crate::surplus::SurplusModel;
use crate::tol;
use crate::vec2::Vec2;

/// Pivot budget multiplier: the simplex may spend this many pivots per node
/// before reporting [`OracleError::PivotLimit`].
const PIVOT_BUDGET_PER_NODE: usize = 64;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 32;

/// Weighted atoms for a discrete transport instance, with the surplus matrix
/// evaluated once up front (row-major, `a.len() × b.len()`).
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    /// Source atom positions.
    pub xs: Vec<Vec2>,
    /// Source atom masses (positive, summing to the target total).
    pub a: Vec<f64>,
    /// Target atom positions.
    pub ys: Vec<f64>,
    /// Target atom masses (positive).
    pub b: Vec<f64>,
    surplus: Vec<f64>,
}

/// Exact optimal coupling with certifying duals.
#[derive(Clone, Debug)]
pub struct CouplingSolution {
    /// Support of the optimal plan: `(source, target, mass)` triples with
    /// positive mass.
    pub plan: Vec<(usize, usize, f64)>,
    /// Source duals (`u_i + v_j ≥ S_ij` everywhere, equality on the plan).
    pub u: Vec<f64>,
    /// Target duals, anchored at `v[0] = 0`.
    pub v: Vec<f64>,
    /// Optimal total surplus `Σ π_ij S_ij`.
    pub value: f64,
    /// Simplex pivots performed.
    pub pivots: usize,
}

/// Oracle-layer failures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleError {
    /// Source and target masses differ by more than [`tol::LP_BALANCE_TOL`].
    Unbalanced { source: f64, target: f64 },
    /// Discretization produced no atoms on one side.
    EmptyDiscretization,
    /// A weight is not strictly positive (or not finite).
    BadWeight { side: &'static str, index: usize },
    /// The simplex exceeded its pivot budget.
    PivotLimit { pivots: usize },
}

impl core::fmt::Display for OracleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OracleError::Unbalanced { source, target } => {
                write!(f, "unbalanced atoms: source mass {source:.15}, target mass {target:.15}")
            }
            OracleError::EmptyDiscretization => write!(f, "discretization produced no atoms"),
            OracleError::BadWeight { side, index } => {
                write!(f, "non-positive {side} weight at index {index}")
            }
            OracleError::PivotLimit { pivots } => {
                write!(f, "transportation simplex exceeded {pivots} pivots")
            }
        }
    }
}

impl core::error::Error for OracleError {}

impl DiscreteProblem {
    /// Assemble a discrete instance: weights must be strictly positive and
    /// balanced within [`tol::LP_BALANCE_TOL`]; the surplus matrix is filled
    /// from the model.
    pub fn new(
        xs: Vec<Vec2>,
        a: Vec<f64>,
        ys: Vec<f64>,
        b: Vec<f64>,
        model: &dyn SurplusModel,
    ) -> Result<Self, OracleError> {
        assert_eq!(xs.len(), a.len(), "source positions/weights length mismatch");
        assert_eq!(ys.len(), b.len(), "target positions/weights length mismatch");
        if xs.is_empty() || ys.is_empty() {
            return Err(OracleError::EmptyDiscretization);
        }
        for (i, &w) in a.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(OracleError::BadWeight { side: "source", index: i });
            }
        }
        for (j, &w) in b.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(OracleError::BadWeight { side: "target", index: j });
            }
        }
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        if num::abs(sa - sb) > tol::LP_BALANCE_TOL {
            return Err(OracleError::Unbalanced { source: sa, target: sb });
        }
        let mut surplus = Vec::with_capacity(xs.len() * ys.len());
        for &x in &xs {
            for &y in &ys {
                surplus.push(model.eval(x, y));
            }
        }
        Ok(DiscreteProblem { xs, a, ys, b, surplus })
    }

    /// Surplus of the `(i, j)` atom pair.
    #[inline]
    pub fn s(&self, i: usize, j: usize) -> f64 {
        self.surplus[i * self.ys.len() + j]
    }

    /// `(sources, targets)` atom counts.
    pub fn size(&self) -> (usize, usize) {
        (self.xs.len(), self.ys.len())
    }
}

/// Discretize a continuous problem into `nx × nx` source cells over the
/// region's bounding box and `ny` target bins.
///
/// A cell contributes an atom exactly when its center lies in the region;
/// the atom sits at that center and carries the boundary-clipped cell area
/// times the density there. Each target atom sits at a bin center, weighted
/// by the integrated target density. Zero-mass cells and bins are dropped,
/// and both sides are renormalized to unit mass so the instance balances
/// exactly.
pub fn discretize(
    problem: &TransportProblem,
    nx: usize,
    ny: usize,
) -> Result<DiscreteProblem, OracleError> {
    let bbox = problem.region.bbox();
    let hx = bbox.extent().x / nx as f64;
    let hy = bbox.extent().y / nx as f64;
    let mut xs = Vec::new();
    let mut a = Vec::new();
    for iy in 0..nx {
        for ix in 0..nx {
            let x0 = bbox.lo.x + ix as f64 * hx;
            let y0 = bbox.lo.y + iy as f64 * hy;
            let center = Vec2::new(x0 + 0.5 * hx, y0 + 0.5 * hy);
            if !problem.region.contains(center) {
                continue;
            }
            let cell = [
                Vec2::new(x0, y0),
                Vec2::new(x0 + hx, y0),
                Vec2::new(x0 + hx, y0 + hy),
                Vec2::new(x0, y0 + hy),
            ];
            let (area, _) = clipped_cell(problem.region, &cell);
            let w = area * problem.source.eval(center);
            if w > 0.0 {
                xs.push(center);
                a.push(w);
            }
        }
    }

    let span = problem.y_hi - problem.y_lo;
    let mut ys = Vec::new();
    let mut b = Vec::new();
    for j in 0..ny {
        let lo = problem.y_lo + span * j as f64 / ny as f64;
        let hi = problem.y_lo + span * (j + 1) as f64 / ny as f64;
        let w = bin_mass(problem.target, lo, hi);
        if w > 0.0 {
            ys.push(0.5 * (lo + hi));
            b.push(w);
        }
    }

    if xs.is_empty() || ys.is_empty() {
        return Err(OracleError::EmptyDiscretization);
    }
    let sa: f64 = a.iter().sum();
    for w in &mut a {
        *w /= sa;
    }
    let sb: f64 = b.iter().sum();
    for w in &mut b {
        *w /= sb;
    }
    // Force exact balance: the two normalizations can disagree by a few ulp,
    // which the simplex would faithfully report as an infeasible atom.
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if let Some(last) = b.last_mut() {
        *last += sa - sb;
    }
    DiscreteProblem::new(xs, a, ys, b, problem.model)
}

/// Midpoint mass of the target density over one bin.
fn bin_mass(target: &Density1, lo: f64, hi: f64) -> f64 {
    let n = 64;
    let h = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += target.eval(lo + (i as f64 + 0.5) * h);
    }
    acc * h
}

/// Solve the discrete surplus-maximization problem exactly.
///
/// Transportation simplex: northwest-corner start, spanning-tree basis,
/// Dantzig pricing with a Bland fallback under degenerate stalls. Optimality
/// holds when no reduced surplus `S_ij − u_i − v_j` exceeds the pivot
/// tolerance; the duals returned are the certificate.
pub fn solve_lp(problem: &DiscreteProblem) -> Result<CouplingSolution, OracleError> {
    let (n, m) = problem.size();

    // Northwest-corner initial basis: n + m − 1 arcs, possibly with zero
    // flow (degenerate), always a spanning tree.
    let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(n + m - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(n + m - 1);
    {
        let mut rem_a = problem.a.clone();
        let mut rem_b = problem.b.clone();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = f64::min(rem_a[i], rem_b[j]);
            arcs.push((i, j));
            flow.push(f);
            rem_a[i] -= f;
            rem_b[j] -= f;
            if i + 1 == n && j + 1 == m {
                break;
            }
            if (rem_a[i] <= rem_b[j] && i + 1 < n) || j + 1 == m {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let node_count = n + m;
    let max_pivots = PIVOT_BUDGET_PER_NODE * node_count;
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];
    let mut bland = false;
    let mut stall = 0usize;

    for pivot in 0..=max_pivots {
        compute_duals(problem, &arcs, &mut u, &mut v);

        // Entering arc: most positive reduced surplus (or first, under
        // Bland's rule).
        let mut enter: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..n {
            for j in 0..m {
                let r = problem.s(i, j) - u[i] - v[j];
                if r > tol::LP_PIVOT_TOL {
                    if bland {
                        enter = Some((i, j, r));
                        break 'scan;
                    }
                    if enter.map_or(true, |(_, _, best)| r > best) {
                        enter = Some((i, j, r));
                    }
                }
            }
        }
        let Some((ei, ej, _)) = enter else {
            return Ok(extract_solution(problem, &arcs, &flow, &u, &v, pivot));
        };
        if pivot == max_pivots {
            break;
        }

        // Cycle: the tree path from source ei to sink ej, plus the entering
        // arc. Flow changes alternate in sign along the path, starting with
        // −δ on the arc incident to sink ej.
        let path = tree_path(&arcs, n, node_count, ei, n + ej);
        let mut delta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (idx, &arc_id) in path.iter().enumerate() {
            if idx % 2 == 0 && flow[arc_id] < delta {
                delta = flow[arc_id];
                leaving = arc_id;
            }
        }
        debug_assert!(leaving != usize::MAX, "path must contain a shrinking arc");
        for (idx, &arc_id) in path.iter().enumerate() {
            if idx % 2 == 0 {
                flow[arc_id] -= delta;
            } else {
                flow[arc_id] += delta;
            }
        }
        arcs[leaving] = (ei, ej);
        flow[leaving] = delta;

        // Degenerate pivots make no progress; after a stall, Bland's rule
        // guarantees termination.
        if delta <= tol::LP_PIVOT_TOL {
            stall += 1;
            if stall >= STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
            bland = false;
        }
    }
    Err(OracleError::PivotLimit { pivots: max_pivots })
}

/// Duals from the basis tree: `v[0] = 0` at the anchor, then
/// `u_i + v_j = S_ij` propagated across basic arcs.
fn compute_duals(problem: &DiscreteProblem, arcs: &[(usize, usize)], u: &mut [f64], v: &mut [f64]) {
    let (n, m) = problem.size();
    // Adjacency over nodes 0..n (sources) and n..n+m (sinks).
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for (id, &(i, j)) in arcs.iter().enumerate() {
        adj[i].push(id);
        adj[n + j].push(id);
    }
    let mut known = vec![false; n + m];
    let mut queue = VecDeque::new();
    v[0] = 0.0;
    known[n] = true;
    queue.push_back(n);
    while let Some(node) = queue.pop_front() {
        for &id in &adj[node] {
            let (i, j) = arcs[id];
            let (src, snk) = (i, n + j);
            let other = if node == src { snk } else { src };
            if known[other] {
                continue;
            }
            if other == src {
                u[i] = problem.s(i, j) - v[j];
            } else {
                v[j] = problem.s(i, j) - u[i];
            }
            known[other] = true;
            queue.push_back(other);
        }
    }
    debug_assert!(known.iter().all(|&k| k), "basis must span all atoms");
}

/// Arc ids along the unique tree path from `from` to `to` (node indices,
/// sinks offset by `n`), ordered starting at the `to` end so that even
/// positions carry `−δ`.
fn tree_path(
    arcs: &[(usize, usize)],
    n: usize,
    node_count: usize,
    from: usize,
    to: usize,
) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
    for (id, &(i, j)) in arcs.iter().enumerate() {
        adj[i].push((n + j, id));
        adj[n + j].push((i, id));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; node_count];
    let mut seen = vec![false; node_count];
    let mut queue = VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(other, id) in &adj[node] {
            if !seen[other] {
                seen[other] = true;
                parent[other] = Some((node, id));
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while let Some((prev, id)) = parent[node] {
        path.push(id);
        node = prev;
    }
    path
}

fn extract_solution(
    problem: &DiscreteProblem,
    arcs: &[(usize, usize)],
    flow: &[f64],
    u: &[f64],
    v: &[f64],
    pivots: usize,
) -> CouplingSolution {
    let mut plan = Vec::new();
    let mut value = 0.0;
    for (id, &(i, j)) in arcs.iter().enumerate() {
        if flow[id] > 0.0 {
            plan.push((i, j, flow[id]));
            value += flow[id] * problem.s(i, j);
        }
    }
    CouplingSolution { plan, u: u.to_vec(), v: v.to_vec(), value, pivots }
}

/// Dual objective of a target-side potential: build the tightest feasible
/// source duals `u_i = max_j (S_ij − v_j)` and return `Σ a_i u_i + Σ b_j
/// v_j`. Always an upper bound for the optimal coupling value, for *any*
/// `v`.
pub fn dual_objective(problem: &DiscreteProblem, v: &[f64]) -> f64 {
    assert_eq!(v.len(), problem.ys.len(), "one dual per target atom");
    let (n, m) = problem.size();
    let mut total = 0.0;
    for i in 0..n {
        total += problem.a[i] * conjugate_row(problem, v, i);
    }
    for j in 0..m {
        total += problem.b[j] * v[j];
    }
    total
}

/// Tightest feasible source dual over row `i`: `max_j (S_ij − v_j)`.
fn conjugate_row(problem: &DiscreteProblem, v: &[f64], i: usize) -> f64 {
    let m = problem.ys.len();
    let mut best = f64::NEG_INFINITY;
    for j in 0..m {
        best = f64::max(best, problem.s(i, j) - v[j]);
    }
    best
}

/// Overshoot of a candidate dual pair over the exact optimum.
///
/// Rows of `u` that violate feasibility (`u_i + v_j < S_ij` for some `j`)
/// are first repaired by conjugation, `u_i ← max_j (S_ij − v_j)`; feasible
/// rows are kept as given, slack included. The result is nonnegative up to
/// roundoff for any input, and small exactly when the pair certifies
/// near-optimality.
pub fn duality_gap(
    problem: &DiscreteProblem,
    coupling: &CouplingSolution,
    u: &[f64],
    v: &[f64],
) -> f64 {
    assert_eq!(u.len(), problem.xs.len(), "one dual per source atom");
    assert_eq!(v.len(), problem.ys.len(), "one dual per target atom");
    let n = problem.xs.len();
    let mut total = 0.0;
    for i in 0..n {
        total += problem.a[i] * f64::max(u[i], conjugate_row(problem, v, i));
    }
    for (b, vj) in problem.b.iter().zip(v) {
        total += b * vj;
    }
    total - coupling.value
}
