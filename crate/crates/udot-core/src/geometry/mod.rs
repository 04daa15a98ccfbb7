//! Planar geometry under an implicit region: level-set tracing, sub-level
//! restriction, curve quadrature, component counting, and sub-level area
//! integrals.
//!
//! The solver reduces every operator evaluation to curve and area integrals
//! over indifference sets `{x : s_y(x, y) = p}` and their sub-level
//! restrictions `{s_yy ≤ q}`; this module supplies those integrals for
//! arbitrary scalar fields so the operator layer stays purely analytic.

mod area;
mod mesh;
mod region;

pub(crate) use area::clipped_cell;
pub use area::{boundary_restricted_integral, sublevel_area, sublevel_integral, Constraint};
pub use mesh::{
    count_components, integrate_over_mesh, restrict_sublevel, trace_iso, BoundaryHit, CutPoint,
    GeometryError, LevelSetMesh, QuadPoint, ScalarField, Segment,
};
pub use region::{BoundaryArc, Region};
