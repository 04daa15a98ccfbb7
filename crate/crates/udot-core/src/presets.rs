//! Ready-made benchmark problems.
//!
//! Each preset wires a surplus model to a region and a pair of unit-mass
//! densities, so tests, diagnostics, and the command line can refer to a
//! complete problem by name:
//!
//! - `"annulus"`: uniform density on the annulus `1/2 ≤ |x| ≤ 1` mapped to
//!   the uniform density on the circle of directions. The closed-form
//!   solution is flat (`k ≡ 0`, `v ≡ 0`) and the shooting problem is
//!   degenerate — the balance does not depend on the slope — which makes it
//!   the canonical test of the periodic fallback normalization.
//! - `"strip"`: uniform density on the unit square mapped to the uniform
//!   density on `[0, 1]` through `s = x₁ y`. The solution is `k(y) = y`,
//!   `v(y) = y²/2`, and the transport map is the first coordinate.
//! - `"tilted"`: uniform density on the unit square mapped to the uniform
//!   density on `[0, 1]` through `s = x₁ y + x₂ y²/2`. The indifference
//!   curves rotate as they sweep; the attainable slope band collapses to a
//!   corner of the square as the target mass exhausts near `y = 1`, so the
//!   march ends in a stiff boundary layer. It exercises the curvature- and
//!   target-derivative diagnostics away from symmetric special cases.
//!
//! Presets own their model, region, and densities; borrow an assembled
//! [`TransportProblem`] via [`PresetProblem::problem`].

use alloc::boxed::Box;

use crate::density::{Density1, Density2};
use crate::geometry::Region;
use crate::solver::{SolverError, TransportProblem};
use crate::surplus::{self, SurplusModel};

/// A fully assembled, owned benchmark problem.
pub struct PresetProblem {
    model: Box<dyn SurplusModel>,
    region: Region,
    source: Density2,
    target: Density1,
    y_lo: f64,
    y_hi: f64,
    periodic: bool,
    name: &'static str,
}

impl PresetProblem {
    /// Validate the marginals and borrow the assembled problem.
    pub fn problem(&self) -> Result<TransportProblem<'_>, SolverError> {
        TransportProblem::new(
            self.model.as_ref(),
            &self.region,
            &self.source,
            &self.target,
            self.y_lo,
            self.y_hi,
            self.periodic,
        )
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn model(&self) -> &dyn SurplusModel {
        self.model.as_ref()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn source(&self) -> &Density2 {
        &self.source
    }

    pub fn target(&self) -> &Density1 {
        &self.target
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_lo, self.y_hi)
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    /// Replace the surplus by its convexified version `s + c·y²/2`,
    /// keeping region and densities. Solving the modified problem and
    /// subtracting `c·y²/2` from the potential recovers the original
    /// solution exactly (the transform shifts every slope by `c·y` and
    /// every curvature by `c`, and the balance only sees the differences
    /// `s_y − k` and `q − s_yy`, which are unchanged).
    pub fn convexified(self, coefficient: f64) -> PresetProblem {
        PresetProblem {
            model: Box::new(surplus::Convexified::new(self.model, coefficient)),
            ..self
        }
    }
}

/// The names accepted by [`preset_problem`].
pub fn preset_names() -> [&'static str; 3] {
    ["annulus", "strip", "tilted"]
}

/// Look up a benchmark problem by name.
pub fn preset_problem(name: &str) -> Option<PresetProblem> {
    let pi = core::f64::consts::PI;
    match name {
        "annulus" => Some(PresetProblem {
            model: surplus::preset_model("annulus")?,
            region: Region::annulus(),
            // Annulus area is 3π/4.
            source: Density2::new("4/(3π) on the annulus", move |_| 4.0 / (3.0 * pi)),
            target: Density1::new("1/(2π) on the circle", move |_| 0.5 / pi),
            y_lo: 0.0,
            y_hi: 2.0 * pi,
            periodic: true,
            name: "annulus",
        }),
        "strip" => Some(PresetProblem {
            model: surplus::preset_model("strip")?,
            region: Region::unit_square(),
            source: Density2::constant(1.0),
            target: Density1::constant(1.0),
            y_lo: 0.0,
            y_hi: 1.0,
            periodic: false,
            name: "strip",
        }),
        "tilted" => Some(PresetProblem {
            model: surplus::preset_model("tilted")?,
            region: Region::unit_square(),
            source: Density2::constant(1.0),
            target: Density1::constant(1.0),
            y_lo: 0.0,
            y_hi: 1.0,
            periodic: false,
            name: "tilted",
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;
    use crate::vec2::Vec2;

    #[test]
    fn presets_assemble_and_validate() {
        for name in preset_names() {
            let preset = preset_problem(name).expect(name);
            assert_eq!(preset.name(), name);
            let problem = preset.problem().expect(name);
            assert!((problem.source_mass - 1.0).abs() <= tol::MARGINAL_TOL, "{name}");
            assert!((problem.target_mass - 1.0).abs() <= tol::MARGINAL_TOL, "{name}");
            assert_eq!(problem.periodic, name == "annulus");
        }
        assert!(preset_problem("unknown").is_none());
    }

    #[test]
    fn convexified_preset_shifts_derivatives_only_in_y() {
        let plain = preset_problem("strip").unwrap();
        let shifted = preset_problem("strip").unwrap().convexified(2.0);
        let x = Vec2::new(0.3, 0.8);
        let y = 0.6;
        assert!(
            (shifted.model().eval(x, y) - plain.model().eval(x, y) - 2.0 * 0.5 * y * y).abs()
                < 1e-12
        );
        assert!((shifted.model().d_y(x, y) - plain.model().d_y(x, y) - 2.0 * y).abs() < 1e-12);
        assert!((shifted.model().d_yy(x, y) - plain.model().d_yy(x, y) - 2.0).abs() < 1e-12);
        assert_eq!(shifted.model().grad_x(x, y), plain.model().grad_x(x, y));
        // Marginal validation is untouched by the transform.
        assert!(shifted.problem().is_ok());
    }
}
