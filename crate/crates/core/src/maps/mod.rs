//! Return maps around a fold-regular loop.
//!
//! All maps act on Σ in two coordinate systems: the system chart and the
//! normalized chart of [`NormalFrame`], where the fold curve is the x-axis
//! and the sliding region lies at y < 0. [`ReturnDynamics`] abstracts the
//! full first return map in normalized coordinates so that the analysis
//! layer runs unchanged on Filippov systems and on explicit planar models.

mod coefficients;
mod dynamics;
mod filippov;

pub use coefficients::{coefficients_at, jacobian_at, RawCoefficients, ReturnMapCoefficients};
pub use dynamics::{fixed_point, fold_line, mobius_fold_line, ComposedReturn, PlanarReturn, ReturnDynamics};
pub use filippov::{FilippovReturn, NormalFrame};

use crate::error::Result;
use crate::geometry::FilippovSystem;
use crate::integrator::{flow_to_section, Direction, Level, OdeOptions};
use crate::Pt2;

/// Time budget for a single passage.
pub const PASSAGE_T_MAX: f64 = 20.0;

/// Full transition map from Σ to τ = {f = ε} along X, through virtual
/// orbits on the sliding side. Chart coordinates in and out.
pub fn transition_map(sys: &FilippovSystem, p: &Pt2, epsilon: f64) -> Result<Pt2> {
    let start = sys.lift(p);
    let level = Level { f: &sys.f, level: epsilon };
    let opts = OdeOptions::from_tolerances(&sys.tol);
    let (hit, _) = flow_to_section(&sys.x, &start, &level, Direction::Forward, PASSAGE_T_MAX, &opts)?;
    Ok(sys.chart.coords(&hit))
}

/// Return diffeomorphism τ → Σ: X down to Σ, cross, Y back to Σ.
pub fn return_diffeo(sys: &FilippovSystem, q: &Pt2) -> Result<Pt2> {
    filippov::diffeo(sys, q, &OdeOptions::from_tolerances(&sys.tol))
}

/// Full first return map `D ∘ T` in chart coordinates.
pub fn first_return_map(sys: &FilippovSystem, p: &Pt2) -> Result<Pt2> {
    return_diffeo(sys, &transition_map(sys, p, sys.tau_level)?)
}

/// Fold line map at fold coordinate `x`: the arrival coordinate on the fold
/// curve and whether the connecting sliding orbit is real.
pub fn fold_line_map(sys: &FilippovSystem, x: f64) -> Result<(f64, bool)> {
    fold_line(&FilippovReturn::new(sys)?, x)
}

/// Fold line map of a Möbius loop: two returns, then the sliding projection.
pub fn mobius_fold_line_map(sys: &FilippovSystem, x: f64) -> Result<f64> {
    mobius_fold_line(&FilippovReturn::new(sys)?, x)
}

/// Taylor coefficients of the return map at its fixed point near the fold
/// point closest to the chart origin.
pub fn return_map_coefficients(sys: &FilippovSystem) -> Result<ReturnMapCoefficients> {
    let r = FilippovReturn::new(sys)?;
    let fp = fixed_point(&r, &Pt2::zeros())?;
    coefficients_at(&r, &fp)
}
