//! Loop certification, configuration taxonomy, invariant manifolds,
//! fold-line iteration and basin curves.
//!
//! Most operations come in two flavours: one taking a [`FilippovSystem`]
//! and one taking any [`ReturnDynamics`], so that explicit planar model maps
//! can be run through the same code. Curves are returned in chart
//! coordinates; for planar maps the chart is the plane itself.

mod basin;
mod certificate;
mod fixed1d;
mod iteration;
mod manifolds;

pub use basin::{basin_curve, basin_of};
pub use certificate::{
    certify, classify_configuration, configuration_of, loop_certificate, modulus, modulus_of, Configuration,
    LoopCertificate, LoopClass, LoopType, ModulusReport, Transversality,
};
pub use fixed1d::{fixed_point_1d, fixed_point_1d_band, FixedPoint1d, Stability1d};
pub use iteration::{iterate_fold_line, iterate_of, FoldIterationOptions, FoldLineIterationReport};
pub use manifolds::{invariant_manifold, loop_data, manifold_of, LoopData, ManifoldKind, UnstableBranch};

use crate::error::Result;
use crate::geometry::PlanarCurve;
use crate::maps::ReturnDynamics;

/// Region names of the points of a chart-coordinate curve.
pub fn classes_of(dynamics: &dyn ReturnDynamics, curve: &PlanarCurve) -> Vec<String> {
    curve
        .iter()
        .map(|c| match dynamics.from_chart(&c) {
            Ok(p) => dynamics.region(&p).name().to_string(),
            Err(_) => "Unknown".to_string(),
        })
        .collect()
}

/// Central difference with one Richardson step, for fallible functions.
pub(crate) fn try_derivative<F: FnMut(f64) -> Result<f64>>(mut f: F, x: f64, h: f64) -> Result<f64> {
    let d1 = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let d2 = (f(x + 0.5 * h)? - f(x - 0.5 * h)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}
