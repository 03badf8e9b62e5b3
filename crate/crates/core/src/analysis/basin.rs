use super::manifolds::{loop_data, strong_stable};
use crate::error::{Error, Result};
use crate::geometry::{FilippovSystem, PlanarCurve, SigmaKind};
use crate::maps::{FilippovReturn, ReturnDynamics};
use crate::Pt2;

pub fn basin_curve(sys: &FilippovSystem, arclength: f64) -> Result<PlanarCurve> {
    basin_of(&FilippovReturn::new(sys)?, arclength)
}

/// Points that reach the loop: the strong stable manifold of the fixed
/// point inside the crossing region, joined at the fold point with the
/// sliding orbit that ends there. Ordered from the sliding end.
pub fn basin_of(dynamics: &dyn ReturnDynamics, arclength: f64) -> Result<PlanarCurve> {
    let data = loop_data(dynamics)?;
    if data.coeffs.alpha.abs() <= 1.0 {
        return Err(Error::WrongType(format!("basin curve needs a saddle loop, |alpha| = {}", data.coeffs.alpha.abs())));
    }
    let half = 0.5 * arclength;
    let max_seg = dynamics.tolerances().max_seg;
    let p0 = Pt2::new(data.fp.x, 0.0);

    let mut slide = vec![p0];
    let h = 0.5 * max_seg;
    let dir = |p: &Pt2| dynamics.sliding_direction(p).map(|v| -v);
    let mut p = p0;
    let mut travelled = 0.0;
    while travelled < half {
        let k1 = dir(&p)?;
        let k2 = dir(&(p + k1 * (0.5 * h)))?;
        let k3 = dir(&(p + k2 * (0.5 * h)))?;
        let k4 = dir(&(p + k3 * h))?;
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        travelled += h;
        slide.push(p);
    }
    slide.reverse();

    let ws0 = strong_stable(dynamics, &data, half, max_seg)?;
    let crossing: Vec<Pt2> = ws0
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|s| s.1)
        .take_while(|q| dynamics.region(q) == SigmaKind::Crossing)
        .collect();
    let pts: Vec<Pt2> = slide.into_iter().chain(crossing).collect();
    let chart: Vec<Pt2> = pts.iter().map(|q| dynamics.to_chart(q)).collect::<Result<_>>()?;
    Ok(PlanarCurve::new("beta", chart))
}
