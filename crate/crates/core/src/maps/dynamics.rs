use super::filippov::FilippovReturn;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::SigmaKind;
use crate::scenarios::PlanarMap;
use crate::{Mat2, Pt2};

/// A first return map on Σ in normalized coordinates: the fold curve is the
/// x-axis and the sliding region lies at y < 0.
pub trait ReturnDynamics: Send + Sync {
    fn apply(&self, p: &Pt2) -> Result<Pt2>;

    /// Classification of a normalized point.
    fn region(&self, p: &Pt2) -> SigmaKind;

    /// Follows the extended sliding field from `q` to the fold curve. Returns
    /// the arrival x and whether `q` lies in the stable sliding region.
    fn slide_to_fold(&self, q: &Pt2) -> Result<(f64, bool)>;

    /// Unit direction of the sliding flow at `p`.
    fn sliding_direction(&self, p: &Pt2) -> Result<Pt2>;

    fn to_chart(&self, p: &Pt2) -> Result<Pt2>;

    fn from_chart(&self, c: &Pt2) -> Result<Pt2>;

    fn tolerances(&self) -> &Tolerances;
}

/// An explicit planar map standing in for the return map. Points with
/// y < 0 are sliding, the sliding flow is vertical.
#[derive(Debug, Clone)]
pub struct PlanarReturn {
    pub map: PlanarMap,
    pub tol: Tolerances,
}

impl PlanarReturn {
    pub fn new(map: PlanarMap) -> Self {
        Self { map, tol: Tolerances::default() }
    }
}

impl ReturnDynamics for PlanarReturn {
    fn apply(&self, p: &Pt2) -> Result<Pt2> {
        let q = self.map.apply(p);
        if q.iter().all(|v| v.is_finite()) {
            Ok(q)
        } else {
            Err(Error::Blowup { t: 0.0 })
        }
    }

    fn region(&self, p: &Pt2) -> SigmaKind {
        if p.y > self.tol.classify {
            SigmaKind::Crossing
        } else if p.y < -self.tol.classify {
            SigmaKind::StableSliding
        } else {
            SigmaKind::FoldRegularX { visible: true }
        }
    }

    fn slide_to_fold(&self, q: &Pt2) -> Result<(f64, bool)> {
        Ok((q.x, q.y < 0.0))
    }

    fn sliding_direction(&self, _p: &Pt2) -> Result<Pt2> {
        Ok(Pt2::new(0.0, 1.0))
    }

    fn to_chart(&self, p: &Pt2) -> Result<Pt2> {
        Ok(*p)
    }

    fn from_chart(&self, c: &Pt2) -> Result<Pt2> {
        Ok(*c)
    }

    fn tolerances(&self) -> &Tolerances {
        &self.tol
    }
}

/// Transition map of a Filippov system followed by an explicit planar
/// diffeomorphism from τ back to Σ, in place of the flow-defined one.
#[derive(Debug, Clone)]
pub struct ComposedReturn {
    pub inner: FilippovReturn,
    pub diffeo: PlanarMap,
}

impl ReturnDynamics for ComposedReturn {
    fn apply(&self, p: &Pt2) -> Result<Pt2> {
        let q = self.inner.transition(&self.inner.to_chart(p)?)?;
        self.inner.from_chart(&self.diffeo.apply(&q))
    }

    fn region(&self, p: &Pt2) -> SigmaKind {
        self.inner.region(p)
    }

    fn slide_to_fold(&self, q: &Pt2) -> Result<(f64, bool)> {
        self.inner.slide_to_fold(q)
    }

    fn sliding_direction(&self, p: &Pt2) -> Result<Pt2> {
        self.inner.sliding_direction(p)
    }

    fn to_chart(&self, p: &Pt2) -> Result<Pt2> {
        self.inner.to_chart(p)
    }

    fn from_chart(&self, c: &Pt2) -> Result<Pt2> {
        self.inner.from_chart(c)
    }

    fn tolerances(&self) -> &Tolerances {
        self.inner.tolerances()
    }
}

/// Fixed point of the return map by Newton's method, seeded at `seed`.
pub fn fixed_point(dynamics: &dyn ReturnDynamics, seed: &Pt2) -> Result<Pt2> {
    let tol = dynamics.tolerances().fixed_point;
    let mut p = *seed;
    for _ in 0..40 {
        let r = dynamics.apply(&p)? - p;
        let j = super::jacobian_at(dynamics, &p, 1e-5)? - Mat2::identity();
        let step = j
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::NoFixedPoint(format!("singular Newton matrix at ({}, {})", p.x, p.y)))?;
        p -= step;
        if !p.iter().all(|v| v.is_finite()) || (p - seed).norm() > 1.0 {
            break;
        }
        if step.norm() < 1e-2 * tol || (step.norm() < tol && r.norm() < tol) {
            return Ok(p);
        }
    }
    Err(Error::NoFixedPoint(format!("Newton did not converge from ({}, {})", seed.x, seed.y)))
}

/// Fold line map: image of the fold point at `x`, projected back to the
/// fold curve along the sliding flow.
pub fn fold_line(dynamics: &dyn ReturnDynamics, x: f64) -> Result<(f64, bool)> {
    let q = dynamics.apply(&Pt2::new(x, 0.0))?;
    dynamics.slide_to_fold(&q)
}

/// Fold line map of a Möbius loop, `ψ* ∘ P²`.
pub fn mobius_fold_line(dynamics: &dyn ReturnDynamics, x: f64) -> Result<f64> {
    let h = 1e-4;
    let a = dynamics.apply(&Pt2::new(h, 0.0))?.x - dynamics.apply(&Pt2::new(-h, 0.0))?.x;
    let alpha = a / (2.0 * h);
    if alpha > 0.0 {
        return Err(Error::WrongClass { alpha });
    }
    let q = dynamics.apply(&Pt2::new(x, 0.0))?;
    // The loop point itself lands on the fold, the closure of σ^M.
    if !matches!(dynamics.region(&q), SigmaKind::Crossing | SigmaKind::FoldRegularX { .. }) {
        return Err(Error::DomainViolation(format!("P({x}, 0) does not lie in the crossing region")));
    }
    Ok(dynamics.slide_to_fold(&dynamics.apply(&q)?)?.0)
}
