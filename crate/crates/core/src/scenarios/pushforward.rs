use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{SmoothField, VectorOracle};
use crate::{Mat3, Vec3};

/// Local diffeomorphism with an exact Jacobian.
pub trait Diffeo: Send + Sync {
    fn map(&self, q: &Vec3) -> Vec3;
    fn jacobian(&self, q: &Vec3) -> Mat3;
}

pub struct IdentityMap;

impl Diffeo for IdentityMap {
    fn map(&self, q: &Vec3) -> Vec3 {
        *q
    }
    fn jacobian(&self, _q: &Vec3) -> Mat3 {
        Mat3::identity()
    }
}

/// `M(x, y, z) = (x(2 − y + x(y − 1)), y − x(y − 1), z)`; the identity on x = 0.
pub struct Exa44Map;

impl Diffeo for Exa44Map {
    fn map(&self, q: &Vec3) -> Vec3 {
        let (x, y) = (q.x, q.y);
        Vec3::new(x * (2.0 - y + x * (y - 1.0)), y - x * (y - 1.0), q.z)
    }

    fn jacobian(&self, q: &Vec3) -> Mat3 {
        let (x, y) = (q.x, q.y);
        Mat3::new(
            2.0 - y + 2.0 * x * (y - 1.0),
            -x + x * x,
            0.0,
            -(y - 1.0),
            1.0 - x,
            0.0,
            0.0,
            0.0,
            1.0,
        )
    }
}

/// `p ↦ DM(q)·field(q)` with `M(q) = p`.
pub struct Pushforward {
    field: SmoothField,
    m: Arc<dyn Diffeo>,
}

const INVERSION_TOL: f64 = 1e-12;

impl Pushforward {
    pub fn new<M: Diffeo + 'static>(field: SmoothField, m: M) -> Self {
        Self { field, m: Arc::new(m) }
    }

    /// Solve `M(q) = p` by Newton from `q = p`.
    pub fn invert(&self, p: &Vec3) -> Result<Vec3> {
        let mut q = *p;
        let scale = 1.0 + p.norm();
        for _ in 0..50 {
            let r = self.m.map(&q) - p;
            if r.norm() <= INVERSION_TOL * scale {
                return Ok(q);
            }
            let step = self.m.jacobian(&q).lu().solve(&r);
            match step {
                Some(s) if s.iter().all(|v| v.is_finite()) => q -= s,
                _ => break,
            }
        }
        Err(Error::InversionFailed { point: (*p).into() })
    }

    pub fn try_eval(&self, p: &Vec3) -> Result<Vec3> {
        let q = self.invert(p)?;
        Ok(self.m.jacobian(&q) * self.field.eval(&q))
    }
}

impl VectorOracle for Pushforward {
    /// Not-a-number components signal a failed inversion; integrators treat
    /// them as leaving the working region.
    fn eval(&self, p: &Vec3) -> Vec3 {
        self.try_eval(p).unwrap_or_else(|_| Vec3::repeat(f64::NAN))
    }
}

pub fn pushforward<M: Diffeo + 'static>(field: SmoothField, m: M) -> SmoothField {
    SmoothField::new(Pushforward::new(field, m))
}
