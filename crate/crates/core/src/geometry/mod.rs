//! Fields, switching functions, Filippov systems and the geometry of Σ.

mod classify;
mod fold;
mod lie;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use classify::{classify_sigma_point, sliding_field, sliding_vector, SigmaClass, SigmaKind};
pub use fold::{fold_curve, fold_point_near, fold_tangent, PlanarCurve};
pub use lie::lie_derivative;

use crate::autodiff::Jet4;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::{Mat3, Pt2, Vec3};

/// How a field's derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    Exact,
    FiniteDifference,
}

/// Central-difference step for coordinate `v`.
pub fn fd_step(v: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + v.abs())
}

/// Evaluation oracle behind a [`SmoothField`].
pub trait VectorOracle: Send + Sync {
    fn eval(&self, p: &Vec3) -> Vec3;

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference
    }

    /// Exact Jacobian, when the oracle can provide one.
    fn exact_jacobian(&self, _p: &Vec3) -> Option<Mat3> {
        None
    }

    /// Evaluation on Taylor jets, used for exact higher Lie derivatives.
    fn eval_jet(&self, _p: &[Jet4; 3]) -> Option<[Jet4; 3]> {
        None
    }
}

/// A smooth vector field on R³. Cheap to clone.
#[derive(Clone)]
pub struct SmoothField {
    oracle: Arc<dyn VectorOracle>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothField({:?})", self.mode())
    }
}

struct FnField<F>(F);

impl<F: Fn(&Vec3) -> Vec3 + Send + Sync> VectorOracle for FnField<F> {
    fn eval(&self, p: &Vec3) -> Vec3 {
        (self.0)(p)
    }
}

impl SmoothField {
    pub fn new<O: VectorOracle + 'static>(oracle: O) -> Self {
        Self { oracle: Arc::new(oracle) }
    }

    /// Opaque field; derivatives by finite differences.
    pub fn from_fn<F: Fn(&Vec3) -> Vec3 + Send + Sync + 'static>(f: F) -> Self {
        Self::new(FnField(f))
    }

    pub fn eval(&self, p: &Vec3) -> Vec3 {
        self.oracle.eval(p)
    }

    pub fn mode(&self) -> DerivativeMode {
        self.oracle.derivative_mode()
    }

    pub fn jacobian(&self, p: &Vec3) -> Mat3 {
        self.oracle.exact_jacobian(p).unwrap_or_else(|| self.fd_jacobian(p))
    }

    /// Central-difference Jacobian regardless of mode.
    pub fn fd_jacobian(&self, p: &Vec3) -> Mat3 {
        let mut j = Mat3::zeros();
        for k in 0..3 {
            let h = fd_step(p[k]);
            let mut a = *p;
            let mut b = *p;
            a[k] += h;
            b[k] -= h;
            j.set_column(k, &((self.eval(&a) - self.eval(&b)) / (2.0 * h)));
        }
        j
    }

    pub fn eval_jet(&self, p: &[Jet4; 3]) -> Option<[Jet4; 3]> {
        self.oracle.eval_jet(p)
    }
}

/// Evaluation oracle behind a [`SwitchingFunction`].
pub trait ScalarOracle: Send + Sync {
    fn eval(&self, p: &Vec3) -> f64;

    fn exact_gradient(&self, _p: &Vec3) -> Option<Vec3> {
        None
    }

    fn eval_jet(&self, _p: &[Jet4; 3]) -> Option<Jet4> {
        None
    }
}

/// Scalar function whose zero set is the switching surface.
#[derive(Clone)]
pub struct SwitchingFunction {
    oracle: Arc<dyn ScalarOracle>,
}

impl fmt::Debug for SwitchingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SwitchingFunction")
    }
}

struct FnScalar<F>(F);

impl<F: Fn(&Vec3) -> f64 + Send + Sync> ScalarOracle for FnScalar<F> {
    fn eval(&self, p: &Vec3) -> f64 {
        (self.0)(p)
    }
}

impl SwitchingFunction {
    pub fn new<O: ScalarOracle + 'static>(oracle: O) -> Self {
        Self { oracle: Arc::new(oracle) }
    }

    pub fn from_fn<F: Fn(&Vec3) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::new(FnScalar(f))
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        self.oracle.eval(p)
    }

    pub fn gradient(&self, p: &Vec3) -> Vec3 {
        self.oracle.exact_gradient(p).unwrap_or_else(|| {
            Vec3::from_fn(|k, _| {
                let h = fd_step(p[k]);
                let mut a = *p;
                let mut b = *p;
                a[k] += h;
                b[k] -= h;
                (self.eval(&a) - self.eval(&b)) / (2.0 * h)
            })
        })
    }

    pub fn eval_jet(&self, p: &[Jet4; 3]) -> Option<Jet4> {
        self.oracle.eval_jet(p)
    }
}

/// Affine parameterization of Σ near a base point: `c ↦ base + c.x·u + c.y·v`,
/// pushed back onto the surface along the normal `u × v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaChart {
    pub base: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
}

impl SigmaChart {
    /// Orthonormal chart built from the gradient of `f` at `base`.
    pub fn from_gradient(f: &SwitchingFunction, base: Vec3) -> Self {
        let n = f.gradient(&base).normalize();
        let axis = (0..3)
            .map(|k| Vec3::ith(k, 1.0))
            .min_by(|a, b| a.dot(&n).abs().total_cmp(&b.dot(&n).abs()))
            .unwrap();
        let u = (axis - n * axis.dot(&n)).normalize();
        let v = n.cross(&u);
        Self { base: base.into(), u: u.into(), v: v.into() }
    }

    pub fn base(&self) -> Vec3 {
        Vec3::from(self.base)
    }

    pub fn normal(&self) -> Vec3 {
        Vec3::from(self.u).cross(&Vec3::from(self.v))
    }

    pub fn coords(&self, p: &Vec3) -> Pt2 {
        let d = p - self.base();
        Pt2::new(d.dot(&Vec3::from(self.u)), d.dot(&Vec3::from(self.v)))
    }

    /// Chart components of a tangent vector.
    pub fn tangent_coords(&self, w: &Vec3) -> Pt2 {
        Pt2::new(w.dot(&Vec3::from(self.u)), w.dot(&Vec3::from(self.v)))
    }

    pub fn embed(&self, c: &Pt2) -> Vec3 {
        self.base() + Vec3::from(self.u) * c.x + Vec3::from(self.v) * c.y
    }

    pub fn embed_tangent(&self, w: &Pt2) -> Vec3 {
        Vec3::from(self.u) * w.x + Vec3::from(self.v) * w.y
    }
}

/// Discontinuous system: `X` on `f > 0`, `Y` on `f < 0`.
#[derive(Debug, Clone)]
pub struct FilippovSystem {
    pub name: String,
    pub x: SmoothField,
    pub y: SmoothField,
    pub f: SwitchingFunction,
    pub chart: SigmaChart,
    /// Level ε of the transversal section τ = {f = ε}.
    pub tau_level: f64,
    pub tol: Tolerances,
}

impl FilippovSystem {
    pub fn new(
        name: impl Into<String>,
        x: SmoothField,
        y: SmoothField,
        f: SwitchingFunction,
        chart: SigmaChart,
        tau_level: f64,
    ) -> Result<Self> {
        let r = f.eval(&chart.base());
        if r.abs() >= 1e-10 {
            return Err(Error::InvalidSystem(format!("chart base off Σ: f = {r:e}")));
        }
        if tau_level.is_nan() || tau_level <= 0.0 {
            return Err(Error::InvalidSystem(format!("tau level must be positive, got {tau_level}")));
        }
        Ok(Self { name: name.into(), x, y, f, chart, tau_level, tol: Tolerances::default() })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// `Z = F + sgn(f)·G` with `F = (X+Y)/2`, `G = (X−Y)/2`. Off Σ the
    /// selected field is returned as is, so Z agrees with X or Y bitwise.
    pub fn z_field(&self, p: &Vec3) -> Vec3 {
        let s = self.f.eval(p);
        if s > 0.0 {
            self.x.eval(p)
        } else if s < 0.0 {
            self.y.eval(p)
        } else {
            (self.x.eval(p) + self.y.eval(p)) * 0.5
        }
    }

    /// Point of Σ with chart coordinates `c`.
    pub fn lift(&self, c: &Pt2) -> Vec3 {
        self.lift_level(c, 0.0)
    }

    /// Point on `{f = level}` above chart point `c`, along the chart normal.
    pub fn lift_level(&self, c: &Pt2, level: f64) -> Vec3 {
        let n = self.chart.normal();
        let mut p = self.chart.embed(c);
        for _ in 0..50 {
            let r = self.f.eval(&p) - level;
            if r.abs() <= 1e-15 * (1.0 + level.abs()) {
                break;
            }
            let dn = self.f.gradient(&p).dot(&n);
            if dn == 0.0 {
                break;
            }
            p -= n * (r / dn);
        }
        p
    }

    /// Xf at `p`.
    pub fn xf(&self, p: &Vec3) -> f64 {
        self.x.eval(p).dot(&self.f.gradient(p))
    }

    /// Yf at `p`.
    pub fn yf(&self, p: &Vec3) -> f64 {
        self.y.eval(p).dot(&self.f.gradient(p))
    }
}
