use super::dynamics::ReturnDynamics;
use super::PASSAGE_T_MAX;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{classify_sigma_point, fold_point_near, sliding_vector, FilippovSystem, SigmaKind};
use crate::integrator::{flow_to_section, integrate, Direction, Level, OdeOptions, Outcome, Section, Tangency};
use crate::{Mat2, Pt2};

/// Oblique frame at a fold point: `t0` along the fold curve, `s0` along the
/// sliding field, pointing into the crossing region. Chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFrame {
    pub p0: Pt2,
    pub t0: Pt2,
    pub s0: Pt2,
}

impl NormalFrame {
    fn basis(&self) -> Mat2 {
        Mat2::from_columns(&[self.t0, self.s0])
    }

    /// Oblique components `(u, η)` of chart point `c`.
    pub fn oblique(&self, c: &Pt2) -> Pt2 {
        self.basis().lu().solve(&(c - self.p0)).unwrap_or_else(|| Pt2::repeat(f64::NAN))
    }

    pub fn point(&self, u: f64, eta: f64) -> Pt2 {
        self.p0 + self.t0 * u + self.s0 * eta
    }
}

/// Full first return map of a Filippov system, in normalized coordinates.
#[derive(Debug, Clone)]
pub struct FilippovReturn {
    pub sys: FilippovSystem,
    pub frame: NormalFrame,
    opts: OdeOptions,
}

/// Sliding orbits farther than this from the frame origin have left the
/// fold neighbourhood.
const WORK_RADIUS: f64 = 1.0;

impl FilippovReturn {
    /// Frame at the fold point nearest the chart origin.
    pub fn new(sys: &FilippovSystem) -> Result<Self> {
        Self::at(sys, &Pt2::zeros())
    }

    pub fn at(sys: &FilippovSystem, seed: &Pt2) -> Result<Self> {
        let p0 = fold_point_near(sys, seed)?;
        let p3 = sys.lift(&p0);
        let t0 = crate::geometry::fold_tangent(sys, &p0);
        let mut s0 = sys.chart.tangent_coords(&sys.x.eval(&p3)).normalize();
        // Orient s0 so that Xf grows along it where Yf > 0: towards Σ^c.
        let h = 1e-6;
        let dxf = sys.xf(&sys.lift(&(p0 + s0 * h))) - sys.xf(&sys.lift(&(p0 - s0 * h)));
        if dxf * sys.yf(&p3) < 0.0 {
            s0 = -s0;
        }
        let t0 = if t0.x * s0.y - t0.y * s0.x < 0.0 { -t0 } else { t0 };
        Ok(Self { sys: sys.clone(), frame: NormalFrame { p0, t0, s0 }, opts: OdeOptions::from_tolerances(&sys.tol) })
    }

    /// Offset of the fold curve along `s0` above fold coordinate `u`.
    pub fn fold_offset(&self, u: f64) -> Result<f64> {
        let g = |w: f64| self.sys.xf(&self.sys.lift(&self.frame.point(u, w)));
        let mut w = 0.0;
        for _ in 0..30 {
            let gw = g(w);
            if gw.abs() < 1e-14 {
                return Ok(w);
            }
            let h = 1e-7;
            let d = (g(w + h) - g(w - h)) / (2.0 * h);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let step = gw / d;
            w -= step;
            if step.abs() < 1e-15 {
                return Ok(w);
            }
        }
        Err(Error::NoFoldCurve(format!("fold curve not found above u = {u}")))
    }

    pub fn transition(&self, c: &Pt2) -> Result<Pt2> {
        let start = self.sys.lift(c);
        let level = Level { f: &self.sys.f, level: self.sys.tau_level };
        let (hit, _) = flow_to_section(&self.sys.x, &start, &level, Direction::Forward, PASSAGE_T_MAX, &self.opts)?;
        Ok(self.sys.chart.coords(&hit))
    }

    /// Full return map in chart coordinates.
    pub fn apply_chart(&self, c: &Pt2) -> Result<Pt2> {
        diffeo(&self.sys, &self.transition(c)?, &self.opts)
    }
}

pub(super) fn diffeo(sys: &FilippovSystem, q: &Pt2, opts: &OdeOptions) -> Result<Pt2> {
    let start = sys.lift_level(q, sys.tau_level);
    let (h1, _) = flow_to_section(&sys.x, &start, &sys.f, Direction::Forward, PASSAGE_T_MAX, opts)?;
    let class = classify_sigma_point(sys, &h1, sys.tol.classify)?;
    if class.kind != SigmaKind::Crossing {
        return Err(Error::NotCrossing { point: h1.into() });
    }
    let (h2, _) = flow_to_section(&sys.y, &h1, &sys.f, Direction::Forward, PASSAGE_T_MAX, opts)?;
    Ok(sys.chart.coords(&h2))
}

impl ReturnDynamics for FilippovReturn {
    fn apply(&self, p: &Pt2) -> Result<Pt2> {
        self.from_chart(&self.apply_chart(&self.to_chart(p)?)?)
    }

    fn region(&self, p: &Pt2) -> SigmaKind {
        self.to_chart(p)
            .and_then(|c| classify_sigma_point(&self.sys, &self.sys.lift(&c), self.sys.tol.classify))
            .map(|c| c.kind)
            .unwrap_or(SigmaKind::Degenerate)
    }

    fn slide_to_fold(&self, q: &Pt2) -> Result<(f64, bool)> {
        let sys = &self.sys;
        let c = self.to_chart(q)?;
        let p = sys.lift(&c);
        let real = matches!(self.region(q), SigmaKind::StableSliding);
        let tangency = Tangency { field: &sys.x, f: &sys.f };
        let xf = tangency.value(&p);
        if xf.abs() <= self.opts.arm {
            return Ok((q.x, real));
        }
        let rate = tangency.gradient(&p).dot(&sliding_vector(sys, &p)?);
        let sgn = if xf * rate > 0.0 { -1.0 } else { 1.0 };
        let rhs = |x: &crate::Vec3| sliding_vector(sys, x).map(|v| v * sgn);
        let out = integrate(&rhs, p, 10.0, &[&tangency], &self.opts, None);
        match out {
            Ok(Outcome::Event { p: hit, .. }) => {
                let hc = sys.chart.coords(&hit);
                if (hc - self.frame.p0).norm() > WORK_RADIUS {
                    return Err(Error::NoFoldReached);
                }
                Ok((self.frame.oblique(&hc).x, real))
            }
            Ok(Outcome::TimeOut { .. }) | Err(Error::Blowup { .. }) | Err(Error::NoHit { .. }) => {
                Err(Error::NoFoldReached)
            }
            Err(e) => Err(e),
        }
    }

    fn sliding_direction(&self, p: &Pt2) -> Result<Pt2> {
        let c = self.to_chart(p)?;
        let v = sliding_vector(&self.sys, &self.sys.lift(&c))?;
        let w = self.sys.chart.tangent_coords(&v);
        let o = self.frame.oblique(&(self.frame.p0 + w));
        Ok(o.normalize())
    }

    fn to_chart(&self, p: &Pt2) -> Result<Pt2> {
        Ok(self.frame.point(p.x, self.fold_offset(p.x)? + p.y))
    }

    fn from_chart(&self, c: &Pt2) -> Result<Pt2> {
        let o = self.frame.oblique(c);
        Ok(Pt2::new(o.x, o.y - self.fold_offset(o.x)?))
    }

    fn tolerances(&self) -> &Tolerances {
        &self.sys.tol
    }
}
