use crate::error::{Error, Result};
use crate::geometry::{FilippovSystem, PlanarCurve};
use crate::maps::{coefficients_at, fixed_point, jacobian_at, FilippovReturn, ReturnDynamics, ReturnMapCoefficients};
use crate::Pt2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    /// Unstable manifold along the α eigendirection (|α| > 1).
    WuAlpha,
    /// Weak stable manifold along the α eigendirection (|α| < 1).
    WsAlpha,
    /// Strong stable manifold of the zero eigenvalue.
    Ws0,
}

impl FromStr for ManifoldKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "wu" | "wu-alpha" => Ok(Self::WuAlpha),
            "ws-alpha" | "ws" => Ok(Self::WsAlpha),
            "ws0" => Ok(Self::Ws0),
            _ => Err(format!("unknown manifold kind '{s}' (wu, ws-alpha, ws0)")),
        }
    }
}

/// Fixed point, coefficients and the α eigendirection, in normalized
/// coordinates.
#[derive(Debug, Clone, Copy)]
pub struct LoopData {
    pub fp: Pt2,
    pub coeffs: ReturnMapCoefficients,
    pub e_alpha: Pt2,
    pub lambda: f64,
}

pub fn loop_data(dynamics: &dyn ReturnDynamics) -> Result<LoopData> {
    let fp = fixed_point(dynamics, &Pt2::zeros())?;
    let coeffs = coefficients_at(dynamics, &fp)?;
    let j = jacobian_at(dynamics, &fp, 1e-5)?;
    let tr = j.trace();
    let disc = (0.25 * tr * tr - j.determinant()).max(0.0).sqrt();
    let lambda = if tr >= 0.0 { 0.5 * tr + disc } else { 0.5 * tr - disc };
    let a = Pt2::new(j[(0, 1)], lambda - j[(0, 0)]);
    let b = Pt2::new(lambda - j[(1, 1)], j[(1, 0)]);
    let mut e = if a.norm() >= b.norm() { a } else { b }.normalize();
    if e.x < 0.0 {
        e = -e;
    }
    Ok(LoopData { fp, coeffs, e_alpha: e, lambda })
}

/// Parametrized unstable manifold: `s ↦ P^k(fp + s·e)` for `|s| ≤ ell`.
pub struct UnstableBranch<'a> {
    pub dynamics: &'a dyn ReturnDynamics,
    pub fp: Pt2,
    pub e: Pt2,
    pub k: usize,
    pub ell: f64,
}

const SEED_LENGTH: f64 = 1e-4;
const POINT_BUDGET: usize = 200_000;

impl<'a> UnstableBranch<'a> {
    /// Enough iterates for the seed to cover `reach` on each side.
    pub fn new(dynamics: &'a dyn ReturnDynamics, data: &LoopData, reach: f64) -> Result<Self> {
        let lam = data.lambda.abs();
        if lam <= 1.0 {
            return Err(Error::WrongType(format!("|alpha| = {lam} is not expanding")));
        }
        let k = ((reach / SEED_LENGTH).ln() / lam.ln()).ceil().max(1.0) as usize;
        Ok(Self { dynamics, fp: data.fp, e: data.e_alpha, k, ell: SEED_LENGTH })
    }

    pub fn point(&self, s: f64) -> Result<Pt2> {
        let mut p = self.fp + self.e * s;
        for _ in 0..self.k {
            p = self.dynamics.apply(&p)?;
        }
        Ok(p)
    }

    /// Adaptive samples `(s, point)` with spacing at most `max_seg`, over
    /// the parameters whose images stay within `clip` of the fixed point.
    pub fn samples(&self, max_seg: f64, clip: f64) -> Result<Vec<(f64, Pt2)>> {
        let init: Vec<f64> = (0..=64).map(|i| -self.ell + 2.0 * self.ell * i as f64 / 64.0).collect();
        refine(&init, |s| self.point(s), self.fp, max_seg, clip)
    }

    /// Closest distance from `q` to the branch.
    pub fn distance(&self, samples: &[(f64, Pt2)], q: &Pt2) -> Result<f64> {
        let (i, _) = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, (s.1 - q).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::GraphTransformDiverged)?;
        let lo = samples[i.saturating_sub(1)].0;
        let hi = samples[(i + 1).min(samples.len() - 1)].0;
        golden_min(|s| self.point(s).map(|p| (p - q).norm()), lo, hi)
    }

    /// Parameter on the side `sign` of the seed where the branch meets the
    /// circle of radius `r`.
    pub fn at_radius(&self, r: f64, sign: f64) -> Result<Pt2> {
        let g = |s: f64| self.point(sign * s).map(|p| (p - self.fp).norm() - r);
        let (mut lo, mut hi) = (0.0, self.ell);
        if g(hi)? < 0.0 {
            return Err(Error::Inconclusive(format!("unstable branch does not reach radius {r}")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 * self.ell.max(1.0) {
                break;
            }
        }
        self.point(sign * 0.5 * (lo + hi))
    }
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..90 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        if (b - a).abs() <= 1e-17 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(fc.min(fd))
}

/// Refines a parameter grid until consecutive images within `clip` of
/// `center` are at most `max_seg` apart. Parameters whose images fall
/// outside on both sides are dropped.
pub(crate) fn refine<F>(init: &[f64], eval: F, center: Pt2, max_seg: f64, clip: f64) -> Result<Vec<(f64, Pt2)>>
where
    F: Fn(f64) -> Result<Pt2> + Sync,
{
    let eval_opt = |s: f64| eval(s).ok().filter(|p| p.iter().all(|v| v.is_finite()));
    let mut pts: Vec<(f64, Option<Pt2>)> = init.par_iter().map(|&s| (s, eval_opt(s))).collect();
    let inside = |p: &Option<Pt2>| p.map(|q| (q - center).norm() <= clip).unwrap_or(false);
    loop {
        let mut wanted = Vec::new();
        for w in pts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if !(inside(&a.1) || inside(&b.1)) {
                continue;
            }
            let split = match (a.1, b.1) {
                (Some(p), Some(q)) => (p - q).norm() > max_seg,
                _ => true,
            };
            if split && (b.0 - a.0).abs() > 1e-15 * (1.0 + a.0.abs()) {
                wanted.push(0.5 * (a.0 + b.0));
            }
        }
        if wanted.is_empty() {
            break;
        }
        if pts.len() + wanted.len() > POINT_BUDGET {
            return Err(Error::ResampleOverflow { budget: POINT_BUDGET });
        }
        let new: Vec<(f64, Option<Pt2>)> = wanted.par_iter().map(|&s| (s, eval_opt(s))).collect();
        pts.extend(new);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let keep: Vec<bool> = (0..pts.len())
        .map(|i| {
            inside(&pts[i].1)
                || (i > 0 && inside(&pts[i - 1].1) && pts[i].1.is_some())
                || (i + 1 < pts.len() && inside(&pts[i + 1].1) && pts[i].1.is_some())
        })
        .collect();
    Ok(pts.into_iter().zip(keep).filter(|(_, k)| *k).map(|((s, p), _)| (s, p.unwrap())).collect())
}

pub fn invariant_manifold(sys: &FilippovSystem, kind: ManifoldKind, arclength: f64) -> Result<PlanarCurve> {
    manifold_of(&FilippovReturn::new(sys)?, kind, arclength)
}

/// Invariant curve of `kind` through the fixed point, total arclength
/// about `arclength`, in chart coordinates.
pub fn manifold_of(dynamics: &dyn ReturnDynamics, kind: ManifoldKind, arclength: f64) -> Result<PlanarCurve> {
    let data = loop_data(dynamics)?;
    let alpha = data.coeffs.alpha.abs();
    let half = 0.5 * arclength;
    let max_seg = dynamics.tolerances().max_seg;
    let pts = match kind {
        ManifoldKind::WuAlpha => {
            if alpha <= 1.0 {
                return Err(Error::WrongType(format!("Wu needs |alpha| > 1, got {alpha}")));
            }
            let branch = UnstableBranch::new(dynamics, &data, 1.5 * half)?;
            let samples = branch.samples(max_seg, 2.0 * half)?;
            trim(&samples.iter().map(|s| s.1).collect::<Vec<_>>(), data.fp, half)
        }
        ManifoldKind::WsAlpha => {
            if alpha >= 1.0 {
                return Err(Error::WrongType(format!("Ws_alpha needs |alpha| < 1, got {alpha}")));
            }
            weak_stable(dynamics, &data, half, max_seg)?
        }
        ManifoldKind::Ws0 => strong_stable(dynamics, &data, half, max_seg)?.into_iter().map(|(_, p)| p).collect(),
    };
    let tag = match kind {
        ManifoldKind::WuAlpha => "wu",
        ManifoldKind::WsAlpha => "ws_alpha",
        ManifoldKind::Ws0 => "ws0",
    };
    let chart: Vec<Pt2> = pts.iter().map(|p| dynamics.to_chart(p)).collect::<Result<_>>()?;
    Ok(PlanarCurve::new(tag, chart))
}

/// Keeps the part of an ordered polyline within arclength `half` of the
/// vertex closest to `center`.
fn trim(pts: &[Pt2], center: Pt2, half: f64) -> Vec<Pt2> {
    let Some(c) = (0..pts.len()).min_by(|&a, &b| (pts[a] - center).norm().total_cmp(&(pts[b] - center).norm())) else {
        return Vec::new();
    };
    let mut lo = c;
    let mut acc = 0.0;
    while lo > 0 && acc < half {
        acc += (pts[lo] - pts[lo - 1]).norm();
        lo -= 1;
    }
    let mut hi = c;
    acc = 0.0;
    while hi + 1 < pts.len() && acc < half {
        acc += (pts[hi + 1] - pts[hi]).norm();
        hi += 1;
    }
    pts[lo..=hi].to_vec()
}

/// Forward images of a fundamental domain on each side of the fixed point.
/// The seed segment itself is discarded; one iterate already flattens the
/// transverse error.
fn weak_stable(dynamics: &dyn ReturnDynamics, data: &LoopData, half: f64, max_seg: f64) -> Result<Vec<Pt2>> {
    let lam = data.lambda.abs();
    let rho = half / lam;
    let floor = 1e-7 * half;
    let mut all: Vec<Pt2> = vec![data.fp];
    let m = ((half / max_seg).ceil() as usize).max(16);
    for sign in [1.0, -1.0] {
        let grid: Vec<f64> = (0..=m).map(|i| rho * (lam + (1.0 - lam) * i as f64 / m as f64)).collect();
        let mut piece: Vec<Pt2> = grid.iter().map(|&s| data.fp + data.e_alpha * (sign * s)).collect();
        for _ in 1..200 {
            piece = piece.iter().map(|p| dynamics.apply(p)).collect::<Result<_>>()?;
            all.extend(piece.iter().copied());
            if piece.iter().all(|p| (p - data.fp).norm() < floor) {
                break;
            }
        }
    }
    all.sort_by(|a, b| (a - data.fp).dot(&data.e_alpha).total_cmp(&(b - data.fp).dot(&data.e_alpha)));
    all.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    Ok(all)
}

/// Graph transform for the curve `x = s(y)` through the fixed point that
/// is invariant under the map, over `|y − y₀| ≤ half`.
pub(crate) fn strong_stable(dynamics: &dyn ReturnDynamics, data: &LoopData, half: f64, max_seg: f64) -> Result<Vec<(f64, Pt2)>> {
    let fp = data.fp;
    let n = ((2.0 * half / max_seg).ceil() as usize).max(200);
    let ts: Vec<f64> = (0..=n).map(|j| -half + 2.0 * half * j as f64 / n as f64).collect();
    let dt = 2.0 * half / n as f64;
    let mut s = vec![0.0; n + 1];
    for _ in 0..100 {
        let interp = |t: f64| -> f64 {
            let u = ((t + half) / dt).clamp(0.0, n as f64);
            let j = (u.floor() as usize).min(n - 1);
            let w = (t + half) / dt - j as f64;
            s[j] + w * (s[j + 1] - s[j])
        };
        let next: Vec<Result<f64>> = ts
            .par_iter()
            .zip(s.par_iter())
            .map(|(&t, &x0)| {
                let resid = |x: f64| -> Result<f64> {
                    let q = dynamics.apply(&(fp + Pt2::new(x, t)))? - fp;
                    Ok(q.x - interp(q.y))
                };
                secant(resid, x0, x0 + 1e-7)
            })
            .collect();
        let next: Vec<f64> = next.into_iter().collect::<Result<_>>()?;
        let delta = next.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s = next;
        if !delta.is_finite() || s.iter().any(|v| v.abs() > half) {
            return Err(Error::GraphTransformDiverged);
        }
        if delta < 1e-14 {
            return Ok(ts.iter().zip(&s).map(|(&t, &x)| (t, fp + Pt2::new(x, t))).collect());
        }
    }
    Err(Error::GraphTransformDiverged)
}

fn secant<F: Fn(f64) -> Result<f64>>(f: F, mut x0: f64, mut x1: f64) -> Result<f64> {
    let mut f0 = f(x0)?;
    if f0 == 0.0 {
        return Ok(x0);
    }
    let mut f1 = f(x1)?;
    for _ in 0..60 {
        if f1 == 0.0 || f1 == f0 {
            return Ok(x1);
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1)?;
        if (x1 - x0).abs() < 1e-16 * (1.0 + x1.abs()) {
            return Ok(x1);
        }
    }
    if f1.abs() < 1e-13 {
        Ok(x1)
    } else {
        Err(Error::GraphTransformDiverged)
    }
}
