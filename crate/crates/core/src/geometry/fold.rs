use serde::{Deserialize, Serialize};

use super::{lie_derivative, FilippovSystem};
use crate::error::{Error, Result};
use crate::{Mat2, Pt2};

/// Polyline in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarCurve {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    pub tag: String,
}

impl PlanarCurve {
    pub fn new(tag: impl Into<String>, points: impl IntoIterator<Item = Pt2>) -> Self {
        Self { points: points.into_iter().map(|p| [p.x, p.y]).collect(), closed: false, tag: tag.into() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Pt2 {
        Pt2::from(self.points[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = Pt2> + '_ {
        self.points.iter().map(|p| Pt2::from(*p))
    }

    pub fn arclength(&self) -> f64 {
        self.points.windows(2).map(|w| (Pt2::from(w[1]) - Pt2::from(w[0])).norm()).sum()
    }

    /// Largest distance between consecutive points.
    pub fn max_segment(&self) -> f64 {
        self.points.windows(2).map(|w| (Pt2::from(w[1]) - Pt2::from(w[0])).norm()).fold(0.0, f64::max)
    }

    /// Distance from `q` to the polyline.
    pub fn distance_to(&self, q: &Pt2) -> f64 {
        match self.points.len() {
            0 => f64::INFINITY,
            1 => (self.point(0) - q).norm(),
            _ => self
                .points
                .windows(2)
                .map(|w| segment_distance(q, &Pt2::from(w[0]), &Pt2::from(w[1])))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// CSV with columns `index,x,y,class`; `classes` may be shorter than
    /// the curve, missing labels are left empty.
    pub fn to_csv(&self, classes: &[String]) -> String {
        let mut out = String::from("index,x,y,class\n");
        for (i, p) in self.points.iter().enumerate() {
            let c = classes.get(i).map(String::as_str).unwrap_or("");
            out.push_str(&format!("{i},{},{},{c}\n", p[0], p[1]));
        }
        out
    }

    pub fn from_csv(text: &str, tag: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.starts_with("index")) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: Option<&&str>| {
                s.and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidSystem(format!("curve csv line {}: '{line}'", n + 1)))
            };
            points.push([parse(cols.get(1))?, parse(cols.get(2))?]);
        }
        Ok(Self { points, closed: false, tag: tag.to_string() })
    }
}

fn segment_distance(q: &Pt2, a: &Pt2, b: &Pt2) -> f64 {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return (q - a).norm();
    }
    let t = ((q - a).dot(&d) / l2).clamp(0.0, 1.0);
    (a + d * t - q).norm()
}

/// Xf on Σ as a function of chart coordinates.
fn tangency(sys: &FilippovSystem, c: &Pt2) -> f64 {
    sys.xf(&sys.lift(c))
}

fn tangency_gradient(sys: &FilippovSystem, c: &Pt2) -> Pt2 {
    let h = 1e-6;
    let dx = Pt2::new(h, 0.0);
    let dy = Pt2::new(0.0, h);
    Pt2::new(
        (tangency(sys, &(c + dx)) - tangency(sys, &(c - dx))) / (2.0 * h),
        (tangency(sys, &(c + dy)) - tangency(sys, &(c - dy))) / (2.0 * h),
    )
}

/// Newton may not wander further than this from its seed (chart units).
const MAX_NEWTON_TRAVEL: f64 = 0.25;
const RESIDUAL: f64 = 1e-12;

/// Nearest point of the tangency set {Xf = 0} ∩ Σ to `seed`, by
/// minimum-norm Newton steps.
pub fn fold_point_near(sys: &FilippovSystem, seed: &Pt2) -> Result<Pt2> {
    let mut c = *seed;
    for _ in 0..60 {
        let g = tangency(sys, &c);
        if g.abs() < RESIDUAL {
            return Ok(c);
        }
        let grad = tangency_gradient(sys, &c);
        let n2 = grad.norm_squared();
        if n2 < 1e-20 || !g.is_finite() {
            break;
        }
        c -= grad * (g / n2);
        if (c - seed).norm() > MAX_NEWTON_TRAVEL {
            break;
        }
    }
    Err(Error::NoFoldCurve(format!("Newton from ({}, {}) did not converge", seed.x, seed.y)))
}

/// Unit tangent of the fold curve at `c`.
pub fn fold_tangent(sys: &FilippovSystem, c: &Pt2) -> Pt2 {
    let g = tangency_gradient(sys, c);
    Pt2::new(-g.y, g.x).normalize()
}

/// Pseudo-arclength continuation of {f = 0, Xf = 0} through the fold point
/// near `seed`, `arc_span/2` each way, in steps of at most `step`.
pub fn fold_curve(sys: &FilippovSystem, seed: &Pt2, arc_span: f64, step: f64) -> Result<PlanarCurve> {
    let step = step.min(sys.tol.max_seg);
    let c0 = fold_point_near(sys, seed)?;
    let sign0 = visibility(sys, &c0)?;
    let t0 = fold_tangent(sys, &c0);
    let mut back = trace(sys, c0, -t0, 0.5 * arc_span, step, sign0)?;
    let fwd = trace(sys, c0, t0, 0.5 * arc_span, step, sign0)?;
    back.reverse();
    back.push(c0);
    back.extend(fwd);
    Ok(PlanarCurve::new("gamma", back))
}

fn visibility(sys: &FilippovSystem, c: &Pt2) -> Result<f64> {
    let x2f = lie_derivative(&sys.x, &sys.f, &sys.lift(c), 2)?;
    if x2f.abs() <= sys.tol.classify {
        return Err(Error::DegeneratePoint(c.x, c.y));
    }
    Ok(x2f.signum())
}

fn trace(sys: &FilippovSystem, start: Pt2, dir: Pt2, span: f64, step: f64, sign0: f64) -> Result<Vec<Pt2>> {
    let mut out = Vec::new();
    let mut c = start;
    let mut t = dir;
    let mut done = 0.0;
    while done < span - 1e-15 {
        let h = step.min(span - done);
        let pred = c + t * h;
        let mut q = pred;
        let mut converged = false;
        for _ in 0..30 {
            let g = tangency(sys, &q);
            if g.abs() < RESIDUAL {
                converged = true;
                break;
            }
            let grad = tangency_gradient(sys, &q);
            let a = Mat2::new(grad.x, grad.y, t.x, t.y);
            let rhs = Pt2::new(-g, -t.dot(&(q - pred)));
            match a.lu().solve(&rhs) {
                Some(d) => q += d,
                None => break,
            }
        }
        if !converged {
            return Err(Error::NoFoldCurve(format!("corrector failed near ({}, {})", pred.x, pred.y)));
        }
        if visibility(sys, &q)? != sign0 {
            return Err(Error::DegeneratePoint(q.x, q.y));
        }
        let mut nt = fold_tangent(sys, &q);
        if nt.dot(&t) < 0.0 {
            nt = -nt;
        }
        done += (q - c).norm();
        c = q;
        t = nt;
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_clamps() {
        let d = segment_distance(&Pt2::new(2.0, 1.0), &Pt2::zeros(), &Pt2::new(1.0, 0.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = PlanarCurve::new("w", [Pt2::new(0.1, -1.0 / 3.0), Pt2::new(1e-17, 2.5)]);
        let back = PlanarCurve::from_csv(&c.to_csv(&[]), "w").unwrap();
        assert_eq!(back, c);
    }
}
