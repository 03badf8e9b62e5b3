use super::manifolds::{loop_data, refine, UnstableBranch};
use crate::error::{Error, Result};
use crate::geometry::{FilippovSystem, PlanarCurve, SigmaKind};
use crate::maps::{FilippovReturn, ReturnDynamics};
use crate::numeric::line_angle;
use crate::Pt2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct FoldIterationOptions {
    pub n: usize,
    /// Radius of the circle on which angular order is measured, and of the
    /// disc in which distances to Wu are taken.
    pub radius: f64,
    /// Curves are kept within this distance of the fixed point.
    pub clip: f64,
    /// Initial curve in chart coordinates; the fold curve when absent.
    pub s0: Option<PlanarCurve>,
}

impl FoldIterationOptions {
    pub fn new(n: usize) -> Self {
        Self { n, radius: 0.5, clip: 1.0, s0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldLineIterationReport {
    pub n: usize,
    pub radius: f64,
    /// `S₀ … S_n` in chart coordinates.
    pub curves: Vec<PlanarCurve>,
    pub order_crossing: bool,
    pub flip_sliding: bool,
    /// C⁰ distance to Wu within `radius`, per curve.
    pub dist_to_wu: Vec<f64>,
    /// Angle between each curve's tangent at the fixed point and (α, b).
    pub tangent_angles: Vec<f64>,
    /// Signed angle of `S_n` relative to Wu on the circle, crossing side,
    /// for n = 1..N.
    pub crossing_offsets: Vec<f64>,
    /// Same on the sliding side.
    pub sliding_offsets: Vec<f64>,
    /// b > 0: orientation is the mirror image of the b < 0 convention.
    pub mirrored: bool,
}

pub fn iterate_fold_line(sys: &FilippovSystem, opts: &FoldIterationOptions) -> Result<FoldLineIterationReport> {
    iterate_of(&FilippovReturn::new(sys)?, opts)
}

struct Polyline {
    pts: Vec<Pt2>,
    cum: Vec<f64>,
}

impl Polyline {
    fn new(pts: Vec<Pt2>) -> Self {
        let mut cum = vec![0.0];
        for w in pts.windows(2) {
            cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
        }
        Self { pts, cum }
    }

    fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn at(&self, t: f64) -> Pt2 {
        let t = t.clamp(0.0, self.length());
        let i = self.cum.partition_point(|&c| c <= t).clamp(1, self.pts.len() - 1) - 1;
        let seg = self.cum[i + 1] - self.cum[i];
        let w = if seg > 0.0 { (t - self.cum[i]) / seg } else { 0.0 };
        self.pts[i] + (self.pts[i + 1] - self.pts[i]) * w
    }

    /// Parameter of the point closest to `q`.
    fn project(&self, q: &Pt2) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..self.pts.len() - 1 {
            let d = self.pts[i + 1] - self.pts[i];
            let l2 = d.norm_squared();
            let w = if l2 > 0.0 { ((q - self.pts[i]).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
            let dist = (self.pts[i] + d * w - q).norm();
            if dist < best.0 {
                best = (dist, self.cum[i] + w * l2.sqrt());
            }
        }
        best.1
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Pushes the fold curve (or a supplied `S₀`) through the return map and
/// measures how the iterates approach the unstable manifold.
pub fn iterate_of(dynamics: &dyn ReturnDynamics, opts: &FoldIterationOptions) -> Result<FoldLineIterationReport> {
    let data = loop_data(dynamics)?;
    if data.coeffs.alpha.abs() <= 1.0 {
        return Err(Error::WrongType(format!("fold-line iteration needs |alpha| > 1, got {}", data.coeffs.alpha)));
    }
    let fp = data.fp;
    let r = opts.radius;
    let max_seg = dynamics.tolerances().max_seg;
    let s0 = match &opts.s0 {
        Some(c) => Polyline::new(c.iter().map(|p| dynamics.from_chart(&p)).collect::<Result<_>>()?),
        None => Polyline::new(vec![Pt2::new(fp.x - opts.clip, 0.0), Pt2::new(fp.x + opts.clip, 0.0)]),
    };
    if s0.pts.len() < 2 {
        return Err(Error::DomainViolation("initial curve needs at least two points".into()));
    }
    let tc = s0.project(&fp);
    let wu = UnstableBranch::new(dynamics, &data, 1.5 * r.max(opts.clip))?;
    let wu_samples = wu.samples(max_seg, 2.0 * r)?;
    let wu_ends = [wu.at_radius(r, 1.0)?, wu.at_radius(r, -1.0)?];

    let mut params: Vec<f64> = (0..=256).map(|i| s0.length() * i as f64 / 256.0).collect();
    params.push(tc);
    params.sort_by(f64::total_cmp);
    params.dedup();

    let mut report = FoldLineIterationReport {
        n: opts.n,
        radius: r,
        curves: Vec::new(),
        order_crossing: false,
        flip_sliding: false,
        dist_to_wu: Vec::new(),
        tangent_angles: Vec::new(),
        crossing_offsets: Vec::new(),
        sliding_offsets: Vec::new(),
        mirrored: data.coeffs.b > 0.0,
    };
    let mut crossing_found = true;
    let mut sliding_found = true;

    for n in 0..=opts.n {
        let eval = |t: f64| -> Result<Pt2> {
            let mut p = s0.at(t);
            for _ in 0..n {
                p = dynamics.apply(&p)?;
            }
            Ok(p)
        };
        let samples = refine(&params, eval, fp, max_seg, opts.clip)?;
        params = samples.iter().map(|s| s.0).collect();
        let run = central_run(&samples, tc, 1.01 * max_seg);

        let chart: Vec<Pt2> = run.iter().map(|s| dynamics.to_chart(&s.1)).collect::<Result<_>>()?;
        report.curves.push(PlanarCurve::new(format!("S{n}"), chart));

        let inner: Vec<&(f64, Pt2)> = run.iter().filter(|s| (s.1 - fp).norm() <= r).collect();
        let stride = (inner.len() / 40).max(1);
        let mut dist = 0.0f64;
        for s in inner.iter().step_by(stride) {
            dist = dist.max(wu.distance(&wu_samples, &s.1)?);
        }
        report.dist_to_wu.push(dist);

        let h = 1e-6;
        let tangent = eval(tc + h)? - eval(tc - h)?;
        report.tangent_angles.push(line_angle(&tangent, &data.e_alpha));

        if n == 0 {
            continue;
        }
        let mut got_crossing = false;
        let mut got_sliding = false;
        for dir in [1isize, -1] {
            let Some(q) = circle_hit(&run, tc, dir, r, &eval, fp)? else { continue };
            let w = if (wu_ends[0] - q).norm() <= (wu_ends[1] - q).norm() { wu_ends[0] } else { wu_ends[1] };
            let delta = wrap((q - fp).y.atan2((q - fp).x) - (w - fp).y.atan2((w - fp).x));
            match dynamics.region(&q) {
                SigmaKind::Crossing if !got_crossing => {
                    report.crossing_offsets.push(delta);
                    got_crossing = true;
                }
                SigmaKind::StableSliding | SigmaKind::UnstableSliding if !got_sliding => {
                    report.sliding_offsets.push(delta);
                    got_sliding = true;
                }
                _ => {}
            }
        }
        crossing_found &= got_crossing;
        sliding_found &= got_sliding;
    }

    let c = &report.crossing_offsets;
    report.order_crossing = crossing_found
        && !c.is_empty()
        && c.iter().all(|d| *d != 0.0 && d.signum() == c[0].signum())
        && c.windows(2).all(|w| w[1].abs() < w[0].abs());
    let s = &report.sliding_offsets;
    report.flip_sliding = sliding_found && s.len() >= 2 && s.windows(2).all(|w| w[0] * w[1] < 0.0);
    Ok(report)
}

/// The contiguous stretch of samples containing parameter `tc`.
fn central_run(samples: &[(f64, Pt2)], tc: f64, gap: f64) -> Vec<(f64, Pt2)> {
    if samples.is_empty() {
        return Vec::new();
    }
    let c = samples.partition_point(|s| s.0 < tc).min(samples.len() - 1);
    let mut lo = c;
    while lo > 0 && (samples[lo].1 - samples[lo - 1].1).norm() <= gap {
        lo -= 1;
    }
    let mut hi = c;
    while hi + 1 < samples.len() && (samples[hi + 1].1 - samples[hi].1).norm() <= gap {
        hi += 1;
    }
    samples[lo..=hi].to_vec()
}

/// First point of the run, walking from `tc` in direction `dir`, at
/// distance `r` from `fp`; located by bisection on the curve parameter.
fn circle_hit<F: Fn(f64) -> Result<Pt2>>(
    run: &[(f64, Pt2)],
    tc: f64,
    dir: isize,
    r: f64,
    eval: &F,
    fp: Pt2,
) -> Result<Option<Pt2>> {
    let mut i = run.partition_point(|s| s.0 < tc) as isize;
    if dir < 0 {
        i -= 1;
    }
    let mut prev = tc;
    while i >= 0 && (i as usize) < run.len() {
        let (t, p) = run[i as usize];
        if (p - fp).norm() >= r {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (eval(mid)? - fp).norm() < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo).abs() <= 1e-16 * (1.0 + hi.abs()) {
                    break;
                }
            }
            return Ok(Some(eval(0.5 * (lo + hi))?));
        }
        prev = t;
        i += dir;
    }
    Ok(None)
}
