#![allow(dead_code)]

use fsim_core::geometry::FilippovSystem;
use fsim_core::integrator::{filippov_trajectory_with, NonUniquePolicy, OdeOptions};
use fsim_core::{Mat2, Pt2, Vec3};

/// Least-squares slope of log|y| against log|x|.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Real eigenvalues of a 2×2 matrix, smaller modulus first.
pub fn eigenvalues(j: &Mat2) -> (f64, f64) {
    let tr = j.trace();
    let det = j.determinant();
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let (a, b) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
    if a.abs() < b.abs() {
        (a, b)
    } else {
        (b, a)
    }
}

/// A kernel direction of `j − λI`.
pub fn eigenvector(j: &Mat2, lambda: f64) -> Pt2 {
    let m = j - Mat2::identity() * lambda;
    let r0 = Pt2::new(m[(0, 0)], m[(0, 1)]);
    let r1 = Pt2::new(m[(1, 0)], m[(1, 1)]);
    let r = if r0.norm() > r1.norm() { r0 } else { r1 };
    Pt2::new(-r.y, r.x)
}

/// Densely sampled closed orbit through `p0`, one period long.
pub fn loop_orbit(sys: &FilippovSystem, p0: &Vec3, period: f64) -> Vec<Vec3> {
    let opts = OdeOptions { h_max: 0.005, ..OdeOptions::from_tolerances(&sys.tol) };
    let traj = filippov_trajectory_with(sys, p0, period, NonUniquePolicy::PreferPlus, &opts).unwrap();
    traj.samples().map(|s| s.1).collect()
}

/// Distance from `q` to a polyline in R³.
pub fn distance_to_polyline(pts: &[Vec3], q: &Vec3) -> f64 {
    pts.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let len2 = d.norm_squared();
            let s = if len2 == 0.0 { 0.0 } else { ((q - w[0]).dot(&d) / len2).clamp(0.0, 1.0) };
            (w[0] + d * s - q).norm()
        })
        .fold(f64::INFINITY, f64::min)
}
