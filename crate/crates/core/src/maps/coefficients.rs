use super::dynamics::ReturnDynamics;
use crate::error::{Error, Result};
use crate::{Mat2, Pt2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// First and second order Taylor data of the return map at its fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawCoefficients {
    pub alpha10: f64,
    pub alpha01: f64,
    pub beta10: f64,
    pub beta01: f64,
    /// Second x-derivatives of the two components.
    pub p1xx: f64,
    pub p2xx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapCoefficients {
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub fd_step: f64,
    pub raw: RawCoefficients,
}

impl ReturnMapCoefficients {
    /// Quadratic coefficient of the first component after the shear
    /// `u = x + (α₀₁/α₁₀)y²` that removes its y² term.
    pub fn a_normalized(&self) -> f64 {
        let r = &self.raw;
        0.5 * r.p1xx + r.alpha01 / r.alpha10 * r.beta10 * r.beta10
    }

    /// Coefficient of x² in the first component of the conjugacy that
    /// removes the quadratic x terms.
    pub fn big_a(&self) -> f64 {
        self.a_normalized() / (self.alpha * (self.alpha - 1.0))
    }
}

/// Jacobian by central differences with one Richardson step.
pub fn jacobian_at(dynamics: &dyn ReturnDynamics, p: &Pt2, h: f64) -> Result<Mat2> {
    let mut cols = [Pt2::zeros(); 2];
    for (k, col) in cols.iter_mut().enumerate() {
        let e = if k == 0 { Pt2::new(1.0, 0.0) } else { Pt2::new(0.0, 1.0) };
        let d = |s: f64| -> Result<Pt2> { Ok((dynamics.apply(&(p + e * s))? - dynamics.apply(&(p - e * s))?) / (2.0 * s)) };
        *col = (d(0.5 * h)? * 4.0 - d(h)?) / 3.0;
    }
    Ok(Mat2::from_columns(&cols))
}

/// Extracts the coefficients at fixed point `fp`. Map evaluations run in
/// parallel; the combination order is fixed.
pub fn coefficients_at(dynamics: &dyn ReturnDynamics, fp: &Pt2) -> Result<ReturnMapCoefficients> {
    let tol = dynamics.tolerances();
    let h1 = tol.fd_step;
    let h2 = tol.fd_step_second;
    let ex = Pt2::new(1.0, 0.0);
    let ey = Pt2::new(0.0, 1.0);
    let mut pts = vec![*fp];
    for s in [h1, -h1, 0.5 * h1, -0.5 * h1] {
        pts.push(fp + ex * s);
    }
    for e in [ex, ey] {
        for s in [2.0, 1.0, -1.0, -2.0] {
            pts.push(fp + e * (s * h2));
        }
    }
    let vals: Vec<Pt2> = pts.par_iter().map(|p| dynamics.apply(p)).collect::<Result<_>>()?;
    let dx = ((vals[3] - vals[4]) / h1 * 4.0 - (vals[1] - vals[2]) / (2.0 * h1)) / 3.0;
    let second = |o: usize| (-vals[o] + vals[o + 1] * 16.0 - vals[0] * 30.0 + vals[o + 2] * 16.0 - vals[o + 3]) / (12.0 * h2 * h2);
    let dxx = second(5);
    let dyy = second(9);
    let raw = RawCoefficients {
        alpha10: dx.x,
        alpha01: 0.5 * dyy.x,
        beta10: dx.y,
        beta01: 0.5 * dyy.y,
        p1xx: dxx.x,
        p2xx: dxx.y,
    };
    let alpha = raw.alpha10;
    if alpha.abs() < tol.classify {
        return Err(Error::DegenerateCoefficients(format!("alpha = {alpha:e}")));
    }
    let d = raw.alpha10 * raw.beta01 - raw.alpha01 * raw.beta10;
    if d.abs() < tol.classify {
        return Err(Error::DegenerateCoefficients(format!("d = {d:e}")));
    }
    let b = raw.beta10;
    let a = 0.5 * raw.p1xx + raw.alpha01 / alpha * b * b;
    let e = 0.5 * raw.p2xx;
    let big_b = (b * a + alpha * (alpha - 1.0) * e) / (alpha.powi(3) * (alpha - 1.0));
    Ok(ReturnMapCoefficients { alpha, b, c: d / alpha, d, big_b, fd_step: h1, raw })
}
