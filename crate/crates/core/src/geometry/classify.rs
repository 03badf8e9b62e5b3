use serde::{Deserialize, Serialize};

use super::{lie_derivative, FilippovSystem};
use crate::error::{Error, Result};
use crate::Vec3;

/// Points with |f| at or above this are not on Σ.
pub const ON_SIGMA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SigmaKind {
    Crossing,
    StableSliding,
    UnstableSliding,
    FoldRegularX { visible: bool },
    FoldRegularY { visible: bool },
    /// Both fields transverse. [`classify_sigma_point`] always refines
    /// this into one of the three region kinds above.
    RegularRegular,
    Degenerate,
}

impl SigmaKind {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaKind::Crossing => "Crossing",
            SigmaKind::StableSliding => "StableSliding",
            SigmaKind::UnstableSliding => "UnstableSliding",
            SigmaKind::FoldRegularX { .. } => "FoldRegularX",
            SigmaKind::FoldRegularY { .. } => "FoldRegularY",
            SigmaKind::RegularRegular => "RegularRegular",
            SigmaKind::Degenerate => "Degenerate",
        }
    }
}

/// Classification with the Lie-derivative values that decided it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaClass {
    #[serde(flatten)]
    pub kind: SigmaKind,
    #[serde(rename = "Xf")]
    pub xf: f64,
    #[serde(rename = "Yf")]
    pub yf: f64,
    #[serde(rename = "X2f", skip_serializing_if = "Option::is_none")]
    pub x2f: Option<f64>,
    #[serde(rename = "Y2f", skip_serializing_if = "Option::is_none")]
    pub y2f: Option<f64>,
}

pub fn classify_sigma_point(sys: &FilippovSystem, p: &Vec3, tol: f64) -> Result<SigmaClass> {
    let fv = sys.f.eval(p);
    if fv.abs() >= ON_SIGMA {
        return Err(Error::NotOnSigma(fv.abs()));
    }
    let grad = sys.f.gradient(p);
    let xv = sys.x.eval(p);
    let yv = sys.y.eval(p);
    let xf = xv.dot(&grad);
    let yf = yv.dot(&grad);
    let mut class = SigmaClass { kind: SigmaKind::Degenerate, xf, yf, x2f: None, y2f: None };
    if xv.norm() <= tol || yv.norm() <= tol {
        return Ok(class);
    }
    let x_tangent = xf.abs() <= tol;
    let y_tangent = yf.abs() <= tol;
    class.kind = match (x_tangent, y_tangent) {
        (true, true) => SigmaKind::Degenerate,
        (true, false) => {
            let x2f = lie_derivative(&sys.x, &sys.f, p, 2)?;
            class.x2f = Some(x2f);
            if x2f.abs() <= tol {
                SigmaKind::Degenerate
            } else {
                SigmaKind::FoldRegularX { visible: x2f > 0.0 }
            }
        }
        (false, true) => {
            let y2f = lie_derivative(&sys.y, &sys.f, p, 2)?;
            class.y2f = Some(y2f);
            if y2f.abs() <= tol {
                SigmaKind::Degenerate
            } else {
                SigmaKind::FoldRegularY { visible: y2f < 0.0 }
            }
        }
        (false, false) if xf * yf > 0.0 => SigmaKind::Crossing,
        (false, false) if xf < 0.0 => SigmaKind::StableSliding,
        (false, false) => SigmaKind::UnstableSliding,
    };
    Ok(class)
}

/// Sliding vector field `(Yf·X − Xf·Y)/(Yf − Xf)` at a point of Σ.
pub fn sliding_field(sys: &FilippovSystem, p: &Vec3) -> Result<Vec3> {
    let fv = sys.f.eval(p);
    if fv.abs() >= ON_SIGMA {
        return Err(Error::NotOnSigma(fv.abs()));
    }
    sliding_vector(sys, p)
}

/// The sliding formula evaluated without the on-Σ check; this is the smooth
/// extension used to integrate virtual sliding orbits.
pub fn sliding_vector(sys: &FilippovSystem, p: &Vec3) -> Result<Vec3> {
    let grad = sys.f.gradient(p);
    let xv = sys.x.eval(p);
    let yv = sys.y.eval(p);
    let xf = xv.dot(&grad);
    let yf = yv.dot(&grad);
    let den = yf - xf;
    if den.abs() <= sys.tol.denominator {
        return Err(Error::DenominatorVanishes(den));
    }
    Ok((xv * yf - yv * xf) / den)
}
