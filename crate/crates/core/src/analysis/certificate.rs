use super::try_derivative;
use crate::error::{Error, Result};
use crate::geometry::{FilippovSystem, SigmaKind};
use crate::maps::{coefficients_at, fixed_point, fold_line, FilippovReturn, ReturnDynamics, ReturnMapCoefficients};
use crate::numeric::{brent, line_angle};
use crate::Pt2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopClass {
    Cyl,
    Mob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopType {
    N,
    S,
}

/// Margins of the three quasi-genericity conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transversality {
    /// Angle between the image of the fold curve and the fold curve.
    pub zeta_fold_angle: f64,
    /// Angle between the sliding field at the fold point and that image.
    pub sliding_zeta_angle: f64,
    /// `||ψ'| − 1|`.
    pub psi_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopCertificate {
    /// Offset of the return-map fixed point from the fold curve, positive
    /// on the crossing side.
    pub zeta: f64,
    /// Chart coordinates.
    pub fixed_point: [f64; 2],
    pub alpha: f64,
    pub coeffs: ReturnMapCoefficients,
    pub klass: LoopClass,
    pub typ: LoopType,
    pub transversality: Transversality,
    pub is_loop: bool,
}

/// Locates the return-map fixed point near chart point `seed` and checks
/// whether it is a quasi-generic loop.
pub fn loop_certificate(sys: &FilippovSystem, seed: &Pt2, tol_loop: f64) -> Result<LoopCertificate> {
    let r = FilippovReturn::at(sys, seed)?;
    let q = r.from_chart(seed)?;
    certify(&r, &q, tol_loop)
}

/// Certificate for any return dynamics, seeded in normalized coordinates.
pub fn certify(dynamics: &dyn ReturnDynamics, seed: &Pt2, tol_loop: f64) -> Result<LoopCertificate> {
    let tol = dynamics.tolerances().clone();
    let fp = fixed_point(dynamics, seed)?;
    let coeffs = coefficients_at(dynamics, &fp)?;
    let e_alpha = Pt2::new(coeffs.alpha, coeffs.b);
    let slide = dynamics.sliding_direction(&Pt2::new(fp.x, 0.0))?;
    let transversality = Transversality {
        zeta_fold_angle: line_angle(&e_alpha, &Pt2::new(1.0, 0.0)),
        sliding_zeta_angle: line_angle(&slide, &e_alpha),
        psi_margin: (coeffs.alpha.abs() - 1.0).abs(),
    };
    let is_loop = fp.y.abs() < tol_loop;
    if is_loop {
        if transversality.zeta_fold_angle <= tol.transversality {
            return Err(Error::NotQuasiGeneric { check: "zeta-fold transversality".into() });
        }
        if transversality.sliding_zeta_angle <= tol.transversality {
            return Err(Error::NotQuasiGeneric { check: "sliding-zeta transversality".into() });
        }
        if transversality.psi_margin <= tol.saddle_node {
            return Err(Error::NotQuasiGeneric { check: "fold-line hyperbolicity".into() });
        }
    }
    let c = dynamics.to_chart(&fp)?;
    Ok(LoopCertificate {
        zeta: fp.y,
        fixed_point: [c.x, c.y],
        alpha: coeffs.alpha,
        coeffs,
        klass: if coeffs.alpha > 0.0 { LoopClass::Cyl } else { LoopClass::Mob },
        typ: if coeffs.alpha.abs() > 1.0 { LoopType::S } else { LoopType::N },
        transversality,
        is_loop,
    })
}

/// Position of the image of the fold curve relative to the fold curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    /// Entirely in the sliding region.
    A,
    /// Entirely in the crossing region.
    B,
    /// Transverse crossing.
    C,
    /// Tangency.
    D,
}

const CONFIG_SPAN: f64 = 0.1;
const CONFIG_SAMPLES: usize = 21;

pub fn classify_configuration(sys: &FilippovSystem) -> Result<Configuration> {
    configuration_of(&FilippovReturn::new(sys)?)
}

/// Samples the image of the fold curve over `|u| ≤ 0.1`.
pub fn configuration_of(dynamics: &dyn ReturnDynamics) -> Result<Configuration> {
    let tol = dynamics.tolerances().clone();
    let us: Vec<f64> =
        (0..CONFIG_SAMPLES).map(|i| -CONFIG_SPAN + 2.0 * CONFIG_SPAN * i as f64 / (CONFIG_SAMPLES - 1) as f64).collect();
    let imgs: Vec<Pt2> = us.iter().map(|&u| dynamics.apply(&Pt2::new(u, 0.0))).collect::<Result<_>>()?;
    let kinds: Vec<SigmaKind> = imgs.iter().map(|q| dynamics.region(q)).collect();
    if kinds.iter().all(|k| *k == SigmaKind::StableSliding) {
        return Ok(Configuration::A);
    }
    if kinds.iter().all(|k| *k == SigmaKind::Crossing) {
        return Ok(Configuration::B);
    }
    let band = tol.loop_zeta;
    let significant: Vec<usize> = (0..CONFIG_SAMPLES).filter(|&i| imgs[i].y.abs() > band).collect();
    for w in significant.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (v0, v1) = (imgs[i].y, imgs[j].y);
        if v0 * v1 < 0.0 {
            let err = std::cell::Cell::new(None);
            let f = |u: f64| match dynamics.apply(&Pt2::new(u, 0.0)) {
                Ok(q) => q.y,
                Err(e) => {
                    err.set(Some(e));
                    f64::NAN
                }
            };
            let (u, _) = brent(f, us[i], us[j], v0, v1, 1e-13, 1e-14, 200)
                .ok_or_else(|| Error::Inconclusive("crossing of the fold curve not resolved".into()))?;
            if let Some(e) = err.take() {
                return Err(e);
            }
            let h = 1e-5;
            let t = dynamics.apply(&Pt2::new(u + h, 0.0))? - dynamics.apply(&Pt2::new(u - h, 0.0))?;
            let angle = line_angle(&t, &Pt2::new(1.0, 0.0));
            return if angle > tol.transversality {
                Ok(Configuration::C)
            } else {
                Err(Error::Inconclusive(format!("crossing angle {angle:e} inside the tangency band")))
            };
        }
    }
    let min_v = imgs.iter().map(|q| q.y.abs()).fold(f64::INFINITY, f64::min);
    let same_side = imgs.iter().all(|q| q.y >= -band) || imgs.iter().all(|q| q.y <= band);
    if same_side && min_v <= band {
        Ok(Configuration::D)
    } else {
        Err(Error::Inconclusive("image of the fold curve is neither one-sided nor transverse".into()))
    }
}

/// Derivative of the fold line map at the loop point, with α alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub modulus: f64,
    pub alpha: f64,
    pub discrepancy: f64,
}

pub fn modulus(sys: &FilippovSystem) -> Result<f64> {
    Ok(modulus_of(&FilippovReturn::new(sys)?)?.modulus)
}

pub fn modulus_of(dynamics: &dyn ReturnDynamics) -> Result<ModulusReport> {
    let fp = fixed_point(dynamics, &Pt2::zeros())?;
    let alpha = coefficients_at(dynamics, &fp)?.alpha;
    let m = try_derivative(|x| fold_line(dynamics, x).map(|r| r.0), fp.x, 1e-3)?;
    Ok(ModulusReport { modulus: m, alpha, discrepancy: (m - alpha).abs() })
}
