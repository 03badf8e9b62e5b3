use super::try_derivative;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability1d {
    Attracting,
    Repelling,
    SaddleNodeFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint1d {
    pub x: f64,
    pub derivative: f64,
    pub stability: Stability1d,
}

/// Fixed point of a scalar map by Newton's method from `guess`.
pub fn fixed_point_1d(map: &dyn Fn(f64) -> Result<f64>, guess: f64) -> Result<FixedPoint1d> {
    fixed_point_1d_band(map, guess, Tolerances::default().saddle_node)
}

/// As [`fixed_point_1d`], flagging a saddle-node when `||ψ'| − 1| < band`.
pub fn fixed_point_1d_band(map: &dyn Fn(f64) -> Result<f64>, guess: f64, band: f64) -> Result<FixedPoint1d> {
    let g = |x: f64| map(x).map(|y| y - x);
    let mut x = guess;
    let mut converged = false;
    for _ in 0..200 {
        let gx = g(x)?;
        if gx == 0.0 {
            converged = true;
            break;
        }
        let h = 1e-6 * (1.0 + x.abs());
        let dg = (g(x + h)? - g(x - h)?) / (2.0 * h);
        if dg == 0.0 || !dg.is_finite() {
            break;
        }
        let step = gx / dg;
        x -= step;
        if !x.is_finite() {
            break;
        }
        if step.abs() < 1e-12 * (1.0 + x.abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoFixedPoint(format!("scalar Newton failed from {guess}")));
    }
    let derivative = try_derivative(map, x, 1e-3)?;
    let stability = if (derivative.abs() - 1.0).abs() < band {
        Stability1d::SaddleNodeFlag
    } else if derivative.abs() < 1.0 {
        Stability1d::Attracting
    } else {
        Stability1d::Repelling
    };
    Ok(FixedPoint1d { x, derivative, stability })
}
