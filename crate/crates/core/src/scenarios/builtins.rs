use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use super::pushforward::{pushforward, Exa44Map};
use super::{ExprField, ExprScalar};
use crate::error::{Error, Result};
use crate::geometry::{FilippovSystem, SigmaChart};
use crate::Vec3;

pub const BUILTIN_NAMES: &[&str] = &["vishik-halfspace", "exa43", "exa44", "mobius", "tangent"];

/// X₀ shared by the loop scenarios: the fold at the origin is visible and
/// the orbit through it lands back on Σ at (0, 1, 0) after unit time.
const X0: [&str; 3] = ["0", "1", "y*(2 - 3*y)"];

/// τ level for the loop scenarios; the X₀ orbit from the fold peaks at 4/27.
const LOOP_TAU: f64 = 0.05;
const VISHIK_TAU: f64 = 0.5;

const D: &str = "(alpha + (1 - alpha)*y)";

/// Y₀ of the quasi-generic loop example, with `D = α + (1 − α)y`:
/// `(−(1−α)x(D − βx)/D², −1 + βx/D, 1 − 2(yD − βx)/(D − βx))`.
///
/// This is the pushforward of `(0, −1, 1 − 2y)` by
/// `(x, y, z) ↦ (x(α + (1−α)(y + βx(1−y))), y + βx(1−y), z)`, which makes the
/// fold line map have slope α at the loop and reduces to the exa44 field at
/// α = 2, β = 1, γ = 0.
pub fn exa43_y0_source() -> [String; 3] {
    [
        format!("-(1 - alpha)*x*({D} - beta*x)/{D}^2"),
        format!("-1 + beta*x/{D}"),
        format!("1 - 2*(y*{D} - beta*x)/({D} - beta*x)"),
    ]
}

struct Params {
    given: BTreeMap<String, f64>,
    used: Vec<&'static str>,
}

impl Params {
    fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.used.push(key);
        self.given.get(key).copied().unwrap_or(default)
    }

    fn finish(self, name: &str) -> Result<()> {
        match self.given.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(Error::BadParams(format!("{name} has no parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

fn named(params: &[(&str, f64)]) -> Vec<(String, f64)> {
    params.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Expression sources of a built-in system with its resolved parameters.
/// For `exa44`, `y` is the field `Y*` before the pushforward by `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinSource {
    pub x: [String; 3],
    pub y: [String; 3],
    pub params: Vec<(String, f64)>,
    pub tau_level: f64,
}

fn source(x: [&str; 3], y: [&str; 3], params: &[(&str, f64)], tau_level: f64) -> BuiltinSource {
    BuiltinSource { x: x.map(String::from), y: y.map(String::from), params: named(params), tau_level }
}

pub fn builtin_source(name: &str, params: &BTreeMap<String, f64>) -> Result<BuiltinSource> {
    let mut p = Params { given: params.clone(), used: Vec::new() };
    let src = match name {
        "vishik-halfspace" => {
            let eps = p.get("epsilon", VISHIK_TAU);
            source(["0", "1", "y"], ["0", "-1", "1"], &[], eps)
        }
        "exa43" => {
            let alpha = p.get("alpha", 2.0);
            let beta = p.get("beta", 1.0);
            let eps = p.get("epsilon", LOOP_TAU);
            if (alpha.abs() - 1.0).abs() < 1e-12 {
                return Err(Error::BadParams(format!("|alpha| must differ from 1, got {alpha}")));
            }
            if beta == 0.0 {
                return Err(Error::BadParams("beta must be nonzero".into()));
            }
            let root = -alpha / (1.0 - alpha);
            if (0.0..=1.0).contains(&root) {
                return Err(Error::BadParams(format!("-alpha/(1-alpha) = {root} lies in [0, 1]")));
            }
            let y0 = exa43_y0_source();
            source(X0, y0.each_ref().map(String::as_str), &[("alpha", alpha), ("beta", beta)], eps)
        }
        "exa44" => {
            let gamma = p.get("gamma", 0.0);
            let eps = p.get("epsilon", LOOP_TAU);
            source(X0, ["gamma", "-1", "1 - 2*y"], &[("gamma", gamma)], eps)
        }
        "mobius" => {
            let omega = p.get("omega", PI);
            let lambda = p.get("lambda", LN_2);
            let mu = p.get("mu", 0.5);
            let eps = p.get("epsilon", LOOP_TAU);
            source(
                X0,
                [
                    "omega*(z + y - y^2) + lambda*x",
                    "-1",
                    "1 - 2*y - omega*x + lambda*(z + y - y^2) + mu*x",
                ],
                &[("omega", omega), ("lambda", lambda), ("mu", mu)],
                eps,
            )
        }
        "tangent" => {
            let eps = p.get("epsilon", LOOP_TAU);
            source(X0, ["x", "-1", "1 - 2*y"], &[], eps)
        }
        _ => return Err(Error::UnknownScenario(name.to_string())),
    };
    p.finish(name)?;
    Ok(src)
}

/// Built-in system by name.
///
/// - `vishik-halfspace`: X = (0, 1, y), Y = (0, −1, 1).
/// - `exa43` (`alpha` = 2, `beta` = 1): loop through the origin with fold
///   line slope α. Requires |α| ≠ 1, β ≠ 0 and −α/(1−α) ∉ [0, 1].
/// - `exa44` (`gamma` = 0): X₀ with the pushforward of (γ, −1, 1 − 2y).
/// - `mobius` (`omega` = π, `lambda` = ln 2, `mu` = 0.5): the Y-passage
///   turns (x, z + y − y²) by about half a turn, giving a negative slope.
/// - `tangent`: the return image of the fold curve is the fold curve.
///
/// Every system accepts `epsilon` to move the τ section.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<FilippovSystem> {
    let src = builtin_source(name, params)?;
    let f = ExprScalar::parse("z", &src.params)?.into_function();
    let chart = SigmaChart::from_gradient(&f, Vec3::zeros());
    let x = ExprField::parse(src.x.each_ref().map(String::as_str), &src.params)?.into_field();
    let y = ExprField::parse(src.y.each_ref().map(String::as_str), &src.params)?.into_field();
    let y = if name == "exa44" { pushforward(y, Exa44Map) } else { y };
    FilippovSystem::new(name, x, y, f, chart, src.tau_level)
}
