//! Built-in systems, the expression DSL and system definition files.
//!
//! Systems are addressed by URI: `builtin:NAME?key=value&...` or a path to
//! a JSON definition. Planar model maps use `planar:EXPR1;EXPR2?key=value`.

mod builtins;
pub mod expr;
mod planar;
mod pushforward;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use builtins::{builtin, builtin_source, exa43_y0_source, BuiltinSource, BUILTIN_NAMES};
pub use expr::{parse_field_expression, Expr, FieldExpr};
pub use planar::PlanarMap;
pub use pushforward::{pushforward, Diffeo, Exa44Map, IdentityMap, Pushforward};

use crate::autodiff::{Dual, Jet4};
use crate::error::{Error, Result};
use crate::geometry::{
    DerivativeMode, FilippovSystem, ScalarOracle, SigmaChart, SmoothField, SwitchingFunction, VectorOracle,
};
use crate::{Mat3, Vec3};

/// Vector field given by three DSL expressions; derivatives are exact.
#[derive(Debug, Clone)]
pub struct ExprField {
    pub comps: [FieldExpr; 3],
    pub values: Vec<f64>,
}

impl ExprField {
    pub fn parse(comps: [&str; 3], params: &[(String, f64)]) -> Result<Self> {
        let names: Vec<String> = params.iter().map(|p| p.0.clone()).collect();
        let parse = |s: &str| parse_field_expression(s, &names);
        Ok(Self {
            comps: [parse(comps[0])?, parse(comps[1])?, parse(comps[2])?],
            values: params.iter().map(|p| p.1).collect(),
        })
    }

    pub fn into_field(self) -> SmoothField {
        SmoothField::new(self)
    }
}

impl VectorOracle for ExprField {
    fn eval(&self, p: &Vec3) -> Vec3 {
        Vec3::from_fn(|i, _| self.comps[i].eval(p, &self.values))
    }

    fn derivative_mode(&self) -> DerivativeMode {
        DerivativeMode::Exact
    }

    fn exact_jacobian(&self, p: &Vec3) -> Option<Mat3> {
        let rows: Vec<Dual> = self.comps.iter().map(|c| c.eval_dual(p, &self.values)).collect();
        Some(Mat3::from_fn(|i, j| rows[i].d[j]))
    }

    fn eval_jet(&self, p: &[Jet4; 3]) -> Option<[Jet4; 3]> {
        Some(std::array::from_fn(|i| self.comps[i].eval_jet(p, &self.values)))
    }
}

/// Switching function given by a DSL expression.
#[derive(Debug, Clone)]
pub struct ExprScalar {
    pub expr: FieldExpr,
    pub values: Vec<f64>,
}

impl ExprScalar {
    pub fn parse(text: &str, params: &[(String, f64)]) -> Result<Self> {
        let names: Vec<String> = params.iter().map(|p| p.0.clone()).collect();
        Ok(Self { expr: parse_field_expression(text, &names)?, values: params.iter().map(|p| p.1).collect() })
    }

    pub fn into_function(self) -> SwitchingFunction {
        SwitchingFunction::new(self)
    }
}

impl ScalarOracle for ExprScalar {
    fn eval(&self, p: &Vec3) -> f64 {
        self.expr.eval(p, &self.values)
    }

    fn exact_gradient(&self, p: &Vec3) -> Option<Vec3> {
        Some(Vec3::from(self.expr.eval_dual(p, &self.values).d))
    }

    fn eval_jet(&self, p: &[Jet4; 3]) -> Option<Jet4> {
        Some(self.expr.eval_jet(p, &self.values))
    }
}

/// JSON system definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub f: String,
    #[serde(rename = "X")]
    pub x: [String; 3],
    #[serde(rename = "Y")]
    pub y: [String; 3],
    #[serde(default)]
    pub chart: Option<SigmaChart>,
    #[serde(default)]
    pub tau_level: Option<f64>,
}

/// Default τ level for user systems.
pub const DEFAULT_TAU_LEVEL: f64 = 0.5;

impl SystemFile {
    pub fn build(&self) -> Result<FilippovSystem> {
        let params: Vec<(String, f64)> = self.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let x = ExprField::parse(self.x.each_ref().map(String::as_str), &params)?.into_field();
        let y = ExprField::parse(self.y.each_ref().map(String::as_str), &params)?.into_field();
        let f = ExprScalar::parse(&self.f, &params)?.into_function();
        let chart = match &self.chart {
            Some(c) => c.clone(),
            None => SigmaChart::from_gradient(&f, project_to_zero(&f, Vec3::zeros())?),
        };
        FilippovSystem::new(self.name.clone(), x, y, f, chart, self.tau_level.unwrap_or(DEFAULT_TAU_LEVEL))
    }
}

/// Newton projection of `p` onto f = 0 along the gradient.
fn project_to_zero(f: &SwitchingFunction, mut p: Vec3) -> Result<Vec3> {
    for _ in 0..50 {
        let r = f.eval(&p);
        if r.abs() < 1e-14 {
            return Ok(p);
        }
        let g = f.gradient(&p);
        let n2 = g.norm_squared();
        if n2 == 0.0 {
            break;
        }
        p -= g * (r / n2);
    }
    Err(Error::InvalidSystem("could not place a chart base point on Σ".into()))
}

/// Split `name?k=v&k=v` into the name and numeric parameters.
pub fn parse_query(spec: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let (name, query) = spec.split_once('?').unwrap_or((spec, ""));
    let mut params = BTreeMap::new();
    for pair in query.split('&').filter(|s| !s.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidSystem(format!("malformed parameter '{pair}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSystem(format!("parameter {k} is not a number: '{v}'")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok((name.to_string(), params))
}

/// Resolve a `builtin:` URI or a JSON file path.
pub fn load_system(spec: &str) -> Result<FilippovSystem> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        let (name, params) = parse_query(rest)?;
        return builtin(&name, &params);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::InvalidSystem(format!("{spec}: {e}")))?;
    let file: SystemFile = serde_json::from_str(&text).map_err(|e| Error::InvalidSystem(format!("{spec}: {e}")))?;
    file.build()
}

/// One-parameter family over `gamma`.
pub type Family = dyn Fn(f64) -> Result<FilippovSystem> + Send + Sync;

/// Family over `gamma` from a `builtin:` URI or a JSON system file whose
/// params include `gamma`.
pub fn family_from_uri(spec: &str) -> Result<Box<Family>> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        let (name, params) = parse_query(rest)?;
        if !BUILTIN_NAMES.contains(&name.as_str()) {
            return Err(Error::UnknownScenario(name));
        }
        return Ok(Box::new(move |gamma| {
            let mut p = params.clone();
            p.insert("gamma".into(), gamma);
            builtin(&name, &p)
        }));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::InvalidSystem(format!("{spec}: {e}")))?;
    let file: SystemFile = serde_json::from_str(&text).map_err(|e| Error::InvalidSystem(format!("{spec}: {e}")))?;
    file_family(file)
}

/// Family over the `gamma` parameter of a system file.
pub fn file_family(file: SystemFile) -> Result<Box<Family>> {
    if !file.params.contains_key("gamma") {
        return Err(Error::InvalidSystem(format!("system '{}' has no 'gamma' parameter", file.name)));
    }
    Ok(Box::new(move |gamma| {
        let mut f = file.clone();
        f.params.insert("gamma".into(), gamma);
        f.build()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_parsing() {
        let (n, p) = parse_query("exa43?alpha=2&beta=-1.5").unwrap();
        assert_eq!(n, "exa43");
        assert_eq!(p["alpha"], 2.0);
        assert_eq!(p["beta"], -1.5);
        assert!(parse_query("exa43?alpha").is_err());
    }

    #[test]
    fn system_file_builds_with_default_chart() {
        let text = r#"{"name":"v","f":"z - c","params":{"c":0.25},
            "X":["0","1","y"],"Y":["0","-1","1"]}"#;
        let sys: SystemFile = serde_json::from_str(text).unwrap();
        let s = sys.build().unwrap();
        assert!((s.chart.base[2] - 0.25).abs() < 1e-14);
        assert_eq!(s.tau_level, DEFAULT_TAU_LEVEL);
    }
}
