use super::expr::{parse_field_expression, FieldExpr};
use super::parse_query;
use crate::autodiff::Dual;
use crate::error::{Error, Result};
use crate::{Mat2, Pt2, Vec3};

/// Planar map `(x, y) ↦ (e₁(x, y), e₂(x, y))` from two DSL expressions.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    pub comps: [FieldExpr; 2],
    pub values: Vec<f64>,
}

impl PlanarMap {
    pub fn parse(e1: &str, e2: &str, params: &[(String, f64)]) -> Result<Self> {
        let names: Vec<String> = params.iter().map(|p| p.0.clone()).collect();
        Ok(Self {
            comps: [parse_field_expression(e1, &names)?, parse_field_expression(e2, &names)?],
            values: params.iter().map(|p| p.1).collect(),
        })
    }

    /// `planar:E1;E2?k=v` or the bare `E1;E2?k=v`.
    pub fn from_uri(spec: &str) -> Result<Self> {
        let body = spec.strip_prefix("planar:").unwrap_or(spec);
        let (exprs, params) = parse_query(body)?;
        let (e1, e2) = exprs
            .split_once(';')
            .ok_or_else(|| Error::InvalidSystem(format!("planar map needs two expressions: '{spec}'")))?;
        let params: Vec<(String, f64)> = params.into_iter().collect();
        Self::parse(e1, e2, &params)
    }

    pub fn apply(&self, p: &Pt2) -> Pt2 {
        let q = Vec3::new(p.x, p.y, 0.0);
        Pt2::new(self.comps[0].eval(&q, &self.values), self.comps[1].eval(&q, &self.values))
    }

    pub fn jacobian(&self, p: &Pt2) -> Mat2 {
        let q = Vec3::new(p.x, p.y, 0.0);
        let r: Vec<Dual> = self.comps.iter().map(|c| c.eval_dual(&q, &self.values)).collect();
        Mat2::new(r[0].d[0], r[0].d[1], r[1].d[0], r[1].d[1])
    }
}
