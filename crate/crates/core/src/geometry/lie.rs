use super::{fd_step, SmoothField, SwitchingFunction};
use crate::autodiff::Jet4;
use crate::error::{Error, Result};
use crate::Vec3;

/// Iterated Lie derivative `X^k f(p)` for `k ∈ {1, 2, 3}`.
///
/// Order 1 is `⟨X(p), ∇f(p)⟩`. Higher orders use the Taylor expansion of
/// `f` along the flow when both oracles accept jets, and nested central
/// differences along `X` otherwise.
pub fn lie_derivative(
    field: &SmoothField,
    f: &SwitchingFunction,
    p: &Vec3,
    order: u32,
) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(Error::OrderUnsupported(order));
    }
    if order == 1 {
        return Ok(field.eval(p).dot(&f.gradient(p)));
    }
    if let Some(v) = lie_by_jets(field, f, p, order as usize) {
        return Ok(v);
    }
    Ok(lie_by_differences(field, f, p, order))
}

/// `X^k f(p) = k!·[t^k] f(φ_t(p))`, with the flow expanded by Picard steps.
fn lie_by_jets(field: &SmoothField, f: &SwitchingFunction, p: &Vec3, k: usize) -> Option<f64> {
    let mut x = [Jet4::constant(p.x), Jet4::constant(p.y), Jet4::constant(p.z)];
    for j in 0..k {
        let v = field.eval_jet(&x)?;
        for i in 0..3 {
            x[i].c[j + 1] = v[i].c[j] / (j + 1) as f64;
        }
    }
    let g = f.eval_jet(&x)?;
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    Some(fact * g.c[k])
}

fn lie_by_differences(field: &SmoothField, f: &SwitchingFunction, p: &Vec3, k: u32) -> f64 {
    if k == 1 {
        return field.eval(p).dot(&f.gradient(p));
    }
    let w = field.eval(p);
    let norm = w.norm();
    if norm == 0.0 {
        return 0.0;
    }
    // Inner orders are themselves differenced, so the outer step grows.
    let base = if k == 2 { fd_step(p.norm()) } else { f64::EPSILON.powf(0.2) * (1.0 + p.norm()) };
    let h = base / norm;
    let a = lie_by_differences(field, f, &(p + w * h), k - 1);
    let b = lie_by_differences(field, f, &(p - w * h), k - 1);
    (a - b) / (2.0 * h)
}
