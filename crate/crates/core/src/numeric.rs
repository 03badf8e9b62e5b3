//! Small scalar solvers shared by the integrator and the analysis layers.

/// Brent's method on a bracket `[a, b]` with `fa·fb ≤ 0`.
///
/// Stops when `|f| ≤ ftol` or the bracket is narrower than `xtol`. Returns
/// the best abscissa and its value, or `None` if the bracket is invalid.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Option<(f64, f64)> {
    if fa == 0.0 {
        return Some((a, fa));
    }
    if fb == 0.0 {
        return Some((b, fb));
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= tol {
            return Some((b, fb));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some((b, fb))
}

/// Central difference with one Richardson step: O(h⁴) first derivative.
pub fn richardson_derivative<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let h2 = 0.5 * h;
    let d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
    (4.0 * d2 - d1) / 3.0
}

/// Angle between two lines (undirected), in `[0, π/2]`.
pub fn line_angle(a: &crate::Pt2, b: &crate::Pt2) -> f64 {
    let c = (a.dot(b) / (a.norm() * b.norm())).abs().min(1.0);
    let s = (a.x * b.y - a.y * b.x).abs() / (a.norm() * b.norm());
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0;
        let (x, fx) = brent(f, 0.0, 2.0, f(0.0), f(2.0), 1e-15, 1e-14, 100).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-13, "{x} {fx}");
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 2.0, 2.0, 1e-12, 0.0, 50).is_none());
    }

    #[test]
    fn richardson_is_fourth_order() {
        let d = richardson_derivative(f64::sin, 0.3, 1e-2);
        assert!((d - 0.3f64.cos()).abs() < 1e-10);
    }
}
