//! Forward-mode differentiation: gradients in three variables ([`Dual`]) and
//! truncated univariate Taylor series ([`Jet`]). Expressions are written once
//! against [`Scalar`] and evaluated in whichever arithmetic is needed.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Value part.
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;

    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Self::from_f64(1.0);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        if n < 0 {
            Self::from_f64(1.0) / acc
        } else {
            acc
        }
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Value with gradient with respect to (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 3] }
    }

    /// Independent variable number `i`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        Self { v, d }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Self { v, d: self.d.map(|g| g * dv) }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d: std::array::from_fn(|i| self.d[i] + o.d[i]) }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d: std::array::from_fn(|i| self.d[i] - o.d[i]) }
    }
}

impl Mul for Dual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

impl Div for Dual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Self { v: q, d: std::array::from_fn(|i| (self.d[i] - q * o.d[i]) / o.v) }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d: self.d.map(|g| -g) }
    }
}

impl Scalar for Dual {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn re(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }
}

/// Taylor coefficients `c[k]` of a function of one variable, truncated
/// after degree `N - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

/// Jets of degree 3, enough for Lie derivatives up to order 3.
pub type Jet4 = Jet<4>;

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|i| self.c[i] + o.c[i]) }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|i| self.c[i] - o.c[i]) }
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| (0..=k).map(|i| self.c[i] * o.c[k - i]).sum()) }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [0.0; N];
        for k in 0..N {
            let s: f64 = (1..=k).map(|i| o.c[i] * q[k - i]).sum();
            q[k] = (self.c[k] - s) / o.c[0];
        }
        Self { c: q }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { c: self.c.map(|v| -v) }
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn re(&self) -> f64 {
        self.c[0]
    }
    fn sin(self) -> Self {
        sin_cos(&self).0
    }
    fn cos(self) -> Self {
        sin_cos(&self).1
    }
    fn exp(self) -> Self {
        let a = &self.c;
        let mut e = [0.0; N];
        e[0] = a[0].exp();
        for k in 1..N {
            let s: f64 = (1..=k).map(|i| i as f64 * a[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }
    fn sqrt(self) -> Self {
        let a = &self.c;
        let mut r = [0.0; N];
        r[0] = a[0].sqrt();
        for k in 1..N {
            let s: f64 = (1..k).map(|i| r[i] * r[k - i]).sum();
            r[k] = (a[k] - s) / (2.0 * r[0]);
        }
        Self { c: r }
    }
}

fn sin_cos<const N: usize>(x: &Jet<N>) -> (Jet<N>, Jet<N>) {
    let a = &x.c;
    let mut s = [0.0; N];
    let mut c = [0.0; N];
    s[0] = a[0].sin();
    c[0] = a[0].cos();
    for k in 1..N {
        let kf = k as f64;
        s[k] = (1..=k).map(|i| i as f64 * a[i] * c[k - i]).sum::<f64>() / kf;
        c[k] = -(1..=k).map(|i| i as f64 * a[i] * s[k - i]).sum::<f64>() / kf;
    }
    (Jet { c: s }, Jet { c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_var(v: f64) -> Jet4 {
        Jet { c: [v, 1.0, 0.0, 0.0] }
    }

    #[test]
    fn dual_product_rule() {
        let x = Dual::var(3.0, 0);
        let y = Dual::var(2.0, 1);
        let r = x * y / (x + y);
        // d/dx xy/(x+y) = y²/(x+y)²
        assert!((r.d[0] - 4.0 / 25.0).abs() < 1e-15);
        assert!((r.d[1] - 9.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn jet_exp_matches_series() {
        let e = t_var(0.0).exp();
        assert_eq!(e.c, [1.0, 1.0, 0.5, 1.0 / 6.0]);
    }

    #[test]
    fn jet_sin_cos_sqrt_division() {
        let s = t_var(0.0).sin();
        assert!((s.c[3] + 1.0 / 6.0).abs() < 1e-15);
        let c = t_var(0.0).cos();
        assert!((c.c[2] + 0.5).abs() < 1e-15);
        // sqrt(1+t) = 1 + t/2 - t²/8 + t³/16
        let r = t_var(1.0).sqrt();
        assert!((r.c[2] + 0.125).abs() < 1e-15 && (r.c[3] - 0.0625).abs() < 1e-15);
        // 1/(1-t) = 1 + t + t² + t³
        let q = Jet4::constant(1.0) / (Jet4::constant(1.0) - Jet { c: [0.0, 1.0, 0.0, 0.0] });
        assert_eq!(q.c, [1.0; 4]);
    }

    #[test]
    fn powi_negative() {
        let x = Dual::var(2.0, 2);
        let p = x.powi(-2);
        assert!((p.v - 0.25).abs() < 1e-15);
        assert!((p.d[2] + 0.25).abs() < 1e-15);
    }
}
