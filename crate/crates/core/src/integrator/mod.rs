//! Dormand–Prince 5(4) integration with event location, and Filippov
//! trajectories built from it.
//!
//! An event is a sign change of a [`Section`] value between two accepted
//! steps. The crossing time is found by Brent's method on single steps from
//! the left end of the bracketing step, so the located point carries the
//! same local accuracy as the accepted steps. Hits where the flow is nearly
//! tangent to the section are stepped through instead of stopping.

mod filippov;

pub use filippov::{filippov_trajectory, filippov_trajectory_with, Arc, ArcMode, NonUniquePolicy, TerminalEvent, Trajectory};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{fd_step, SmoothField, SwitchingFunction};
use crate::numeric::brent;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// State norm treated as escape.
    pub blowup: f64,
    /// Target residual of located events.
    pub event_tol: f64,
    /// A section value must exceed this before its sign is trusted.
    pub arm: f64,
    /// Same, for the value at the initial point.
    pub start_arm: f64,
    /// Hits with `|∇g·F| ≤ transversality·|∇g|·|F|` are grazes.
    pub transversality: f64,
    /// Time shift applied past a graze.
    pub graze_shift: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

impl OdeOptions {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        Self {
            rtol: t.rtol,
            atol: t.atol,
            h_init: 1e-3,
            h_max: 0.05,
            max_steps: 500_000,
            blowup: 1e6,
            event_tol: t.event,
            arm: 1e-9,
            start_arm: 1e-9,
            transversality: t.transversality,
            graze_shift: 1e-8,
        }
    }
}

/// Scalar function whose zero level is watched during integration.
pub trait Section {
    fn value(&self, p: &Vec3) -> f64;

    fn gradient(&self, p: &Vec3) -> Vec3 {
        Vec3::from_fn(|k, _| {
            let h = fd_step(p[k]);
            let mut a = *p;
            let mut b = *p;
            a[k] += h;
            b[k] -= h;
            (self.value(&a) - self.value(&b)) / (2.0 * h)
        })
    }
}

impl Section for SwitchingFunction {
    fn value(&self, p: &Vec3) -> f64 {
        self.eval(p)
    }
    fn gradient(&self, p: &Vec3) -> Vec3 {
        SwitchingFunction::gradient(self, p)
    }
}

/// The level set `{f = level}`.
pub struct Level<'a> {
    pub f: &'a SwitchingFunction,
    pub level: f64,
}

impl Section for Level<'_> {
    fn value(&self, p: &Vec3) -> f64 {
        self.f.eval(p) - self.level
    }
    fn gradient(&self, p: &Vec3) -> Vec3 {
        self.f.gradient(p)
    }
}

/// The tangency set `{Wf = 0}` of a field `W`.
pub struct Tangency<'a> {
    pub field: &'a SmoothField,
    pub f: &'a SwitchingFunction,
}

impl Section for Tangency<'_> {
    fn value(&self, p: &Vec3) -> f64 {
        self.field.eval(p).dot(&self.f.gradient(p))
    }
}

/// How an integration ended. Times are durations from the start.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Event { index: usize, t: f64, p: Vec3 },
    TimeOut { t: f64, p: Vec3 },
}

pub type Rhs<'a> = dyn Fn(&Vec3) -> Result<Vec3> + 'a;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Step {
    y: Vec3,
    err: Vec3,
    /// Derivative at the new point (first stage of the next step).
    k_end: Vec3,
}

fn dp_step(rhs: &Rhs, y: &Vec3, k1: &Vec3, h: f64) -> Result<Step> {
    let mut k = [Vec3::zeros(); 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut acc = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            if A[s][j] != 0.0 {
                acc += kj * (h * A[s][j]);
            }
        }
        k[s] = rhs(&acc)?;
        debug_assert!(C[s] >= 0.0);
    }
    // Stage 7 is evaluated at the fifth-order solution (FSAL).
    let mut y_new = *y;
    for (j, kj) in k.iter().enumerate().take(6) {
        y_new += kj * (h * A[6][j]);
    }
    let mut err = Vec3::zeros();
    for (j, kj) in k.iter().enumerate() {
        err += kj * (h * E[j]);
    }
    Ok(Step { y: y_new, err, k_end: k[6] })
}

fn sign_of(v: f64, arm: f64) -> i8 {
    if v > arm {
        1
    } else if v < -arm {
        -1
    } else {
        0
    }
}

/// Integrate `rhs` from `p0` for at most `t_max`, stopping at the first
/// transversal zero of any section. Accepted states are appended to
/// `samples` with their time.
pub fn integrate(
    rhs: &Rhs,
    p0: Vec3,
    t_max: f64,
    sections: &[&dyn Section],
    opts: &OdeOptions,
    mut samples: Option<&mut Vec<(f64, Vec3)>>,
) -> Result<Outcome> {
    let mut t = 0.0;
    let mut y = p0;
    let mut k1 = rhs(&y)?;
    let mut h = opts.h_init.min(opts.h_max).min(t_max);
    let start_arm = opts.start_arm.max(opts.arm);
    let mut signs: Vec<i8> = sections.iter().map(|s| sign_of(s.value(&y), start_arm)).collect();
    let mut record = |t: f64, p: Vec3| {
        if let Some(s) = samples.as_deref_mut() {
            s.push((t, p));
        }
    };
    record(0.0, y);
    let mut steps = 0;
    loop {
        if t >= t_max {
            return Ok(Outcome::TimeOut { t, p: y });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::NoHit { t_max });
        }
        h = h.min(t_max - t);
        let step = dp_step(rhs, &y, &k1, h)?;
        let errn = (0..3)
            .map(|i| step.err[i].abs() / (opts.atol + opts.rtol * y[i].abs().max(step.y[i].abs())))
            .fold(0.0, f64::max);
        if !errn.is_finite() || errn > 1.0 {
            h *= if errn.is_finite() { (0.9 * errn.powf(-0.2)).max(0.2) } else { 0.2 };
            if h < 1e-14 * (1.0 + t) {
                return Err(Error::Blowup { t });
            }
            continue;
        }

        let mut hit: Option<(f64, usize, Vec3)> = None;
        for (i, s) in sections.iter().enumerate() {
            let g1 = s.value(&step.y);
            if signs[i] == 0 || g1 * f64::from(signs[i]) > 0.0 {
                continue;
            }
            let (tau, p) = locate(rhs, &y, &k1, h, *s, opts)?;
            if hit.as_ref().is_none_or(|b| tau < b.0) {
                hit = Some((tau, i, p));
            }
        }

        if let Some((tau, index, p)) = hit {
            let f = rhs(&p)?;
            let grad = sections[index].gradient(&p);
            let rate = grad.dot(&f);
            if rate.abs() > opts.transversality * grad.norm() * f.norm() {
                record(t + tau, p);
                return Ok(Outcome::Event { index, t: t + tau, p });
            }
            // Graze: restart just past the contact.
            let kp = rhs(&p)?;
            let shifted = dp_step(rhs, &p, &kp, opts.graze_shift)?;
            t += tau + opts.graze_shift;
            y = shifted.y;
            k1 = rhs(&y)?;
            for (i, s) in sections.iter().enumerate() {
                signs[i] = sign_of(s.value(&y), opts.arm);
            }
            record(t, y);
            continue;
        }

        t += h;
        y = step.y;
        k1 = step.k_end;
        if !y.iter().all(|v| v.is_finite()) || y.norm() > opts.blowup {
            return Err(Error::Blowup { t });
        }
        record(t, y);
        for (i, s) in sections.iter().enumerate() {
            let g = s.value(&y);
            let sg = sign_of(g, opts.arm);
            if sg != 0 {
                signs[i] = sg;
            }
        }
        h = (h * (0.9 * errn.max(1e-10).powf(-0.2)).clamp(0.2, 5.0)).min(opts.h_max);
    }
}

/// Zero of the section inside a step of length `h` from `y`.
fn locate(rhs: &Rhs, y: &Vec3, k1: &Vec3, h: f64, s: &dyn Section, opts: &OdeOptions) -> Result<(f64, Vec3)> {
    let g0 = s.value(y);
    let end = dp_step(rhs, y, k1, h)?.y;
    let g1 = s.value(&end);
    if g0 * g1 > 0.0 {
        return Ok((0.0, *y));
    }
    let mut fail = None;
    let phi = |tau: f64| match dp_step(rhs, y, k1, tau) {
        Ok(st) => s.value(&st.y),
        Err(e) => {
            fail = Some(e);
            0.0
        }
    };
    let (tau, _) = brent(phi, 0.0, h, g0, g1, 1e-16 * h.max(1e-300), opts.event_tol, 200)
        .ok_or(Error::NoHit { t_max: h })?;
    if let Some(e) = fail {
        return Err(e);
    }
    let p = if tau == 0.0 { *y } else { dp_step(rhs, y, k1, tau)?.y };
    Ok((tau, p))
}

/// Direction of time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// First transversal zero of `section` along the orbit of `field` from
/// `start`. The returned time is negative for backward integration.
pub fn flow_to_section(
    field: &SmoothField,
    start: &Vec3,
    section: &dyn Section,
    direction: Direction,
    t_max: f64,
    opts: &OdeOptions,
) -> Result<(Vec3, f64)> {
    let sgn = direction.sign();
    let rhs = |p: &Vec3| Ok(field.eval(p) * sgn);
    match integrate(&rhs, *start, t_max, &[section], opts, None)? {
        Outcome::Event { t, p, .. } => Ok((p, sgn * t)),
        Outcome::TimeOut { .. } => Err(Error::NoHit { t_max }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        // Quarter periods of x'' = -x, watched through the section x = 0.
        let rhs = |p: &Vec3| Ok(Vec3::new(p.y, -p.x, 0.0));
        let f = SwitchingFunction::from_fn(|p| p.x);
        let out = integrate(&rhs, Vec3::new(1.0, 0.0, 0.0), 10.0, &[&f], &OdeOptions::default(), None).unwrap();
        match out {
            Outcome::Event { t, p, .. } => {
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
                assert!(p.x.abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn exponential_accuracy() {
        let rhs = |p: &Vec3| Ok(*p);
        match integrate(&rhs, Vec3::new(1.0, 0.0, 0.0), 2.0, &[], &OdeOptions::default(), None).unwrap() {
            Outcome::TimeOut { t, p } => {
                assert_eq!(t, 2.0);
                assert!((p.x - 2f64.exp()).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn grazing_contact_is_not_an_event() {
        // y = (x - 1)^3 crosses y = 0 with zero vertical speed at x = 1.
        let rhs = |p: &Vec3| Ok(Vec3::new(1.0, 3.0 * (p.x - 1.0).powi(2), 0.0));
        let g = SwitchingFunction::from_fn(|p| p.y);
        let out = integrate(&rhs, Vec3::new(0.0, -1.0, 0.0), 2.0, &[&g], &OdeOptions::default(), None).unwrap();
        match out {
            Outcome::TimeOut { p, .. } => assert!((p.y - 1.0).abs() < 1e-6, "{p:?}"),
            o => panic!("{o:?}"),
        }
    }
}
