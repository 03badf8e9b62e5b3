use serde::{Deserialize, Serialize};

use super::{integrate, OdeOptions, Outcome, Section, Tangency};
use crate::error::{Error, Result};
use crate::geometry::{classify_sigma_point, sliding_vector, FilippovSystem, SigmaKind};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcMode {
    PlusFlow,
    MinusFlow,
    Sliding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalEvent {
    HitSigma,
    /// Sliding reached a fold line.
    LeftSliding,
    TimeOut,
    SectionHit,
    Blowup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub mode: ArcMode,
    pub samples: Vec<(f64, Vec3)>,
    pub terminal_event: TerminalEvent,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub arcs: Vec<Arc>,
    /// Times and points where the flow was multivalued and the policy chose.
    pub nonunique_flags: Vec<(f64, Vec3)>,
}

/// Continuation rule where the Filippov flow is not unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonUniquePolicy {
    PreferPlus,
    PreferMinus,
    PreferSlide,
    Halt,
}

#[derive(Serialize)]
struct ArcLine<'a> {
    mode: ArcMode,
    t: Vec<f64>,
    p: Vec<[f64; 3]>,
    event: &'a TerminalEvent,
}

impl Trajectory {
    /// One JSON object per arc.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for a in &self.arcs {
            let line = ArcLine {
                mode: a.mode,
                t: a.samples.iter().map(|s| s.0).collect(),
                p: a.samples.iter().map(|s| s.1.into()).collect(),
                event: &a.terminal_event,
            };
            out.push_str(&serde_json::to_string(&line).expect("arc serializes"));
            out.push('\n');
        }
        out
    }

    pub fn end(&self) -> Option<(f64, Vec3)> {
        self.arcs.last().and_then(|a| a.samples.last().copied())
    }

    pub fn samples(&self) -> impl Iterator<Item = &(f64, Vec3)> {
        self.arcs.iter().flat_map(|a| a.samples.iter())
    }
}

/// Points closer than this to Σ are treated as on it.
const ON_SIGMA: f64 = 1e-9;
const MAX_ARCS: usize = 10_000;

enum Next {
    Go(ArcMode),
    Halt,
}

/// Filippov trajectory from `p0` for total time `t_max`.
///
/// X is followed on f > 0 and Y on f < 0. At a Σ hit the point is
/// classified: crossing switches fields, stable sliding follows the sliding
/// field until Xf = 0 (exit into M⁺) or Yf = 0 (exit into M⁻), and points
/// where the flow branches are flagged and resolved by `policy`.
pub fn filippov_trajectory(sys: &FilippovSystem, p0: &Vec3, t_max: f64, policy: NonUniquePolicy) -> Result<Trajectory> {
    filippov_trajectory_with(sys, p0, t_max, policy, &OdeOptions::from_tolerances(&sys.tol))
}

/// Same as [`filippov_trajectory`] with explicit integrator options, e.g. a
/// smaller `h_max` for densely sampled reference orbits.
pub fn filippov_trajectory_with(
    sys: &FilippovSystem,
    p0: &Vec3,
    t_max: f64,
    policy: NonUniquePolicy,
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let opts = opts.clone();
    let mut traj = Trajectory::default();
    let mut t = 0.0;
    let mut p = *p0;
    let f0 = sys.f.eval(p0);
    let mut mode = if f0 > ON_SIGMA {
        ArcMode::PlusFlow
    } else if f0 < -ON_SIGMA {
        ArcMode::MinusFlow
    } else {
        match decide(sys, &p, t, policy, &mut traj)? {
            Next::Go(m) => m,
            Next::Halt => return Ok(traj),
        }
    };

    while t < t_max && traj.arcs.len() < MAX_ARCS {
        let mut samples = Vec::new();
        let remaining = t_max - t;
        let result = match mode {
            ArcMode::PlusFlow => {
                let rhs = |q: &Vec3| Ok(sys.x.eval(q));
                integrate(&rhs, p, remaining, &[&sys.f as &dyn Section], &opts, Some(&mut samples))
            }
            ArcMode::MinusFlow => {
                let rhs = |q: &Vec3| Ok(sys.y.eval(q));
                integrate(&rhs, p, remaining, &[&sys.f as &dyn Section], &opts, Some(&mut samples))
            }
            ArcMode::Sliding => {
                let rhs = |q: &Vec3| sliding_vector(sys, q);
                let tx = Tangency { field: &sys.x, f: &sys.f };
                let ty = Tangency { field: &sys.y, f: &sys.f };
                let slide_opts = OdeOptions { start_arm: 10.0 * sys.tol.classify, ..opts.clone() };
                integrate(&rhs, p, remaining, &[&tx, &ty], &slide_opts, Some(&mut samples))
            }
        };
        for s in &mut samples {
            s.0 += t;
        }
        let outcome = match result {
            Ok(o) => o,
            Err(Error::Blowup { .. }) => {
                traj.arcs.push(Arc { mode, samples, terminal_event: TerminalEvent::Blowup });
                return Ok(traj);
            }
            // Sliding ran into a point where both fields are tangent.
            Err(Error::DenominatorVanishes(_)) => {
                let (ts, ps) = samples.last().copied().unwrap_or((t, p));
                return Err(Error::StuckAtDegenerate { t: ts, point: ps.into() });
            }
            Err(e) => return Err(e),
        };
        match outcome {
            Outcome::TimeOut { .. } => {
                traj.arcs.push(Arc { mode, samples, terminal_event: TerminalEvent::TimeOut });
                return Ok(traj);
            }
            Outcome::Event { index, t: dt, p: hit } => {
                t += dt;
                p = hit;
                let event = if mode == ArcMode::Sliding { TerminalEvent::LeftSliding } else { TerminalEvent::HitSigma };
                traj.arcs.push(Arc { mode, samples, terminal_event: event });
                let lift_off = if mode == ArcMode::Sliding { sliding_exit(sys, &p, index) } else { None };
                mode = match lift_off {
                    Some(m) => m,
                    None => match decide(sys, &p, t, policy, &mut traj)? {
                        Next::Go(m) => m,
                        Next::Halt => return Ok(traj),
                    },
                };
            }
        }
    }
    Ok(traj)
}

/// Exit from sliding at a fold: a visible X fold lifts off into M⁺, a
/// visible Y fold into M⁻. Invisible or degenerate arrivals return `None`
/// and continue by the crossing rules.
fn sliding_exit(sys: &FilippovSystem, p: &Vec3, index: usize) -> Option<ArcMode> {
    let kind = classify_sigma_point(sys, p, sys.tol.classify).map(|c| c.kind).ok()?;
    match (index, kind) {
        (0, SigmaKind::FoldRegularX { visible: false }) | (1, SigmaKind::FoldRegularY { visible: false }) => None,
        (_, SigmaKind::Degenerate) => None,
        (0, _) => Some(ArcMode::PlusFlow),
        _ => Some(ArcMode::MinusFlow),
    }
}

fn decide(sys: &FilippovSystem, p: &Vec3, t: f64, policy: NonUniquePolicy, traj: &mut Trajectory) -> Result<Next> {
    use ArcMode::*;
    let class = classify_sigma_point(sys, p, sys.tol.classify)?;
    let mut branch = |preferred_slide: ArcMode| {
        traj.nonunique_flags.push((t, *p));
        match policy {
            NonUniquePolicy::PreferPlus => Next::Go(PlusFlow),
            NonUniquePolicy::PreferMinus => Next::Go(MinusFlow),
            NonUniquePolicy::PreferSlide => Next::Go(preferred_slide),
            NonUniquePolicy::Halt => Next::Halt,
        }
    };
    Ok(match class.kind {
        SigmaKind::Crossing | SigmaKind::RegularRegular => Next::Go(if class.xf > 0.0 { PlusFlow } else { MinusFlow }),
        SigmaKind::StableSliding => Next::Go(Sliding),
        SigmaKind::UnstableSliding => branch(Sliding),
        SigmaKind::FoldRegularX { visible } => match (visible, class.yf > 0.0) {
            (true, true) => Next::Go(PlusFlow),
            // Moving along X lowers Xf: into stable sliding.
            (false, true) => Next::Go(Sliding),
            (true, false) => branch(PlusFlow),
            (false, false) => Next::Go(MinusFlow),
        },
        SigmaKind::FoldRegularY { visible } => match (visible, class.xf < 0.0) {
            (true, true) => Next::Go(MinusFlow),
            (false, true) => Next::Go(Sliding),
            (true, false) => branch(MinusFlow),
            (false, false) => Next::Go(PlusFlow),
        },
        SigmaKind::Degenerate => return Err(Error::StuckAtDegenerate { t, point: (*p).into() }),
    })
}
