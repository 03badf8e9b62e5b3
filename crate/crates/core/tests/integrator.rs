use std::collections::BTreeMap;

use fsim_core::geometry::{FilippovSystem, SmoothField, SwitchingFunction};
use fsim_core::integrator::{
    filippov_trajectory, flow_to_section, integrate, ArcMode, Direction, Level, NonUniquePolicy, OdeOptions,
    Outcome, TerminalEvent,
};
use fsim_core::scenarios::{builtin, load_system, BUILTIN_NAMES};
use fsim_core::{Error, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exa43() -> FilippovSystem {
    load_system("builtin:exa43").unwrap()
}

fn vishik() -> SmoothField {
    SmoothField::from_fn(|p| Vec3::new(0.0, 1.0, p.y))
}

fn opts() -> OdeOptions {
    OdeOptions::default()
}

#[test]
fn vishik_orbit_reaches_the_half_level() {
    let f = SwitchingFunction::from_fn(|p| p.z);
    let level = Level { f: &f, level: 0.5 };
    let (p, t) = flow_to_section(&vishik(), &Vec3::zeros(), &level, Direction::Forward, 10.0, &opts()).unwrap();
    assert!((p - Vec3::new(0.0, 1.0, 0.5)).norm() < 1e-10, "{p}");
    assert!((t - 1.0).abs() < 1e-10);
}

#[test]
fn loop_field_returns_to_sigma_after_unit_time() {
    let sys = exa43();
    let (p, t) = flow_to_section(&sys.x, &Vec3::zeros(), &sys.f, Direction::Forward, 10.0, &opts()).unwrap();
    assert!((p - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-10, "{p}");
    assert!((t - 1.0).abs() < 1e-10);

    let (p, t) = flow_to_section(&sys.y, &Vec3::new(0.0, 1.0, 0.0), &sys.f, Direction::Forward, 10.0, &opts()).unwrap();
    assert!(p.norm() < 1e-10, "{p}");
    assert!((t - 1.0).abs() < 1e-10);
}

#[test]
fn backward_time_is_negative() {
    let sys = exa43();
    let (p, t) =
        flow_to_section(&sys.y, &Vec3::new(0.0, 0.0, 0.0), &sys.f, Direction::Backward, 10.0, &opts()).unwrap();
    assert!((p - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-9, "{p}");
    assert!((t + 1.0).abs() < 1e-9);
}

#[test]
fn constant_field_never_reaches_the_section() {
    let field = SmoothField::from_fn(|_| Vec3::new(1.0, 0.0, 0.0));
    let f = SwitchingFunction::from_fn(|p| p.z - 1.0);
    let r = flow_to_section(&field, &Vec3::zeros(), &f, Direction::Forward, 10.0, &opts());
    assert_eq!(r, Err(Error::NoHit { t_max: 10.0 }));
}

#[test]
fn escape_is_reported_as_blowup() {
    let field = SmoothField::from_fn(|p| Vec3::new(p.x * p.x, 0.0, 0.0));
    let f = SwitchingFunction::from_fn(|p| p.z - 1.0);
    let r = flow_to_section(&field, &Vec3::new(1.0, 0.0, 0.0), &f, Direction::Forward, 10.0, &opts());
    assert!(matches!(r, Err(Error::Blowup { .. })), "{r:?}");
}

#[test]
fn crossing_start_enters_the_upper_half() {
    let sys = exa43();
    let traj = filippov_trajectory(&sys, &Vec3::new(0.0, 0.2, 0.0), 0.5, NonUniquePolicy::Halt).unwrap();
    assert_eq!(traj.arcs[0].mode, ArcMode::PlusFlow);
    assert!(traj.nonunique_flags.is_empty());
    let (_, p) = traj.arcs[0].samples[1];
    assert!(p.z > 0.0);
}

#[test]
fn sliding_start_slides_to_the_fold_then_lifts_off() {
    let sys = exa43();
    let traj = filippov_trajectory(&sys, &Vec3::new(0.0, -0.5, 0.0), 20.0, NonUniquePolicy::Halt).unwrap();
    let slide = &traj.arcs[0];
    assert_eq!(slide.mode, ArcMode::Sliding);
    assert_eq!(slide.terminal_event, TerminalEvent::LeftSliding);
    let (t0, p0) = slide.samples[0];
    let (t1, p1) = slide.samples[1];
    let v = (p1 - p0) / (t1 - t0);
    assert!((v - Vec3::new(0.0, 1.0 / 15.0, 0.0)).norm() < 1e-3, "{v}");
    let (_, end) = *slide.samples.last().unwrap();
    assert!(end.y.abs() < 1e-9 && end.x.abs() < 1e-12, "{end}");
    assert_eq!(traj.arcs[1].mode, ArcMode::PlusFlow);
    // Tangential departure: z grows quadratically at first.
    let (ta, a) = traj.arcs[1].samples[1];
    let dt = ta - traj.arcs[1].samples[0].0;
    assert!(a.z > 0.0 && a.z < 2.0 * dt * dt);
}

#[test]
fn unstable_sliding_start_halts_with_a_flag() {
    let sys = exa43();
    let traj = filippov_trajectory(&sys, &Vec3::new(0.0, 0.6, 0.0), 1.0, NonUniquePolicy::Halt).unwrap();
    assert!(traj.arcs.is_empty());
    assert_eq!(traj.nonunique_flags.len(), 1);
    assert_eq!(traj.nonunique_flags[0].0, 0.0);
}

#[test]
fn loop_closes_after_two_unit_arcs() {
    let sys = exa43();
    let traj = filippov_trajectory(&sys, &Vec3::zeros(), 2.5, NonUniquePolicy::Halt).unwrap();
    let up = &traj.arcs[0];
    let down = &traj.arcs[1];
    assert_eq!(up.mode, ArcMode::PlusFlow);
    assert_eq!(down.mode, ArcMode::MinusFlow);
    for &(t, p) in &up.samples {
        assert!((p.z - (t * t - t * t * t)).abs() < 1e-8, "t={t} z={}", p.z);
        assert!(p.x.abs() < 1e-14);
    }
    for &(t, p) in &down.samples {
        let s = t - 1.0;
        assert!((p.z - (s * s - s)).abs() < 1e-8, "t={t} z={}", p.z);
    }
    let (t, end) = *down.samples.last().unwrap();
    assert!((t - 2.0).abs() < 1e-8);
    assert!(end.norm() < 1e-7, "{end}");
}

#[test]
fn vishik_flow_matches_closed_form() {
    let field = vishik();
    let rhs = |p: &Vec3| Ok(field.eval(p));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p0 = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let t: f64 = rng.gen_range(0.0..2.0);
        let exact = Vec3::new(p0.x, p0.y + t, p0.z + p0.y * t + t * t / 2.0);
        match integrate(&rhs, p0, t, &[], &opts(), None).unwrap() {
            Outcome::TimeOut { p, .. } => {
                for k in 0..3 {
                    assert!((p[k] - exact[k]).abs() < 1e-9, "{p} vs {exact}");
                }
            }
            o => panic!("{o:?}"),
        }
    }
}

fn systems() -> Vec<FilippovSystem> {
    BUILTIN_NAMES.iter().map(|n| builtin(n, &BTreeMap::new()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smooth_arcs_are_time_reversible(which in 0usize..5, below in any::<bool>(), x in -0.2f64..0.2, y in -0.2f64..0.2, z in -0.2f64..0.2, t in 0.1f64..2.0) {
        let sys = &systems()[which];
        let field = if below { &sys.y } else { &sys.x };
        let fwd = |p: &Vec3| Ok(field.eval(p));
        let bwd = |p: &Vec3| Ok(-field.eval(p));
        let p0 = Vec3::new(x, y, z);
        let end = match integrate(&fwd, p0, t, &[], &opts(), None) {
            Ok(Outcome::TimeOut { p, .. }) => p,
            _ => return Ok(()),
        };
        prop_assume!(end.iter().all(|v| v.is_finite()));
        match integrate(&bwd, end, t, &[], &opts(), None) {
            Ok(Outcome::TimeOut { p, .. }) => prop_assert!((p - p0).norm() < 1e-7, "{} vs {}", p, p0),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn trajectories_respect_the_filippov_rules(
        which in 0usize..5,
        x in -0.25f64..0.25,
        y in -0.25f64..0.25,
        z in -0.1f64..0.1,
        policy in prop_oneof![Just(NonUniquePolicy::PreferPlus), Just(NonUniquePolicy::PreferMinus), Just(NonUniquePolicy::PreferSlide)],
    ) {
        let sys = &systems()[which];
        let traj = match filippov_trajectory(sys, &Vec3::new(x, y, z), 3.0, policy) {
            Ok(t) => t,
            Err(Error::StuckAtDegenerate { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        for arc in &traj.arcs {
            for w in arc.samples.windows(2) {
                prop_assert!(w[1].0 >= w[0].0);
            }
            for (_, p) in &arc.samples {
                let f = sys.f.eval(p);
                match arc.mode {
                    ArcMode::PlusFlow => prop_assert!(f >= -1e-9, "{}", f),
                    ArcMode::MinusFlow => prop_assert!(f <= 1e-9, "{}", f),
                    ArcMode::Sliding => prop_assert!(f.abs() < 1e-8, "{}", f),
                }
            }
            if arc.terminal_event == TerminalEvent::HitSigma {
                let (_, p) = arc.samples.last().unwrap();
                prop_assert!(sys.f.eval(p).abs() < 1e-10);
            }
        }
        for w in traj.arcs.windows(2) {
            let (_, a) = w[0].samples.last().unwrap();
            let (_, b) = w[1].samples.first().unwrap();
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}
