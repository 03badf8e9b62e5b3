use std::collections::BTreeMap;

use fsim_core::geometry::{
    classify_sigma_point, fold_curve, lie_derivative, sliding_field, FilippovSystem, SigmaKind, SmoothField,
    SwitchingFunction,
};
use fsim_core::scenarios::{builtin, load_system, SystemFile, BUILTIN_NAMES};
use fsim_core::{Error, Pt2, Vec3};
use proptest::prelude::*;

fn exa43() -> FilippovSystem {
    load_system("builtin:exa43").unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn vishik_x() -> SmoothField {
    SmoothField::from_fn(|p| Vec3::new(0.0, 1.0, p.y))
}

fn z_fn() -> SwitchingFunction {
    SwitchingFunction::from_fn(|p| p.z)
}

#[test]
fn lie_derivatives_of_vishik_field() {
    let o = Vec3::zeros();
    let x = vishik_x();
    let f = z_fn();
    assert!(lie_derivative(&x, &f, &o, 1).unwrap().abs() < 1e-12);
    assert!(close(lie_derivative(&x, &f, &o, 2).unwrap(), 1.0, 1e-6));
    assert!(lie_derivative(&x, &f, &o, 3).unwrap().abs() < 1e-4);
    assert_eq!(lie_derivative(&x, &f, &o, 4), Err(Error::OrderUnsupported(4)));
}

#[test]
fn second_lie_derivative_of_loop_field() {
    let sys = exa43();
    let v = lie_derivative(&sys.x, &sys.f, &Vec3::zeros(), 2).unwrap();
    assert!(close(v, 2.0, 1e-10), "{v}");
    // X f = y(2 - 3y), X²f = (2 - 6y)·1, X³f = -6.
    let p = Vec3::new(0.1, 0.2, 0.0);
    assert!(close(lie_derivative(&sys.x, &sys.f, &p, 1).unwrap(), 0.2 * (2.0 - 0.6), 1e-12));
    assert!(close(lie_derivative(&sys.x, &sys.f, &p, 2).unwrap(), 2.0 - 1.2, 1e-10));
    assert!(close(lie_derivative(&sys.x, &sys.f, &p, 3).unwrap(), -6.0, 1e-8));
}

#[test]
fn classification_along_the_loop_plane() {
    let sys = exa43();
    let tol = sys.tol.classify;

    let c = classify_sigma_point(&sys, &Vec3::new(0.0, -0.5, 0.0), tol).unwrap();
    assert_eq!(c.kind, SigmaKind::StableSliding);
    assert!(close(c.xf, -1.75, 1e-12) && close(c.yf, 2.0, 1e-12));

    let c = classify_sigma_point(&sys, &Vec3::zeros(), tol).unwrap();
    assert_eq!(c.kind, SigmaKind::FoldRegularX { visible: true });
    assert!(c.xf.abs() < 1e-12 && close(c.yf, 1.0, 1e-12));
    assert!(close(c.x2f.unwrap(), 2.0, 1e-9));

    let c = classify_sigma_point(&sys, &Vec3::new(0.0, 0.5, 0.0), tol).unwrap();
    assert_eq!(c.kind, SigmaKind::FoldRegularY { visible: false });
    assert!(close(c.xf, 0.25, 1e-12) && c.yf.abs() < 1e-12);
    assert!(c.y2f.unwrap() > 0.0);

    let c = classify_sigma_point(&sys, &Vec3::new(0.0, 0.6, 0.0), tol).unwrap();
    assert_eq!(c.kind, SigmaKind::UnstableSliding);
    assert!(close(c.xf, 0.12, 1e-12) && close(c.yf, -0.2, 1e-12));
}

#[test]
fn off_sigma_points_are_rejected() {
    let sys = exa43();
    match classify_sigma_point(&sys, &Vec3::new(0.0, 0.0, 1e-3), 1e-7) {
        Err(Error::NotOnSigma(v)) => assert!(close(v, 1e-3, 1e-15)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sliding_field_examples() {
    let sys = exa43();
    let fz = sliding_field(&sys, &Vec3::new(0.0, -0.5, 0.0)).unwrap();
    assert!((fz - Vec3::new(0.0, 1.0 / 15.0, 0.0)).norm() < 1e-12, "{fz}");
    let fz = sliding_field(&sys, &Vec3::zeros()).unwrap();
    assert!((fz - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12, "{fz}");
}

#[test]
fn identical_fields_have_no_sliding_field() {
    let file = SystemFile {
        name: "twin".into(),
        params: BTreeMap::new(),
        f: "z".into(),
        x: ["1".into(), "y".into(), "x".into()],
        y: ["1".into(), "y".into(), "x".into()],
        chart: None,
        tau_level: None,
    };
    let sys = file.build().unwrap();
    assert!(matches!(sliding_field(&sys, &Vec3::new(0.3, 0.1, 0.0)), Err(Error::DenominatorVanishes(_))));
}

#[test]
fn fold_curve_of_loop_example_is_the_x_axis() {
    let sys = exa43();
    let curve = fold_curve(&sys, &Pt2::new(0.1, 0.05), 0.2, 0.01).unwrap();
    assert!(curve.len() > 10);
    let xs: Vec<f64> = curve.iter().map(|p| p.x).collect();
    let (lo, hi) = xs.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(lo < 0.1 && hi > 0.1, "[{lo}, {hi}]");
    assert!(close(hi - lo, 0.2, 1e-6));
    for c in curve.iter() {
        assert!(c.y.abs() < 1e-9);
        let p = sys.lift(&c);
        assert!(sys.xf(&p).abs() < 1e-9 && sys.f.eval(&p).abs() < 1e-9);
        let k = classify_sigma_point(&sys, &p, sys.tol.classify).unwrap();
        assert_eq!(k.kind, SigmaKind::FoldRegularX { visible: true });
    }
    assert!(curve.max_segment() <= sys.tol.max_seg + 1e-12);
}

#[test]
fn fold_curve_of_vishik_field() {
    let sys = load_system("builtin:vishik-halfspace").unwrap();
    let curve = fold_curve(&sys, &Pt2::new(0.0, 0.0), 1.0, 0.01).unwrap();
    assert!(curve.iter().all(|c| c.y.abs() < 1e-12));
    assert!(close(curve.arclength(), 1.0, 1e-6));
}

#[test]
fn fold_curve_needs_a_tangency() {
    let mut sys = exa43();
    sys.x = SmoothField::from_fn(|_| Vec3::new(0.0, 0.0, 1.0));
    assert!(matches!(fold_curve(&sys, &Pt2::new(0.0, 0.0), 0.2, 0.01), Err(Error::NoFoldCurve(_))));
}

fn systems() -> Vec<FilippovSystem> {
    BUILTIN_NAMES.iter().map(|n| builtin(n, &BTreeMap::new()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sliding_field_is_tangent(which in 0usize..5, x in -0.3f64..0.3, y in -0.3f64..0.3) {
        let sys = &systems()[which];
        let p = sys.lift(&Pt2::new(x, y));
        if let Ok(c) = classify_sigma_point(sys, &p, sys.tol.classify) {
            if c.kind == SigmaKind::StableSliding {
                let fz = sliding_field(sys, &p).unwrap();
                let normal = fz.dot(&sys.f.gradient(&p));
                prop_assert!(normal.abs() < 1e-9 * (1.0 + fz.norm()), "{}", normal);
            }
        }
    }

    #[test]
    fn witnesses_reproduce_the_kind(which in 0usize..5, x in -0.3f64..0.3, y in -0.3f64..0.3) {
        let sys = &systems()[which];
        let tol = sys.tol.classify;
        let p = sys.lift(&Pt2::new(x, y));
        let c = classify_sigma_point(sys, &p, tol).unwrap();
        let xf = lie_derivative(&sys.x, &sys.f, &p, 1).unwrap();
        let yf = lie_derivative(&sys.y, &sys.f, &p, 1).unwrap();
        prop_assert_eq!(c.xf, xf);
        prop_assert_eq!(c.yf, yf);
        prop_assert_ne!(c.kind, SigmaKind::RegularRegular);
        match c.kind {
            SigmaKind::Crossing => prop_assert!(xf * yf > tol),
            SigmaKind::StableSliding => prop_assert!(xf < -tol && yf > tol),
            SigmaKind::UnstableSliding => prop_assert!(xf > tol && yf < -tol),
            SigmaKind::FoldRegularX { visible } => {
                prop_assert!(xf.abs() <= tol);
                let x2f = lie_derivative(&sys.x, &sys.f, &p, 2).unwrap();
                prop_assert_eq!(visible, x2f > tol);
            }
            SigmaKind::FoldRegularY { visible } => {
                prop_assert!(yf.abs() <= tol);
                let y2f = lie_derivative(&sys.y, &sys.f, &p, 2).unwrap();
                prop_assert_eq!(visible, y2f < -tol);
            }
            SigmaKind::Degenerate | SigmaKind::RegularRegular => {}
        }
    }

    #[test]
    fn exact_jacobians_match_differences(which in 0usize..5, x in -0.3f64..0.3, y in -0.3f64..0.3, z in -0.3f64..0.3) {
        let sys = &systems()[which];
        let p = Vec3::new(x, y, z);
        for field in [&sys.x, &sys.y] {
            let exact = field.jacobian(&p);
            let fd = field.fd_jacobian(&p);
            let scale = 1.0 + exact.amax();
            prop_assert!((exact - fd).amax() < 1e-6 * scale, "{} vs {}", exact, fd);
        }
    }

    #[test]
    fn combined_field_is_x_above_and_y_below(which in 0usize..5, x in -0.3f64..0.3, y in -0.3f64..0.3, z in 1e-3f64..0.3) {
        let sys = &systems()[which];
        let up = Vec3::new(x, y, z);
        let down = Vec3::new(x, y, -z);
        prop_assert!((sys.z_field(&up) - sys.x.eval(&up)).norm() < 1e-14);
        prop_assert!((sys.z_field(&down) - sys.y.eval(&down)).norm() < 1e-14);
    }
}
