use fsim_core::analysis::{
    basin_curve, basin_of, classes_of, classify_configuration, fixed_point_1d, invariant_manifold, iterate_fold_line,
    iterate_of, loop_certificate, manifold_of, modulus, modulus_of, Configuration, FoldIterationOptions, LoopClass,
    LoopType, ManifoldKind, Stability1d,
};
use fsim_core::geometry::{classify_sigma_point, SigmaKind};
use fsim_core::integrator::{flow_to_section, Direction, OdeOptions};
use fsim_core::maps::{first_return_map, fold_line_map, FilippovReturn, PlanarReturn, ReturnDynamics};
use fsim_core::numeric::{line_angle, richardson_derivative};
use fsim_core::scenarios::{load_system, PlanarMap};
use fsim_core::{Error, Pt2, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sys(spec: &str) -> fsim_core::geometry::FilippovSystem {
    load_system(spec).unwrap()
}

fn model(e1: &str, e2: &str) -> PlanarReturn {
    PlanarReturn::new(PlanarMap::parse(e1, e2, &[]).unwrap())
}

const LOOPS: [&str; 5] =
    ["builtin:exa43", "builtin:exa43?alpha=0.5", "builtin:exa43?alpha=3&beta=-0.5", "builtin:exa44", "builtin:mobius"];

#[test]
fn unfolding_certificate_at_the_loop() {
    let c = loop_certificate(&sys("builtin:exa44?gamma=0"), &Pt2::zeros(), 1e-6).unwrap();
    assert!(c.zeta.abs() < 1e-6);
    assert!(c.is_loop);
    assert_eq!(c.klass, LoopClass::Cyl);
    assert_eq!(c.typ, LoopType::S);
    assert!((c.alpha - 2.0).abs() < 1e-3);
    let json = serde_json::to_value(&c).unwrap();
    assert_eq!(json["klass"], "Cyl");
    assert_eq!(json["typ"], "S");
}

#[test]
fn unfolding_certificate_away_from_the_loop() {
    let c = loop_certificate(&sys("builtin:exa44?gamma=0.02"), &Pt2::zeros(), 1e-6).unwrap();
    assert!(c.zeta.abs() > 1e-4, "{}", c.zeta);
    assert!(!c.is_loop);
}

#[test]
fn weak_loop_is_node_type() {
    let c = loop_certificate(&sys("builtin:exa43?alpha=0.5&beta=1"), &Pt2::zeros(), 1e-6).unwrap();
    assert!(c.is_loop);
    assert_eq!(c.klass, LoopClass::Cyl);
    assert_eq!(c.typ, LoopType::N);
}

#[test]
fn certificate_classes_follow_alpha() {
    for spec in LOOPS {
        let c = loop_certificate(&sys(spec), &Pt2::zeros(), 1e-6).unwrap();
        assert!(c.is_loop, "{spec}");
        assert_eq!(c.klass == LoopClass::Cyl, c.coeffs.alpha > 0.0, "{spec}");
        assert_eq!(c.typ == LoopType::S, c.coeffs.alpha.abs() > 1.0, "{spec}");
        let t = &c.transversality;
        assert!(t.zeta_fold_angle > 1e-4 && t.sliding_zeta_angle > 1e-4 && t.psi_margin > 1e-4, "{spec}: {t:?}");
    }
}

#[test]
fn tangent_image_is_not_quasi_generic() {
    match loop_certificate(&sys("builtin:tangent"), &Pt2::zeros(), 1e-6) {
        Err(Error::NotQuasiGeneric { check }) => assert_eq!(check, "zeta-fold transversality"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn configurations() {
    assert_eq!(classify_configuration(&sys("builtin:exa43")).unwrap(), Configuration::C);
    assert_eq!(classify_configuration(&sys("builtin:exa44?gamma=-0.2")).unwrap(), Configuration::A);
    assert_eq!(classify_configuration(&sys("builtin:exa44?gamma=0.2")).unwrap(), Configuration::B);
    assert_eq!(classify_configuration(&sys("builtin:tangent")).unwrap(), Configuration::D);
}

#[test]
fn scalar_fixed_points() {
    let affine = |x: f64| Ok(0.5 * x + 0.1);
    let fp = fixed_point_1d(&affine, 0.0).unwrap();
    assert!((fp.x - 0.2).abs() < 1e-12);
    assert!((fp.derivative - 0.5).abs() < 1e-9);
    assert_eq!(fp.stability, Stability1d::Attracting);

    let fp = fixed_point_1d(&|x: f64| Ok(3.0 * x - 0.4), 0.0).unwrap();
    assert!((fp.x - 0.2).abs() < 1e-12);
    assert_eq!(fp.stability, Stability1d::Repelling);

    let tangent = |x: f64| Ok(x + x * x);
    let fp = fixed_point_1d(&tangent, 0.01).unwrap();
    assert!(fp.x.abs() < 1e-4);
    assert_eq!(fp.stability, Stability1d::SaddleNodeFlag);

    assert!(matches!(fixed_point_1d(&|x: f64| Ok(x + 1.0), 0.0), Err(Error::NoFixedPoint(_))));
}

#[test]
fn fold_line_map_fixed_point_is_the_loop() {
    let s = sys("builtin:exa43");
    let psi = |x: f64| fold_line_map(&s, x).map(|r| r.0);
    let fp = fixed_point_1d(&psi, 0.01).unwrap();
    assert!(fp.x.abs() < 1e-8);
    assert!((fp.derivative.abs() - 2.0).abs() < 1e-3);
    assert_eq!(fp.stability, Stability1d::Repelling);
}

#[test]
fn unstable_manifold_leaves_along_the_alpha_direction() {
    let wu = invariant_manifold(&sys("builtin:exa44?gamma=0"), ManifoldKind::WuAlpha, 0.2).unwrap();
    assert_eq!(wu.tag, "wu");
    let i0 = (0..wu.len()).min_by(|&a, &b| wu.point(a).norm().total_cmp(&wu.point(b).norm())).unwrap();
    assert!(wu.point(i0).norm() < 1e-9);
    // Secant through the nearest neighbours on both sides.
    let t = wu.point(i0 + 1) - wu.point(i0 - 1);
    assert!(line_angle(&t, &Pt2::new(2.0, 1.0)) < 1e-3, "{t}");
}

#[test]
fn unstable_manifold_is_invariant() {
    let tol = Tolerances { max_seg: 1e-3, ..Tolerances::default() };
    let s = sys("builtin:exa44?gamma=0").with_tolerances(tol);
    let wu = invariant_manifold(&s, ManifoldKind::WuAlpha, 0.2).unwrap();
    let inner: Vec<Pt2> = wu.iter().filter(|p| p.norm() < 0.04 && p.norm() > 1e-3).collect();
    assert!(inner.len() >= 50);
    let step = inner.len() / 50;
    for q in inner.iter().step_by(step).take(50) {
        let image = first_return_map(&s, q).unwrap();
        let d = wu.distance_to(&image);
        assert!(d < 1e-6, "{q} -> {image}: {d}");
    }
}

#[test]
fn model_strong_stable_manifold_is_the_y_axis() {
    let ws0 = manifold_of(&model("2*x", "x + y^2"), ManifoldKind::Ws0, 0.2).unwrap();
    assert_eq!(ws0.tag, "ws0");
    let (lo, hi) = ws0.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
    assert!(lo <= -0.1 + 1e-9 && hi >= 0.1 - 1e-9, "[{lo}, {hi}]");
    assert!(ws0.iter().all(|p| p.x.abs() < 1e-6));
}

#[test]
fn manifold_kinds_need_the_right_loop_type() {
    let weak = sys("builtin:exa43?alpha=0.5");
    assert!(matches!(invariant_manifold(&weak, ManifoldKind::WuAlpha, 0.1), Err(Error::WrongType(_))));
    let ws = invariant_manifold(&weak, ManifoldKind::WsAlpha, 0.1).unwrap();
    assert!(ws.len() > 5);
    let strong = sys("builtin:exa44");
    assert!(matches!(invariant_manifold(&strong, ManifoldKind::WsAlpha, 0.1), Err(Error::WrongType(_))));
    assert!(matches!(iterate_fold_line(&weak, &FoldIterationOptions::new(2)), Err(Error::WrongType(_))));
    assert!(matches!(basin_curve(&weak, 0.1), Err(Error::WrongType(_))));
}

#[test]
fn weak_stable_manifold_is_invariant() {
    let s = sys("builtin:exa43?alpha=0.5");
    let ws = invariant_manifold(&s, ManifoldKind::WsAlpha, 0.1).unwrap();
    for q in ws.iter().filter(|p| p.norm() > 1e-3).step_by(3) {
        let image = first_return_map(&s, &q).unwrap();
        assert!(ws.distance_to(&image) < 1e-5, "{q} -> {image}");
    }
}

#[test]
fn model_fold_line_iteration() {
    let report = iterate_of(&model("2*x", "-x + y^2"), &FoldIterationOptions::new(6)).unwrap();
    assert_eq!(report.curves.len(), 7);
    assert!(report.order_crossing);
    assert!(report.flip_sliding);
    assert!(!report.mirrored);
    for n in 2..=6 {
        assert!(report.tangent_angles[n] < 1e-2);
    }
    let d = &report.dist_to_wu;
    assert!(d.windows(2).skip(3).all(|w| w[1] < w[0]), "{d:?}");
    assert!(*d.last().unwrap() < 1e-3);
}

#[test]
fn unfolding_fold_line_iteration() {
    let opts = FoldIterationOptions { radius: 0.05, clip: 0.1, ..FoldIterationOptions::new(4) };
    let report = iterate_fold_line(&sys("builtin:exa44?gamma=0"), &opts).unwrap();
    assert!(report.mirrored);
    assert!(report.order_crossing && report.flip_sliding, "{report:?}");
    assert!(report.tangent_angles[4] < 1e-2);
    assert!(report.dist_to_wu[4] < report.dist_to_wu[1]);
}

#[test]
fn basin_components() {
    let s = sys("builtin:exa44?gamma=0");
    let r = FilippovReturn::new(&s).unwrap();
    let beta = basin_of(&r, 0.2).unwrap();
    assert_eq!(beta.tag, "beta");
    let classes = classes_of(&r, &beta);
    let i0 = (0..beta.len()).min_by(|&a, &b| beta.point(a).norm().total_cmp(&beta.point(b).norm())).unwrap();
    let far = |i: usize| beta.point(i).norm() > 1e-3;
    let before: Vec<&String> = (0..i0).filter(|&i| far(i)).map(|i| &classes[i]).collect();
    let after: Vec<&String> = (i0 + 1..beta.len()).filter(|&i| far(i)).map(|i| &classes[i]).collect();
    assert!(!before.is_empty() && !after.is_empty());
    assert!(before.iter().all(|c| *c == "StableSliding"), "{before:?}");
    assert!(after.iter().all(|c| *c == "Crossing"), "{after:?}");
}

#[test]
fn points_off_the_basin_escape() {
    let s = sys("builtin:exa44?gamma=0");
    let mut p = Pt2::new(1e-2, 0.05);
    let mut ratios = Vec::new();
    for _ in 0..12 {
        match first_return_map(&s, &p) {
            Ok(q) if q.norm() < 0.3 => {
                ratios.push(q.x / p.x);
                p = q;
            }
            _ => {
                p = Pt2::repeat(f64::INFINITY);
                break;
            }
        }
    }
    assert!(!p.norm().is_finite() || p.norm() >= 0.3, "{p}");
    assert!((ratios[1] - 2.0).abs() < 0.2, "{ratios:?}");
}

#[test]
fn modulus_is_alpha() {
    assert!((modulus(&sys("builtin:exa44?gamma=0")).unwrap() - 2.0).abs() < 1e-3);
    assert!((modulus(&sys("builtin:exa43?alpha=0.5&beta=1")).unwrap() - 0.5).abs() < 1e-3);
    for spec in LOOPS {
        let m = modulus_of(&FilippovReturn::new(&sys(spec)).unwrap()).unwrap();
        assert!(m.discrepancy < 1e-3, "{spec}: {m:?}");
        assert!((m.modulus - m.alpha).abs() < 1e-3);
    }
}

#[test]
fn loop_classes_match_fold_line_behaviour() {
    for spec in LOOPS {
        let s = sys(spec);
        let c = loop_certificate(&s, &Pt2::zeros(), 1e-6).unwrap();
        let h = 1e-3;
        let preserved = [h, -h].iter().all(|&x| fold_line_map(&s, x).unwrap().0.signum() == x.signum());
        assert_eq!(preserved, c.klass == LoopClass::Cyl, "{spec}");
        let slope = richardson_derivative(|x| fold_line_map(&s, x).unwrap().0, 0.0, h);
        assert_eq!(slope.abs() > 1.0, c.typ == LoopType::S, "{spec}");
    }
}

/// Return dynamics as a trajectory sees it: sliding points first slide to
/// the fold.
fn realized_return(r: &FilippovReturn, p: &Pt2) -> Pt2 {
    let p = if r.region(p) == SigmaKind::StableSliding { Pt2::new(r.slide_to_fold(p).unwrap().0, 0.0) } else { *p };
    let q = r.apply(&p).unwrap();
    if r.region(&q) == SigmaKind::StableSliding {
        Pt2::new(r.slide_to_fold(&q).unwrap().0, 0.0)
    } else {
        q
    }
}

#[test]
fn node_loop_attracts_nearby_starts() {
    let s = sys("builtin:exa43?alpha=0.5&beta=1");
    let r = FilippovReturn::new(&s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let (rad, th): (f64, f64) = (rng.gen_range(0.0..5e-3), rng.gen_range(0.0..std::f64::consts::TAU));
        let mut p = Pt2::new(rad * th.cos(), rad * th.sin());
        let mut reached = false;
        for _ in 0..50 {
            p = realized_return(&r, &p);
            if p.norm() < 1e-6 {
                reached = true;
                break;
            }
        }
        assert!(reached, "{p}");
    }
}

#[test]
fn loops_satisfy_the_global_hypothesis() {
    let opts = OdeOptions::default();
    for spec in LOOPS {
        let s = sys(spec);
        let c = loop_certificate(&s, &Pt2::zeros(), 1e-6).unwrap();
        let p0 = s.lift(&Pt2::new(c.fixed_point[0], c.fixed_point[1]));
        let (hit, _) = flow_to_section(&s.x, &p0, &s.f, Direction::Forward, 20.0, &opts).unwrap();
        assert!(s.xf(&hit).abs() > s.tol.classify, "{spec}");
        let k = classify_sigma_point(&s, &hit, s.tol.classify).unwrap();
        assert_eq!(k.kind, SigmaKind::Crossing, "{spec}");
        let (back, _) = flow_to_section(&s.y, &hit, &s.f, Direction::Forward, 20.0, &opts).unwrap();
        assert!((back - p0).norm() < 1e-6, "{spec}: {back}");
    }
}

#[test]
fn real_fold_line_orbits_stay_real() {
    let s = sys("builtin:exa43?alpha=0.5&beta=1");
    let side = if fold_line_map(&s, -0.02).unwrap().1 { -1.0 } else { 1.0 };
    assert!(!fold_line_map(&s, -side * 0.02).unwrap().1);
    let mut x = side * 0.05;
    for _ in 0..10 {
        let (next, real) = fold_line_map(&s, x).unwrap();
        assert!(real, "{x}");
        assert_eq!(next.signum(), side);
        x = next;
    }
    assert!(x.abs() < 0.05 * 0.6f64.powi(10));
}

#[test]
fn sliding_part_of_the_basin_reaches_the_fold_point() {
    let s = sys("builtin:exa44?gamma=0");
    let r = FilippovReturn::new(&s).unwrap();
    let beta = basin_curve(&s, 0.2).unwrap();
    for q in beta.iter().filter(|q| q.y < -1e-2).step_by(4) {
        let (x, real) = r.slide_to_fold(&q).unwrap();
        assert!(real);
        assert!(x.abs() < 1e-6, "{q} -> {x}");
    }
}
