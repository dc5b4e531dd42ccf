mod common;

use std::f64::consts::PI;

use common::*;
use freebound::elliptic::{semi_infinite_profile, SteadyKind, SteadySolver};
use freebound::model::FixedEnd;

#[test]
fn semi_infinite_profile_shape() {
    let nl = symmetric();
    let p = unit_params(FixedEnd::Dirichlet, 1.0, 1.0);
    let prof = semi_infinite_profile(&p, &nl, 20.0 * PI, 2000).unwrap();
    assert_eq!(prof.kind, SteadyKind::SemiInfinite);
    assert_eq!(prof.u[0], 0.0);
    assert_eq!(prof.v[0], 0.0);
    assert!(prof.u.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(prof.v.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let last = prof.u.len() - 1;
    // (u*, v*) = (1, 1) for this set
    assert!((prof.u[last] - 1.0).abs() < 5e-2 && (prof.v[last] - 1.0).abs() < 5e-2);
    assert!(prof.convergence_estimate.unwrap() < 5e-2);
    assert!((prof.l - 10.0 * PI).abs() < 1e-12);
}

#[test]
fn sandwich_between_homogeneous_and_elevated() {
    let nl = benchmark();
    let p = unit_params(FixedEnd::Dirichlet, 1.0, 1.0);
    let l_big = 30.0;
    let semi = semi_infinite_profile(&p, &nl, l_big, 1500).unwrap();
    let solver = SteadySolver::new(&p, &nl).grid(1500);
    for l in [0.5 * l_big, l_big] {
        let homog = solver.solve(l, SteadyKind::Homogeneous).unwrap();
        let elev = solver.solve(l, SteadyKind::Elevated).unwrap();
        for k in 0..=200 {
            let x = 0.5 * l * k as f64 / 200.0;
            let (hu, hv) = homog.sample(x);
            let (su, sv) = semi.sample(x);
            let (eu, ev) = elev.sample(x);
            assert!(hu <= su + 1e-4 && hv <= sv + 1e-4, "l={l} x={x}: homogeneous above");
            assert!(su <= eu + 1e-4 && sv <= ev + 1e-4, "l={l} x={x}: elevated below");
        }
    }
}

#[test]
fn neumann_profile_refines_at_second_order() {
    let nl = benchmark();
    let p = unit_params(FixedEnd::Neumann, 1.0, 1.0);
    let solve = |n| SteadySolver::new(&p, &nl).grid(n).solve(4.0, SteadyKind::Homogeneous).unwrap();
    let (a, b, c) = (solve(200), solve(400), solve(800));
    let gap = |x: &freebound::elliptic::SteadyProfile, y: &freebound::elliptic::SteadyProfile| {
        (0..x.u.len()).map(|i| (x.u[i] - y.u[2 * i]).abs()).fold(0.0_f64, f64::max)
    };
    let ratio = gap(&a, &b) / gap(&b, &c);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    assert!(a.u[0] > 0.0 && a.v[0] > 0.0);
    assert!(a.u.iter().all(|&u| u < 1.25) && a.v.iter().all(|&v| v < 5.0 / 3.0));
}
