mod common;

use common::*;
use freebound::elliptic::operational_ceilings;
use freebound::model::FixedEnd;
use freebound::stefan::{simulate, SimState, Stepper};
use proptest::prelude::*;

fn fixed_end() -> impl Strategy<Value = FixedEnd> {
    prop_oneof![Just(FixedEnd::Dirichlet), Just(FixedEnd::Neumann)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn positivity_ceilings_and_monotone_front(
        fe in fixed_end(),
        h0 in 0.5f64..4.0,
        mu1 in 0.0f64..3.0,
        mu2 in 0.0f64..3.0,
        tau in 0.05f64..3.0,
    ) {
        let nl = benchmark();
        let mut p = unit_params(fe, h0, 0.0);
        p.mu1 = mu1;
        p.mu2 = mu2;
        let init = bump(&p, 0.5).with_tau(tau);
        let run = simulate(&p, &nl, &init, &controls(64, 2e-3, 5.0, 0.25)).unwrap();
        let c = run.ceilings;
        prop_assert_eq!(run.ceiling_exceedances, 0);
        prop_assert!(run.final_state.u.iter().chain(&run.final_state.v).all(|&w| w >= 0.0));
        for w in run.timeline.records.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!(w[1].h >= w[0].h);
        }
        for r in &run.timeline.records {
            prop_assert!(r.h_prime >= -1e-12);
            prop_assert!(r.sup_u <= c.k1 * (1.0 + 1e-9) && r.sup_v <= c.k2 * (1.0 + 1e-9));
        }
        let n = run.final_state.n();
        prop_assert_eq!(run.final_state.u[n], 0.0);
        prop_assert_eq!(run.final_state.v[n], 0.0);
        if fe == FixedEnd::Dirichlet {
            prop_assert_eq!(run.final_state.u[0], 0.0);
        }
    }

    #[test]
    fn larger_initial_data_pushes_further(tau in 0.2f64..2.0, factor in 1.05f64..2.0) {
        let nl = symmetric();
        let p = unit_params(FixedEnd::Dirichlet, 2.0, 1.0);
        let small = bump(&p, 0.5).with_tau(tau);
        let large = bump(&p, 0.5).with_tau(tau * factor);
        let ctl = controls(64, 2e-3, 5.0, 0.5);
        let a = simulate(&p, &nl, &small, &ctl).unwrap();
        let b = simulate(&p, &nl, &large, &ctl).unwrap();
        for (ra, rb) in a.timeline.records.iter().zip(&b.timeline.records) {
            prop_assert!(rb.h >= ra.h - 1e-8);
        }
    }
}

#[test]
fn second_order_in_space() {
    let nl = symmetric();
    let p = unit_params(FixedEnd::Dirichlet, 2.5, 1.0);
    let init = bump(&p, 0.8);
    let run = |n: usize| simulate(&p, &nl, &init, &controls(n, 1e-3, 1.0, 1.0)).unwrap().final_state;
    let (s1, s2, s3) = (run(128), run(256), run(512));
    let diff = |a: &SimState, b: &SimState| {
        (0..=a.n())
            .map(|j| (a.u[j] - b.u[2 * j]).abs())
            .fold(0.0_f64, f64::max)
    };
    let (e1, e2) = (diff(&s1, &s2), diff(&s2, &s3));
    let ratio = e1 / e2;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} ({e1:e} / {e2:e})");
}

#[test]
fn subcritical_flux_balance() {
    // d/dt ∫(u + k v) ≤ d1 u_x(h) + k d2 v_x(h) with k = H'(0)/b, up to discretisation error
    let nl = subcritical();
    let p = unit_params(FixedEnd::Dirichlet, 2.0, 1.0);
    let init = bump(&p, 0.5);
    let n = 256;
    let k = nl.h_prime0() / p.b;
    let ceilings = operational_ceilings(&nl, &p, &init).unwrap();
    let mut stepper = Stepper::new(&p, &nl, ceilings, n);
    let mut state = SimState::initial(&p, &init, n);
    let dt = 1e-3;
    let mass = |s: &SimState| s.mass_u() + k * s.mass_v();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..5000 {
        let before = mass(&state);
        let flux_old = p.d1 * stepper.boundary_gradient(&state.u, state.h)
            + k * p.d2 * stepper.boundary_gradient(&state.v, state.h);
        stepper.step(&mut state, dt).unwrap();
        let flux_new = p.d1 * stepper.boundary_gradient(&state.u, state.h)
            + k * p.d2 * stepper.boundary_gradient(&state.v, state.h);
        let rate = (mass(&state) - before) / dt;
        let scale = before.max(1e-300);
        worst = worst.max((rate - flux_old.max(flux_new)) / scale);
    }
    let dy = 1.0 / n as f64;
    assert!(worst <= 10.0 * (dy * dy + dt), "relative excess {worst:e}");
}

#[test]
fn neumann_end_has_zero_slope() {
    let nl = benchmark();
    let p = unit_params(FixedEnd::Neumann, 3.0, 1.0);
    let run = simulate(&p, &nl, &bump(&p, 0.5), &controls(256, 1e-3, 10.0, 1.0)).unwrap();
    let s = &run.final_state;
    let dy = 1.0 / s.n() as f64;
    let slope = (-3.0 * s.u[0] + 4.0 * s.u[1] - s.u[2]) / (2.0 * dy * s.h);
    assert!(slope.abs() < 1e-3, "u_x(0) = {slope:e}");
}
