#![allow(dead_code)]

pub mod reference;

use std::f64::consts::PI;

use freebound::model::{FixedEnd, InitialData, ModelParams, NonlinearitySpec};
use freebound::stefan::Controls;

/// H = G = 2z/(1+z): H'(0) = G'(0) = 2, (u*, v*) = (1, 1), l0 = π (Dirichlet).
pub fn symmetric() -> NonlinearitySpec {
    NonlinearitySpec::monod(2.0, 1.0, 2.0, 1.0)
}

/// H = 2z/(1+z), G = 3z/(1+z): (u*, v*) = (1.25, 5/3).
pub fn benchmark() -> NonlinearitySpec {
    NonlinearitySpec::monod(2.0, 1.0, 3.0, 1.0)
}

/// H'(0)G'(0) = 0.5 with a = b = 1.
pub fn subcritical() -> NonlinearitySpec {
    NonlinearitySpec::monod(1.0, 1.0, 0.5, 1.0)
}

pub fn unit_params(fixed_end: FixedEnd, h0: f64, mu: f64) -> ModelParams {
    ModelParams {
        d1: 1.0,
        d2: 1.0,
        a: 1.0,
        b: 1.0,
        mu1: mu,
        mu2: mu,
        h0,
        fixed_end,
    }
}

pub fn bump(params: &ModelParams, amp: f64) -> InitialData {
    InitialData::bump(params.fixed_end, params.h0, amp, amp, 513)
}

pub fn controls(n: usize, dt: f64, t_max: f64, output_dt: f64) -> Controls {
    Controls {
        n,
        dt,
        t_max,
        output_dt,
    }
}

pub const HALF_PI: f64 = 0.5 * PI;
