#![allow(dead_code)]

use optomech::{Convention, StateVector, SystemParams};
use rand::Rng;

pub fn operating_point(delta: f64, jm: f64, alpha_in: f64) -> SystemParams {
    SystemParams {
        delta,
        jm,
        alpha_in,
        ..SystemParams::default()
    }
}

pub fn random_state<R: Rng>(rng: &mut R, scale: f64) -> StateVector {
    StateVector(std::array::from_fn(|_| rng.gen_range(-scale..scale)))
}

/// Parameters spread over the explored region.
pub fn random_params<R: Rng>(rng: &mut R, convention: Convention) -> SystemParams {
    SystemParams {
        kappa: rng.gen_range(0.01..0.2),
        delta: rng.gen_range(-3.0..3.0),
        jm: rng.gen_range(0.0..0.6),
        theta: rng.gen_range(0.0..std::f64::consts::TAU),
        alpha_in: rng.gen_range(0.0..1.5e4),
        convention,
        ..SystemParams::default()
    }
}

/// Central finite-difference Jacobian with per-component steps.
pub fn fd_jacobian(state: &StateVector, params: &SystemParams) -> [[f64; 6]; 6] {
    let mut out = [[0.0; 6]; 6];
    for c in 0..6 {
        let h = 1e-4 * state.0[c].abs().max(1.0);
        let mut up = *state;
        let mut dn = *state;
        up.0[c] += h;
        dn.0[c] -= h;
        let fu = optomech::model::rhs(&up, params).unwrap();
        let fd = optomech::model::rhs(&dn, params).unwrap();
        for r in 0..6 {
            out[r][c] = (fu.0[r] - fd.0[r]) / (2.0 * h);
        }
    }
    out
}

/// Relative max-norm gap between an analytic and a finite-difference Jacobian.
pub fn jacobian_gap(state: &StateVector, params: &SystemParams) -> f64 {
    let j = optomech::model::jacobian(state, params).unwrap();
    let fd = fd_jacobian(state, params);
    let mut worst = 0.0_f64;
    let mut scale = 1.0_f64;
    for r in 0..6 {
        for c in 0..6 {
            worst = worst.max((j[(r, c)] - fd[r][c]).abs());
            scale = scale.max(j[(r, c)].abs());
        }
    }
    worst / scale
}

/// Max-norm gap between the real-form and the complex-form right-hand side,
/// relative to the larger of 1 and the derivative magnitude.
pub fn complex_gap(state: &StateVector, params: &SystemParams) -> f64 {
    let f = optomech::model::rhs(state, params).unwrap();
    let (a, b1, b2) = state.to_complex();
    let (da, db1, db2) = optomech::model::rhs_complex(a, b1, b2, params).unwrap();
    let g = [da.re, da.im, db1.re, db1.im, db2.re, db2.im];
    let scale = f.max_abs().max(1.0);
    (0..6).map(|i| (f.0[i] - g[i]).abs()).fold(0.0, f64::max) / scale
}

/// 1 ↔ 2 relabelling of the mechanical modes.
pub fn swap_mechanics(s: &StateVector) -> StateVector {
    let y = s.0;
    StateVector([y[0], y[1], y[4], y[5], y[2], y[3]])
}

/// Global RK4 error at `t_end` for step `dt`, measured against a reference run.
pub fn rk4_error(params: &SystemParams, s0: &StateVector, t_end: f64, dt: f64, reference: &StateVector) -> f64 {
    let mut s = *s0;
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        s = optomech::integrator::rk4_step(&s, dt, params).unwrap();
    }
    (0..6).map(|i| (s.0[i] - reference.0[i]).abs()).fold(0.0, f64::max)
}

pub fn rk4_run(params: &SystemParams, s0: &StateVector, t_end: f64, dt: f64) -> StateVector {
    let mut s = *s0;
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        s = optomech::integrator::rk4_step(&s, dt, params).unwrap();
    }
    s
}
