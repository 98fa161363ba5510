//! Equilibria of the six real equations.
//!
//! Two routes are provided. The closed forms ([`alpha_quadratic_coeffs`],
//! [`solve_alpha`], [`beta_steady`]) are transcribed literally and are used
//! only as seeds and cross-checks. [`find_fixed_points`] is authoritative: it
//! reduces the equilibrium conditions to one scalar equation in the effective
//! detuning, brackets its roots on a deterministic lattice, and polishes every
//! candidate with damped Newton iteration on the full six-dimensional residual.

use nalgebra::{Matrix4, Vector4, Vector6};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{field, field_jacobian, term_scale, Convention, StateVector, SystemParams};

/// Converged fixed points have a scaled residual at or below this value.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Component-wise relative tolerance under which two roots are the same.
pub const DEDUP_TOL: f64 = 1e-6;

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_MAX_HALVINGS: usize = 40;
const NEWTON_TARGET: f64 = 1e-14;
const DENOMINATOR_EPS: f64 = 1e-14;

/// Coefficients of `a0 α_i² + a1 α_i + a2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QuadraticCoeffs {
    pub fn discriminant(&self) -> f64 {
        self.a1 * self.a1 - 4.0 * self.a0 * self.a2
    }
}

/// The printed closed-form coefficients, term for term. Repeated and
/// sign-cancelling terms in `a2` are kept as printed.
pub fn alpha_quadratic_coeffs(params: &SystemParams) -> Result<QuadraticCoeffs> {
    params.validate()?;
    let SystemParams {
        omega1: w1,
        omega2: w2,
        kappa: k,
        delta: d,
        g1,
        g2,
        gamma1: y1,
        gamma2: y2,
        jm: j,
        alpha_in: a,
        ..
    } = *params;
    let (cos_t, _) = params.phase();
    let a_sq = a * a;

    let a0 = 32.0
        * a_sq
        * k
        * (cos_t * g1 * g2 * j * (8.0 * j * j + 2.0 * y1 * y2 - 8.0 * w1 * w2)
            - 4.0 * j * j * g1 * g1 * w2
            - 4.0 * j * j * g2 * g2 * w1
            + g1 * g1 * y2 * y2 * w1
            + 4.0 * g1 * g1 * w1 * w2 * w2
            + g2 * g2 * y1 * y1 * w2
            + 4.0 * g2 * g2 * w1 * w1 * w2);

    let a1 = -k.powf(2.5)
        * (16.0 * j * j + 8.0 * j * j * y1 * y2 - 32.0 * j * j * w1 * w2
            + y1 * y1 * y2 * y2
            + 4.0 * y1 * y1 * w2 * w2
            + 4.0 * y2 * y2 * w1 * w1
            + 16.0 * w1 * w1 * w2 * w2);

    let bracket = 256.0 * j.powi(3) * cos_t * g1 * g2 * y1
        + 64.0 * j * cos_t * g1 * g2 * y1 * y2 * k
        + 8.0 * d * j * j * y1 * y2 * k
        - 32.0 * d * j * j * w1 * w2 * k
        + d * y1 * y1 * y2 * y2 * k
        - 256.0 * j * cos_t * g1 * g2 * w1 * w2 * k
        - 128.0 * j * j * g1 * g1 * w2 * k
        + 128.0 * g2 * g2 * w2 * w1 * w1 * a_sq
        - 128.0 * j * j * g2 * g2 * w1 * k
        + 16.0 * d * j.powi(4) * k
        - 8.0 * d * j * j * y1 * y2 * k
        + 32.0 * d * g1 * g1 * w1 * w2 * w2 * a_sq
        + 32.0 * g2 * g2 * y1 * y1 * w2 * a_sq
        - 32.0 * d * j * j * w1 * w2 * k
        + d * y1 * y1 * y2 * y2 * k
        + 4.0 * d * y1 * y1 * w2 * w2 * k
        + 4.0 * d * w1 * w1 * y2 * y2 * k
        + 16.0 * d * w1 * w1 * w2 * w2 * k;
    let a2 = 4.0 * a_sq * bracket;

    Ok(QuadraticCoeffs { a0, a1, a2 })
}

/// Real roots of `a x² + b x + c`, in ascending order, using the
/// cancellation-free form `q = -(b + sign(b)√disc)/2`.
pub(crate) fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        // b == 0 and c == 0
        return vec![0.0];
    }
    let mut roots = vec![q / a, c / q];
    roots.sort_by(f64::total_cmp);
    roots
}

/// Closed-form optical candidates `(α_r, α_i)` with `α_r = 2α_in/√κ`.
pub fn solve_alpha(params: &SystemParams) -> Result<Vec<(f64, f64)>> {
    let q = alpha_quadratic_coeffs(params)?;
    let alpha_r = 2.0 * params.alpha_in / params.kappa.sqrt();
    Ok(real_quadratic_roots(q.a0, q.a1, q.a2)
        .into_iter()
        .map(|ai| (alpha_r, ai))
        .collect())
}

/// Closed-form mechanical amplitudes for a given `|α|²`.
pub fn beta_steady(alpha_sq: f64, params: &SystemParams) -> Result<(Complex64, Complex64)> {
    params.validate()?;
    if !(alpha_sq >= 0.0) || !alpha_sq.is_finite() {
        return Err(Error::InvalidParams("alpha_sq must be finite and >= 0".into()));
    }
    let SystemParams {
        omega1: w1,
        omega2: w2,
        g1,
        g2,
        gamma1: y1,
        gamma2: y2,
        jm: j,
        ..
    } = *params;
    let i = Complex64::i();
    let (c, s) = params.phase();
    let e_plus = Complex64::new(c, s);
    let den = 4.0 * j * j - 4.0 * w1 * w2 + 2.0 * i * (y1 * w2 + y2 * w1) + y1 * y2;
    if den.norm() < DENOMINATOR_EPS {
        return Err(Error::SingularDenominator(den.norm()));
    }
    let b1 = -2.0 * (2.0 * g2 * j * e_plus + i * g1 * y2 - 2.0 * g1 * w2) * alpha_sq / den;
    let b2 = -2.0 * (2.0 * g1 * j * e_plus.conj() + i * g2 * y1 - 2.0 * g2 * w1) * alpha_sq / den;
    Ok((b1, b2))
}

/// How a fixed point was first reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootSource {
    ClosedForm,
    NewtonRefined,
    Multistart,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub state: StateVector,
    /// `max|rhs| / max(1, largest term magnitude)`.
    pub residual_norm: f64,
    /// Unscaled `max|rhs|`.
    pub raw_residual: f64,
    pub eigenvalues: Vec<Complex64>,
    pub stable: bool,
    pub source: RootSource,
}

impl FixedPoint {
    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn optical_amplitude(&self) -> f64 {
        self.state.photon_number().sqrt()
    }
}

/// A closed-form candidate that did not match the refined root it led to.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormDiscrepancy {
    pub candidate: StateVector,
    /// Refined root, if Newton converged from the candidate.
    pub refined: Option<StateVector>,
    /// Max-norm distance relative to the larger state.
    pub relative_distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FixedPointSearch {
    /// Deduplicated roots ordered by `|α|` ascending.
    pub points: Vec<FixedPoint>,
    /// Set when no seed converged.
    pub all_seeds_failed: bool,
    pub discrepancies: Vec<ClosedFormDiscrepancy>,
}

/// Settings for the lattice that seeds Newton.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchSettings {
    /// Lattice points spanning effective detunings `±[1e-8, 1e8]`.
    pub lattice_seeds: usize,
    /// Sub-samples per lattice cell used to bracket sign changes.
    pub subdivisions: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            lattice_seeds: 64,
            subdivisions: 16,
        }
    }
}

pub(crate) fn scaled_residual(y: &[f64; 6], p: &SystemParams) -> (f64, f64) {
    let f = field(y, p, p.phase());
    let raw = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    (raw / term_scale(y, p).max(1.0), raw)
}

/// Damped Newton on `rhs = 0`. Returns the converged state or `None`.
pub(crate) fn newton(seed: &StateVector, p: &SystemParams) -> Option<StateVector> {
    let phase = p.phase();
    let mut x = seed.0;
    let mut res = scaled_residual(&x, p).0;
    if !res.is_finite() {
        return None;
    }
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TARGET {
            break;
        }
        let f = Vector6::from_column_slice(&field(&x, p, phase));
        let jac = field_jacobian(&x, p, phase);
        let step = jac.lu().solve(&f)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let mut trial = x;
            for (xi, si) in trial.iter_mut().zip(step.iter()) {
                *xi -= t * si;
            }
            let r = scaled_residual(&trial, p).0;
            if r.is_finite() && r < res {
                x = trial;
                res = r;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (res <= RESIDUAL_TOL).then_some(StateVector(x))
}

/// Optical steady state consistent with an effective detuning `d`.
fn optical_for_detuning(d: f64, p: &SystemParams) -> (f64, f64) {
    let k = p.kappa;
    let drive = k.sqrt() * p.alpha_in;
    let ar = match p.convention {
        Convention::Rederived => drive / (0.5 * k + 2.0 * d * d / k),
        Convention::PaperVerbatim => drive / (0.5 * k - 2.0 * d * d / k),
    };
    (ar, 2.0 * d * ar / k)
}

/// Mechanical steady state per unit photon number, or `None` if the
/// mechanical block is singular.
fn mechanical_unit_response(p: &SystemParams) -> Option<Vector4<f64>> {
    let jac = field_jacobian(&[0.0; 6], p, p.phase());
    let block: Matrix4<f64> = jac.fixed_view::<4, 4>(2, 2).into_owned();
    let forcing = match p.convention {
        Convention::PaperVerbatim => Vector4::new(p.g1, 0.0, p.g2, 0.0),
        Convention::Rederived => Vector4::new(0.0, p.g1, 0.0, p.g2),
    };
    // block · b − forcing·n = 0 at n = 1
    block.lu().solve(&forcing)
}

fn state_for_detuning(d: f64, p: &SystemParams, mech: &Vector4<f64>) -> StateVector {
    let (ar, ai) = optical_for_detuning(d, p);
    let n = ar * ar + ai * ai;
    StateVector([ar, ai, mech[0] * n, mech[1] * n, mech[2] * n, mech[3] * n])
}

fn same_root(a: &StateVector, b: &StateVector) -> bool {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.0.iter()
        .zip(b.0.iter())
        .all(|(x, y)| (x - y).abs() <= DEDUP_TOL * scale)
}

fn relative_distance(a: &StateVector, b: &StateVector) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.0.iter()
        .zip(b.0.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

fn detuning_lattice(p: &SystemParams, settings: &SearchSettings) -> Vec<f64> {
    let per_side = (settings.lattice_seeds.max(2) - 1) / 2;
    let decades = (-8.0_f64, 8.0_f64);
    let mut lattice = vec![0.0];
    for i in 0..per_side.max(1) {
        let frac = if per_side > 1 {
            i as f64 / (per_side - 1) as f64
        } else {
            0.0
        };
        let v = 10f64.powf(decades.0 + frac * (decades.1 - decades.0));
        lattice.push(v);
        lattice.push(-v);
    }
    if p.convention == Convention::PaperVerbatim {
        // split cells at the poles of the optical response
        let pole = 0.5 * p.kappa;
        for s in [-1.0, 1.0] {
            lattice.push(s * pole * (1.0 - 1e-12));
            lattice.push(s * pole * (1.0 + 1e-12));
        }
    }
    lattice.push(p.delta);
    lattice.sort_by(f64::total_cmp);
    lattice.dedup();

    let sub = settings.subdivisions.max(1);
    let mut fine = Vec::with_capacity(lattice.len() * sub);
    for w in lattice.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pole_cell = p.convention == Convention::PaperVerbatim
            && (a.abs() - 0.5 * p.kappa).abs() < 1e-9 * p.kappa
            && (b.abs() - 0.5 * p.kappa).abs() < 1e-9 * p.kappa;
        for s in 0..sub {
            if pole_cell && s > 0 {
                break;
            }
            let t = s as f64 / sub as f64;
            // geometric spacing inside same-sign cells
            let v = if a > 0.0 && b > 0.0 {
                a * (b / a).powf(t)
            } else if a < 0.0 && b < 0.0 {
                -((-a) * (b / a).powf(t))
            } else {
                a + t * (b - a)
            };
            fine.push(v);
        }
    }
    fine.push(*lattice.last().unwrap());
    fine
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn fixed_point_from(state: StateVector, p: &SystemParams, source: RootSource) -> FixedPoint {
    let (residual_norm, raw_residual) = scaled_residual(&state.0, p);
    let jac = field_jacobian(&state.0, p, p.phase());
    let eigenvalues: Vec<Complex64> = jac.complex_eigenvalues().iter().copied().collect();
    let stable = eigenvalues.iter().all(|e| e.re < 0.0);
    FixedPoint {
        state,
        residual_norm,
        raw_residual,
        eigenvalues,
        stable,
        source,
    }
}

/// Closed-form candidates turned into full states: `(α_r, α_i)` from the
/// quadratic and `β` from the closed-form mechanical amplitudes.
pub fn closed_form_candidates(params: &SystemParams) -> Result<Vec<StateVector>> {
    let mut out = Vec::new();
    for (ar, ai) in solve_alpha(params)? {
        let n = ar * ar + ai * ai;
        let (b1, b2) = beta_steady(n, params)?;
        out.push(StateVector([ar, ai, b1.re, b1.im, b2.re, b2.im]));
    }
    Ok(out)
}

pub fn find_fixed_points(params: &SystemParams) -> Result<FixedPointSearch> {
    find_fixed_points_with(params, &SearchSettings::default())
}

pub fn find_fixed_points_with(
    params: &SystemParams,
    settings: &SearchSettings,
) -> Result<FixedPointSearch> {
    params.validate()?;
    let p = params;
    let mut found: Vec<FixedPoint> = Vec::new();
    let push = |state: StateVector, source: RootSource, found: &mut Vec<FixedPoint>| {
        if let Some(existing) = found.iter().find(|fp| same_root(&fp.state, &state)) {
            return existing.state;
        }
        found.push(fixed_point_from(state, p, source));
        state
    };

    if let Some(mech) = mechanical_unit_response(p) {
        let coupling = 2.0 * p.g1 * mech[0] + 2.0 * p.g2 * mech[2];
        let reduced = |d: f64| {
            let (ar, ai) = optical_for_detuning(d, p);
            p.delta + coupling * (ar * ar + ai * ai) - d
        };
        let lattice = detuning_lattice(p, settings);
        let values: Vec<f64> = lattice.iter().map(|&d| reduced(d)).collect();
        for i in 0..lattice.len() {
            let (d, v) = (lattice[i], values[i]);
            let seed_d = if v == 0.0 {
                Some(d)
            } else if i + 1 < lattice.len()
                && v.is_finite()
                && values[i + 1].is_finite()
                && values[i + 1] != 0.0
                && (v < 0.0) != (values[i + 1] < 0.0)
            {
                Some(bisect(&reduced, d, lattice[i + 1]))
            } else {
                None
            };
            if let Some(d) = seed_d {
                let seed = state_for_detuning(d, p, &mech);
                if let Some(root) = newton(&seed, p) {
                    push(root, RootSource::Multistart, &mut found);
                }
            }
        }
    }

    let mut discrepancies = Vec::new();
    match closed_form_candidates(p) {
        Ok(candidates) => {
            for candidate in candidates {
                match newton(&candidate, p) {
                    Some(root) => {
                        let dist = relative_distance(&candidate, &root);
                        let matched = push(root, RootSource::NewtonRefined, &mut found);
                        if dist > DEDUP_TOL {
                            log::debug!(
                                "closed-form candidate {:?} refined to {:?} (rel. distance {dist:e})",
                                candidate.0,
                                matched.0
                            );
                            discrepancies.push(ClosedFormDiscrepancy {
                                candidate,
                                refined: Some(matched),
                                relative_distance: dist,
                            });
                        } else if let Some(fp) =
                            found.iter_mut().find(|fp| same_root(&fp.state, &root))
                        {
                            fp.source = RootSource::ClosedForm;
                        }
                    }
                    None => {
                        log::debug!("closed-form candidate {:?} did not converge", candidate.0);
                        discrepancies.push(ClosedFormDiscrepancy {
                            candidate,
                            refined: None,
                            relative_distance: f64::INFINITY,
                        });
                    }
                }
            }
        }
        Err(Error::SingularDenominator(d)) => {
            log::debug!("closed-form seeds skipped: singular denominator {d:e}");
        }
        Err(e) => return Err(e),
    }

    found.sort_by(|a, b| a.optical_amplitude().total_cmp(&b.optical_amplitude()));
    Ok(FixedPointSearch {
        all_seeds_failed: found.is_empty(),
        points: found,
        discrepancies,
    })
}

pub fn count_steady_states(params: &SystemParams) -> Result<usize> {
    Ok(find_fixed_points(params)?.points.len())
}

/// Number of candidates the closed-form quadratic yields (0, 1 or 2).
pub fn closed_form_count(params: &SystemParams) -> Result<usize> {
    Ok(solve_alpha(params)?.len())
}
