//! Equations of motion for one optical mode driving two mechanical modes
//! that exchange phonons through a complex hopping `J_m e^{±iθ}`.
//!
//! The state is split into real and imaginary parts,
//! `α = α_r + iα_i`, `β_j = β_jr + iβ_ji`, giving six real ODEs. Two
//! real-valued forms are available, selected by [`Convention`]:
//!
//! * [`Convention::Rederived`] is the exact real/imaginary expansion of the
//!   complex amplitude equations (see [`rhs_complex`]).
//! * [`Convention::PaperVerbatim`] is the printed real form. It differs from
//!   the expansion in two places: the `(Δ + G)α_i` term of the `α_r` equation
//!   has the opposite sign, and the radiation-pressure forcing `-g_j|α|²`
//!   enters the `β_jr` equations instead of `β_ji`.
//!
//! Here `G = 2g₁β_1r + 2g₂β_2r` is the mechanically induced detuning shift.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix6 = SMatrix<f64, 6, 6>;

/// Default divergence threshold on any state component.
pub const DEFAULT_BLOW_UP_BOUND: f64 = 1e12;

/// Sign convention of the real-valued optical/mechanical equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Convention {
    PaperVerbatim,
    #[default]
    Rederived,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::PaperVerbatim => "paper",
            Convention::Rederived => "rederived",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" | "paper_verbatim" | "verbatim" => Ok(Convention::PaperVerbatim),
            "rederived" => Ok(Convention::Rederived),
            other => Err(Error::InvalidParams(format!(
                "unknown convention '{other}' (expected paper|rederived)"
            ))),
        }
    }
}

/// Physical constants of the model, all in units of the first mechanical
/// frequency `ω_m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa: f64,
    pub delta: f64,
    pub g1: f64,
    pub g2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub jm: f64,
    /// Hopping phase in radians.
    pub theta: f64,
    /// Coherent drive amplitude.
    pub alpha_in: f64,
    pub convention: Convention,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0005,
            kappa: 7.3e-2,
            delta: 1.0,
            g1: 1.077e-4,
            g2: 1.077e-4,
            gamma1: 1.077e-5,
            gamma2: 1.077e-5,
            jm: 2e-4,
            theta: 0.0,
            alpha_in: 1e3,
            convention: Convention::default(),
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("kappa", self.kappa),
            ("delta", self.delta),
            ("g1", self.g1),
            ("g2", self.g2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("jm", self.jm),
            ("theta", self.theta),
            ("alpha_in", self.alpha_in),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParams("kappa must be > 0".into()));
        }
        if self.gamma1 <= 0.0 {
            return Err(Error::InvalidParams("gamma1 must be > 0".into()));
        }
        if self.gamma2 <= 0.0 {
            return Err(Error::InvalidParams("gamma2 must be > 0".into()));
        }
        if self.jm < 0.0 {
            return Err(Error::InvalidParams("jm must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    /// `(cos θ, sin θ)` after reducing θ into `[0, 2π)`.
    pub(crate) fn phase(&self) -> (f64, f64) {
        let (s, c) = self.theta.rem_euclid(TAU).sin_cos();
        (c, s)
    }
}

/// A scalar field of [`SystemParams`] that can be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    Omega1,
    Omega2,
    Kappa,
    Delta,
    G1,
    G2,
    Gamma1,
    Gamma2,
    Jm,
    Theta,
    AlphaIn,
}

impl ParamId {
    pub const ALL: [ParamId; 11] = [
        ParamId::Omega1,
        ParamId::Omega2,
        ParamId::Kappa,
        ParamId::Delta,
        ParamId::G1,
        ParamId::G2,
        ParamId::Gamma1,
        ParamId::Gamma2,
        ParamId::Jm,
        ParamId::Theta,
        ParamId::AlphaIn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Omega1 => "omega1",
            ParamId::Omega2 => "omega2",
            ParamId::Kappa => "kappa",
            ParamId::Delta => "delta",
            ParamId::G1 => "g1",
            ParamId::G2 => "g2",
            ParamId::Gamma1 => "gamma1",
            ParamId::Gamma2 => "gamma2",
            ParamId::Jm => "jm",
            ParamId::Theta => "theta",
            ParamId::AlphaIn => "alpha_in",
        }
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            ParamId::Omega1 => p.omega1,
            ParamId::Omega2 => p.omega2,
            ParamId::Kappa => p.kappa,
            ParamId::Delta => p.delta,
            ParamId::G1 => p.g1,
            ParamId::G2 => p.g2,
            ParamId::Gamma1 => p.gamma1,
            ParamId::Gamma2 => p.gamma2,
            ParamId::Jm => p.jm,
            ParamId::Theta => p.theta,
            ParamId::AlphaIn => p.alpha_in,
        }
    }

    pub fn set(self, p: &mut SystemParams, value: f64) {
        let slot = match self {
            ParamId::Omega1 => &mut p.omega1,
            ParamId::Omega2 => &mut p.omega2,
            ParamId::Kappa => &mut p.kappa,
            ParamId::Delta => &mut p.delta,
            ParamId::G1 => &mut p.g1,
            ParamId::G2 => &mut p.g2,
            ParamId::Gamma1 => &mut p.gamma1,
            ParamId::Gamma2 => &mut p.gamma2,
            ParamId::Jm => &mut p.jm,
            ParamId::Theta => &mut p.theta,
            ParamId::AlphaIn => &mut p.alpha_in,
        };
        *slot = value;
    }

    pub fn with(self, p: &SystemParams, value: f64) -> SystemParams {
        let mut q = *p;
        self.set(&mut q, value);
        q
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ParamId::ALL
            .into_iter()
            .find(|id| id.name() == key)
            .ok_or_else(|| Error::InvalidParams(format!("unknown parameter '{s}'")))
    }
}

/// One of the six real state variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Ar,
    Ai,
    B1r,
    B1i,
    B2r,
    B2i,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Ar,
        Component::Ai,
        Component::B1r,
        Component::B1i,
        Component::B2r,
        Component::B2i,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Ar => "ar",
            Component::Ai => "ai",
            Component::B1r => "b1r",
            Component::B1i => "b1i",
            Component::B2r => "b2r",
            Component::B2i => "b2i",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Component::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::InvalidParams(format!("unknown state component '{s}'")))
    }
}

/// `(α_r, α_i, β_1r, β_1i, β_2r, β_2i)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StateVector(pub [f64; 6]);

/// Time derivative of a [`StateVector`], same slot layout.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DerivativeVector(pub [f64; 6]);

macro_rules! impl_slots {
    ($ty:ident) => {
        impl $ty {
            pub const ZERO: $ty = $ty([0.0; 6]);

            pub fn new(ar: f64, ai: f64, b1r: f64, b1i: f64, b2r: f64, b2i: f64) -> Self {
                $ty([ar, ai, b1r, b1i, b2r, b2i])
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            }
        }

        impl Index<Component> for $ty {
            type Output = f64;
            fn index(&self, c: Component) -> &f64 {
                &self.0[c.index()]
            }
        }

        impl IndexMut<Component> for $ty {
            fn index_mut(&mut self, c: Component) -> &mut f64 {
                &mut self.0[c.index()]
            }
        }

        impl From<[f64; 6]> for $ty {
            fn from(a: [f64; 6]) -> Self {
                $ty(a)
            }
        }
    };
}

impl_slots!(StateVector);
impl_slots!(DerivativeVector);

impl StateVector {
    pub fn from_complex(alpha: Complex64, beta1: Complex64, beta2: Complex64) -> Self {
        StateVector([alpha.re, alpha.im, beta1.re, beta1.im, beta2.re, beta2.im])
    }

    pub fn to_complex(&self) -> (Complex64, Complex64, Complex64) {
        let s = &self.0;
        (
            Complex64::new(s[0], s[1]),
            Complex64::new(s[2], s[3]),
            Complex64::new(s[4], s[5]),
        )
    }

    /// Intracavity photon number `|α|²`.
    pub fn photon_number(&self) -> f64 {
        self.0[0] * self.0[0] + self.0[1] * self.0[1]
    }

    /// True when any component exceeds `bound` in magnitude or is non-finite.
    pub fn exceeds(&self, bound: f64) -> bool {
        self.0.iter().any(|x| !(x.abs() <= bound))
    }
}

/// Evaluate the six real equations without input validation.
#[inline]
pub(crate) fn field(y: &[f64; 6], p: &SystemParams, phase: (f64, f64)) -> [f64; 6] {
    let (c, s) = phase;
    let [ar, ai, b1r, b1i, b2r, b2i] = *y;
    let detuning = p.delta + 2.0 * p.g1 * b1r + 2.0 * p.g2 * b2r;
    let n = ar * ar + ai * ai;
    let half_k = 0.5 * p.kappa;
    let drive = p.kappa.sqrt() * p.alpha_in;

    let mut out = [
        0.0,
        detuning * ar - half_k * ai,
        p.omega1 * b1i - 0.5 * p.gamma1 * b1r + p.jm * (b2r * s + b2i * c),
        -p.omega1 * b1r - 0.5 * p.gamma1 * b1i - p.jm * (b2r * c - b2i * s),
        p.omega2 * b2i - 0.5 * p.gamma2 * b2r - p.jm * (b1r * s - b1i * c),
        -p.omega2 * b2r - 0.5 * p.gamma2 * b2i - p.jm * (b1r * c + b1i * s),
    ];
    match p.convention {
        Convention::PaperVerbatim => {
            out[0] = -half_k * ar + detuning * ai + drive;
            out[2] -= p.g1 * n;
            out[4] -= p.g2 * n;
        }
        Convention::Rederived => {
            out[0] = -half_k * ar - detuning * ai + drive;
            out[3] -= p.g1 * n;
            out[5] -= p.g2 * n;
        }
    }
    out
}

/// Analytic Jacobian of [`field`] without input validation.
pub(crate) fn field_jacobian(y: &[f64; 6], p: &SystemParams, phase: (f64, f64)) -> Matrix6 {
    let (c, s) = phase;
    let [ar, ai, b1r, _, b2r, _] = *y;
    let detuning = p.delta + 2.0 * p.g1 * b1r + 2.0 * p.g2 * b2r;
    let half_k = 0.5 * p.kappa;
    let (sign, force1, force2) = match p.convention {
        Convention::PaperVerbatim => (1.0, 2, 4),
        Convention::Rederived => (-1.0, 3, 5),
    };

    let mut m = Matrix6::zeros();
    m[(0, 0)] = -half_k;
    m[(0, 1)] = sign * detuning;
    m[(0, 2)] = sign * 2.0 * p.g1 * ai;
    m[(0, 4)] = sign * 2.0 * p.g2 * ai;

    m[(1, 0)] = detuning;
    m[(1, 1)] = -half_k;
    m[(1, 2)] = 2.0 * p.g1 * ar;
    m[(1, 4)] = 2.0 * p.g2 * ar;

    m[(2, 2)] = -0.5 * p.gamma1;
    m[(2, 3)] = p.omega1;
    m[(2, 4)] = p.jm * s;
    m[(2, 5)] = p.jm * c;

    m[(3, 2)] = -p.omega1;
    m[(3, 3)] = -0.5 * p.gamma1;
    m[(3, 4)] = -p.jm * c;
    m[(3, 5)] = p.jm * s;

    m[(4, 2)] = -p.jm * s;
    m[(4, 3)] = p.jm * c;
    m[(4, 4)] = -0.5 * p.gamma2;
    m[(4, 5)] = p.omega2;

    m[(5, 2)] = -p.jm * c;
    m[(5, 3)] = -p.jm * s;
    m[(5, 4)] = -p.omega2;
    m[(5, 5)] = -0.5 * p.gamma2;

    m[(force1, 0)] -= 2.0 * p.g1 * ar;
    m[(force1, 1)] -= 2.0 * p.g1 * ai;
    m[(force2, 0)] -= 2.0 * p.g2 * ar;
    m[(force2, 1)] -= 2.0 * p.g2 * ai;
    m
}

fn check_inputs(state: &StateVector, params: &SystemParams) -> Result<()> {
    params.validate()?;
    if !state.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    Ok(())
}

/// Time derivative of `state` in the convention selected by `params`.
pub fn rhs(state: &StateVector, params: &SystemParams) -> Result<DerivativeVector> {
    check_inputs(state, params)?;
    Ok(DerivativeVector(field(&state.0, params, params.phase())))
}

/// The complex amplitude equations
///
/// ```text
/// α̇  = (iΔ − κ/2)α + i Σ g_j(β_j* + β_j)α + √κ α_in
/// β̇₁ = −(iω₁ + γ₁/2)β₁ − iJ_m e^{iθ} β₂ − i g₁|α|²
/// β̇₂ = −(iω₂ + γ₂/2)β₂ − iJ_m e^{−iθ} β₁ − i g₂|α|²
/// ```
///
/// independent of `params.convention`.
pub fn rhs_complex(
    alpha: Complex64,
    beta1: Complex64,
    beta2: Complex64,
    params: &SystemParams,
) -> Result<(Complex64, Complex64, Complex64)> {
    params.validate()?;
    if ![alpha, beta1, beta2].iter().all(|z| z.is_finite()) {
        return Err(Error::NonFinite("complex amplitudes"));
    }
    let p = params;
    let i = Complex64::i();
    let (c, s) = p.phase();
    let hop = Complex64::new(c, s);
    let n = alpha.norm_sqr();
    let shift = p.g1 * (beta1.conj() + beta1) + p.g2 * (beta2.conj() + beta2);

    let dalpha = (i * p.delta - 0.5 * p.kappa) * alpha + i * shift * alpha + p.kappa.sqrt() * p.alpha_in;
    let dbeta1 = -(i * p.omega1 + 0.5 * p.gamma1) * beta1 - i * p.jm * hop * beta2 - i * p.g1 * n;
    let dbeta2 =
        -(i * p.omega2 + 0.5 * p.gamma2) * beta2 - i * p.jm * hop.conj() * beta1 - i * p.g2 * n;
    Ok((dalpha, dbeta1, dbeta2))
}

/// Analytic Jacobian `∂ rhs / ∂ state` in the active convention.
pub fn jacobian(state: &StateVector, params: &SystemParams) -> Result<Matrix6> {
    check_inputs(state, params)?;
    Ok(field_jacobian(&state.0, params, params.phase()))
}

/// Scale of the largest single term contributing to each equation; used to
/// turn raw residuals into relative ones at large amplitudes.
pub(crate) fn term_scale(y: &[f64; 6], p: &SystemParams) -> f64 {
    let [ar, ai, b1r, b1i, b2r, b2i] = y.map(f64::abs);
    let detuning = p.delta.abs() + 2.0 * p.g1.abs() * b1r + 2.0 * p.g2.abs() * b2r;
    let n = ar * ar + ai * ai;
    let opt = (0.5 * p.kappa * ar.max(ai))
        .max(detuning * ar.max(ai))
        .max(p.kappa.sqrt() * p.alpha_in.abs());
    let mech = (p.omega1.abs() * b1r.max(b1i))
        .max(p.omega2.abs() * b2r.max(b2i))
        .max(p.jm * b1r.max(b1i).max(b2r).max(b2i))
        .max(p.g1.abs().max(p.g2.abs()) * n);
    opt.max(mech)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drive_only_at_origin() {
        for convention in [Convention::PaperVerbatim, Convention::Rederived] {
            let p = SystemParams {
                alpha_in: 1e3,
                ..SystemParams::default()
            }
            .with_convention(convention);
            let d = rhs(&StateVector::ZERO, &p).unwrap();
            assert!((d.0[0] - 270.185_121_722_126_3).abs() < 1e-9, "{}", d.0[0]);
            assert!(d.0[1..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn undriven_origin_is_fixed() {
        let p = SystemParams {
            alpha_in: 0.0,
            ..SystemParams::default()
        };
        assert_eq!(rhs(&StateVector::ZERO, &p).unwrap(), DerivativeVector::ZERO);
    }

    #[test]
    fn unit_optical_state_term_by_term() {
        // -κ/2, Δ, then the forcing -g|α|² = -g lands in β_r (printed) or β_i (expanded).
        let base = SystemParams {
            alpha_in: 0.0,
            ..SystemParams::default()
        };
        let s = StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let verbatim = rhs(&s, &base.with_convention(Convention::PaperVerbatim)).unwrap();
        assert_eq!(verbatim.0, [-0.0365, 1.0, -1.077e-4, 0.0, -1.077e-4, 0.0]);
        let rederived = rhs(&s, &base.with_convention(Convention::Rederived)).unwrap();
        assert_eq!(rederived.0, [-0.0365, 1.0, 0.0, -1.077e-4, 0.0, -1.077e-4]);
    }

    #[test]
    fn detuning_term_sign_differs_between_conventions() {
        let base = SystemParams {
            alpha_in: 0.0,
            ..SystemParams::default()
        };
        let s = StateVector::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let a = rhs(&s, &base.with_convention(Convention::PaperVerbatim)).unwrap();
        let b = rhs(&s, &base.with_convention(Convention::Rederived)).unwrap();
        assert_eq!(a.0[0], 1.0);
        assert_eq!(b.0[0], -1.0);
    }

    #[test]
    fn complex_origin() {
        let z = Complex64::new(0.0, 0.0);
        let p = SystemParams {
            alpha_in: 0.0,
            ..SystemParams::default()
        };
        let (a, b1, b2) = rhs_complex(z, z, z, &p).unwrap();
        assert_eq!((a, b1, b2), (z, z, z));
        let p = SystemParams {
            alpha_in: 1e3,
            ..p
        };
        let (a, b1, b2) = rhs_complex(z, z, z, &p).unwrap();
        assert!((a.re - 7.3e-2_f64.sqrt() * 1e3).abs() < 1e-12);
        assert_eq!((a.im, b1, b2), (0.0, z, z));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = SystemParams::default();
        let bad = StateVector::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(rhs(&bad, &p), Err(Error::NonFinite(_))));
        assert!(jacobian(&bad, &p).is_err());
        let p = SystemParams { kappa: -1.0, ..p };
        assert!(matches!(rhs(&StateVector::ZERO, &p), Err(Error::InvalidParams(_))));
        let p = SystemParams {
            jm: -1e-3,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            g2: f64::INFINITY,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        let z = Complex64::new(f64::INFINITY, 0.0);
        assert!(rhs_complex(z, z, z, &SystemParams::default()).is_err());
    }

    #[test]
    fn decoupled_jacobian_spectrum() {
        let p = SystemParams {
            g1: 0.0,
            g2: 0.0,
            jm: 0.0,
            ..SystemParams::default()
        };
        let j = jacobian(&StateVector::ZERO, &p).unwrap();
        let mut ev: Vec<_> = j.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let mut want = vec![
            Complex64::new(-p.kappa / 2.0, p.delta),
            Complex64::new(-p.kappa / 2.0, -p.delta),
            Complex64::new(-p.gamma1 / 2.0, p.omega1),
            Complex64::new(-p.gamma1 / 2.0, -p.omega1),
            Complex64::new(-p.gamma2 / 2.0, p.omega2),
            Complex64::new(-p.gamma2 / 2.0, -p.omega2),
        ];
        want.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for (e, w) in ev.iter().zip(&want) {
            assert!((e - w).norm() < 1e-12, "{e} vs {w}");
        }
    }

    #[test]
    fn symmetric_hopping_keeps_mechanical_damping() {
        for theta in [0.0, 0.3, 1.2, 2.5, 4.0] {
            let p = SystemParams {
                g1: 0.0,
                g2: 0.0,
                jm: 0.05,
                omega2: 1.0,
                theta,
                ..SystemParams::default()
            };
            let j = jacobian(&StateVector::ZERO, &p).unwrap();
            let mech = j.fixed_view::<4, 4>(2, 2).into_owned();
            for e in mech.complex_eigenvalues().iter() {
                assert!((e.re + p.gamma1 / 2.0).abs() < 1e-12, "theta={theta} {e}");
            }
        }
    }

    #[test]
    fn complex_round_trip() {
        let s = StateVector::new(1.5, -2.0, 3.25, 1e-7, -4e5, 0.125);
        let (a, b1, b2) = s.to_complex();
        assert_eq!(StateVector::from_complex(a, b1, b2), s);
    }

    #[test]
    fn divergence_detector() {
        let s = StateVector::new(0.0, 2e12, 0.0, 0.0, 0.0, 0.0);
        assert!(s.exceeds(DEFAULT_BLOW_UP_BOUND));
        assert!(!StateVector::ZERO.exceeds(DEFAULT_BLOW_UP_BOUND));
        assert!(StateVector::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0).exceeds(1.0));
    }

    #[test]
    fn names_parse() {
        for c in Component::ALL {
            assert_eq!(c.name().parse::<Component>().unwrap(), c);
        }
        assert_eq!("paper".parse::<Convention>().unwrap(), Convention::PaperVerbatim);
        assert!("other".parse::<Convention>().is_err());
    }
}
