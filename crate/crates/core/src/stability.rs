//! Linear stability of equilibria.
//!
//! The characteristic polynomial is built from the Jacobian by the
//! Faddeev–LeVerrier trace recursion and tested with the Routh array. The
//! eigenvalues of the same Jacobian give an independent verdict; when the two
//! disagree the eigenvalues are authoritative and the disagreement is logged.

use num_complex::Complex64;
use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::model::{field_jacobian, Matrix6, StateVector, SystemParams};
use crate::steady_state::scaled_residual;

/// `|max Re λ|` below this is reported as marginal.
pub const MARGINAL_REAL_PART: f64 = 1e-9;
/// Residual above which [`classify_fixed_point`] refuses the state.
pub const CLASSIFY_RESIDUAL_LIMIT: f64 = 1e-6;
/// Relative size under which a Routh pivot counts as zero.
pub const ROUTH_EPS: f64 = 1e-12;

/// Coefficients of `λ⁶ + c₁λ⁵ + c₂λ⁴ + c₃λ³ + c₄λ² + c₅λ + c₆`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharPoly6 {
    pub c: [f64; 6],
}

impl CharPoly6 {
    /// Horner evaluation of the monic polynomial at a complex point.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &ci| acc * z + ci)
    }

    /// Sum of the magnitudes of the individual terms at `z`, for scaling.
    pub fn term_magnitude(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let mut total = r.powi(6);
        for (i, ci) in self.c.iter().enumerate() {
            total += ci.abs() * r.powi(5 - i as i32);
        }
        total
    }
}

/// Characteristic-polynomial coefficients of an `N×N` matrix by the
/// Faddeev–LeVerrier recursion `M₁ = I`, `c_k = −tr(A M_k)/k`,
/// `M_{k+1} = A M_k + c_k I`. Exact for exact arithmetic types.
pub fn faddeev_leverrier<T, const N: usize>(a: &[[T; N]; N]) -> [T; N]
where
    T: Clone + Num + FromPrimitive,
{
    let identity = |scale: T| -> [[T; N]; N] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { scale.clone() } else { T::zero() })
        })
    };
    let matmul = |x: &[[T; N]; N], y: &[[T; N]; N]| -> [[T; N]; N] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                (0..N).fold(T::zero(), |acc, k| acc + x[i][k].clone() * y[k][j].clone())
            })
        })
    };
    let trace = |x: &[[T; N]; N]| (0..N).fold(T::zero(), |acc, i| acc + x[i][i].clone());

    let mut coeffs: [T; N] = std::array::from_fn(|_| T::zero());
    let mut m = identity(T::one());
    for k in 1..=N {
        let am = matmul(a, &m);
        let ck = T::zero() - trace(&am) / T::from_usize(k).expect("small integer");
        coeffs[k - 1] = ck.clone();
        if k < N {
            m = am;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = row[i].clone() + ck.clone();
            }
        }
    }
    coeffs
}

pub fn char_poly_from_jacobian(j: &Matrix6) -> CharPoly6 {
    let a: [[f64; 6]; 6] = std::array::from_fn(|r| std::array::from_fn(|c| j[(r, c)]));
    CharPoly6 {
        c: faddeev_leverrier(&a),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouthOutcome {
    Stable,
    /// Number of first-column sign changes, i.e. right-half-plane roots.
    Unstable { sign_changes: usize },
    /// A zero pivot or a vanishing row was met.
    Marginal,
}

impl RouthOutcome {
    pub fn is_stable(self) -> bool {
        self == RouthOutcome::Stable
    }
}

/// Routh array test for `λ⁶ + c₁λ⁵ + … + c₆`.
///
/// Each entry `(p·a − q·b)/p` carries a noise floor proportional to
/// `(|p·a| + |q·b|)/|p|`; a pivot within [`ROUTH_EPS`] of its own floor is
/// treated as zero, replaced by `ROUTH_EPS` times that floor, and the result
/// is reported as marginal.
pub fn routh_hurwitz(p: &CharPoly6) -> RouthOutcome {
    let coeffs = [1.0, p.c[0], p.c[1], p.c[2], p.c[3], p.c[4], p.c[5]];
    if coeffs.iter().any(|c| !c.is_finite()) {
        return RouthOutcome::Marginal;
    }
    let width = 4;
    let mut prev: Vec<f64> = (0..width).map(|i| *coeffs.get(2 * i).unwrap_or(&0.0)).collect();
    let mut cur: Vec<f64> = (0..width)
        .map(|i| *coeffs.get(2 * i + 1).unwrap_or(&0.0))
        .collect();
    let mut cur_scale: Vec<f64> = cur.iter().map(|x| x.abs()).collect();
    let mut first_column = vec![prev[0]];
    let mut marginal = false;

    for _ in 1..coeffs.len() {
        if cur.iter().all(|&x| x.abs() <= ROUTH_EPS * cur_scale.iter().cloned().fold(0.0, f64::max))
        {
            // vanishing row: roots symmetric about the origin
            return RouthOutcome::Marginal;
        }
        if cur[0].abs() <= ROUTH_EPS * cur_scale[0] || cur[0] == 0.0 {
            marginal = true;
            let floor = if cur_scale[0] > 0.0 { cur_scale[0] } else { 1.0 };
            cur[0] = ROUTH_EPS * floor;
        }
        first_column.push(cur[0]);
        let pivot = cur[0];
        let mut next = vec![0.0; width];
        let mut next_scale = vec![0.0; width];
        for j in 0..width - 1 {
            let a = pivot * prev[j + 1];
            let b = prev[0] * cur[j + 1];
            next[j] = (a - b) / pivot;
            next_scale[j] = (a.abs() + b.abs()) / pivot.abs();
        }
        prev = cur;
        cur = next;
        cur_scale = next_scale;
        if first_column.len() == coeffs.len() {
            break;
        }
    }

    if marginal {
        return RouthOutcome::Marginal;
    }
    let sign_changes = first_column
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    if sign_changes == 0 && first_column.iter().all(|&x| x > 0.0) {
        RouthOutcome::Stable
    } else {
        RouthOutcome::Unstable {
            sign_changes: sign_changes.max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenStability {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub stable: bool,
}

pub fn eigen_stability(j: &Matrix6) -> EigenStability {
    let eigenvalues: Vec<Complex64> = j.complex_eigenvalues().iter().copied().collect();
    let max_real_part = eigenvalues
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    EigenStability {
        stable: max_real_part < 0.0,
        eigenvalues,
        max_real_part,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityMethod {
    RouthHurwitz,
    Eigenvalues,
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// `Both` when the two methods concur, otherwise the one that decided.
    pub method: StabilityMethod,
    pub max_real_part: f64,
    pub agreement: bool,
    pub routh: RouthOutcome,
    /// `|max Re λ| < 1e-9`.
    pub marginal: bool,
}

/// Run both stability tests on a fixed point.
pub fn classify_fixed_point(state: &StateVector, params: &SystemParams) -> Result<StabilityVerdict> {
    params.validate()?;
    if !state.is_finite() {
        return Err(Error::NonFinite("fixed point state"));
    }
    let (residual, _) = scaled_residual(&state.0, params);
    if !(residual <= CLASSIFY_RESIDUAL_LIMIT) {
        return Err(Error::NotAFixedPoint {
            residual,
            limit: CLASSIFY_RESIDUAL_LIMIT,
        });
    }
    let j = field_jacobian(&state.0, params, params.phase());
    Ok(verdict_for_jacobian(&j, || {
        format!("state={:?} params={:?}", state.0, params)
    }))
}

pub(crate) fn verdict_for_jacobian(j: &Matrix6, context: impl Fn() -> String) -> StabilityVerdict {
    let routh = routh_hurwitz(&char_poly_from_jacobian(j));
    let eig = eigen_stability(j);
    let marginal = eig.max_real_part.abs() < MARGINAL_REAL_PART;
    let agreement = routh != RouthOutcome::Marginal && routh.is_stable() == eig.stable;
    if !agreement {
        log::warn!(
            "stability disagreement: routh={routh:?} max_re={:e} {}",
            eig.max_real_part,
            context()
        );
    }
    StabilityVerdict {
        stable: eig.stable,
        method: if agreement {
            StabilityMethod::Both
        } else {
            StabilityMethod::Eigenvalues
        },
        max_real_part: eig.max_real_part,
        agreement,
        routh,
        marginal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn binomial_poly() -> CharPoly6 {
        CharPoly6 {
            c: [6.0, 15.0, 20.0, 15.0, 6.0, 1.0],
        }
    }

    #[test]
    fn minus_identity_gives_binomial_coefficients() {
        let j = -Matrix6::identity();
        let p = char_poly_from_jacobian(&j);
        assert_eq!(p, binomial_poly());
        let e = eigen_stability(&j);
        assert!(e.eigenvalues.iter().all(|z| (z + 1.0).norm() < 1e-12));
        assert!(e.stable);
    }

    #[test]
    fn exact_on_integer_matrices() {
        // upper triangular with diagonal 1..=6: (λ−1)(λ−2)…(λ−6)
        let a: [[Rational64; 6]; 6] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i == j {
                    Rational64::from_integer(i as i64 + 1)
                } else if j > i {
                    Rational64::from_integer((i * 7 + j * 3) as i64 % 5 - 2)
                } else {
                    Rational64::from_integer(0)
                }
            })
        });
        let c = faddeev_leverrier(&a);
        let want = [-21, 175, -735, 1624, -1764, 720].map(Rational64::from_integer);
        assert_eq!(c, want);

        // dense integer matrix versus the cofactor determinant
        let b: [[Rational64; 3]; 3] = [[2, -1, 4], [0, 3, 5], [-2, 1, 1]]
            .map(|r| r.map(Rational64::from_integer));
        let c = faddeev_leverrier(&b);
        let det = Rational64::from_integer(2 * (3 - 5) + (0 + 10) + 4 * (0 + 6));
        assert_eq!(c[0], Rational64::from_integer(-6));
        assert_eq!(c[2], -det);
    }

    #[test]
    fn routh_on_known_polynomials() {
        assert_eq!(routh_hurwitz(&binomial_poly()), RouthOutcome::Stable);
        // (λ−1)(λ+1)⁵ = λ⁶ + 4λ⁵ + 5λ⁴ − 5λ² − 4λ − 1
        let p = CharPoly6 {
            c: [4.0, 5.0, 0.0, -5.0, -4.0, -1.0],
        };
        assert!(!routh_hurwitz(&p).is_stable());
        // two right-half-plane roots, none mirrored on the left
        let j = Matrix6::from_diagonal(&nalgebra::Vector6::new(0.5, 2.0, -1.0, -3.0, -3.0, -4.0));
        assert_eq!(
            routh_hurwitz(&char_poly_from_jacobian(&j)),
            RouthOutcome::Unstable { sign_changes: 2 }
        );
    }

    #[test]
    fn routh_reports_marginal_cases() {
        // λ⁶ + 1 has roots on both sides; all odd coefficients vanish
        let p = CharPoly6 {
            c: [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        };
        assert_eq!(routh_hurwitz(&p), RouthOutcome::Marginal);
        // (λ² + 1)(λ + 1)⁴ has a pure imaginary pair
        let j = {
            let mut m = -Matrix6::identity();
            m[(0, 0)] = 0.0;
            m[(1, 1)] = 0.0;
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -1.0;
            m
        };
        assert_eq!(routh_hurwitz(&char_poly_from_jacobian(&j)), RouthOutcome::Marginal);
    }

    #[test]
    fn decoupled_optical_block_c1() {
        let p = SystemParams {
            g1: 0.0,
            g2: 0.0,
            jm: 0.0,
            alpha_in: 0.0,
            ..SystemParams::default()
        };
        let j = crate::model::jacobian(&StateVector::ZERO, &p).unwrap();
        let poly = char_poly_from_jacobian(&j);
        let want = 2.0 * 1.077e-5 + 7.3e-2;
        assert!((poly.c[0] - want).abs() < 1e-15);
        assert!((poly.c[0] - 0.073_021_54).abs() < 1e-12);
    }

    #[test]
    fn undriven_origin_is_stable() {
        let p = SystemParams {
            alpha_in: 0.0,
            ..SystemParams::default()
        };
        let v = classify_fixed_point(&StateVector::ZERO, &p).unwrap();
        assert!(v.stable && v.agreement && !v.marginal);
        assert_eq!(v.method, StabilityMethod::Both);
    }

    #[test]
    fn rejects_non_fixed_points() {
        let p = SystemParams::default();
        let err = classify_fixed_point(&StateVector::ZERO, &p).unwrap_err();
        assert!(matches!(err, Error::NotAFixedPoint { .. }));
    }
}
