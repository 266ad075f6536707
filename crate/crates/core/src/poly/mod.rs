//! Polynomials in root form, the dense reference action `p(H)|Ψ⟩/‖p(H)|Ψ⟩‖`,
//! and constructions of approximation polynomials.

mod approx;
mod bessel;
mod cheb;
mod classical;
mod dilation;
mod roots;

pub use approx::{
    inverse_approx, inverse_target, ite_linear_filter, jacobi_anger, sign_approx, InverseApprox, JacobiKind,
    SignApprox, DEFAULT_INVERSE_A_CAP,
};
pub use bessel::bessel_j;
pub use cheb::{chebyshev_monomials, ChebSeries, Parity, DEGREE_CAP};
pub use classical::{classical_moments, moments_to_stats, ClassicalMoments, Feasibility, DEFAULT_SUPPORT_CAP};
pub use dilation::{hermitian_dilation, Dilation};
pub use roots::{expand_roots, roots_from_coeffs, DEFAULT_REAL_SNAP_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{norm, LinearOp, StateVector, C64};

/// Below this norm a factor `(H − z I)` is taken to annihilate the state.
pub const ANNIHILATION_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Explicit,
    FromCoeffs,
    Chebyshev,
    InverseApprox,
    SignApprox,
    JacobiAnger,
}

/// `p(x) = leading · Π (x − z_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct PolynomialSpec {
    pub leading: C64,
    pub roots: Vec<C64>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    leading: [f64; 2],
    roots: Vec<[f64; 2]>,
    #[serde(default)]
    provenance: Provenance,
}

impl TryFrom<SpecRepr> for PolynomialSpec {
    type Error = Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let leading = C64::new(r.leading[0], r.leading[1]);
        if leading == C64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument("leading coefficient is zero".into()));
        }
        Ok(Self { leading, roots: r.roots.iter().map(|z| C64::new(z[0], z[1])).collect(), provenance: r.provenance })
    }
}

impl From<PolynomialSpec> for SpecRepr {
    fn from(p: PolynomialSpec) -> Self {
        SpecRepr {
            leading: [p.leading.re, p.leading.im],
            roots: p.roots.iter().map(|z| [z.re, z.im]).collect(),
            provenance: p.provenance,
        }
    }
}

impl PolynomialSpec {
    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: Vec<C64>) -> Self {
        Self { leading: C64::new(1.0, 0.0), roots, provenance: Provenance::Explicit }
    }

    pub fn from_real_roots(roots: &[f64]) -> Self {
        Self::from_roots(roots.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    pub fn with_leading(mut self, leading: C64) -> Self {
        self.leading = leading;
        self
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.roots.iter().fold(self.leading, |acc, z| acc * (x - z))
    }

    /// Monomial coefficients, constant term first.
    pub fn coefficients(&self) -> Vec<C64> {
        expand_roots(&self.roots).into_iter().map(|c| c * self.leading).collect()
    }

    /// Polynomial with every root multiplied by `alpha`, so that
    /// `p(H/α) ∝ q(H)` for the returned `q`. The leading coefficient is
    /// rescaled to keep `q(H) = p(H/α)` exactly.
    pub fn rescaled_argument(&self, alpha: f64) -> Self {
        let k = self.degree() as i32;
        Self {
            leading: self.leading * alpha.powi(-k),
            roots: self.roots.iter().map(|z| z * alpha).collect(),
            provenance: self.provenance,
        }
    }
}

/// `Π (H − z_k I) v`, renormalized after each factor.
///
/// Returns the unit vector along `Π (H − z_k I) v` and `ln ‖p(H) v‖`. The
/// modulus of the leading coefficient enters the norm; its phase is dropped.
pub fn apply_poly_log(v: &[C64], h: &impl LinearOp, poly: &PolynomialSpec) -> Result<(Vec<C64>, f64)> {
    let mut cur = v.to_vec();
    let mut log_norm = poly.leading.norm().ln() + norm(v).ln();
    let n0 = norm(&cur);
    cur.iter_mut().for_each(|x| *x /= n0);
    for z in &poly.roots {
        let mut next = h.apply(&cur)?;
        next.iter_mut().zip(&cur).for_each(|(a, b)| *a -= z * b);
        let n = norm(&next);
        if n <= ANNIHILATION_TOL {
            return Err(Error::OracleBreakdown { norm: n });
        }
        next.iter_mut().for_each(|x| *x /= n);
        log_norm += n.ln();
        cur = next;
    }
    Ok((cur, log_norm))
}

/// Dense reference for the normalized action `p(H)|Ψ⟩ / ‖p(H)|Ψ⟩‖`.
///
/// The leading coefficient cancels under normalization and is ignored, as in
/// the recursion, so the result compares to DB-QSP output in raw distance.
///
/// ```
/// use dbqsp::prelude::*;
/// let h = Observable::from_strs(1, &[(1.0, "Z")]).unwrap();
/// let p = PolynomialSpec::from_real_roots(&[1.0]);
/// let r = apply_poly_oracle(&StateVector::zero(1).unwrap(), &h, &p);
/// assert!(matches!(r, Err(Error::OracleBreakdown { .. })));
/// ```
pub fn apply_poly_oracle(state: &StateVector, h: &impl LinearOp, poly: &PolynomialSpec) -> Result<StateVector> {
    let (amps, _) = apply_poly_log(state.amplitudes(), h, poly)?;
    StateVector::new(state.n_qubits(), amps)
}

/// `‖p(H/α)|Ψ⟩‖²`, zero when the polynomial annihilates the state.
pub fn success_probability(state: &StateVector, h: &impl LinearOp, alpha: f64, poly: &PolynomialSpec) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    match apply_poly_log(state.amplitudes(), h, &poly.rescaled_argument(alpha)) {
        Ok((_, ln)) => Ok((2.0 * ln).exp()),
        Err(Error::OracleBreakdown { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}
