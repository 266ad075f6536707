use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j;
use super::cheb::ChebSeries;
use super::{PolynomialSpec, Provenance};
use crate::error::{Error, Result};
use crate::state::C64;

/// Largest `a = ⌈κ² ln(κ/ε)⌉` accepted by [`inverse_approx`].
pub const DEFAULT_INVERSE_A_CAP: u64 = 20_000;

const SWEEP_POINTS: usize = 10_001;

fn sweep(lo: f64, hi: f64, n: usize) -> impl ParallelIterator<Item = f64> {
    (0..n).into_par_iter().map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

/// Largest `|f(x) − g(x)|` over `n` evenly spaced points of `[lo, hi]`.
pub(crate) fn sup_error(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64 + Sync) -> f64 {
    sweep(lo, hi, n).map(|x| f(x).abs()).reduce(|| 0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobiKind {
    Cos,
    Sin,
}

/// Truncated Jacobi–Anger series for `cos(tx)` or `sin(tx)` on `[−1, 1]`,
/// cut at the lowest degree whose measured sup error is at most `epsilon`.
///
/// ```
/// use dbqsp::poly::{jacobi_anger, JacobiKind};
/// let s = jacobi_anger(5.0, 1e-6, JacobiKind::Cos).unwrap();
/// assert!((s.eval(0.3) - (1.5f64).cos()).abs() < 1e-6);
/// ```
pub fn jacobi_anger(t: f64, epsilon: f64, kind: JacobiKind) -> Result<ChebSeries> {
    if !(epsilon > 0.0 && epsilon < (-1.0f64).exp()) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/e), got {epsilon}")));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument("t must be finite".into()));
    }
    let n_max = (std::f64::consts::E * t.abs()) as usize + 2 * (1.0 / epsilon).ln().ceil() as usize + 40;
    let j = bessel_j(n_max, t);
    let mut full = vec![0.0; n_max + 1];
    for (n, c) in full.iter_mut().enumerate() {
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        *c = match (kind, n % 2) {
            (JacobiKind::Cos, 0) if n == 0 => j[0],
            (JacobiKind::Cos, 0) | (JacobiKind::Sin, 1) => 2.0 * sign * j[n],
            _ => 0.0,
        };
    }
    let target = |x: f64| match kind {
        JacobiKind::Cos => (t * x).cos(),
        JacobiKind::Sin => (t * x).sin(),
    };
    let start = usize::from(kind == JacobiKind::Sin);
    for deg in (start..=n_max).step_by(2) {
        let s = ChebSeries::new(full[..=deg].to_vec());
        if sup_error(-1.0, 1.0, SWEEP_POINTS, |x| s.eval(x) - target(x)) <= epsilon {
            return Ok(s);
        }
    }
    Err(Error::Approximation(format!("Jacobi-Anger series for t={t} did not reach {epsilon} by degree {n_max}")))
}

/// Odd polynomial approximating `sgn(x)` on `[−2, 2]` away from `(−δ, δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignApprox {
    /// Series in `y = x / x_scale`.
    pub series: ChebSeries,
    pub x_scale: f64,
    /// Steepness of the underlying `erf(γx)`.
    pub gamma: f64,
    /// Measured `sup |p(x) − sgn(x)|` over `δ ≤ |x| ≤ 2`.
    pub sup_error: f64,
    /// Measured `sup |p(x)|` over `[−2, 2]`.
    pub sup_abs: f64,
}

impl SignApprox {
    pub fn eval(&self, x: f64) -> f64 {
        self.series.eval(x / self.x_scale)
    }

    pub fn degree(&self) -> usize {
        self.series.degree()
    }
}

/// Chebyshev expansion of `erf(γx)` with `erfc(γδ) = ε/2`, truncated once the
/// coefficient tail drops below `ε/4` and divided by its maximum modulus
/// when that exceeds one.
pub fn sign_approx(delta: f64, epsilon: f64) -> Result<SignApprox> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let x_scale = 2.0;
    let gamma = statrs::function::erf::erfc_inv(epsilon / 2.0) / delta;
    let g = gamma * x_scale;
    let d_max = ((16.0 * g) as usize + 200).min(20_000);
    let full = ChebSeries::interpolate(|y| statrs::function::erf::erf(g * y), d_max);
    let c = full.coeffs();
    let mut tail = 0.0;
    let mut deg = d_max;
    for k in (0..=d_max).rev() {
        if tail + c[k].abs() > epsilon / 4.0 {
            deg = k;
            break;
        }
        tail += c[k].abs();
    }
    // Keep only odd terms: erf is odd, and even coefficients are interpolation noise.
    let odd: Vec<f64> = c[..=deg].iter().enumerate().map(|(k, &v)| if k % 2 == 1 { v } else { 0.0 }).collect();
    let mut series = ChebSeries::new(odd);
    let peak = sup_error(-1.0, 1.0, 4 * SWEEP_POINTS, |y| series.eval(y));
    if peak > 1.0 {
        series = series.scaled(1.0 / (peak * (1.0 + 1e-12)));
    }
    let sup_abs = sup_error(-1.0, 1.0, 4 * SWEEP_POINTS, |y| series.eval(y));
    let err = sup_error(delta, x_scale, SWEEP_POINTS, |x| series.eval(x / x_scale) - 1.0);
    let out = SignApprox { series, x_scale, gamma, sup_error: err, sup_abs };
    if err > epsilon {
        return Err(Error::Approximation(format!(
            "sign approximation reached {err:e} > {epsilon:e} at degree {}",
            out.degree()
        )));
    }
    Ok(out)
}

/// The explicit odd approximation of `1/x` on `[−1, −1/κ] ∪ [1/κ, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseApprox {
    pub series: ChebSeries,
    pub spec: PolynomialSpec,
    /// `a = ⌈κ² ln(κ/ε)⌉`, the power in `(1 − (1 − x²)^a)/x`.
    pub a: u64,
    /// `K = ⌈√(a ln(4a/ε))⌉`; the series stops at `T_{2K+1}`.
    pub k: u64,
}

/// `g(x) = 4 Σ_{l=0}^{K} (−1)^l [Σ_{j=l+1}^{a} C(2a, a+j) / 2^{2a}] T_{2l+1}(x)`,
/// with the binomial tail sums computed exactly.
///
/// ```
/// use dbqsp::poly::inverse_approx;
/// let inv = inverse_approx(2.0, 0.1, None).unwrap();
/// assert_eq!(inv.series.degree(), 19);
/// assert!((inv.series.eval(0.75) - 1.0 / 0.75).abs() < 0.1);
/// ```
pub fn inverse_approx(kappa: f64, epsilon: f64, a_cap: Option<u64>) -> Result<InverseApprox> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa must exceed 1, got {kappa}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let a_f = (kappa * kappa * (kappa / epsilon).ln()).ceil();
    let cap = a_cap.unwrap_or(DEFAULT_INVERSE_A_CAP);
    if a_f > cap as f64 {
        return Err(Error::InvalidArgument(format!("a = {a_f} exceeds the cap {cap}")));
    }
    let a = a_f as u64;
    let k = (a as f64 * (4.0 * a as f64 / epsilon).ln()).sqrt().ceil() as u64;

    // C(2a, a+j) for j = 0..=a.
    let mut binom = vec![BigInt::one(); a as usize + 1];
    let mut cur = BigInt::one(); // C(2a, 2a)
    for j in (0..a).rev() {
        // C(2a, a+j) = C(2a, a+j+1) · (a+j+1) / (a−j)
        cur = cur * BigInt::from(a + j + 1) / BigInt::from(a - j);
        binom[j as usize] = cur.clone();
    }
    let denom = BigInt::one() << (2 * a as usize);
    let mut coeffs = vec![0.0; 2 * k as usize + 2];
    // suffix[l] = Σ_{j=l+1}^{a} C(2a, a+j)
    let mut suffix = BigInt::zero();
    let mut tails = vec![BigInt::zero(); a as usize + 1];
    for j in (1..=a as usize).rev() {
        suffix += &binom[j];
        tails[j - 1] = suffix.clone();
    }
    for l in 0..=k as usize {
        if l >= a as usize {
            break;
        }
        let r = BigRational::new(tails[l].clone() * 4, denom.clone());
        let v = r.to_f64().expect("finite");
        coeffs[2 * l + 1] = if l % 2 == 0 { v } else { -v };
    }
    let series = ChebSeries::new(coeffs);
    let spec = series.to_poly_spec(Provenance::InverseApprox)?;
    Ok(InverseApprox { series, spec, a, k })
}

/// `f(x) = (1 − (1 − x²)^a)/x`, the function the inverse series truncates.
pub fn inverse_target(a: u64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (1.0 - (1.0 - x * x).powf(a as f64)) / x
}

/// First-order imaginary-time filter `I − τH = −τ (H − I/τ)`.
pub fn ite_linear_filter(tau: f64) -> Result<PolynomialSpec> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    Ok(PolynomialSpec::from_roots(vec![C64::new(1.0 / tau, 0.0)]).with_leading(C64::new(-tau, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Observable;
    use crate::poly::{apply_poly_oracle, Parity};
    use crate::state::{state_distance, StateVector};

    #[test]
    fn jacobi_anger_examples() {
        let s = jacobi_anger(0.0, 1e-6, JacobiKind::Cos).unwrap();
        assert_eq!(s.coeffs(), &[1.0]);
        let s = jacobi_anger(5.0, 1e-6, JacobiKind::Cos).unwrap();
        assert!(sup_error(-1.0, 1.0, 10_001, |x| s.eval(x) - (5.0 * x).cos()) <= 1e-6);
        assert_eq!(s.parity(), Parity::Even);
        let s = jacobi_anger(5.0, 1e-6, JacobiKind::Sin).unwrap();
        assert_eq!(s.parity(), Parity::Odd);
        assert!(sup_error(-1.0, 1.0, 10_001, |x| s.eval(x) - (5.0 * x).sin()) <= 1e-6);
        assert!(jacobi_anger(1.0, 0.5, JacobiKind::Cos).is_err());
    }

    #[test]
    fn jacobi_anger_degree_growth_is_sublinear_in_log() {
        // Degree increments per decade of ε shrink as ε decreases.
        let degs: Vec<usize> =
            [1e-2, 1e-4, 1e-6, 1e-8, 1e-10].iter().map(|&e| jacobi_anger(10.0, e, JacobiKind::Cos).unwrap().degree()).collect();
        let first = degs[1] - degs[0];
        let last = degs[4] - degs[3];
        assert!(last <= first, "{degs:?}");
        assert!(degs.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn sign_examples() {
        let s = sign_approx(0.3, 0.05).unwrap();
        assert_eq!(s.eval(0.0), 0.0);
        assert!(s.sup_error <= 0.05);
        assert!(sup_error(0.3, 2.0, 10_001, |x| s.eval(x) - 1.0) <= 0.05);
        assert!(sup_error(-2.0, -0.3, 10_001, |x| s.eval(x) + 1.0) <= 0.05);
        assert!(s.sup_abs <= 1.0);
        for x in [0.1, 0.77, 1.3, 1.99] {
            assert_eq!(s.eval(-x), -s.eval(x));
        }
        assert_eq!(s.series.parity(), Parity::Odd);
    }

    #[test]
    fn sign_degree_scaling() {
        // Degree ∝ log(1/ε)/δ: fit log(deg) against log(log(1/ε)/δ), slope ≈ 1.
        let mut xs = vec![];
        let mut ys = vec![];
        for &d in &[0.05, 0.1, 0.2, 0.4] {
            for &e in &[1e-2, 1e-4, 1e-6] {
                let s = sign_approx(d, e).unwrap();
                assert!(s.sup_error <= e);
                xs.push(((1.0f64 / e).ln() / d).ln());
                ys.push((s.degree() as f64).ln());
            }
        }
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((0.7..=1.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn inverse_shape() {
        let inv = inverse_approx(2.0, 0.1, None).unwrap();
        assert_eq!((inv.a, inv.k), (12, 9));
        assert_eq!(inv.series.parity(), Parity::Odd);
        assert!(inv.series.coeffs().iter().step_by(2).all(|&c| c == 0.0));
        assert_eq!(inv.spec.degree(), 19);
        assert!(inverse_approx(2.0, 0.1, Some(5)).is_err());
    }

    #[test]
    fn inverse_grid() {
        for &kappa in &[1.5, 2.0, 3.0] {
            for &eps in &[0.1, 0.05, 0.01] {
                let inv = inverse_approx(kappa, eps, None).unwrap();
                let s = &inv.series;
                let err = sup_error(1.0 / kappa, 1.0, 10_000, |x| s.eval(x) - 1.0 / x)
                    .max(sup_error(-1.0, -1.0 / kappa, 10_000, |x| s.eval(x) - 1.0 / x));
                assert!(err <= eps, "kappa {kappa} eps {eps}: {err}");
                let to_f = sup_error(-1.0, 1.0, 10_000, |x| s.eval(x) - inverse_target(inv.a, x));
                assert!(to_f <= eps, "kappa {kappa} eps {eps}: {to_f}");
            }
        }
    }

    #[test]
    fn inverse_roots_reproduce_series() {
        let inv = inverse_approx(2.0, 0.1, None).unwrap();
        for x in [0.5, 0.6, 0.9, -0.7] {
            let v = inv.spec.eval(C64::new(x, 0.0));
            assert!((v.re - inv.series.eval(x)).abs() < 1e-9 && v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn ite_filter() {
        assert_eq!(ite_linear_filter(1.0).unwrap().roots, vec![C64::new(1.0, 0.0)]);
        assert_eq!(ite_linear_filter(0.5).unwrap().roots, vec![C64::new(2.0, 0.0)]);
        let z = Observable::from_strs(1, &[(1.0, "Z")]).unwrap();
        let plus = StateVector::product("+").unwrap();
        let got = apply_poly_oracle(&plus, &z, &ite_linear_filter(0.5).unwrap()).unwrap();
        // (I − Z/2)|+⟩ ∝ (1/2)|0⟩ + (3/2)|1⟩; the oracle drops the leading sign.
        let expect = StateVector::new(1, vec![C64::new(-0.5, 0.0), C64::new(-1.5, 0.0)]).unwrap();
        assert!(state_distance(&got, &expect, false).unwrap() < 1e-15);
        assert!(ite_linear_filter(0.0).is_err());
    }
}
