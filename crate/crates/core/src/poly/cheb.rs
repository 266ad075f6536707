use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::roots::{companion_eigenvalues, polish, snap_and_sort};
use super::{PolynomialSpec, Provenance};
use crate::error::{Error, Result};
use crate::state::{LinearOp, C64};

/// Highest degree converted to root form. Monomial coefficients of a
/// Chebyshev series grow like `2^K`, and root conditioning degrades with them.
pub const DEGREE_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// `Σ c_m T_m(x)` on `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChebRepr", into = "ChebRepr")]
pub struct ChebSeries {
    coeffs: Vec<f64>,
    parity: Parity,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChebRepr {
    coeffs: Vec<f64>,
    parity: Parity,
}

impl TryFrom<ChebRepr> for ChebSeries {
    type Error = Error;
    fn try_from(r: ChebRepr) -> Result<Self> {
        let s = ChebSeries::new(r.coeffs);
        if s.parity != r.parity {
            return Err(Error::Parse(format!("parity {:?} does not match coefficients ({:?})", r.parity, s.parity)));
        }
        Ok(s)
    }
}

impl From<ChebSeries> for ChebRepr {
    fn from(s: ChebSeries) -> Self {
        ChebRepr { coeffs: s.coeffs, parity: s.parity }
    }
}

impl ChebSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let odd_zero = coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
        let even_zero = coeffs.iter().step_by(2).all(|&c| c == 0.0);
        let parity = if odd_zero {
            Parity::Even
        } else if even_zero {
            Parity::Odd
        } else {
            Parity::Mixed
        };
        Self { coeffs, parity }
    }

    /// Chebyshev interpolant of `f` of the given degree on Gauss nodes.
    pub fn interpolate(f: impl Fn(f64) -> f64, degree: usize) -> Self {
        let m = (2 * (degree + 1)).max(256);
        let theta: Vec<f64> = (0..m).map(|j| std::f64::consts::PI * (j as f64 + 0.5) / m as f64).collect();
        let fx: Vec<f64> = theta.iter().map(|t| f(t.cos())).collect();
        let coeffs = (0..=degree)
            .map(|k| {
                let s: f64 = theta.iter().zip(&fx).map(|(t, v)| v * (k as f64 * t).cos()).sum();
                if k == 0 {
                    s / m as f64
                } else {
                    2.0 * s / m as f64
                }
            })
            .collect();
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Index of the last nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Drop every coefficient above `degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        Self::new(self.coeffs.iter().take(degree + 1).copied().collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * a).collect())
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
    }

    pub fn eval_complex(&self, x: C64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        let (mut b1, mut b2) = (zero, zero);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b = x * b1 * 2.0 - b2 + c;
            b2 = b1;
            b1 = b;
        }
        x * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::new(vec![0.0]);
        }
        // c'_{k−1} = c'_{k+1} + 2k c_k, then halve the constant term.
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] /= 2.0;
        d.truncate(n - 1);
        Self::new(d)
    }

    /// `Σ c_m T_m(H) v` by a vector Clenshaw recurrence.
    pub fn apply(&self, h: &impl LinearOp, v: &[C64]) -> Result<Vec<C64>> {
        let zero = C64::new(0.0, 0.0);
        let mut b1 = vec![zero; v.len()];
        let mut b2 = vec![zero; v.len()];
        for &c in self.coeffs.iter().skip(1).rev() {
            let hb = h.apply(&b1)?;
            let b: Vec<C64> = hb.iter().zip(&b2).zip(v).map(|((x, y), w)| x * 2.0 - y + w * c).collect();
            b2 = std::mem::replace(&mut b1, b);
        }
        let hb = h.apply(&b1)?;
        let c0 = self.coeffs.first().copied().unwrap_or(0.0);
        Ok(hb.iter().zip(&b2).zip(v).map(|((x, y), w)| x - y + w * c0).collect())
    }

    /// Exact monomial coefficients (constant first) of the series as written
    /// in binary floating point, rounded once at the end.
    pub fn to_monomial(&self) -> Vec<f64> {
        let deg = self.degree();
        let basis = chebyshev_monomials(deg);
        let mut acc = vec![BigRational::zero(); deg + 1];
        for (m, &c) in self.coeffs.iter().take(deg + 1).enumerate() {
            if c == 0.0 {
                continue;
            }
            let rc = BigRational::from_float(c).expect("finite coefficient");
            for (i, t) in basis[m].iter().enumerate() {
                if !t.is_zero() {
                    acc[i] += &rc * BigRational::from_integer(t.clone());
                }
            }
        }
        acc.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Root form, via exact monomial conversion and companion eigenvalues
    /// polished against the Chebyshev form.
    pub fn to_poly_spec(&self, provenance: Provenance) -> Result<PolynomialSpec> {
        let deg = self.degree();
        if deg > DEGREE_CAP {
            return Err(Error::InvalidArgument(format!("degree {deg} exceeds the root-form cap {DEGREE_CAP}")));
        }
        let mono = self.to_monomial();
        let lead = mono[deg];
        if lead == 0.0 {
            return Err(Error::InvalidArgument("zero series".into()));
        }
        let monic: Vec<C64> = mono.iter().map(|&c| C64::new(c / lead, 0.0)).collect();
        let mut roots = companion_eigenvalues(&monic)?;
        let d = self.derivative();
        polish(&mut roots, |x| (self.eval_complex(x), d.eval_complex(x)));
        snap_and_sort(&mut roots, super::DEFAULT_REAL_SNAP_TOL);
        Ok(PolynomialSpec { leading: C64::new(lead, 0.0), roots, provenance })
    }
}

/// Integer monomial coefficients of `T_0..=T_n`, constant term first.
pub fn chebyshev_monomials(n: usize) -> Vec<Vec<BigInt>> {
    let mut t: Vec<Vec<BigInt>> = vec![vec![BigInt::from(1)]];
    if n >= 1 {
        t.push(vec![BigInt::from(0), BigInt::from(1)]);
    }
    for k in 2..=n {
        let mut next = vec![BigInt::from(0); k + 1];
        for (i, c) in t[k - 1].iter().enumerate() {
            next[i + 1] += c * 2;
        }
        for (i, c) in t[k - 2].iter().enumerate() {
            next[i] -= c;
        }
        t.push(next);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::apply_poly_oracle;
    use crate::rng::rng;
    use crate::state::{state_distance, StateVector};
    use proptest::prelude::*;

    #[test]
    fn parity_flags() {
        assert_eq!(ChebSeries::new(vec![1.0, 0.0, 2.0]).parity(), Parity::Even);
        assert_eq!(ChebSeries::new(vec![0.0, 1.0, 0.0, 3.0]).parity(), Parity::Odd);
        assert_eq!(ChebSeries::new(vec![1.0, 1.0]).parity(), Parity::Mixed);
        let j = serde_json::to_string(&ChebSeries::new(vec![0.0, 0.5])).unwrap();
        assert_eq!(j, r#"{"coeffs":[0.0,0.5],"parity":"odd"}"#);
        assert!(serde_json::from_str::<ChebSeries>(r#"{"coeffs":[1.0,0.5],"parity":"odd"}"#).is_err());
    }

    #[test]
    fn monomials_of_t4() {
        let t = chebyshev_monomials(4);
        let t4: Vec<i64> = t[4].iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(t4, [1, 0, -8, 0, 8]);
    }

    #[test]
    fn eval_matches_cosine_definition() {
        let s = ChebSeries::new(vec![0.3, -0.2, 0.5, 0.0, 0.1]);
        for x in [-1.0, -0.4, 0.0, 0.77, 1.0f64] {
            let t = x.acos();
            let direct: f64 = s.coeffs().iter().enumerate().map(|(k, c)| c * (k as f64 * t).cos()).sum();
            assert!((s.eval(x) - direct).abs() < 1e-14);
            assert!((s.eval_complex(C64::new(x, 0.0)).re - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_by_finite_difference() {
        let s = ChebSeries::new(vec![0.3, -0.2, 0.5, 0.7, 0.1, -0.3]);
        let d = s.derivative();
        for x in [-0.9, -0.1, 0.4, 0.8f64] {
            let h = 1e-6;
            let fd = (s.eval(x + h) - s.eval(x - h)) / (2.0 * h);
            assert!((d.eval(x) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        let s = ChebSeries::interpolate(|x| 4.0 * x * x * x - 3.0 * x, 5);
        assert!((s.coeffs()[3] - 1.0).abs() < 1e-14);
        assert!(s.coeffs().iter().enumerate().all(|(k, c)| k == 3 || c.abs() < 1e-14));
    }

    fn random_series(seed: u64, deg: usize) -> ChebSeries {
        use rand::Rng;
        let mut r = rng(seed);
        ChebSeries::new((0..=deg).map(|_| r.random_range(-1.0..1.0)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monomial_form_agrees(seed in any::<u64>(), deg in 0usize..=12) {
            let s = random_series(seed, deg);
            let mono = s.to_monomial();
            for x in [-1.0, -0.3, 0.5, 1.0f64] {
                let h = mono.iter().rev().fold(0.0, |acc, c| acc * x + c);
                prop_assert!((h - s.eval(x)).abs() < 1e-10);
            }
        }

        #[test]
        fn root_form_action_matches_series(seed in any::<u64>(), deg in 1usize..=8) {
            let s = random_series(seed, deg);
            let spec = s.to_poly_spec(Provenance::Chebyshev).unwrap();
            let mut r = rng(seed ^ 0x55);
            let o = crate::state::tests::random_observable(2, 3, &mut r);
            let o = o.scaled(1.0 / o.one_norm().max(1.0));
            let v = StateVector::random(2, &mut r).unwrap();
            let direct = s.apply(&o, v.amplitudes()).unwrap();
            let n = crate::state::norm(&direct);
            prop_assume!(n > 1e-6);
            let direct = StateVector::new(2, direct).unwrap();
            let via_roots = apply_poly_oracle(&v, &o, &spec).unwrap();
            // Root form drops the sign of the leading coefficient.
            let sign = spec.leading.re.signum();
            let via_roots = StateVector::new(2, via_roots.amplitudes().iter().map(|x| x * sign).collect()).unwrap();
            prop_assert!(state_distance(&direct, &via_roots, false).unwrap() < 1e-8);
        }
    }
}
