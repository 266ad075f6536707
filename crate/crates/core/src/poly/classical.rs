use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expand_roots;
use crate::error::{Error, Result};
use crate::pauli::Observable;
use crate::state::{EnergyStats, C64};

/// Largest sparse support tolerated while applying powers of `H`.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 22;

/// Evaluation of `m² J^{2k+2} ≤ n^c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    /// Nonzero amplitudes of the initial state.
    pub m: usize,
    /// Pauli terms in `H`.
    pub j: usize,
    /// Step index the moments up to `2k + 2` support.
    pub k: usize,
    pub n_qubits: usize,
    /// Exponent `c` of the `poly(n) = n^c` budget.
    pub poly_exponent: f64,
    /// `log(m² J^{2k+2})`.
    pub log_lhs: f64,
    /// `log(n^c)`.
    pub log_rhs: f64,
    pub feasible: bool,
    /// Largest `k` that passes, `None` when even `k = 0` fails.
    pub k_max: Option<usize>,
}

impl Feasibility {
    pub fn evaluate(m: usize, j: usize, k: usize, n_qubits: usize, poly_exponent: f64) -> Self {
        let lm = (m.max(1) as f64).ln();
        let lj = (j.max(1) as f64).ln();
        let log_lhs = 2.0 * lm + (2 * k + 2) as f64 * lj;
        let log_rhs = poly_exponent * (n_qubits.max(1) as f64).ln();
        let k_max = if lj == 0.0 {
            (2.0 * lm <= log_rhs).then_some(usize::MAX)
        } else {
            let bound = (log_rhs / 2.0 - lm) / lj - 1.0 + 1e-9;
            (bound >= 0.0).then(|| bound.floor() as usize)
        };
        Self { m, j, k, n_qubits, poly_exponent, log_lhs, log_rhs, feasible: log_lhs <= log_rhs + 1e-9, k_max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMoments {
    /// `⟨Ψ₀|H^l|Ψ₀⟩` for `l = 0..=l_max`.
    pub moments: Vec<f64>,
    /// Largest sparse support met along the way.
    pub peak_support: usize,
    pub feasibility: Feasibility,
}

fn apply_sparse(h: &Observable, v: &BTreeMap<usize, C64>, cap: usize) -> Result<BTreeMap<usize, C64>> {
    let mut out: BTreeMap<usize, C64> = BTreeMap::new();
    for t in h.terms() {
        for (&b, &amp) in v {
            let (ph, tgt) = t.p.apply_basis(b);
            *out.entry(tgt).or_insert(C64::new(0.0, 0.0)) += ph * amp * t.w;
        }
        if out.len() > cap {
            return Err(Error::MemoryCap { entries: out.len(), cap });
        }
    }
    out.retain(|_, a| a.norm() != 0.0);
    Ok(out)
}

fn sparse_inner(a: &BTreeMap<usize, C64>, b: &BTreeMap<usize, C64>) -> C64 {
    a.iter().filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y)).sum()
}

/// `⟨Ψ₀|H^l|Ψ₀⟩` for `l ≤ l_max` from a sparse state, without densifying.
///
/// Only `H^{⌈l_max/2⌉}|Ψ₀⟩` is formed; each moment is an overlap of two half powers.
/// The feasibility report takes `k = max(0, ⌈l_max/2⌉ − 1)`, the step whose
/// energy and variance need moments up to `2k + 2`.
pub fn classical_moments(
    sparse_state: &BTreeMap<usize, C64>,
    h: &Observable,
    l_max: usize,
    poly_exponent: f64,
    support_cap: usize,
) -> Result<ClassicalMoments> {
    let dim = h.dim();
    if let Some((&b, _)) = sparse_state.iter().find(|(&b, _)| b >= dim) {
        return Err(Error::Dimension { expected: dim, found: b + 1 });
    }
    let nrm = sparse_state.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return Err(Error::InvalidArgument("zero state".into()));
    }
    let v0: BTreeMap<usize, C64> = sparse_state.iter().map(|(&k, &a)| (k, a / nrm)).filter(|(_, a)| a.norm() != 0.0).collect();
    let half = l_max.div_ceil(2);
    let mut powers = vec![v0];
    let mut peak = powers[0].len();
    for _ in 0..half {
        let next = apply_sparse(h, powers.last().expect("nonempty"), support_cap)?;
        peak = peak.max(next.len());
        powers.push(next);
    }
    let moments = (0..=l_max)
        .map(|l| {
            let (a, b) = (l / 2, l - l / 2);
            sparse_inner(&powers[a], &powers[b]).re
        })
        .collect();
    let k = half.saturating_sub(1);
    let feasibility = Feasibility::evaluate(powers[0].len(), h.len(), k, h.n_qubits(), poly_exponent);
    Ok(ClassicalMoments { moments, peak_support: peak, feasibility })
}

/// Energy and variance of `q(H)|Ψ₀⟩/‖q(H)|Ψ₀⟩‖` with `q = Π (x − z)` over
/// `roots`, from the moments of `|Ψ₀⟩`.
///
/// After `k` exact DB-QSP steps the state is this normalized vector, so the
/// step-`k` moments need `⟨H^l⟩` up to `l = 2k + 2`.
pub fn moments_to_stats(moments: &[f64], roots: &[C64]) -> Result<EnergyStats> {
    let need = 2 * roots.len() + 2;
    if moments.len() <= need {
        return Err(Error::InvalidArgument(format!("{} roots need moments up to order {need}", roots.len())));
    }
    // |q(x)|² = Π (x − z)(x − z̄) has real coefficients.
    let conj: Vec<C64> = roots.iter().map(|z| z.conj()).collect();
    let all: Vec<C64> = roots.iter().chain(&conj).copied().collect();
    let w: Vec<f64> = expand_roots(&all).iter().map(|c| c.re).collect();
    let m = |shift: usize| w.iter().enumerate().map(|(l, c)| c * moments[l + shift]).sum::<f64>();
    let (m0, m1, m2) = (m(0), m(1), m(2));
    if m0 <= 0.0 {
        return Err(Error::OracleBreakdown { norm: m0.max(0.0).sqrt() });
    }
    let energy = m1 / m0;
    Ok(EnergyStats { energy, variance: (m2 / m0 - energy * energy).max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Observable;
    use crate::rng::rng;
    use crate::state::{energy_stats, StateVector};
    use rand::Rng;

    fn basis(k: usize) -> BTreeMap<usize, C64> {
        BTreeMap::from([(k, C64::new(1.0, 0.0))])
    }

    #[test]
    fn eigenstate_moments() {
        let h = Observable::from_strs(3, &[(1.0, "ZII")]).unwrap();
        let r = classical_moments(&basis(0), &h, 6, 2.0, DEFAULT_SUPPORT_CAP).unwrap();
        assert!(r.moments.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn x_moments_alternate() {
        let h = Observable::from_strs(1, &[(1.0, "X")]).unwrap();
        let r = classical_moments(&basis(0), &h, 5, 2.0, DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(r.moments, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn matches_dense() {
        let mut r = rng(11);
        let h = Observable::from_strs(3, &[(0.7, "XZI"), (-0.4, "IYY"), (0.3, "ZIX")]).unwrap();
        let mut sparse = BTreeMap::new();
        for k in [1usize, 4, 6] {
            sparse.insert(k, C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        }
        let got = classical_moments(&sparse, &h, 6, 2.0, DEFAULT_SUPPORT_CAP).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); 8];
        for (&k, &a) in &sparse {
            amps[k] = a;
        }
        let psi = StateVector::new(3, amps).unwrap().to_dvector();
        let d = h.to_dense().unwrap();
        let mut v = psi.clone();
        for l in 0..=6 {
            let mom = psi.dotc(&v).re;
            assert!((mom - got.moments[l]).abs() < 1e-10, "l={l}");
            v = &d * v;
        }
    }

    #[test]
    fn support_cap() {
        let h = Observable::from_strs(2, &[(1.0, "XI"), (1.0, "IX")]).unwrap();
        assert!(matches!(classical_moments(&basis(0), &h, 4, 2.0, 1), Err(Error::MemoryCap { .. })));
    }

    #[test]
    fn feasibility_examples() {
        // m = 1, J = 2, n = 4, c = 2: 2^{2k+2} ≤ 16 ⇔ k ≤ 1.
        let f = Feasibility::evaluate(1, 2, 1, 4, 2.0);
        assert!(f.feasible);
        assert_eq!(f.k_max, Some(1));
        assert!(!Feasibility::evaluate(1, 2, 2, 4, 2.0).feasible);
        assert_eq!(Feasibility::evaluate(100, 50, 0, 4, 2.0).k_max, None);
    }

    #[test]
    fn stats_from_moments_match_dense_recursion() {
        let h = Observable::from_strs(2, &[(0.6, "ZZ"), (0.5, "XI"), (-0.3, "IY")]).unwrap();
        let roots = [C64::new(0.2, 0.0), C64::new(-0.1, 0.4)];
        let r = classical_moments(&basis(0), &h, 2 * roots.len() + 2, 2.0, DEFAULT_SUPPORT_CAP).unwrap();
        let mut psi = StateVector::zero(2).unwrap();
        for k in 0..=roots.len() {
            let dense = energy_stats(&psi, &h).unwrap();
            let via = moments_to_stats(&r.moments, &roots[..k]).unwrap();
            assert!((dense.energy - via.energy).abs() < 1e-12);
            assert!((dense.variance - via.variance).abs() < 1e-12);
            if k < roots.len() {
                let p = crate::poly::PolynomialSpec::from_roots(vec![roots[k]]);
                psi = crate::poly::apply_poly_oracle(&psi, &h, &p).unwrap();
            }
        }
    }
}
