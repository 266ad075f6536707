//! Dense state vectors and the three primitive unitaries DB-QSP is built from:
//! reflections about a state, Hamiltonian evolution, and the double-bracket
//! exponential `e^{s[Ψ,H]}`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{check_cap, Observable, DEFAULT_DENSE_CAP};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Variances below this are treated as zero in the `A(s)`, `B(s)` coefficients.
pub const VARIANCE_LIMIT: f64 = 1e-14;

/// Unit-norm amplitude vector over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRepr {
    n_qubits: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<StateRepr> for StateVector {
    type Error = Error;
    fn try_from(r: StateRepr) -> Result<Self> {
        if r.re.len() != r.im.len() {
            return Err(Error::Dimension { expected: r.re.len(), found: r.im.len() });
        }
        let amps = r.re.iter().zip(&r.im).map(|(&a, &b)| C64::new(a, b)).collect();
        StateVector::new(r.n_qubits, amps)
    }
}

impl From<StateVector> for StateRepr {
    fn from(s: StateVector) -> Self {
        StateRepr {
            n_qubits: s.n_qubits,
            re: s.amps.iter().map(|a| a.re).collect(),
            im: s.amps.iter().map(|a| a.im).collect(),
        }
    }
}

impl StateVector {
    /// Normalizes `amps`; fails on length mismatch or zero norm.
    pub fn new(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        Self::with_drift(n_qubits, amps).map(|(s, _)| s)
    }

    /// Like [`StateVector::new`], also returning `|‖amps‖ − 1|` before normalization.
    pub fn with_drift(n_qubits: usize, mut amps: Vec<C64>) -> Result<(Self, f64)> {
        if n_qubits == 0 || n_qubits >= usize::BITS as usize {
            return Err(Error::InvalidArgument(format!("bad qubit count {n_qubits}")));
        }
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(Error::Dimension { expected: dim, found: amps.len() });
        }
        let norm = norm(&amps);
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::OracleBreakdown { norm });
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok((Self { n_qubits, amps }, (norm - 1.0).abs()))
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(n_qubits, amps)
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Product state from one symbol per qubit: `0`, `1`, `+`, `-`, `r` (|+i⟩), `l` (|−i⟩).
    pub fn product(spec: &str) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for c in spec.chars() {
            let q: [C64; 2] = match c {
                '0' => [C64::new(1.0, 0.0), ZERO],
                '1' => [ZERO, C64::new(1.0, 0.0)],
                '+' => [C64::new(h, 0.0), C64::new(h, 0.0)],
                '-' => [C64::new(h, 0.0), C64::new(-h, 0.0)],
                'r' => [C64::new(h, 0.0), C64::new(0.0, h)],
                'l' => [C64::new(h, 0.0), C64::new(0.0, -h)],
                _ => return Err(Error::Parse(format!("unknown product-state symbol {c:?}"))),
            };
            amps = amps.iter().flat_map(|&a| [a * q[0], a * q[1]]).collect();
        }
        Self::new(spec.chars().count(), amps)
    }

    /// Haar-random state.
    pub fn random(n_qubits: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        let amps = (0..1usize << n_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::new(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps)
    }

    fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Anything that can act on amplitude vectors as a Hermitian operator.
pub trait LinearOp: Sync {
    fn n_qubits(&self) -> usize;
    fn apply(&self, v: &[C64]) -> Result<Vec<C64>>;
}

impl LinearOp for Observable {
    fn n_qubits(&self) -> usize {
        Observable::n_qubits(self)
    }
    fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        Observable::apply(self, v)
    }
}

#[derive(Debug)]
struct Eigen {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

/// A dense Hermitian matrix with a lazily computed, shared eigendecomposition.
///
/// The decomposition is computed once on first use of [`apply_evolution`] and
/// reused by every later call on the same value, across threads.
#[derive(Debug)]
pub struct HermitianOperator {
    n_qubits: usize,
    matrix: DMatrix<C64>,
    observable: Option<Observable>,
    eigen: OnceLock<Eigen>,
}

impl Clone for HermitianOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(Eigen { values: e.values.clone(), vectors: e.vectors.clone() });
        }
        Self { n_qubits: self.n_qubits, matrix: self.matrix.clone(), observable: self.observable.clone(), eigen }
    }
}

impl HermitianOperator {
    pub fn from_observable(h: &Observable) -> Result<Self> {
        Self::from_observable_capped(h, DEFAULT_DENSE_CAP)
    }

    pub fn from_observable_capped(h: &Observable, cap: usize) -> Result<Self> {
        Ok(Self {
            n_qubits: h.n_qubits(),
            matrix: h.to_dense_capped(cap)?,
            observable: Some(h.clone()),
            eigen: OnceLock::new(),
        })
    }

    /// Wraps a dense matrix; rejects non-square, non-power-of-two or non-Hermitian input.
    pub fn from_dense(matrix: DMatrix<C64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::Dimension { expected: dim, found: matrix.ncols() });
        }
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("dimension {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_cap(n_qubits, DEFAULT_DENSE_CAP)?;
        let scale = matrix.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if (&matrix - matrix.adjoint()).iter().any(|x| x.norm() > 1e-12 * scale) {
            return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
        }
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self { n_qubits, matrix, observable: None, eigen: OnceLock::new() })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// The Pauli decomposition, when the operator was built from one.
    pub fn observable(&self) -> Option<&Observable> {
        self.observable.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn eigen(&self) -> &Eigen {
        self.eigen.get_or_init(|| {
            let e = self.matrix.clone().symmetric_eigen();
            Eigen { values: e.eigenvalues, vectors: e.eigenvectors }
        })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigen().values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Lowest eigenvalue and a unit eigenvector for it.
    pub fn ground_state(&self) -> Result<(f64, StateVector)> {
        let e = self.eigen();
        let (k, &lam) = e
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("operators have dimension ≥ 2");
        let amps = e.vectors.column(k).iter().copied().collect();
        Ok((lam, StateVector::new(self.n_qubits, amps)?))
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigen().values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `f(H) v` through the eigendecomposition.
    pub fn apply_function(&self, v: &[C64], f: impl Fn(f64) -> C64) -> Result<Vec<C64>> {
        self.check_len(v.len())?;
        let e = self.eigen();
        let coeffs = e.vectors.adjoint() * DVector::from_column_slice(v);
        let scaled = DVector::from_iterator(coeffs.len(), coeffs.iter().zip(e.values.iter()).map(|(c, &l)| c * f(l)));
        Ok((&e.vectors * scaled).iter().copied().collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: len });
        }
        Ok(())
    }
}

impl LinearOp for HermitianOperator {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check_len(v.len())?;
        Ok((&self.matrix * DVector::from_column_slice(v)).iter().copied().collect())
    }
}

/// Energy mean and variance of a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub energy: f64,
    pub variance: f64,
}

impl EnergyStats {
    /// `⟨H²⟩ = V + E²`.
    pub fn second_moment(&self) -> f64 {
        self.variance + self.energy * self.energy
    }
}

/// `E = ⟨Ψ|H|Ψ⟩` and `V = ⟨Ψ|H²|Ψ⟩ − E²`.
///
/// ```
/// use dbqsp::prelude::*;
/// let h = Observable::from_strs(1, &[(1.0, "Z"), (1.0, "X")]).unwrap();
/// let s = energy_stats(&StateVector::zero(1).unwrap(), &h).unwrap();
/// assert!((s.energy - 1.0).abs() < 1e-12 && (s.variance - 1.0).abs() < 1e-12);
/// ```
pub fn energy_stats(state: &StateVector, h: &impl LinearOp) -> Result<EnergyStats> {
    let hv = h.apply(&state.amps)?;
    Ok(stats_from_image(&state.amps, &hv))
}

fn stats_from_image(v: &[C64], hv: &[C64]) -> EnergyStats {
    let energy = inner(v, hv).re;
    let second = hv.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let mut variance = second - energy * energy;
    // Cancellation noise scales with the second moment.
    if variance < 0.0 && variance > -1e-12 * second.max(1.0) {
        variance = 0.0;
    }
    EnergyStats { energy, variance }
}

/// `e^{iθ|a⟩⟨a|}` applied to `state`.
pub fn apply_reflection(state: &StateVector, axis: &StateVector, theta: f64) -> Result<StateVector> {
    state.check_same(axis)?;
    if theta == 0.0 {
        return Ok(state.clone());
    }
    let c = (C64::from_polar(1.0, theta) - 1.0) * axis.inner(state);
    let amps = state.amps.iter().zip(&axis.amps).map(|(s, a)| s + c * a).collect();
    StateVector::new(state.n_qubits, amps)
}

/// `e^{itH}` applied to `state`.
pub fn apply_evolution(state: &StateVector, h: &HermitianOperator, t: f64) -> Result<StateVector> {
    if t == 0.0 {
        return Ok(state.clone());
    }
    let amps = h.apply_function(&state.amps, |l| C64::from_polar(1.0, t * l))?;
    StateVector::new(state.n_qubits, amps)
}

/// Coefficients `A(s) = sin(s√V)/√V` and `B(s) = (1 − cos(s√V))/V` of
/// `e^{s[Ψ,H]} = I + A[Ψ,H] + B[Ψ,H]²`.
pub fn commutator_coefficients(s: f64, variance: f64) -> (f64, f64) {
    if variance < VARIANCE_LIMIT {
        return (s, s * s / 2.0);
    }
    let r = variance.sqrt();
    // 1 − cos x = 2 sin²(x/2) avoids cancellation at small x.
    let half = (s * r / 2.0).sin();
    ((s * r).sin() / r, 2.0 * half * half / variance)
}

/// `a(s)`, `b(s)` with `e^{s[Ψ,H]}|Ψ⟩ = (a I + b H)|Ψ⟩`.
pub fn state_action_coefficients(s: f64, stats: EnergyStats) -> (f64, f64) {
    let (a, b) = commutator_coefficients(s, stats.variance);
    (1.0 + a * stats.energy - b * stats.variance, -a)
}

/// `[Ψ,H] v` with `Ψ = |ψ⟩⟨ψ|`, given `hpsi = H|ψ⟩`.
///
/// `[Ψ,H]v = |ψ⟩⟨Hψ|v⟩ − |Hψ⟩⟨ψ|v⟩`, so the action never touches `H` again.
pub fn commutator_action(psi: &[C64], hpsi: &[C64], v: &[C64]) -> Vec<C64> {
    let a = inner(hpsi, v);
    let b = inner(psi, v);
    psi.iter().zip(hpsi).map(|(p, h)| p * a - h * b).collect()
}

/// `e^{s[Ψ,H]}` applied to `state`, via effective idempotence.
pub fn apply_commutator_exp(state: &StateVector, psi: &StateVector, h: &impl LinearOp, s: f64) -> Result<StateVector> {
    state.check_same(psi)?;
    if s == 0.0 {
        return Ok(state.clone());
    }
    let hpsi = h.apply(&psi.amps)?;
    let stats = stats_from_image(&psi.amps, &hpsi);
    let (a, b) = commutator_coefficients(s, stats.variance);
    let w1 = commutator_action(&psi.amps, &hpsi, &state.amps);
    let w2 = commutator_action(&psi.amps, &hpsi, &w1);
    let amps = state.amps.iter().zip(w1.iter().zip(&w2)).map(|(v, (x, y))| v + x * a + y * b).collect();
    StateVector::new(state.n_qubits, amps)
}

/// `‖a − b‖`, or `min_φ ‖a − e^{iφ} b‖ = √(2 − 2|⟨a|b⟩|)` when `phase_aligned`.
pub fn state_distance(a: &StateVector, b: &StateVector, phase_aligned: bool) -> Result<f64> {
    a.check_same(b)?;
    if phase_aligned {
        Ok((2.0 - 2.0 * a.inner(b).norm()).max(0.0).sqrt())
    } else {
        Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::rng;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    /// Scaling-and-squaring Taylor exponential; independent of the closed forms above.
    pub(crate) fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
        let norm = m.iter().map(|x| x.norm()).sum::<f64>();
        let mut k = 0;
        while norm / 2f64.powi(k) > 0.25 {
            k += 1;
        }
        let a = m / C64::new(2f64.powi(k), 0.0);
        let n = m.nrows();
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut sum = term.clone();
        for j in 1..30 {
            term = &term * &a / C64::new(j as f64, 0.0);
            sum += &term;
        }
        for _ in 0..k {
            sum = &sum * &sum;
        }
        sum
    }

    pub(crate) fn projector(psi: &StateVector) -> DMatrix<C64> {
        let v = psi.to_dvector();
        &v * v.adjoint()
    }

    pub(crate) fn random_observable(n: usize, terms: usize, r: &mut impl rand::Rng) -> Observable {
        let letters = ['I', 'X', 'Y', 'Z'];
        let t = (0..terms)
            .map(|_| {
                let s: String = (0..n).map(|_| letters[r.random_range(0..4)]).collect();
                (r.random_range(-1.0..1.0), s.parse().unwrap())
            })
            .collect::<Vec<_>>();
        Observable::new(n, t).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_state(s: &StateVector, expect: &[C64], tol: f64) {
        for (a, b) in s.amplitudes().iter().zip(expect) {
            assert!((a - b).norm() <= tol, "{:?} vs {:?}", s.amplitudes(), expect);
        }
    }

    fn obs(n: usize, t: &[(f64, &str)]) -> Observable {
        Observable::from_strs(n, t).unwrap()
    }

    #[test]
    fn energy_examples() {
        let z = obs(1, &[(1.0, "Z")]);
        let s = energy_stats(&StateVector::zero(1).unwrap(), &z).unwrap();
        assert_eq!((s.energy, s.variance), (1.0, 0.0));
        let s = energy_stats(&StateVector::product("+").unwrap(), &z).unwrap();
        assert!(s.energy.abs() < 1e-15 && (s.variance - 1.0).abs() < 1e-15);
        let s = energy_stats(&StateVector::zero(1).unwrap(), &obs(1, &[(1.0, "Z"), (1.0, "X")])).unwrap();
        assert!((s.energy - 1.0).abs() < 1e-15 && (s.variance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn energy_dims_checked() {
        let z = obs(2, &[(1.0, "ZZ")]);
        assert!(matches!(energy_stats(&StateVector::zero(1).unwrap(), &z), Err(Error::Dimension { .. })));
    }

    #[test]
    fn reflection_examples() {
        let plus = StateVector::product("+").unwrap();
        let zero = StateVector::zero(1).unwrap();
        assert_eq!(apply_reflection(&plus, &zero, 0.0).unwrap(), plus);
        let r = apply_reflection(&plus, &zero, PI).unwrap();
        assert_state(&r, &[c(-FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)], 1e-15);
        let one = StateVector::basis(1, 1).unwrap();
        assert_state(&apply_reflection(&one, &zero, 1.234).unwrap(), one.amplitudes(), 0.0);
    }

    #[test]
    fn evolution_examples() {
        let z = HermitianOperator::from_observable(&obs(1, &[(1.0, "Z")])).unwrap();
        let zero = StateVector::zero(1).unwrap();
        let t = 0.7;
        assert_state(&apply_evolution(&zero, &z, t).unwrap(), &[C64::from_polar(1.0, t), c(0.0, 0.0)], 1e-14);
        let x = HermitianOperator::from_observable(&obs(1, &[(1.0, "X")])).unwrap();
        assert_state(&apply_evolution(&zero, &x, FRAC_PI_2).unwrap(), &[c(0.0, 0.0), c(0.0, 1.0)], 1e-14);
        let mut r = rng(3);
        let h = HermitianOperator::from_observable(&random_observable(3, 5, &mut r)).unwrap();
        let s = StateVector::random(3, &mut r).unwrap();
        let back = apply_evolution(&apply_evolution(&s, &h, 0.9).unwrap(), &h, -0.9).unwrap();
        assert!(state_distance(&s, &back, false).unwrap() < 1e-12);
    }

    #[test]
    fn evolution_matches_expm() {
        let mut r = rng(4);
        let o = random_observable(3, 6, &mut r);
        let h = HermitianOperator::from_observable(&o).unwrap();
        let s = StateVector::random(3, &mut r).unwrap();
        let u = expm(&(o.to_dense().unwrap() * c(0.0, 1.3)));
        let expect: Vec<C64> = (u * s.to_dvector()).iter().copied().collect();
        assert_state(&apply_evolution(&s, &h, 1.3).unwrap(), &expect, 1e-12);
    }

    #[test]
    fn commutator_exp_examples() {
        let z = obs(1, &[(1.0, "Z")]);
        let plus = StateVector::product("+").unwrap();
        let minus = StateVector::product("-").unwrap();
        let r = apply_commutator_exp(&plus, &plus, &z, -FRAC_PI_2).unwrap();
        assert!(state_distance(&r, &minus, false).unwrap() < 1e-14);
        let r = apply_commutator_exp(&minus, &plus, &z, -FRAC_PI_2).unwrap();
        assert_state(&r, &[c(-FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)], 1e-14);
        assert_eq!(apply_commutator_exp(&minus, &plus, &z, 0.0).unwrap(), minus);

        let w = projector(&plus) * z.to_dense().unwrap() - z.to_dense().unwrap() * projector(&plus);
        let u = expm(&(w * c(-FRAC_PI_2, 0.0)));
        let expect: Vec<C64> = (u * plus.to_dvector()).iter().copied().collect();
        assert_state(&apply_commutator_exp(&plus, &plus, &z, -FRAC_PI_2).unwrap(), &expect, 1e-12);
    }

    #[test]
    fn commutator_exp_eigenstate_limit() {
        // V = 0: the commutator vanishes on the whole space.
        let z = obs(1, &[(1.0, "Z")]);
        let zero = StateVector::zero(1).unwrap();
        let plus = StateVector::product("+").unwrap();
        let r = apply_commutator_exp(&plus, &zero, &z, -0.8).unwrap();
        assert!(state_distance(&r, &plus, false).unwrap() < 1e-15);
        assert_eq!(commutator_coefficients(0.3, 0.0), (0.3, 0.045));
    }

    #[test]
    fn distance_examples() {
        let a = StateVector::product("+").unwrap();
        assert_eq!(state_distance(&a, &a, false).unwrap(), 0.0);
        let z0 = StateVector::zero(1).unwrap();
        let z1 = StateVector::basis(1, 1).unwrap();
        assert!((state_distance(&z0, &z1, false).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let ph = C64::from_polar(1.0, PI / 3.0);
        let b = StateVector::new(1, a.amplitudes().iter().map(|x| x * ph).collect()).unwrap();
        assert!(state_distance(&a, &b, true).unwrap() < 1e-7);
        assert!(state_distance(&a, &b, false).unwrap() > 0.9);
    }

    #[test]
    fn product_and_json() {
        let s = StateVector::product("0+").unwrap();
        let h = FRAC_1_SQRT_2;
        assert_state(&s, &[c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 1e-15);
        let j = serde_json::to_string(&StateVector::basis(1, 1).unwrap()).unwrap();
        assert_eq!(j, r#"{"n_qubits":1,"re":[0.0,1.0],"im":[0.0,0.0]}"#);
        let back: StateVector = serde_json::from_str(&j).unwrap();
        assert_eq!(back, StateVector::basis(1, 1).unwrap());
        assert!(serde_json::from_str::<StateVector>(r#"{"n_qubits":1,"re":[0.0],"im":[0.0]}"#).is_err());
    }

    #[test]
    fn hermitian_checks() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(HermitianOperator::from_dense(m).is_err());
        let m = DMatrix::from_element(3, 3, c(0.0, 0.0));
        assert!(HermitianOperator::from_dense(m).is_err());
    }

    #[test]
    fn ground_state_of_z() {
        let z = HermitianOperator::from_observable(&obs(2, &[(1.0, "ZI"), (0.5, "IZ")])).unwrap();
        let (e, g) = z.ground_state().unwrap();
        assert!((e + 1.5).abs() < 1e-12);
        assert!((g.amplitudes()[3].norm() - 1.0).abs() < 1e-12);
    }

    fn dense_of(h: &Observable) -> DMatrix<C64> {
        h.to_dense().unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn primitives_are_unitary(seed in any::<u64>(), n in 1usize..=8, theta in -7.0f64..7.0, s in -3.0f64..3.0) {
            let mut r = rng(seed);
            let o = random_observable(n, 4, &mut r);
            let h = HermitianOperator::from_observable(&o).unwrap();
            let v = StateVector::random(n, &mut r).unwrap();
            let psi = StateVector::random(n, &mut r).unwrap();
            let raw = |amps: Vec<C64>| (norm(&amps) - 1.0).abs();
            // Check the raw outputs before renormalization.
            let c = (C64::from_polar(1.0, theta) - 1.0) * psi.inner(&v);
            prop_assert!(raw(v.amplitudes().iter().zip(psi.amplitudes()).map(|(x, a)| x + c * a).collect()) < 1e-12);
            prop_assert!(raw(h.apply_function(v.amplitudes(), |l| C64::from_polar(1.0, s * l)).unwrap()) < 1e-12);
            let hpsi = o.apply(psi.amplitudes()).unwrap();
            let st = energy_stats(&psi, &o).unwrap();
            let (a, b) = commutator_coefficients(s, st.variance);
            let w1 = commutator_action(psi.amplitudes(), &hpsi, v.amplitudes());
            let w2 = commutator_action(psi.amplitudes(), &hpsi, &w1);
            let out: Vec<C64> = v.amplitudes().iter().zip(w1.iter().zip(&w2)).map(|(x, (p, q))| x + p * a + q * b).collect();
            prop_assert!(raw(out) < 1e-12);
        }

        #[test]
        fn effective_idempotence(seed in any::<u64>(), n in 1usize..=6) {
            let mut r = rng(seed);
            let o = random_observable(n, 5, &mut r);
            let psi = StateVector::random(n, &mut r).unwrap();
            let v = StateVector::random(n, &mut r).unwrap();
            let p = projector(&psi);
            let d = dense_of(&o);
            let w = &p * &d - &d * &p;
            let v = v.to_dvector();
            let st = energy_stats(&psi, &o).unwrap();
            let lhs = &w * (&w * (&w * &v)) + (&w * &v) * C64::new(st.variance, 0.0);
            prop_assert!(lhs.norm() < 1e-10);
        }

        #[test]
        fn commutator_exp_matches_expm(seed in any::<u64>(), n in 1usize..=4, s in -2.0f64..2.0) {
            let mut r = rng(seed);
            let o = random_observable(n, 4, &mut r);
            let psi = StateVector::random(n, &mut r).unwrap();
            let v = StateVector::random(n, &mut r).unwrap();
            let p = projector(&psi);
            let d = dense_of(&o);
            let u = expm(&((&p * &d - &d * &p) * C64::new(s, 0.0)));
            let expect: Vec<C64> = (u * v.to_dvector()).iter().copied().collect();
            let got = apply_commutator_exp(&v, &psi, &o, s).unwrap();
            for (a, b) in got.amplitudes().iter().zip(&expect) {
                prop_assert!((a - b).norm() < 1e-9);
            }
        }

        #[test]
        fn state_action_normalized(seed in any::<u64>(), n in 1usize..=5, s in -5.0f64..5.0) {
            let mut r = rng(seed);
            let o = random_observable(n, 4, &mut r);
            let psi = StateVector::random(n, &mut r).unwrap();
            let st = energy_stats(&psi, &o).unwrap();
            let (a, b) = state_action_coefficients(s, st);
            let lhs = a * a + 2.0 * a * b * st.energy + b * b * st.second_moment();
            prop_assert!((lhs - 1.0).abs() < 1e-10);
            // And the action itself.
            let hpsi = o.apply(psi.amplitudes()).unwrap();
            let lin: Vec<C64> = psi.amplitudes().iter().zip(&hpsi).map(|(x, y)| x * a + y * b).collect();
            let got = apply_commutator_exp(&psi, &psi, &o, s).unwrap();
            for (x, y) in got.amplitudes().iter().zip(&lin) {
                prop_assert!((x - y).norm() < 1e-10);
            }
        }
    }
}
