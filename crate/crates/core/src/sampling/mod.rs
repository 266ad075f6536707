//! Simulated Pauli measurements and variance estimators built from them.
//!
//! For `H = Σ w_i P_i` the variance `V = Σ w_i² + Σ_{i≠j} w_i w_j ⟨P_iP_j⟩ − (Σ w_i ⟨P_i⟩)²`
//! is estimated from three kinds of measurement groups:
//!
//! * singles: `P_i` alone, `N_i` shots;
//! * pairs: the product `P_iP_j` for an ordered commuting pair `i ≠ j`, `N_ij` shots;
//! * joints: `P_i ⊗ P_j` on two copies of the state, `N_{i⊗j}` shots.
//!
//! Anticommuting pairs are never measured. Their products cancel between
//! `(i, j)` and `(j, i)`.

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{pauli_mul, Observable, PauliString};
use crate::rng::{derive_seed, rng, Rng};
use crate::state::StateVector;

type PairMap<T> = BTreeMap<(usize, usize), T>;

/// Ordered commuting pairs `(i, j)`, `i ≠ j`, with `P_iP_j = sign · string`.
pub fn commuting_pairs(h: &Observable) -> Vec<(usize, usize, f64, PauliString)> {
    let t = h.terms();
    let mut out = Vec::new();
    for i in 0..t.len() {
        for j in 0..t.len() {
            if i == j || !t[i].p.commutes_with(&t[j].p) {
                continue;
            }
            let (ph, s) = pauli_mul(&t[i].p, &t[j].p).expect("terms share the qubit count");
            out.push((i, j, ph.sign().expect("commuting product is real"), s));
        }
    }
    out
}

/// Shot counts per measurement group, indexed by term position in the observable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AllocRepr", into = "AllocRepr")]
pub struct ShotAllocation {
    pub singles: Vec<u64>,
    pub pairs: PairMap<u64>,
    pub joints: PairMap<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocRepr {
    singles: Vec<u64>,
    pairs: Vec<[u64; 3]>,
    joints: Vec<[u64; 3]>,
}

impl From<ShotAllocation> for AllocRepr {
    fn from(a: ShotAllocation) -> Self {
        let flat = |m: PairMap<u64>| m.into_iter().map(|((i, j), n)| [i as u64, j as u64, n]).collect();
        AllocRepr { singles: a.singles, pairs: flat(a.pairs), joints: flat(a.joints) }
    }
}

impl TryFrom<AllocRepr> for ShotAllocation {
    type Error = Error;
    fn try_from(r: AllocRepr) -> Result<Self> {
        let map = |v: Vec<[u64; 3]>| v.into_iter().map(|[i, j, n]| ((i as usize, j as usize), n)).collect();
        let a = ShotAllocation { singles: r.singles, pairs: map(r.pairs), joints: map(r.joints) };
        if a.singles.iter().chain(a.pairs.values()).chain(a.joints.values()).any(|&n| n < 2) {
            return Err(Error::InvalidArgument("shot counts must be at least 2".into()));
        }
        Ok(a)
    }
}

impl ShotAllocation {
    /// `n` shots for every single, every commuting pair and every joint.
    pub fn uniform(h: &Observable, n: u64) -> Self {
        let l = h.len();
        ShotAllocation {
            singles: vec![n; l],
            pairs: commuting_pairs(h).into_iter().map(|(i, j, ..)| ((i, j), n)).collect(),
            joints: (0..l).flat_map(|i| (0..l).map(move |j| ((i, j), n))).collect(),
        }
    }

    /// Every count multiplied by `f`.
    pub fn scaled(&self, f: u64) -> Self {
        let m = |p: &PairMap<u64>| p.iter().map(|(&k, &n)| (k, n * f)).collect();
        ShotAllocation { singles: self.singles.iter().map(|n| n * f).collect(), pairs: m(&self.pairs), joints: m(&self.joints) }
    }

    /// `Σ N_ij + Σ N_{i⊗j}`, the budget of the joint-measurement scheme.
    pub fn total(&self) -> u64 {
        self.pairs.values().chain(self.joints.values()).sum()
    }

    pub fn singles_total(&self) -> u64 {
        self.singles.iter().sum()
    }

    fn check(&self, h: &Observable, kind: EstimatorKind) -> Result<()> {
        let l = h.len();
        let low = |n: &u64| *n < 2;
        match kind {
            EstimatorKind::Unbiased => {
                if self.singles.len() != l {
                    return Err(Error::MissingSamples(format!("{} singles for {l} terms", self.singles.len())));
                }
                if self.singles.iter().any(low) {
                    return Err(Error::InvalidArgument("N_i must be at least 2".into()));
                }
            }
            EstimatorKind::Alternative => {
                for i in 0..l {
                    for j in 0..l {
                        match self.joints.get(&(i, j)) {
                            None => return Err(Error::MissingSamples(format!("joint ({i}, {j})"))),
                            Some(n) if low(n) => return Err(Error::InvalidArgument("N_(i⊗j) must be at least 2".into())),
                            _ => {}
                        }
                    }
                }
            }
        }
        for (i, j, ..) in commuting_pairs(h) {
            match self.pairs.get(&(i, j)) {
                None => return Err(Error::MissingSamples(format!("pair ({i}, {j})"))),
                Some(n) if low(n) => return Err(Error::InvalidArgument("N_ij must be at least 2".into())),
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Singles and pairs, with the `N/(N−1)` corrected squares.
    Unbiased,
    /// Pairs and two-copy joints.
    Alternative,
}

/// Measured `±1` outcomes per group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleRepr", into = "SampleRepr")]
pub struct SampleSet {
    pub seed: u64,
    pub singles: Vec<Vec<i8>>,
    pub pairs: PairMap<Vec<i8>>,
    pub joints: PairMap<Vec<i8>>,
}

/// Outcomes as `[value, run]` pairs.
type Rle = Vec<(i8, u64)>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRepr {
    seed: u64,
    singles: Vec<Rle>,
    pairs: Vec<(usize, usize, Rle)>,
    joints: Vec<(usize, usize, Rle)>,
}

fn rle_encode(v: &[i8]) -> Rle {
    let mut out: Rle = Vec::new();
    for &b in v {
        match out.last_mut() {
            Some((x, n)) if *x == b => *n += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

fn rle_decode(r: Rle) -> Result<Vec<i8>> {
    let mut out = Vec::new();
    for (b, n) in r {
        if b != 1 && b != -1 {
            return Err(Error::Parse(format!("outcome {b} is not ±1")));
        }
        out.extend(std::iter::repeat_n(b, n as usize));
    }
    Ok(out)
}

impl From<SampleSet> for SampleRepr {
    fn from(s: SampleSet) -> Self {
        let flat = |m: PairMap<Vec<i8>>| m.into_iter().map(|((i, j), v)| (i, j, rle_encode(&v))).collect();
        SampleRepr {
            seed: s.seed,
            singles: s.singles.iter().map(|v| rle_encode(v)).collect(),
            pairs: flat(s.pairs),
            joints: flat(s.joints),
        }
    }
}

impl TryFrom<SampleRepr> for SampleSet {
    type Error = Error;
    fn try_from(r: SampleRepr) -> Result<Self> {
        let map = |v: Vec<(usize, usize, Rle)>| -> Result<PairMap<Vec<i8>>> {
            v.into_iter().map(|(i, j, e)| Ok(((i, j), rle_decode(e)?))).collect()
        };
        Ok(SampleSet {
            seed: r.seed,
            singles: r.singles.into_iter().map(rle_decode).collect::<Result<_>>()?,
            pairs: map(r.pairs)?,
            joints: map(r.joints)?,
        })
    }
}

impl SampleSet {
    pub fn allocation(&self) -> ShotAllocation {
        let n = |m: &PairMap<Vec<i8>>| m.iter().map(|(&k, v)| (k, v.len() as u64)).collect();
        ShotAllocation { singles: self.singles.iter().map(|v| v.len() as u64).collect(), pairs: n(&self.pairs), joints: n(&self.joints) }
    }

    pub fn tallies(&self) -> Tallies {
        let t = |v: &Vec<i8>| Tally::from_outcomes(v);
        Tallies {
            singles: self.singles.iter().map(t).collect(),
            pairs: self.pairs.iter().map(|(&k, v)| (k, t(v))).collect(),
            joints: self.joints.iter().map(|(&k, v)| (k, t(v))).collect(),
        }
    }
}

/// Shot count and sample mean of one group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tally {
    pub shots: u64,
    pub mean: f64,
}

impl Tally {
    fn from_outcomes(v: &[i8]) -> Self {
        Tally { shots: v.len() as u64, mean: v.iter().map(|&b| b as f64).sum::<f64>() / v.len().max(1) as f64 }
    }

    fn draw(shots: u64, expectation: f64, r: &mut Rng) -> Self {
        let p = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
        let plus = Binomial::new(shots, p).expect("probability in [0, 1]").sample(r);
        Tally { shots, mean: (2.0 * plus as f64 - shots as f64) / shots as f64 }
    }
}

/// Group means, all the estimators depend on.
#[derive(Clone, Debug, PartialEq)]
pub struct Tallies {
    pub singles: Vec<Tally>,
    pub pairs: PairMap<Tally>,
    pub joints: PairMap<Tally>,
}

impl Tallies {
    /// Binomial draws with the Born probabilities of `exp`. Same distribution
    /// as summing [`sample_pauli`] outcomes, without materializing them.
    pub fn draw(exp: &Expectations, alloc: &ShotAllocation, r: &mut Rng) -> Self {
        Tallies {
            singles: alloc.singles.iter().zip(&exp.singles).map(|(&n, &p)| Tally::draw(n, p, r)).collect(),
            pairs: alloc.pairs.iter().map(|(&k, &n)| (k, Tally::draw(n, exp.pair(k), r))).collect(),
            joints: alloc.joints.iter().map(|(&(i, j), &n)| ((i, j), Tally::draw(n, exp.singles[i] * exp.singles[j], r))).collect(),
        }
    }
}

/// True `⟨P_i⟩` and signed `⟨P_iP_j⟩` per group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub singles: Vec<f64>,
    pub pairs: PairMap<f64>,
}

impl Expectations {
    pub fn from_state(h: &Observable, state: &StateVector) -> Result<Self> {
        let v = state.amplitudes();
        let singles = h.terms().iter().map(|t| t.p.expectation(v)).collect::<Result<_>>()?;
        let pairs = commuting_pairs(h).into_iter().map(|(i, j, sg, s)| Ok(((i, j), sg * s.expectation(v)?))).collect::<Result<_>>()?;
        Ok(Self { singles, pairs })
    }

    /// All-zero guess, the worst case of every `√(1 − ⟨·⟩²)`.
    pub fn zeros(h: &Observable) -> Self {
        Self { singles: vec![0.0; h.len()], pairs: commuting_pairs(h).into_iter().map(|(i, j, ..)| ((i, j), 0.0)).collect() }
    }

    fn pair(&self, k: (usize, usize)) -> f64 {
        self.pairs.get(&k).copied().unwrap_or(0.0)
    }

    /// `Σ w_i² + Σ_{i≠j} w_iw_j⟨P_iP_j⟩ − (Σ w_i⟨P_i⟩)²`.
    pub fn variance(&self, h: &Observable) -> f64 {
        let w: Vec<f64> = h.terms().iter().map(|t| t.w).collect();
        let e: f64 = w.iter().zip(&self.singles).map(|(w, p)| w * p).sum();
        w.iter().map(|x| x * x).sum::<f64>() + self.pairs.iter().map(|(&(i, j), p)| w[i] * w[j] * p).sum::<f64>() - e * e
    }

    pub fn energy(&self, h: &Observable) -> f64 {
        h.terms().iter().zip(&self.singles).map(|(t, p)| t.w * p).sum()
    }
}

fn group_stream(kind: u64, i: usize, j: usize) -> u64 {
    (kind << 48) | ((i as u64) << 24) | j as u64
}

/// `shots` i.i.d. outcomes of `P` with `Pr(+1) = (1 + ⟨P⟩)/2`.
///
/// ```
/// use dbqsp::prelude::*;
/// use dbqsp::sampling::sample_pauli;
/// let z: PauliString = "Z".parse().unwrap();
/// let out = sample_pauli(&StateVector::zero(1).unwrap(), &z, 5, 1).unwrap();
/// assert_eq!(out, vec![1; 5]);
/// ```
pub fn sample_pauli(state: &StateVector, p: &PauliString, shots: u64, seed: u64) -> Result<Vec<i8>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let prob = ((1.0 + p.expectation(state.amplitudes())?) / 2.0).clamp(0.0, 1.0);
    let mut r = rng(seed);
    Ok((0..shots).map(|_| if r.random_bool(prob) { 1 } else { -1 }).collect())
}

/// Outcomes for every group of `alloc`. Joint outcomes are products of two
/// independent single-copy draws; pair outcomes carry the sign of `P_iP_j`.
pub fn sample_set(state: &StateVector, h: &Observable, alloc: &ShotAllocation, seed: u64) -> Result<SampleSet> {
    let t = h.terms();
    if alloc.singles.len() > t.len() {
        return Err(Error::InvalidArgument("allocation has more singles than terms".into()));
    }
    let singles = alloc
        .singles
        .iter()
        .enumerate()
        .map(|(i, &n)| sample_pauli(state, &t[i].p, n, derive_seed(seed, group_stream(0, i, 0))))
        .collect::<Result<_>>()?;
    let info: PairMap<(f64, PauliString)> = commuting_pairs(h).into_iter().map(|(i, j, sg, s)| ((i, j), (sg, s))).collect();
    let mut pairs = PairMap::new();
    for (&(i, j), &n) in &alloc.pairs {
        let (sg, s) = info.get(&(i, j)).ok_or_else(|| Error::InvalidArgument(format!("pair ({i}, {j}) does not commute")))?;
        let raw = sample_pauli(state, s, n, derive_seed(seed, group_stream(1, i, j)))?;
        pairs.insert((i, j), raw.into_iter().map(|b| b * *sg as i8).collect());
    }
    let mut joints = PairMap::new();
    for (&(i, j), &n) in &alloc.joints {
        if i >= t.len() || j >= t.len() {
            return Err(Error::InvalidArgument(format!("joint ({i}, {j}) out of range")));
        }
        let a = sample_pauli(state, &t[i].p, n, derive_seed(seed, group_stream(2, i, j)))?;
        let b = sample_pauli(state, &t[j].p, n, derive_seed(seed, group_stream(3, i, j)))?;
        joints.insert((i, j), a.iter().zip(&b).map(|(x, y)| x * y).collect());
    }
    Ok(SampleSet { seed, singles, pairs, joints })
}

/// `(N/(N−1))(m² − 1/N)` for the sample mean `m` of `N` outcomes.
///
/// ```
/// use dbqsp::sampling::unbiased_square_estimator;
/// assert_eq!(unbiased_square_estimator(&[1, -1]).unwrap(), -1.0);
/// ```
pub fn unbiased_square_estimator(outcomes: &[i8]) -> Result<f64> {
    let t = Tally::from_outcomes(outcomes);
    if t.shots < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {}", t.shots)));
    }
    Ok(corrected_square(t))
}

fn corrected_square(t: Tally) -> f64 {
    let n = t.shots as f64;
    n / (n - 1.0) * (t.mean * t.mean - 1.0 / n)
}

fn weights(h: &Observable) -> Vec<f64> {
    h.terms().iter().map(|t| t.w).collect()
}

fn check_tallies(h: &Observable, t: &Tallies, kind: EstimatorKind) -> Result<()> {
    let alloc = ShotAllocation {
        singles: t.singles.iter().map(|x| x.shots).collect(),
        pairs: t.pairs.iter().map(|(&k, x)| (k, x.shots)).collect(),
        joints: t.joints.iter().map(|(&k, x)| (k, x.shots)).collect(),
    };
    alloc.check(h, kind)
}

fn square_part(w: &[f64], t: &Tallies) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>() + t.pairs.iter().map(|(&(i, j), x)| w[i] * w[j] * x.mean).sum::<f64>()
}

/// `(naive, unbiased)` variance estimates from the singles and pairs of `t`.
pub fn variance_estimators_from(h: &Observable, t: &Tallies) -> Result<(f64, f64)> {
    check_tallies(h, t, EstimatorKind::Unbiased)?;
    let w = weights(h);
    let sq = square_part(&w, t);
    let e: f64 = w.iter().zip(&t.singles).map(|(w, x)| w * x.mean).sum();
    let naive = sq - e * e;
    let diag: f64 = w.iter().zip(&t.singles).map(|(w, x)| w * w * x.mean * x.mean).sum();
    let corrected: f64 = w.iter().zip(&t.singles).map(|(w, &x)| w * w * corrected_square(x)).sum();
    // Σ_{i≠j} w_i w_j m_i m_j = E² − Σ w_i² m_i².
    Ok((naive, sq - corrected - (e * e - diag)))
}

/// Naive and unbiased variance estimates from measured outcomes.
pub fn variance_estimators(h: &Observable, samples: &SampleSet) -> Result<(f64, f64)> {
    variance_estimators_from(h, &samples.tallies())
}

/// `Σ w_i² + Σ_{i≠j} w_iw_j m_ij − Σ_{i,j} w_iw_j m_{i⊗j}` from pairs and joints.
pub fn alternative_variance_estimator_from(h: &Observable, t: &Tallies) -> Result<f64> {
    check_tallies(h, t, EstimatorKind::Alternative)?;
    let w = weights(h);
    Ok(square_part(&w, t) - t.joints.iter().map(|(&(i, j), x)| w[i] * w[j] * x.mean).sum::<f64>())
}

pub fn alternative_variance_estimator(h: &Observable, samples: &SampleSet) -> Result<f64> {
    alternative_variance_estimator_from(h, &samples.tallies())
}

/// `E[unbiased − naive] = Σ w_i²(1 − ⟨P_i⟩²)/N_i`: the naive squares overshoot
/// `⟨P_i⟩²` by `(1 − ⟨P_i⟩²)/N_i`, so the naive variance falls short by this much.
pub fn naive_bias(h: &Observable, exp: &Expectations, alloc: &ShotAllocation) -> f64 {
    weights(h).iter().zip(&exp.singles).zip(&alloc.singles).map(|((w, p), &n)| w * w * (1.0 - p * p) / n as f64).sum()
}

/// Closed-form sampling variance of the chosen estimator.
///
/// For the unbiased estimator the singles enter through
/// `Q = Σ c_i(m_i² − 1/N_i) + Σ_{i≠j} w_iw_j m_i m_j` with `c_i = w_i²N_i/(N_i−1)`.
/// Writing `m_i = p_i + δ_i` gives
/// `Var Q = Σ [a_i²σ_i² + c_i²(μ4_i − σ_i⁴) + 2a_ic_iμ3_i] + 4Σ_{i<j} w_i²w_j²σ_i²σ_j²`
/// where `a_i = 2c_ip_i + 2w_iΣ_{j≠i}w_jp_j`, `σ_i² = (1−p_i²)/N_i`, and
/// `μ3, μ4` are the central moments of a mean of `N_i` outcomes.
pub fn estimator_variance_formula(h: &Observable, exp: &Expectations, alloc: &ShotAllocation, which: EstimatorKind) -> Result<f64> {
    alloc.check(h, which)?;
    let w = weights(h);
    let pair_part: f64 = alloc
        .pairs
        .iter()
        .map(|(&(i, j), &n)| {
            let p = exp.pair((i, j));
            (w[i] * w[j]).powi(2) * (1.0 - p * p) / n as f64
        })
        .sum();
    match which {
        EstimatorKind::Alternative => {
            let joint: f64 = alloc
                .joints
                .iter()
                .map(|(&(i, j), &n)| {
                    let q = exp.singles[i] * exp.singles[j];
                    (w[i] * w[j]).powi(2) * (1.0 - q * q) / n as f64
                })
                .sum();
            Ok(pair_part + joint)
        }
        EstimatorKind::Unbiased => {
            let p = &exp.singles;
            let e: f64 = w.iter().zip(p).map(|(w, p)| w * p).sum();
            let l = w.len();
            let mut sig2 = vec![0.0; l];
            let mut total = 0.0;
            for i in 0..l {
                let n = alloc.singles[i] as f64;
                let v = 1.0 - p[i] * p[i];
                let c = w[i] * w[i] * n / (n - 1.0);
                let a = 2.0 * c * p[i] + 2.0 * w[i] * (e - w[i] * p[i]);
                sig2[i] = v / n;
                let mu3 = -2.0 * p[i] * v / (n * n);
                let mu4 = v * (1.0 + 3.0 * p[i] * p[i]) / n.powi(3) + 3.0 * (n - 1.0) * v * v / n.powi(3);
                total += a * a * sig2[i] + c * c * (mu4 - sig2[i] * sig2[i]) + 2.0 * a * c * mu3;
            }
            for i in 0..l {
                for j in i + 1..l {
                    total += 4.0 * (w[i] * w[j]).powi(2) * sig2[i] * sig2[j];
                }
            }
            Ok(pair_part + total)
        }
    }
}

/// Lagrange-optimal shots for the joint-measurement scheme at target `ε`:
/// `N_ij = |w_i||w_j|√(1 − ⟨P_ij⟩²)·S/ε²` and
/// `N_{i⊗j} = |w_i||w_j|√(1 − ⟨P_i⟩²⟨P_j⟩²)·S/ε²`, with `S` the sum of all those
/// prefactors. Singles, used only for the energy, get
/// `N_i = |w_i|√(1 − ⟨P_i⟩²)·T/ε²` with `T = Σ|w_k|√(1 − ⟨P_k⟩²)`.
/// Counts are rounded up with a floor of 2. Returns the allocation and the
/// scheme total `Σ N_ij + Σ N_{i⊗j}`.
pub fn allocate_shots(h: &Observable, guess: &Expectations, epsilon: f64) -> Result<(ShotAllocation, u64)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let w = weights(h);
    let p = &guess.singles;
    if p.len() != w.len() {
        return Err(Error::Dimension { expected: w.len(), found: p.len() });
    }
    let root = |x: f64| (1.0 - x * x).max(0.0).sqrt();
    let pair_f: PairMap<f64> =
        commuting_pairs(h).into_iter().map(|(i, j, ..)| ((i, j), (w[i] * w[j]).abs() * root(guess.pair((i, j))))).collect();
    let l = w.len();
    let joint_f: PairMap<f64> =
        (0..l).flat_map(|i| (0..l).map(move |j| (i, j))).map(|(i, j)| ((i, j), (w[i] * w[j]).abs() * root(p[i] * p[j]))).collect();
    let s: f64 = pair_f.values().chain(joint_f.values()).sum();
    let eps2 = epsilon * epsilon;
    let count = |f: f64| (f * s / eps2).ceil().max(2.0) as u64;
    let single_f: Vec<f64> = w.iter().zip(p).map(|(w, p)| w.abs() * root(*p)).collect();
    let t: f64 = single_f.iter().sum();
    let alloc = ShotAllocation {
        singles: single_f.iter().map(|f| (f * t / eps2).ceil().max(2.0) as u64).collect(),
        pairs: pair_f.into_iter().map(|(k, f)| (k, count(f))).collect(),
        joints: joint_f.into_iter().map(|(k, f)| (k, count(f))).collect(),
    };
    let total = alloc.total();
    Ok((alloc, total))
}

/// `(4/ε²)‖w‖₁⁴`, the state-independent cap on [`allocate_shots`] totals.
pub fn shot_cap(h: &Observable, epsilon: f64) -> f64 {
    4.0 * h.one_norm().powi(4) / (epsilon * epsilon)
}

/// Two-phase allocation: a uniform pilot of `pilot_shots` per group, then
/// [`allocate_shots`] at the pilot means.
pub fn allocate_shots_pilot(state: &StateVector, h: &Observable, epsilon: f64, pilot_shots: u64, seed: u64) -> Result<(ShotAllocation, u64)> {
    let exp = Expectations::from_state(h, state)?;
    let pilot = Tallies::draw(&exp, &ShotAllocation::uniform(h, pilot_shots.max(2)), &mut rng(seed));
    let guess = Expectations {
        singles: pilot.singles.iter().map(|t| t.mean).collect(),
        pairs: pilot.pairs.iter().map(|(&k, t)| (k, t.mean)).collect(),
    };
    allocate_shots(h, &guess, epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub energy: f64,
    pub variance: f64,
    pub energy_se: f64,
    pub variance_se: f64,
}

/// Energy and unbiased variance from simulated measurements of `state`, with
/// analytic standard errors evaluated at the estimated means.
///
/// Group counts are drawn as binomial tallies at the Born probabilities.
pub fn estimate_energy_and_variance(state: &StateVector, h: &Observable, alloc: &ShotAllocation, seed: u64) -> Result<Estimate> {
    alloc.check(h, EstimatorKind::Unbiased)?;
    let exp = Expectations::from_state(h, state)?;
    let t = Tallies::draw(&exp, alloc, &mut rng(seed));
    let (_, variance) = variance_estimators_from(h, &t)?;
    let w = weights(h);
    let energy: f64 = w.iter().zip(&t.singles).map(|(w, x)| w * x.mean).sum();
    let energy_se = w.iter().zip(&t.singles).map(|(w, x)| w * w * (1.0 - x.mean * x.mean) / x.shots as f64).sum::<f64>().sqrt();
    let est = Expectations {
        singles: t.singles.iter().map(|x| x.mean.clamp(-1.0, 1.0)).collect(),
        pairs: t.pairs.iter().map(|(&k, x)| (k, x.mean.clamp(-1.0, 1.0))).collect(),
    };
    let mut a = alloc.clone();
    a.joints.clear();
    let variance_se = estimator_variance_formula(h, &est, &a, EstimatorKind::Unbiased)?.max(0.0).sqrt();
    Ok(Estimate { energy, variance, energy_se, variance_se })
}

/// `f` evaluated on `replicas` independent generators, replica `r` seeded with
/// `derive_seed(seed, r)`. Order of results follows `r`.
pub fn replicate<T: Send>(replicas: usize, seed: u64, f: impl Fn(&mut Rng) -> T + Sync) -> Vec<T> {
    (0..replicas).into_par_iter().map(|r| f(&mut rng(derive_seed(seed, r as u64)))).collect()
}

/// Sample mean and variance (denominator `n − 1`).
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}
