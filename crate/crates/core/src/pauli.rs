//! Pauli strings and weighted Pauli sums.
//!
//! Qubit 0 is the leftmost letter and the most significant bit of a basis index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default qubit cap for dense realizations.
pub const DEFAULT_DENSE_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Single-qubit product `a·b = i^k c`, returned as `(k, c)`.
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// A power of `i`, the phase group of Pauli products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    /// `+1.0` or `-1.0` for real phases, `None` otherwise.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["1", "i", "-1", "-i"][self.0 as usize])
    }
}

/// Tensor product of single-qubit Paulis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("a Pauli string needs at least one qubit".into()));
        }
        Ok(Self { letters })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { letters: vec![Pauli::I; n_qubits.max(1)] }
    }

    /// A string that is `p` on `qubit` and identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n_qubits);
        s.letters[qubit] = p;
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let clashes = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        clashes % 2 == 0
    }

    /// Bit masks `(x, z, n_y)` such that `P|b⟩ = i^{n_y} (−1)^{|b & z|} |b ⊕ x⟩`.
    pub fn masks(&self) -> (usize, usize, u32) {
        let n = self.n_qubits();
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                Pauli::Z => z |= bit,
            }
        }
        (x, z, ny)
    }

    /// `P|b⟩` as `(amplitude, target index)`.
    pub fn apply_basis(&self, b: usize) -> (Complex64, usize) {
        let (x, z, ny) = self.masks();
        basis_action(x, z, ny, b)
    }

    /// `P v` for a dense vector of length `2^n`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits();
        if v.len() != dim {
            return Err(Error::Dimension { expected: dim, found: v.len() });
        }
        let (x, z, ny) = self.masks();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (b, &amp) in v.iter().enumerate() {
            let (ph, t) = basis_action(x, z, ny, b);
            out[t] += ph * amp;
        }
        Ok(out)
    }

    /// `⟨v|P|v⟩`, real for normalized `v` up to rounding.
    pub fn expectation(&self, v: &[Complex64]) -> Result<f64> {
        let dim = 1usize << self.n_qubits();
        if v.len() != dim {
            return Err(Error::Dimension { expected: dim, found: v.len() });
        }
        let (x, z, ny) = self.masks();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, &amp) in v.iter().enumerate() {
            let (ph, t) = basis_action(x, z, ny, b);
            acc += v[t].conj() * ph * amp;
        }
        Ok(acc.re)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        check_cap(self.n_qubits(), cap)?;
        let dim = 1usize << self.n_qubits();
        let mut m = DMatrix::zeros(dim, dim);
        let (x, z, ny) = self.masks();
        for b in 0..dim {
            let (ph, t) = basis_action(x, z, ny, b);
            m[(t, b)] = ph;
        }
        Ok(m)
    }
}

#[inline]
fn basis_action(x: usize, z: usize, ny: u32, b: usize) -> (Complex64, usize) {
    let k = (ny + 2 * ((b & z).count_ones() % 2)) % 4;
    (Phase(k as u8).to_complex(), b ^ x)
}

pub(crate) fn check_cap(n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits > cap {
        Err(Error::ResourceCap { n_qubits, cap })
    } else {
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c.to_ascii_uppercase())
                    .ok_or_else(|| Error::Parse(format!("invalid Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(letters)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Product of two Pauli strings: `a·b = phase · product`.
///
/// ```
/// use dbqsp::pauli::{pauli_mul, Phase, PauliString};
/// let a: PauliString = "ZX".parse().unwrap();
/// let b: PauliString = "ZY".parse().unwrap();
/// let (phase, p) = pauli_mul(&a, &b).unwrap();
/// assert_eq!(phase, Phase::I);
/// assert_eq!(p.to_string(), "IZ");
/// ```
pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<(Phase, PauliString)> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Dimension { expected: a.n_qubits(), found: b.n_qubits() });
    }
    let mut k = 0u8;
    let letters = a
        .letters
        .iter()
        .zip(&b.letters)
        .map(|(&p, &q)| {
            let (e, r) = p.mul(q);
            k += e;
            r
        })
        .collect();
    Ok((Phase::from_power(k), PauliString { letters }))
}

/// One weighted term of an [`Observable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub w: f64,
    pub p: PauliString,
}

/// Hermitian operator `H = Σ w_i P_i` with real weights.
///
/// Terms are kept in lexicographic order of their strings; duplicates are
/// merged on construction and zero weights dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableRepr", into = "ObservableRepr")]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableRepr {
    n_qubits: usize,
    terms: Vec<Term>,
}

impl TryFrom<ObservableRepr> for Observable {
    type Error = Error;
    fn try_from(r: ObservableRepr) -> Result<Self> {
        Observable::new(r.n_qubits, r.terms.into_iter().map(|t| (t.w, t.p)))
    }
}

impl From<Observable> for ObservableRepr {
    fn from(o: Observable) -> Self {
        ObservableRepr { n_qubits: o.n_qubits, terms: o.terms }
    }
}

impl Observable {
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("an observable needs at least one qubit".into()));
        }
        let mut raw: Vec<(f64, PauliString)> = Vec::new();
        for (w, p) in terms {
            if p.n_qubits() != n_qubits {
                return Err(Error::Dimension { expected: n_qubits, found: p.n_qubits() });
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite weight on {p}")));
            }
            raw.push((w, p));
        }
        raw.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        for (w, p) in raw {
            match merged.last_mut() {
                Some(t) if t.p == p => t.w += w,
                _ => merged.push(Term { w, p }),
            }
        }
        merged.retain(|t| t.w != 0.0);
        Ok(Self { n_qubits, terms: merged })
    }

    /// Parse `[(w, "ZXI"), ...]`-style input.
    pub fn from_strs(n_qubits: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|&(w, s)| Ok((w, s.parse::<PauliString>()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, parsed)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn one_norm(&self) -> f64 {
        one_norm(self)
    }

    /// `a·self`.
    pub fn scaled(&self, a: f64) -> Observable {
        Observable::new(self.n_qubits, self.terms.iter().map(|t| (a * t.w, t.p.clone())))
            .expect("scaling preserves shape")
    }

    /// `H v` without forming a dense matrix.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = self.dim();
        if v.len() != dim {
            return Err(Error::Dimension { expected: dim, found: v.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for t in &self.terms {
            let (x, z, ny) = t.p.masks();
            for (b, &amp) in v.iter().enumerate() {
                let (ph, tgt) = basis_action(x, z, ny, b);
                out[tgt] += ph * amp * t.w;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        to_dense(self)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        check_cap(self.n_qubits, cap)?;
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            let (x, z, ny) = t.p.masks();
            for b in 0..dim {
                let (ph, tgt) = basis_action(x, z, ny, b);
                m[(tgt, b)] += ph * t.w;
            }
        }
        Ok(m)
    }
}

/// `Σ |w_i|`.
pub fn one_norm(h: &Observable) -> f64 {
    h.terms.iter().map(|t| t.w.abs()).sum()
}

/// Dense `2^n × 2^n` matrix of `h`, subject to [`DEFAULT_DENSE_CAP`].
pub fn to_dense(h: &Observable) -> Result<DMatrix<Complex64>> {
    h.to_dense_capped(DEFAULT_DENSE_CAP)
}

/// A commuting pair `(i, j)`, `i < j`, contributing `weight · sign · string` to `H²`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossTerm {
    pub i: usize,
    pub j: usize,
    /// `2 w_i w_j`, the combined weight of the ordered pairs `(i, j)` and `(j, i)`.
    pub weight: f64,
    pub string: PauliString,
    /// `+1` or `−1`, from `P_i P_j = sign · string`.
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareExpansion {
    pub identity_weight: f64,
    pub cross_terms: Vec<CrossTerm>,
}

impl SquareExpansion {
    /// Rebuild `H²` as an observable (cross terms with equal strings merge).
    pub fn to_observable(&self, n_qubits: usize) -> Observable {
        let id = PauliString::identity(n_qubits);
        let terms = std::iter::once((self.identity_weight, id))
            .chain(self.cross_terms.iter().map(|c| (c.weight * c.phase, c.string.clone())));
        Observable::new(n_qubits, terms).expect("cross terms share the qubit count")
    }
}

/// `H² = Σ w_i² I + Σ_{i<j, [P_i,P_j]=0} 2 w_i w_j P_i P_j`.
///
/// Anticommuting pairs cancel between `(i, j)` and `(j, i)` and are left out.
pub fn square_expansion(h: &Observable) -> SquareExpansion {
    let identity_weight = h.terms.iter().map(|t| t.w * t.w).sum();
    let mut cross_terms = Vec::new();
    for (i, a) in h.terms.iter().enumerate() {
        for (j, b) in h.terms.iter().enumerate().skip(i + 1) {
            if !a.p.commutes_with(&b.p) {
                continue;
            }
            let (ph, string) = pauli_mul(&a.p, &b.p).expect("terms share the qubit count");
            let phase = ph.sign().expect("commuting Pauli strings multiply with a real phase");
            cross_terms.push(CrossTerm { i, j, weight: 2.0 * a.w * b.w, string, phase });
        }
    }
    SquareExpansion { identity_weight, cross_terms }
}
