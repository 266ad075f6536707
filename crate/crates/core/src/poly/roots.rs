use nalgebra::DMatrix;

use super::{PolynomialSpec, Provenance};
use crate::error::{Error, Result};
use crate::state::C64;

pub const DEFAULT_REAL_SNAP_TOL: f64 = 1e-9;

/// Monic coefficients of `Π (x − z_k)`, constant term first.
pub fn expand_roots(roots: &[C64]) -> Vec<C64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for z in roots {
        let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
        for (i, a) in c.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * z;
        }
        c = next;
    }
    c
}

/// Factor `Σ c_i x^i` (constant term first) through companion-matrix eigenvalues.
///
/// ```
/// use dbqsp::poly::roots_from_coeffs;
/// use dbqsp::state::C64;
/// let c = [-1.0, 0.0, 1.0].map(|x| C64::new(x, 0.0));
/// let p = roots_from_coeffs(&c, 1e-9).unwrap();
/// let mut r: Vec<f64> = p.roots.iter().map(|z| z.re).collect();
/// r.sort_by(f64::total_cmp);
/// assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
/// ```
pub fn roots_from_coeffs(coeffs: &[C64], real_snap_tol: f64) -> Result<PolynomialSpec> {
    let Some(&lead) = coeffs.last() else {
        return Err(Error::InvalidArgument("empty coefficient list".into()));
    };
    if lead.norm() == 0.0 {
        return Err(Error::InvalidArgument("leading coefficient is zero".into()));
    }
    let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();
    let horner = |x: C64| {
        let (mut p, mut d) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for a in monic.iter().rev() {
            d = d * x + p;
            p = p * x + a;
        }
        (p, d)
    };
    let mut roots = companion_eigenvalues(&monic)?;
    polish(&mut roots, horner);
    snap_and_sort(&mut roots, real_snap_tol);
    Ok(PolynomialSpec { leading: lead, roots, provenance: Provenance::FromCoeffs })
}

/// Roots of a monic polynomial (constant term first).
///
/// Zero roots are split off exactly. A polynomial in `x²` is solved in `y = x²`,
/// which keeps `±` root pairs away from the QR iteration.
pub(crate) fn companion_eigenvalues(monic: &[C64]) -> Result<Vec<C64>> {
    let zeros = monic.iter().take_while(|c| c.norm() == 0.0).count().min(monic.len() - 1);
    let rest = &monic[zeros..];
    let mut out = vec![C64::new(0.0, 0.0); zeros];
    if rest.len() > 2 && rest.iter().skip(1).step_by(2).all(|c| c.norm() == 0.0) {
        let half: Vec<C64> = rest.iter().step_by(2).copied().collect();
        for y in companion_schur(&half)? {
            let r = y.sqrt();
            out.push(r);
            out.push(-r);
        }
    } else {
        out.extend(companion_schur(rest)?);
    }
    Ok(out)
}

fn companion_schur(monic: &[C64]) -> Result<Vec<C64>> {
    let k = monic.len() - 1;
    if k == 0 {
        return Ok(vec![]);
    }
    if k == 1 {
        return Ok(vec![-monic[0]]);
    }
    let mut m = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        m[(i, k - 1)] = -monic[i];
        if i + 1 < k {
            m[(i + 1, i)] = C64::new(1.0, 0.0);
        }
    }
    balance(&mut m);
    nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100 * k)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Approximation("companion Schur form did not converge".into()))
}

/// Newton refinement against `f(x) = (p(x), p'(x))`; a step is kept only if it reduces `|p|`.
pub(crate) fn polish(roots: &mut [C64], f: impl Fn(C64) -> (C64, C64)) {
    for z in roots.iter_mut() {
        let (mut p, mut d) = f(*z);
        for _ in 0..8 {
            if d.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let cand = *z - p / d;
            let (pc, dc) = f(cand);
            if pc.norm() >= p.norm() {
                break;
            }
            *z = cand;
            p = pc;
            d = dc;
        }
    }
}

pub(crate) fn snap_and_sort(roots: &mut [C64], tol: f64) {
    for z in roots.iter_mut() {
        if z.im.abs() < tol {
            z.im = 0.0;
        }
        // Drop signed zeros so the order is well defined.
        z.re += 0.0;
        z.im += 0.0;
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Diagonal similarity scaling by powers of two so that row and column norms match.
fn balance(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let l1 = |z: &C64| z.re.abs() + z.im.abs();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += l1(&m[(j, i)]);
                    r += l1(&m[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quadratic_examples() {
        let p = roots_from_coeffs(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 1e-9).unwrap();
        assert_eq!(p.roots, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        let p = roots_from_coeffs(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 1e-9).unwrap();
        assert!((p.roots[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((p.roots[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn taylor_exponential_roots() {
        // 1 − ix − x²/2 has roots ±1 − i.
        let co = [c(1.0, 0.0), c(0.0, -1.0), c(-0.5, 0.0)];
        let p = roots_from_coeffs(&co, 1e-9).unwrap();
        assert!((p.roots[0] - c(-1.0, -1.0)).norm() < 1e-13);
        assert!((p.roots[1] - c(1.0, -1.0)).norm() < 1e-13);
        for z in &p.roots {
            assert!((z.norm() - 2f64.sqrt()).abs() < 1e-13);
        }
        // Vieta: a_K z₊z₋ = c₀.
        assert!((p.leading * p.roots[0] * p.roots[1] - co[0]).norm() < 1e-13);
    }

    #[test]
    fn rejects_zero_leading() {
        assert!(roots_from_coeffs(&[c(1.0, 0.0), c(0.0, 0.0)], 1e-9).is_err());
        assert!(roots_from_coeffs(&[], 1e-9).is_err());
    }

    #[test]
    fn degree_zero() {
        let p = roots_from_coeffs(&[c(3.0, 0.0)], 1e-9).unwrap();
        assert!(p.roots.is_empty());
        assert_eq!(p.leading, c(3.0, 0.0));
    }

    #[test]
    fn zero_root() {
        let p = roots_from_coeffs(&[c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)], 1e-9).unwrap();
        assert_eq!(p.roots, vec![c(-2.0, 0.0), c(0.0, 0.0)]);
    }

    /// Roots on a jittered grid keep pairwise separation ≥ 0.2.
    fn separated_roots() -> impl Strategy<Value = Vec<C64>> {
        (1usize..=10).prop_flat_map(|k| {
            (prop::sample::subsequence((0..36).collect::<Vec<_>>(), k), prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05), k))
                .prop_map(|(cells, jit)| {
                    cells
                        .iter()
                        .zip(jit)
                        .map(|(&cell, (dx, dy))| c(-1.25 + 0.5 * (cell % 6) as f64 + dx, -1.25 + 0.5 * (cell / 6) as f64 + dy))
                        .collect()
                })
        })
    }

    proptest! {
        #[test]
        fn round_trip(roots in separated_roots(), lr in 0.5f64..2.0, li in -1.0f64..1.0) {
            let lead = c(lr, li);
            let co: Vec<C64> = expand_roots(&roots).into_iter().map(|x| x * lead).collect();
            let p = roots_from_coeffs(&co, 1e-9).unwrap();
            prop_assert_eq!(p.degree(), roots.len());
            let back = p.coefficients();
            let scale = co.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for (a, b) in back.iter().zip(&co) {
                prop_assert!((a - b).norm() <= 1e-8 * scale);
            }
            for z in &roots {
                let best = p.roots.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-8);
            }
        }
    }
}
