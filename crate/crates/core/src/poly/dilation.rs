use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{HermitianOperator, C64};

/// `H = [[0, A], [A†, 0]]` on one ancilla (qubit 0) plus the system register.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub operator: HermitianOperator,
    /// Size of `A` before padding.
    pub original_dim: usize,
    /// `true` for system basis states that came from the identity padding block.
    pub padding_mask: Vec<bool>,
}

/// Hermitian dilation of a square matrix.
///
/// Non-power-of-two `A` is padded with an identity block first.
///
/// ```
/// use dbqsp::poly::hermitian_dilation;
/// use nalgebra::DMatrix;
/// use dbqsp::state::C64;
/// let d = hermitian_dilation(&DMatrix::<C64>::identity(2, 2)).unwrap();
/// let ev = d.operator.eigenvalues();
/// assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[3] - 1.0).abs() < 1e-12);
/// ```
pub fn hermitian_dilation(a: &DMatrix<C64>) -> Result<Dilation> {
    let m = a.nrows();
    if m == 0 || a.ncols() != m {
        return Err(Error::Dimension { expected: m, found: a.ncols() });
    }
    let p = m.next_power_of_two();
    let mut padded = DMatrix::<C64>::identity(p, p);
    padded.view_mut((0, 0), (m, m)).copy_from(a);
    let mut h = DMatrix::<C64>::zeros(2 * p, 2 * p);
    h.view_mut((0, p), (p, p)).copy_from(&padded);
    h.view_mut((p, 0), (p, p)).copy_from(&padded.adjoint());
    Ok(Dilation {
        operator: HermitianOperator::from_dense(h)?,
        original_dim: m,
        padding_mask: (0..p).map(|i| i >= m).collect(),
    })
}
