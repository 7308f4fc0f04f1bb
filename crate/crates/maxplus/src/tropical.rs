//! Max-plus matrix kernels.
//!
//! Over R_max = R ∪ {-∞}, addition is `max` (identity -∞) and multiplication
//! is `+` (identity 0, with -∞ absorbing). The matrix product is
//! `[A ⊞ B]_ij = max_l (A_il + B_lj)`.
//!
//! The -∞ rules are enforced branch-by-branch: a term with a -∞ operand is
//! dropped rather than computed, so expressions like `-∞ - (-∞)` can never
//! surface as NaN downstream.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::Matrix;

/// Tropical scalar product: `a + b` with -∞ absorbing.
#[inline]
pub fn tropical_mul(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// Tropical scalar sum: `max(a, b)` with -∞ as identity.
#[inline]
pub fn tropical_add(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// For each output cell, the inner index attaining the max in `A ⊞ B`.
///
/// `None` marks a cell whose every term is -∞, where no maximizer exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgmaxMap {
    rows: usize,
    cols: usize,
    pi: Vec<Option<usize>>,
}

impl ArgmaxMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The maximizing inner index for cell (i, j), if one exists.
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        self.pi[i * self.cols + j]
    }
}

fn check_inner_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::dim(format!(
            "max-plus product of {}x{} by {}x{}: inner dimensions differ",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Max-plus matrix-vector product: `result_i = max_j (A_ij + x_j)`.
pub fn maxplus_matvec(a: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    if a.cols() != x.len() {
        return Err(Error::dim(format!(
            "max-plus mat-vec of {}x{} by a length-{} vector",
            a.rows(),
            a.cols(),
            x.len()
        )));
    }
    let mut out = vec![f64::NEG_INFINITY; a.rows()];
    for i in 0..a.rows() {
        let mut best = f64::NEG_INFINITY;
        for (j, &xj) in x.iter().enumerate() {
            best = tropical_add(best, tropical_mul(a.at(i, j), xj));
        }
        out[i] = best;
    }
    Ok(out)
}

/// Max-plus matrix product: `C_ij = max_l (A_il + B_lj)`.
pub fn maxplus_matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_inner_dims(a, b)?;
    let mut c = Matrix::bottom(a.rows(), b.cols());
    for i in 0..a.rows() {
        for l in 0..a.cols() {
            let ail = a.at(i, l);
            if ail == f64::NEG_INFINITY {
                continue;
            }
            for j in 0..b.cols() {
                let blj = b.at(l, j);
                if blj == f64::NEG_INFINITY {
                    continue;
                }
                let s = ail + blj;
                if s > c.at(i, j) {
                    c.set(i, j, s);
                }
            }
        }
    }
    Ok(c)
}

/// Max-plus product together with the maximizer of every output cell.
///
/// Ties are broken uniformly at random; the rng is consumed in row-major
/// cell order (and only for cells with two or more exact maximizers), so a
/// fixed seed fixes the whole map. Cells whose terms are all -∞ get `None`.
pub fn maxplus_matmul_argmax(
    a: &Matrix,
    b: &Matrix,
    rng: &mut impl Rng,
) -> Result<(Matrix, ArgmaxMap)> {
    check_inner_dims(a, b)?;
    let (m, p, n) = (a.rows(), a.cols(), b.cols());
    let mut c = Matrix::bottom(m, n);
    let mut pi = vec![None; m * n];
    let mut ties = Vec::with_capacity(p);
    for i in 0..m {
        for j in 0..n {
            let (value, choice) = cell_argmax(a, b, i, j, &mut ties, rng);
            c.set(i, j, value);
            pi[i * n + j] = choice;
        }
    }
    Ok((c, ArgmaxMap { rows: m, cols: n, pi }))
}

/// Max and uniformly tie-broken argmax of `A_il + B_lj` over l for one cell.
pub(crate) fn cell_argmax(
    a: &Matrix,
    b: &Matrix,
    i: usize,
    j: usize,
    ties: &mut Vec<usize>,
    rng: &mut impl Rng,
) -> (f64, Option<usize>) {
    let mut best = f64::NEG_INFINITY;
    ties.clear();
    for l in 0..a.cols() {
        let s = tropical_mul(a.at(i, l), b.at(l, j));
        if s == f64::NEG_INFINITY {
            continue;
        }
        if s > best {
            best = s;
            ties.clear();
            ties.push(l);
        } else if s == best {
            ties.push(l);
        }
    }
    let choice = match ties.len() {
        0 => None,
        1 => Some(ties[0]),
        k => Some(ties[rng.gen_range(0..k)]),
    };
    (best, choice)
}

/// Sum of squared differences over masked-in cells (the squared masked
/// Frobenius norm of Y - P). Errors if any compared entry is non-finite.
pub(crate) fn masked_sse(y: &Matrix, p: &Matrix, mask: Option<&ObservationMask>) -> Result<f64> {
    if y.shape() != p.shape() {
        return Err(Error::dim(format!(
            "comparing a {}x{} matrix with a {}x{} matrix",
            y.rows(),
            y.cols(),
            p.rows(),
            p.cols()
        )));
    }
    if let Some(m) = mask {
        if (m.rows(), m.cols()) != y.shape() {
            return Err(Error::dim(format!(
                "mask is {}x{} but matrices are {}x{}",
                m.rows(),
                m.cols(),
                y.rows(),
                y.cols()
            )));
        }
        let mut sse = 0.0;
        for &(i, j) in m.cells() {
            sse += squared_diff(y.at(i, j), p.at(i, j), i, j)?;
        }
        Ok(sse)
    } else {
        let mut sse = 0.0;
        for i in 0..y.rows() {
            for j in 0..y.cols() {
                sse += squared_diff(y.at(i, j), p.at(i, j), i, j)?;
            }
        }
        Ok(sse)
    }
}

#[inline]
fn squared_diff(y: f64, p: f64, i: usize, j: usize) -> Result<f64> {
    if !y.is_finite() || !p.is_finite() {
        return Err(Error::non_finite(format!(
            "cell ({i}, {j}) compares {y} with {p}; masked-in entries must be finite"
        )));
    }
    let d = y - p;
    Ok(d * d)
}

/// Masked Frobenius error `|| mask ∘ (Y - P) ||_F` (the norm, not its
/// square). `None` for the mask compares every cell.
pub fn frobenius_error(y: &Matrix, p: &Matrix, mask: Option<&ObservationMask>) -> Result<f64> {
    Ok(masked_sse(y, p, mask)?.sqrt())
}
