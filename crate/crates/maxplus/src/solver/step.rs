//! The shared stepping core: weighted residual gradients, the simultaneous
//! update, and post-step additive noise.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tropical::{cell_argmax, tropical_mul};

/// The cells a step sums over: every cell of the target, or an explicit list
/// (an observation mask or a minibatch).
#[derive(Debug, Clone, Copy)]
pub enum Cells<'a> {
    Full { rows: usize, cols: usize },
    List(&'a [(usize, usize)]),
}

impl Cells<'_> {
    fn try_for_each(&self, mut f: impl FnMut(usize, usize) -> Result<()>) -> Result<()> {
        match *self {
            Cells::Full { rows, cols } => {
                for i in 0..rows {
                    for j in 0..cols {
                        f(i, j)?;
                    }
                }
                Ok(())
            }
            Cells::List(cells) => {
                for &(i, j) in cells {
                    f(i, j)?;
                }
                Ok(())
            }
        }
    }
}

/// Accumulate the weighted residual gradients of `|| Y - A ⊞ B ||_F^2 / 2`
/// over the given cells.
///
/// For cell (i, j) with maximizer π of `A_il + B_lj`, term l contributes
/// `(A_il + B_lj - Y_ij) * s` to both gradients, with `s = 1` when `l = π`
/// and `s = eps` otherwise. Zero-weight and -∞ terms are skipped outright.
/// Argmax ties consume `rng` uniformly in cell-enumeration order.
///
/// Errors if Y is non-finite at any visited cell.
pub fn residual_grads(
    y: &Matrix,
    a: &Matrix,
    b: &Matrix,
    cells: Cells<'_>,
    eps: f64,
    rng: &mut impl Rng,
) -> Result<(Matrix, Matrix)> {
    let inner = a.cols();
    let mut grad_a = Matrix::zeros(a.rows(), a.cols());
    let mut grad_b = Matrix::zeros(b.rows(), b.cols());
    let mut ties = Vec::with_capacity(inner);
    cells.try_for_each(|i, j| {
        let yij = y.at(i, j);
        if !yij.is_finite() {
            return Err(Error::non_finite(format!(
                "Y({i}, {j}) = {yij} inside the observed set"
            )));
        }
        let (_, maximizer) = cell_argmax(a, b, i, j, &mut ties, rng);
        // Every term -inf: nothing attains a finite max, nothing moves.
        let Some(pi) = maximizer else { return Ok(()) };
        for l in 0..inner {
            let s = if l == pi { 1.0 } else { eps };
            if s == 0.0 {
                continue;
            }
            let sum = tropical_mul(a.at(i, l), b.at(l, j));
            if sum == f64::NEG_INFINITY {
                continue;
            }
            let g = (sum - yij) * s;
            grad_a[(i, l)] += g;
            grad_b[(l, j)] += g;
        }
        Ok(())
    })?;
    Ok((grad_a, grad_b))
}

/// `x - alpha * grad` entrywise; -∞ entries stay -∞ (they carry no gradient).
pub fn apply_step(x: &Matrix, grad: &Matrix, alpha: f64) -> Matrix {
    debug_assert_eq!(x.shape(), grad.shape());
    Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        let v = x.at(i, j);
        if v == f64::NEG_INFINITY {
            v
        } else {
            v - alpha * grad.at(i, j)
        }
    })
}

/// Add uniform noise to every finite entry, row-major: `[-amp, amp]` for the
/// zero-mean law, `[0, amp]` otherwise. One draw is consumed per entry
/// whether or not it is applied, so consumption depends only on the shape.
pub fn add_noise(x: &mut Matrix, amp: f64, zero_mean: bool, rng: &mut impl Rng) {
    debug_assert!(amp > 0.0);
    for v in x.as_mut_slice() {
        let u: f64 = rng.gen();
        let noise = if zero_mean { (2.0 * u - 1.0) * amp } else { u * amp };
        if v.is_finite() {
            *v += noise;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn gradient_matches_hand_computation() {
        // One cell, two inner terms: residuals -1 (maximizer) and -6.
        let y = Matrix::from_rows(&[&[1.0]]);
        let a = Matrix::from_rows(&[&[0.0, -5.0]]);
        let b = Matrix::from_rows(&[&[0.0], &[0.0]]);
        let mut rng = rng_for(0, "t");
        let (ga, gb) = residual_grads(&y, &a, &b, Cells::Full { rows: 1, cols: 1 }, 0.5, &mut rng)
            .unwrap();
        assert_eq!(ga[(0, 0)], -1.0);
        assert_eq!(ga[(0, 1)], -3.0); // -6 * 0.5
        assert_eq!(gb[(0, 0)], -1.0);
        assert_eq!(gb[(1, 0)], -3.0);
    }

    #[test]
    fn zero_eps_skips_off_maximizer_terms() {
        let y = Matrix::from_rows(&[&[1.0]]);
        let a = Matrix::from_rows(&[&[0.0, -5.0]]);
        let b = Matrix::from_rows(&[&[0.0], &[0.0]]);
        let mut rng = rng_for(0, "t");
        let (ga, _) = residual_grads(&y, &a, &b, Cells::Full { rows: 1, cols: 1 }, 0.0, &mut rng)
            .unwrap();
        assert_eq!(ga[(0, 1)], 0.0);
    }

    #[test]
    fn bottom_entries_are_frozen() {
        let y = Matrix::from_rows(&[&[1.0]]);
        let a = Matrix::from_rows(&[&[0.0, f64::NEG_INFINITY]]);
        let b = Matrix::from_rows(&[&[0.0], &[0.0]]);
        let mut rng = rng_for(0, "t");
        let (ga, gb) = residual_grads(&y, &a, &b, Cells::Full { rows: 1, cols: 1 }, 0.5, &mut rng)
            .unwrap();
        assert_eq!(ga[(0, 1)], 0.0); // -inf term skipped even at eps > 0
        let a_next = apply_step(&a, &ga, 0.1);
        assert_eq!(a_next[(0, 1)], f64::NEG_INFINITY);
        let b_next = apply_step(&b, &gb, 0.1);
        assert!(b_next.is_finite());
    }

    #[test]
    fn non_finite_y_rejected() {
        let y = Matrix::from_rows(&[&[f64::NEG_INFINITY]]);
        let a = Matrix::from_rows(&[&[0.0]]);
        let b = Matrix::from_rows(&[&[0.0]]);
        let mut rng = rng_for(0, "t");
        let r = residual_grads(&y, &a, &b, Cells::Full { rows: 1, cols: 1 }, 0.0, &mut rng);
        assert!(matches!(r, Err(Error::NonFiniteInput(_))));
    }

    #[test]
    fn noise_laws_respect_bounds() {
        let mut zm = Matrix::zeros(20, 20);
        let mut rng = rng_for(1, "noise");
        add_noise(&mut zm, 0.5, true, &mut rng);
        assert!(zm.as_slice().iter().all(|&v| (-0.5..=0.5).contains(&v)));
        assert!(zm.as_slice().iter().any(|&v| v < 0.0));

        let mut nzm = Matrix::zeros(20, 20);
        add_noise(&mut nzm, 0.5, false, &mut rng);
        assert!(nzm.as_slice().iter().all(|&v| (0.0..=0.5).contains(&v)));
    }
}
