//! Tropical compression: minimize `|| Y - A ⊞ (B X) ||_F^2` where `B X` is an
//! ordinary product of an m×p and a p×N matrix and A is an n×m max-plus
//! factor.
//!
//! The solver works on the equivalent rank-constrained form: minimize
//! `|| Y - A ⊞ C ||_F^2` subject to `rank(C) <= p`, by projected gradient
//! descent — a TMF-style simultaneous step on (A, C) followed by projection
//! of C onto the rank-p set (truncated singular value decomposition). On
//! termination, C is rank-factorized into B and X, zero-padded when its
//! numerical rank falls short of p.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::Matrix;
use crate::seed::rng_for;
use crate::solver::step::{add_noise, apply_step, residual_grads, Cells};
use crate::solver::tmf::{uniform_init, INIT_STREAM, STEP_STREAM};
use crate::solver::{EpsSchedule, Variant};
use crate::tropical::{masked_sse, maxplus_matmul};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Configuration for [`tc_fit`].
#[derive(Debug, Clone, Serialize)]
pub struct TcConfig {
    /// Number of tropical terms (columns of A, rows of C).
    pub m: usize,
    /// Compressed dimension (rank bound on C).
    pub p: usize,
    pub alpha: f64,
    pub variant: Variant,
    pub eps_schedule: EpsSchedule,
    pub noise_scale: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub patience: usize,
}

impl TcConfig {
    pub fn new(m: usize, p: usize) -> Self {
        TcConfig {
            m,
            p,
            alpha: 0.01,
            variant: Variant::Gdmn,
            eps_schedule: EpsSchedule::default(),
            noise_scale: 1e-3,
            max_iters: 3000,
            seed: 0,
            patience: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m must be positive"));
        }
        if self.p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::invalid("noise_scale must be nonnegative"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        Ok(())
    }
}

/// Result of a TC fit: `C = B·X` (ordinary product) with `rank(C) <= p`.
#[derive(Debug, Clone)]
pub struct TcSolution {
    pub a: Matrix,
    pub b: Matrix,
    pub x: Matrix,
    pub c: Matrix,
    pub trace: Vec<(usize, f64)>,
    pub iterations_run: usize,
}

impl TcSolution {
    pub fn best_objective(&self) -> f64 {
        self.trace.iter().map(|&(_, o)| o).fold(f64::INFINITY, f64::min)
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().map(|&(_, o)| o).unwrap_or(f64::INFINITY)
    }
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

struct Svd {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v_t: DMatrix<f64>,
}

fn thin_svd(c: &Matrix) -> Result<Svd> {
    if !c.is_finite() {
        return Err(Error::non_finite(
            "singular value decomposition requires finite entries",
        ));
    }
    let svd = to_na(c).svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    debug_assert!(sigma.windows(2).all(|w| w[0] >= w[1]), "unsorted singular values");
    Ok(Svd { u, sigma, v_t })
}

/// Count of singular values above `RANK_TOLERANCE` times the largest.
pub fn numerical_rank(c: &Matrix) -> Result<usize> {
    let svd = thin_svd(c)?;
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    if sigma_max <= 0.0 {
        return Ok(0);
    }
    Ok(svd
        .sigma
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * sigma_max)
        .count())
}

/// Best Frobenius rank-<=p approximation of C (truncated SVD).
///
/// When the bound is inactive (`p >= min(m, N)`) the input is returned
/// untouched, bits included.
pub fn rank_projection(c: &Matrix, p: usize) -> Result<Matrix> {
    if p == 0 {
        return Err(Error::invalid("projection rank must be positive"));
    }
    if p >= c.rows().min(c.cols()) {
        return Ok(c.clone());
    }
    let svd = thin_svd(c)?;
    let mut out = Matrix::zeros(c.rows(), c.cols());
    for t in 0..p {
        let s = svd.sigma[t];
        if s == 0.0 {
            break;
        }
        for i in 0..c.rows() {
            let us = svd.u[(i, t)] * s;
            for j in 0..c.cols() {
                out[(i, j)] += us * svd.v_t[(t, j)];
            }
        }
    }
    Ok(out)
}

/// Rank factorization `C = B·X` with B m×p and X p×N.
///
/// Uses the truncated SVD with the square root of each singular value split
/// between the two factors. If the numerical rank p' is below p, the last
/// p - p' columns of B and rows of X are zero. Errors if the numerical rank
/// exceeds p.
pub fn rank_factorize(c: &Matrix, p: usize) -> Result<(Matrix, Matrix)> {
    if p == 0 {
        return Err(Error::invalid("factorization rank must be positive"));
    }
    let svd = thin_svd(c)?;
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let rank = if sigma_max <= 0.0 {
        0
    } else {
        svd.sigma
            .iter()
            .filter(|&&s| s > RANK_TOLERANCE * sigma_max)
            .count()
    };
    if rank > p {
        return Err(Error::InfeasibleRank { rank, bound: p });
    }
    let mut b = Matrix::zeros(c.rows(), p);
    let mut x = Matrix::zeros(p, c.cols());
    for t in 0..rank {
        let root = svd.sigma[t].sqrt();
        for i in 0..c.rows() {
            b[(i, t)] = svd.u[(i, t)] * root;
        }
        for j in 0..c.cols() {
            x[(t, j)] = root * svd.v_t[(t, j)];
        }
    }
    Ok((b, x))
}

/// Forward tropical map: `A ⊞ (B X)`.
pub fn tc_predict(a: &Matrix, b: &Matrix, x: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::dim(format!(
            "A has {} columns but B has {} rows",
            a.cols(),
            b.rows()
        )));
    }
    let c = b.matmul(x)?;
    maxplus_matmul(a, &c)
}

/// One projected update of (A, C): a TMF-style simultaneous step treating C
/// as the right factor, then projection of C onto the rank-p set.
pub fn tc_step(
    y: &Matrix,
    a: &Matrix,
    c: &Matrix,
    config: &TcConfig,
    k: usize,
    mask: Option<&ObservationMask>,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, Matrix)> {
    if a.rows() != y.rows() || c.cols() != y.cols() || a.cols() != c.rows() {
        return Err(Error::dim(format!(
            "factors {}x{} and {}x{} do not fit a {}x{} target",
            a.rows(),
            a.cols(),
            c.rows(),
            c.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let cells = match mask {
        Some(m) => Cells::List(m.cells()),
        None => Cells::Full {
            rows: y.rows(),
            cols: y.cols(),
        },
    };
    let eps_k = config.eps_schedule.eval(k);
    let eps = config.variant.off_maximizer_weight(eps_k);
    let (grad_a, grad_c) = residual_grads(y, a, c, cells, eps, rng)?;
    let mut a_next = apply_step(a, &grad_a, config.alpha);
    let mut c_next = apply_step(c, &grad_c, config.alpha);
    if let Some(zero_mean) = config.variant.additive_noise() {
        let amp = config.noise_scale * eps_k;
        if amp > 0.0 {
            add_noise(&mut a_next, amp, zero_mean, rng);
            add_noise(&mut c_next, amp, zero_mean, rng);
        }
    }
    let c_next = rank_projection(&c_next, config.p)?;
    Ok((a_next, c_next))
}

/// Fit a tropical compression of Y by projected gradient descent.
///
/// Iterates [`tc_step`]; on termination, rank-factorizes C into (B, X).
/// Trace, patience, and determinism contracts match [`crate::solver::tmf_fit`];
/// with the rank bound inactive the iterates coincide with TMF's exactly.
pub fn tc_fit(
    y: &Matrix,
    config: &TcConfig,
    mask: Option<&ObservationMask>,
    init: Option<(Matrix, Matrix)>,
) -> Result<TcSolution> {
    config.validate()?;
    if let Some(m) = mask {
        if m.is_empty() {
            return Err(Error::invalid("observation mask is empty"));
        }
    }
    let (mut a, c0) = match init {
        Some(pair) => pair,
        None => {
            let mut rng = rng_for(config.seed, INIT_STREAM);
            let a0 = uniform_init(y.rows(), config.m, &mut rng);
            let c0 = uniform_init(config.m, y.cols(), &mut rng);
            (a0, c0)
        }
    };
    // Start feasible.
    let mut c = rank_projection(&c0, config.p)?;

    let mut rng = rng_for(config.seed, STEP_STREAM);
    let objective = |a: &Matrix, c: &Matrix| -> Result<f64> {
        let prod = maxplus_matmul(a, c)?;
        masked_sse(y, &prod, mask)
    };

    let mut trace = Vec::with_capacity(config.max_iters + 1);
    let initial = objective(&a, &c)?;
    trace.push((0, initial));

    let mut best_obj = initial;
    let mut best = (a.clone(), c.clone());
    let mut since_best = 0usize;
    let mut iterations_run = 0usize;

    for k in 0..config.max_iters {
        let (a_next, c_next) = tc_step(y, &a, &c, config, k, mask, &mut rng)?;
        a = a_next;
        c = c_next;
        iterations_run = k + 1;
        let obj = objective(&a, &c)?;
        trace.push((k + 1, obj));
        if obj < best_obj {
            best_obj = obj;
            best = (a.clone(), c.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience > 0 && since_best >= config.patience {
                break;
            }
        }
    }

    let (a, c) = if config.patience > 0 { best } else { (a, c) };
    let (b, x) = rank_factorize(&c, config.p)?;
    Ok(TcSolution {
        a,
        b,
        x,
        c,
        trace,
        iterations_run,
    })
}
