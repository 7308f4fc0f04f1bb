//! Tropical matrix factorization: minimize `|| Y - A ⊞ B ||_F^2` over an
//! n×r left factor A and an r×p right factor B, optionally restricted to an
//! observed subset of Y's cells.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::Matrix;
use crate::seed::rng_for;
use crate::solver::step::{add_noise, apply_step, residual_grads, Cells};
use crate::solver::{EpsSchedule, Variant};
use crate::tropical::{masked_sse, maxplus_matmul};

/// Labels of the sub-seeded streams used by the solvers. `tc_fit` shares
/// them so that, with the rank constraint inactive, its iterates coincide
/// bit for bit with `tmf_fit`'s.
pub(crate) const STEP_STREAM: &str = "solver.step";
pub(crate) const INIT_STREAM: &str = "solver.init";

/// Configuration for [`tmf_fit`].
#[derive(Debug, Clone, Serialize)]
pub struct TmfConfig {
    /// Inner dimension of the factorization.
    pub r: usize,
    /// Step size.
    pub alpha: f64,
    /// Update rule.
    pub variant: Variant,
    /// ε_k weight schedule (also drives the additive-noise amplitude).
    pub eps_schedule: EpsSchedule,
    /// Additive-noise amplitude factor: c_k = noise_scale * eps_schedule(k).
    pub noise_scale: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Global seed; tie-breaking, noise, and the default initialization all
    /// derive their streams from it.
    pub seed: u64,
    /// Early stopping: stop after this many iterations without improvement
    /// of the best objective and return the best-so-far factors. 0 disables.
    pub patience: usize,
}

impl TmfConfig {
    pub fn new(r: usize) -> Self {
        TmfConfig {
            r,
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
        if self.r == 0 {
            return Err(Error::invalid("r must be positive"));
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

/// Result of a TMF fit.
#[derive(Debug, Clone)]
pub struct TmfSolution {
    pub a: Matrix,
    pub b: Matrix,
    /// (iteration, objective) pairs; entry 0 is the initial objective, and
    /// every objective uses the mask the fit used.
    pub trace: Vec<(usize, f64)>,
    pub iterations_run: usize,
}

impl TmfSolution {
    /// Smallest objective seen along the trace.
    pub fn best_objective(&self) -> f64 {
        self.trace.iter().map(|&(_, o)| o).fold(f64::INFINITY, f64::min)
    }

    /// Objective of the final trace entry.
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map(|&(_, o)| o).unwrap_or(f64::INFINITY)
    }
}

/// The squared masked Frobenius objective `|| Z_O ∘ (Y - A ⊞ B) ||_F^2`.
pub fn tmf_objective(
    y: &Matrix,
    a: &Matrix,
    b: &Matrix,
    mask: Option<&ObservationMask>,
) -> Result<f64> {
    let p = maxplus_matmul(a, b)?;
    masked_sse(y, &p, mask)
}

fn check_shapes(y: &Matrix, a: &Matrix, b: &Matrix, mask: Option<&ObservationMask>) -> Result<()> {
    if a.rows() != y.rows() || b.cols() != y.cols() || a.cols() != b.rows() {
        return Err(Error::dim(format!(
            "factors {}x{} and {}x{} do not fit a {}x{} target",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            y.rows(),
            y.cols()
        )));
    }
    if let Some(m) = mask {
        if (m.rows(), m.cols()) != y.shape() {
            return Err(Error::dim(format!(
                "mask is {}x{} but Y is {}x{}",
                m.rows(),
                m.cols(),
                y.rows(),
                y.cols()
            )));
        }
    }
    Ok(())
}

fn cells_for<'a>(y: &Matrix, mask: Option<&'a ObservationMask>) -> Cells<'a> {
    match mask {
        Some(m) => Cells::List(m.cells()),
        None => Cells::Full {
            rows: y.rows(),
            cols: y.cols(),
        },
    }
}

/// One simultaneous update of (A, B) at iteration k.
///
/// Both factors step from their pre-step values; the variant decides the
/// off-maximizer weight and whether additive noise follows. Noise draws are
/// skipped entirely when the amplitude is zero, which keeps the rng stream
/// of a zero-noise GDAN run aligned with plain GD.
pub fn tmf_step(
    y: &Matrix,
    a: &Matrix,
    b: &Matrix,
    config: &TmfConfig,
    k: usize,
    mask: Option<&ObservationMask>,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, Matrix)> {
    check_shapes(y, a, b, mask)?;
    let eps_k = config.eps_schedule.eval(k);
    let eps = config.variant.off_maximizer_weight(eps_k);
    let (grad_a, grad_b) = residual_grads(y, a, b, cells_for(y, mask), eps, rng)?;
    let mut a_next = apply_step(a, &grad_a, config.alpha);
    let mut b_next = apply_step(b, &grad_b, config.alpha);
    if let Some(zero_mean) = config.variant.additive_noise() {
        let amp = config.noise_scale * eps_k;
        if amp > 0.0 {
            add_noise(&mut a_next, amp, zero_mean, rng);
            add_noise(&mut b_next, amp, zero_mean, rng);
        }
    }
    Ok((a_next, b_next))
}

/// Matrix with i.i.d. uniform [0, 1) entries, drawn row-major.
pub(crate) fn uniform_init(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen::<f64>())
}

/// Fit a rank-r tropical factorization of Y.
///
/// Runs up to `max_iters` steps, recording the objective after each; with
/// `patience > 0`, stops once the best objective has stagnated that long and
/// returns the best-so-far factors instead of the final ones. Deterministic
/// given the seed.
pub fn tmf_fit(
    y: &Matrix,
    config: &TmfConfig,
    mask: Option<&ObservationMask>,
    init: Option<(Matrix, Matrix)>,
) -> Result<TmfSolution> {
    config.validate()?;
    if let Some(m) = mask {
        if m.is_empty() {
            return Err(Error::invalid("observation mask is empty"));
        }
    }
    let (mut a, mut b) = match init {
        Some(pair) => pair,
        None => {
            let mut rng = rng_for(config.seed, INIT_STREAM);
            let a0 = uniform_init(y.rows(), config.r, &mut rng);
            let b0 = uniform_init(config.r, y.cols(), &mut rng);
            (a0, b0)
        }
    };
    check_shapes(y, &a, &b, mask)?;

    let mut rng = rng_for(config.seed, STEP_STREAM);
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    let initial = tmf_objective(y, &a, &b, mask)?;
    trace.push((0, initial));

    let mut best_obj = initial;
    let mut best = (a.clone(), b.clone());
    let mut since_best = 0usize;
    let mut iterations_run = 0usize;

    for k in 0..config.max_iters {
        let (a_next, b_next) = tmf_step(y, &a, &b, config, k, mask, &mut rng)?;
        a = a_next;
        b = b_next;
        iterations_run = k + 1;
        let obj = tmf_objective(y, &a, &b, mask)?;
        trace.push((k + 1, obj));
        if obj < best_obj {
            best_obj = obj;
            best = (a.clone(), b.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience > 0 && since_best >= config.patience {
                break;
            }
        }
    }

    let (a, b) = if config.patience > 0 { best } else { (a, b) };
    Ok(TmfSolution {
        a,
        b,
        trace,
        iterations_run,
    })
}
