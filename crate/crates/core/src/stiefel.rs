//! Minimization of `−½ Tr(AᵀBA) + ½ Tr(B)` over the Stiefel manifold
//! `{A ∈ ℝ^{m×s} : AᵀA = I}` with a Cayley-retraction Adam scheme.
//!
//! Each iteration:
//!
//! 1. Euclidean gradient `G = −BA`.
//! 2. Adam moments on `G`: first moment elementwise, second moment as a
//!    single scalar `‖G‖²_F` so the preconditioned direction stays a multiple
//!    of the momentum and stationary points are not shifted.
//! 3. Skew-symmetric generator `W = AĜᵀ − ĜAᵀ` (oriented for descent).
//! 4. Cayley step `A ← (I − τ/2 W)⁻¹ (I + τ/2 W) A`.
//!
//! `W` has rank at most `2s`, so step 4 is evaluated through the Woodbury
//! identity with a `2s × 2s` solve instead of an `m × m` one.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{apply_sign_convention, orthonormality_defect, orthonormalize, sym_eigen_desc, symmetrize};
use crate::model::trace_objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StiefelOptions {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// Stop once `‖G − A GᵀA‖_F / ‖B‖_F` drops below this.
    pub grad_tol: f64,
    /// Stop once the objective moves by less than `obj_tol · Tr(B)` for
    /// several consecutive iterations.
    pub obj_tol: f64,
    /// Seed of the Gaussian matrix whose QR factor is the starting point.
    pub seed: u64,
}

impl Default for StiefelOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            learning_rate: 0.2,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            grad_tol: 1e-7,
            obj_tol: 1e-12,
            seed: 0,
        }
    }
}

impl StiefelOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.adam_beta1)
            && self.adam_beta1 > 0.0
            && (0.0..1.0).contains(&self.adam_beta2)
            && self.adam_beta2 > 0.0
            && self.grad_tol > 0.0
            && self.obj_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid Stiefel options: {self:?}")))
        }
    }
}

const ADAM_EPS: f64 = 1e-12;
const STALL_WINDOW: usize = 5;
const REORTHONORMALIZE_AT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StiefelOutcome {
    /// Orthonormal minimizer estimate (m × s).
    pub a: DMatrix<f64>,
    pub iterations: usize,
    pub objective: f64,
    /// Relative Riemannian gradient norm at the returned point.
    pub grad_norm: f64,
    /// False when `max_iters` ran out before either stopping rule fired.
    pub converged: bool,
    /// Largest `‖AᵀA − I‖_F` seen over all iterates.
    pub max_feasibility_violation: f64,
}

/// Seeded random point on St(m, s).
pub fn random_stiefel_point(m: usize, s: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut g = DMatrix::zeros(m, s);
    for j in 0..s {
        for i in 0..m {
            g[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    orthonormalize(&g)
}

/// `(I − τ/2 W)⁻¹ (I + τ/2 W) A` for `W = AĜᵀ − ĜAᵀ`.
///
/// With `W = L Rᵀ`, `L = [A, −Ĝ]`, `R = [Ĝ, A]`, the step equals
/// `A + τ L (I − τ/2 RᵀL)⁻¹ RᵀA`.
pub(crate) fn cayley_step(a: &DMatrix<f64>, g_hat: &DMatrix<f64>, tau: f64) -> Option<DMatrix<f64>> {
    let (m, s) = a.shape();
    let mut l = DMatrix::zeros(m, 2 * s);
    l.columns_mut(0, s).copy_from(a);
    l.columns_mut(s, s).copy_from(&(-g_hat));
    let mut r = DMatrix::zeros(m, 2 * s);
    r.columns_mut(0, s).copy_from(g_hat);
    r.columns_mut(s, s).copy_from(a);
    let inner = DMatrix::identity(2 * s, 2 * s) - r.tr_mul(&l) * (tau / 2.0);
    let rhs = r.tr_mul(a);
    let coeffs = inner.lu().solve(&rhs)?;
    Some(a + l * coeffs * tau)
}

/// Minimizes `−½ Tr(AᵀBA) + ½ Tr(B)` subject to `AᵀA = I_s`.
///
/// Running out of iterations is not an error: the best iterate is returned
/// with `converged = false`.
pub fn stiefel_minimize(b: &DMatrix<f64>, s: usize, opts: &StiefelOptions) -> Result<StiefelOutcome> {
    opts.validate()?;
    if !b.is_square() {
        return Err(Error::InvalidInput("Stiefel objective matrix must be square".into()));
    }
    let m = b.nrows();
    if s == 0 || s > m {
        return Err(Error::Rank {
            requested: s,
            available: m,
            reason: "Stiefel manifold St(m, s) needs 1 <= s <= m".into(),
        });
    }
    let b = symmetrize(b);
    let scale = b.norm().max(f64::MIN_POSITIVE);
    let trace_scale = b.trace().abs().max(f64::MIN_POSITIVE);

    let mut a = random_stiefel_point(m, s, opts.seed);
    let mut moment = DMatrix::zeros(m, s);
    let mut second = 0.0;
    let mut max_violation = orthonormality_defect(&a);

    let mut best: Option<(f64, DMatrix<f64>, f64)> = None;
    let mut prev_obj = f64::NAN;
    let mut stall = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    for t in 0..=opts.max_iters {
        let grad = -(&b * &a);
        let objective = 0.5 * a.dot(&grad) + 0.5 * b.trace();
        let riemannian = &grad - &a * (grad.transpose() * &a);
        let grad_norm = riemannian.norm() / scale;

        if best.as_ref().is_none_or(|(j, _, _)| objective < *j) {
            best = Some((objective, a.clone(), grad_norm));
        }
        iterations = t;
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        if t > 0 && (objective - prev_obj).abs() <= opts.obj_tol * trace_scale {
            stall += 1;
            if stall >= STALL_WINDOW {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
        prev_obj = objective;
        if t == opts.max_iters {
            break;
        }

        let step = (t + 1) as i32;
        moment = moment * opts.adam_beta1 + &grad * (1.0 - opts.adam_beta1);
        second = second * opts.adam_beta2 + grad.norm_squared() * (1.0 - opts.adam_beta2);
        let m_hat = &moment / (1.0 - opts.adam_beta1.powi(step));
        let v_hat = second / (1.0 - opts.adam_beta2.powi(step));
        let g_hat = m_hat / (v_hat.sqrt() + ADAM_EPS);

        let Some(next) = cayley_step(&a, &g_hat, opts.learning_rate) else {
            log::warn!("Cayley step became singular at iteration {t}; stopping early");
            break;
        };
        a = next;
        let violation = orthonormality_defect(&a);
        max_violation = max_violation.max(violation);
        if violation > REORTHONORMALIZE_AT {
            a = orthonormalize(&a);
        }
    }

    let (_, best_a, best_grad) = best.expect("at least one iterate is evaluated");
    if !converged {
        log::warn!(
            "Stiefel optimizer stopped after {iterations} iterations without meeting its tolerances \
             (relative gradient norm {best_grad:e})"
        );
    }
    let a = orthonormalize(&best_a);
    Ok(StiefelOutcome {
        objective: trace_objective(&a, &b),
        a,
        iterations,
        grad_norm: best_grad,
        converged,
        max_feasibility_violation: max_violation,
    })
}

/// Result of aligning a Stiefel solution with the eigenbasis of `Γ′ = A′ᵀBA′`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    /// `A = A′O`, with the component sign convention applied.
    pub a: DMatrix<f64>,
    /// Eigenvalues of `Γ′`, descending.
    pub lambda: nalgebra::DVector<f64>,
    /// Orthonormal `O` with `Γ′ = O Λ Oᵀ`.
    pub o: DMatrix<f64>,
}

impl Rotation {
    pub fn gamma(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.lambda)
    }
}

/// Rotates `A′` so that `AᵀBA` becomes diagonal.
pub fn rotate_solution(a_prime: &DMatrix<f64>, b: &DMatrix<f64>) -> Rotation {
    let gamma_prime = symmetrize(&(a_prime.transpose() * b * a_prime));
    let (lambda, mut o) = sym_eigen_desc(&gamma_prime);
    let mut a = a_prime * &o;
    let signs = apply_sign_convention(&mut a);
    for (mut col, sign) in o.column_iter_mut().zip(signs) {
        col *= sign;
    }
    Rotation { a, lambda, o }
}
