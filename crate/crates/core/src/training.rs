//! The four training algorithms (primal/dual × eigendecomposition/Stiefel)
//! and the algorithm-selection helper.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::linalg::{apply_sign_convention, offdiag_frobenius, sym_eigen_desc, symmetrize, SpdFactor};
use crate::model::{
    build_cross_covariance, dual_objective, primal_objective, primal_to_dual, sum_centered, CrossCovariance,
    DualModel, ExplicitFeatures, MultiViewDataset, PrimalModel,
};
use crate::stiefel::{rotate_solution, stiefel_minimize, StiefelOptions};

/// Eigenvalues at or below this fraction of the largest one are treated as
/// numerically zero when selecting components.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PrimalEig,
    DualEig,
    PrimalStiefel,
    DualStiefel,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::PrimalEig,
        Algorithm::DualEig,
        Algorithm::PrimalStiefel,
        Algorithm::DualStiefel,
    ];

    pub fn is_primal(self) -> bool {
        matches!(self, Algorithm::PrimalEig | Algorithm::PrimalStiefel)
    }

    pub fn is_stiefel(self) -> bool {
        matches!(self, Algorithm::PrimalStiefel | Algorithm::DualStiefel)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::PrimalEig => "primal-eig",
            Algorithm::DualEig => "dual-eig",
            Algorithm::PrimalStiefel => "primal-stiefel",
            Algorithm::DualStiefel => "dual-stiefel",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown algorithm `{s}` (expected one of primal-eig, dual-eig, primal-stiefel, dual-stiefel)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub algorithm: Algorithm,
    pub components: usize,
    pub iterations: usize,
    pub final_objective: f64,
    /// Frobenius norm of the off-diagonal part of `Γ′` before any rotation.
    pub gamma_offdiag_norm: f64,
    pub rotated: bool,
    /// False when the Stiefel optimizer hit its iteration cap.
    pub converged: bool,
    /// Relative Riemannian gradient norm at the solution (0 for eig).
    pub grad_norm: f64,
}

impl TrainReport {
    fn eig(algorithm: Algorithm, s: usize, objective: f64) -> Self {
        Self {
            algorithm,
            components: s,
            iterations: 0,
            final_objective: objective,
            gamma_offdiag_norm: 0.0,
            rotated: false,
            converged: true,
            grad_norm: 0.0,
        }
    }
}

fn check_components(s: usize, n: usize, d_f: Option<usize>) -> Result<()> {
    let available = d_f.map_or(n.saturating_sub(1), |d| d.min(n.saturating_sub(1)));
    if s == 0 || s > available {
        return Err(Error::Rank {
            requested: s,
            available,
            reason: "the component count must satisfy 1 <= s <= min(n - 1, d_f)".into(),
        });
    }
    Ok(())
}

/// Top-`s` eigenpairs, rejecting numerically zero eigenvalues.
fn top_eigenpairs(m: &DMatrix<f64>, s: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (values, vectors) = sym_eigen_desc(m);
    let lead = values[0];
    let usable = values.iter().take_while(|&&l| l > RANK_RTOL * lead && lead > 0.0).count();
    if usable < s {
        return Err(Error::Rank {
            requested: s,
            available: usable,
            reason: "the data is rank deficient".into(),
        });
    }
    let mut top = vectors.columns(0, s).into_owned();
    apply_sign_convention(&mut top);
    Ok((values.rows(0, s).into_owned(), top))
}

fn primal_setup(data: &MultiViewDataset, s: usize) -> Result<(ExplicitFeatures, CrossCovariance)> {
    if !data.has_explicit_maps() {
        return Err(crate::kernels::no_explicit_map());
    }
    let feats = data.explicit_features()?;
    check_components(s, feats.n_samples(), Some(feats.total_dim()))?;
    let c = build_cross_covariance(&feats.features)?;
    Ok((feats, c))
}

fn primal_model(feats: &ExplicitFeatures, u_tilde: DMatrix<f64>, gamma: DMatrix<f64>) -> Result<PrimalModel> {
    let root = SpdFactor::new(&gamma)?.sqrt();
    Ok(PrimalModel {
        u: &u_tilde * root,
        u_tilde,
        gamma,
        views: feats.configs.clone(),
        input_dims: feats.input_dims.clone(),
        feature_dims: feats.features.iter().map(|f| f.ncols()).collect(),
        feature_means: feats.features.iter().map(|f| f.column_means().clone()).collect(),
    })
}

/// Primal training by eigendecomposition of the cross-covariance.
pub fn train_primal_eig(data: &MultiViewDataset, s: usize) -> Result<(PrimalModel, TrainReport)> {
    let (feats, c) = primal_setup(data, s)?;
    let (lambda, u_tilde) = top_eigenpairs(&c.values, s)?;
    let model = primal_model(&feats, u_tilde, DMatrix::from_diagonal(&lambda))?;
    let report = TrainReport::eig(Algorithm::PrimalEig, s, primal_objective(&model.u_tilde, &c));
    Ok((model, report))
}

struct DualSetup {
    grams: Vec<GramMatrix>,
    k: GramMatrix,
}

fn dual_setup(data: &MultiViewDataset, s: usize) -> Result<DualSetup> {
    check_components(s, data.n_samples(), None)?;
    let grams = data.view_grams()?;
    let k = sum_centered(&grams)?;
    Ok(DualSetup { grams, k })
}

fn dual_model(data: &MultiViewDataset, setup: DualSetup, h: DMatrix<f64>, gamma: DMatrix<f64>) -> DualModel {
    DualModel {
        h,
        gamma,
        views: data.configs(),
        train_data: data.views().iter().map(|v| v.data.clone()).collect(),
        train_grams_uncentered: setup.grams,
    }
}

/// Dual training by eigendecomposition of the summed centered Gram.
pub fn train_dual_eig(data: &MultiViewDataset, s: usize) -> Result<(DualModel, TrainReport)> {
    let setup = dual_setup(data, s)?;
    let (lambda, h) = top_eigenpairs(&setup.k.values, s)?;
    let report = TrainReport::eig(Algorithm::DualEig, s, dual_objective(&h, &setup.k));
    Ok((dual_model(data, setup, h, DMatrix::from_diagonal(&lambda)), report))
}

struct StiefelSolution {
    a: DMatrix<f64>,
    gamma: DMatrix<f64>,
    report: TrainReport,
}

fn solve_on_stiefel(
    b: &DMatrix<f64>,
    s: usize,
    opts: &StiefelOptions,
    rotate: bool,
    algorithm: Algorithm,
) -> Result<StiefelSolution> {
    let out = stiefel_minimize(b, s, opts)?;
    let gamma_prime = symmetrize(&(out.a.transpose() * b * &out.a));
    let offdiag = offdiag_frobenius(&gamma_prime);
    let (a, gamma) = if rotate {
        let rot = rotate_solution(&out.a, b);
        (rot.a.clone(), rot.gamma())
    } else {
        (out.a.clone(), gamma_prime)
    };
    let report = TrainReport {
        algorithm,
        components: s,
        iterations: out.iterations,
        final_objective: crate::model::trace_objective(&a, b),
        gamma_offdiag_norm: offdiag,
        rotated: rotate,
        converged: out.converged,
        grad_norm: out.grad_norm,
    };
    Ok(StiefelSolution { a, gamma, report })
}

/// Primal training by Stiefel optimization on the cross-covariance.
///
/// With `rotate = false` the model keeps the non-diagonal `Γ′` and
/// `U = Ũ′ Γ′^{1/2}` uses the symmetric square root.
pub fn train_primal_stiefel(
    data: &MultiViewDataset,
    s: usize,
    opts: &StiefelOptions,
    rotate: bool,
) -> Result<(PrimalModel, TrainReport)> {
    let (feats, c) = primal_setup(data, s)?;
    let sol = solve_on_stiefel(&c.values, s, opts, rotate, Algorithm::PrimalStiefel)?;
    let model = primal_model(&feats, sol.a, sol.gamma)?;
    Ok((model, sol.report))
}

/// Dual training by Stiefel optimization on the summed centered Gram.
pub fn train_dual_stiefel(
    data: &MultiViewDataset,
    s: usize,
    opts: &StiefelOptions,
    rotate: bool,
) -> Result<(DualModel, TrainReport)> {
    let setup = dual_setup(data, s)?;
    let sol = solve_on_stiefel(&setup.k.values, s, opts, rotate, Algorithm::DualStiefel)?;
    SpdFactor::new(&sol.gamma)?;
    Ok((dual_model(data, setup, sol.a, sol.gamma), sol.report))
}

/// The primal model with the rescaling step skipped (`U = Ũ`).
///
/// Only useful as an ablation: predictions from this model lose the
/// variance information carried by `Γ`.
pub fn without_rescaling(model: &PrimalModel) -> PrimalModel {
    PrimalModel {
        u: model.u_tilde.clone(),
        ..model.clone()
    }
}

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Primal(PrimalModel),
    Dual(DualModel),
}

impl TrainedModel {
    pub fn gamma(&self) -> &DMatrix<f64> {
        match self {
            TrainedModel::Primal(m) => &m.gamma,
            TrainedModel::Dual(m) => &m.gamma,
        }
    }

    /// Latent components `H` on the training samples (n × s).
    ///
    /// Primal models go through `h_i = Γ⁻¹ Σ_v U_vᵀ φ_v(x_i)` and therefore need
    /// the training data again.
    pub fn components(&self, data: &MultiViewDataset) -> Result<DMatrix<f64>> {
        match self {
            TrainedModel::Primal(m) => primal_to_dual(m, &data.explicit_features()?),
            TrainedModel::Dual(m) => Ok(m.h.clone()),
        }
    }
}

/// Runs any of the four algorithms. `opts` and `rotate` only matter for the
/// Stiefel variants.
pub fn train(
    algorithm: Algorithm,
    data: &MultiViewDataset,
    s: usize,
    opts: &StiefelOptions,
    rotate: bool,
) -> Result<(TrainedModel, TrainReport)> {
    match algorithm {
        Algorithm::PrimalEig => train_primal_eig(data, s).map(|(m, r)| (TrainedModel::Primal(m), r)),
        Algorithm::DualEig => train_dual_eig(data, s).map(|(m, r)| (TrainedModel::Dual(m), r)),
        Algorithm::PrimalStiefel => {
            train_primal_stiefel(data, s, opts, rotate).map(|(m, r)| (TrainedModel::Primal(m), r))
        }
        Algorithm::DualStiefel => {
            train_dual_stiefel(data, s, opts, rotate).map(|(m, r)| (TrainedModel::Dual(m), r))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub algorithm: Algorithm,
    pub rationale: String,
}

/// Advisory choice of training algorithm from the problem shape.
///
/// Without explicit feature maps only the dual setting applies. With them,
/// the smaller of the two problems wins: the primal works on a `d_f × d_f`
/// matrix, the dual on an `n × n` one. Eigendecomposition is always preferred
/// over Stiefel optimization since it is exact; Stiefel training only pays off
/// with trainable feature maps, which are not supported here.
pub fn select_algorithm(n: usize, d_f_total: usize, explicit_maps: bool, parametric: bool) -> Result<Recommendation> {
    if parametric {
        return Err(Error::Unsupported(
            "trainable (parametric) feature or pre-image maps call for Stiefel training with an \
             augmented loss (the starred flowchart branch), which this library does not provide"
                .into(),
        ));
    }
    if !explicit_maps {
        return Ok(Recommendation {
            algorithm: Algorithm::DualEig,
            rationale: "no explicit feature map is available, so only the dual (kernel) setting applies; \
                        eigendecomposition of the summed centered Gram is exact"
                .into(),
        });
    }
    if d_f_total < n {
        Ok(Recommendation {
            algorithm: Algorithm::PrimalEig,
            rationale: format!(
                "feature dimension d_f = {d_f_total} is below n = {n}: the {d_f_total}x{d_f_total} \
                 cross-covariance is smaller than the {n}x{n} Gram matrix"
            ),
        })
    } else {
        let ratio = d_f_total as f64 / n as f64;
        Ok(Recommendation {
            algorithm: Algorithm::DualEig,
            rationale: format!(
                "feature dimension d_f = {d_f_total} is at least n = {n}: the dual works with H in St({n}, s) \
                 instead of U in St({d_f_total}, s), about {ratio:.1}x fewer parameters"
            ),
        })
    }
}
