//! Model types, the primal and dual objectives, and the stationarity-based
//! conversions between primal variables `U` and dual variables `H`.
//!
//! Notation used throughout the crate:
//!
//! * `Φ_v` (n × d_f,v): centered explicit features of view `v`, stacked
//!   column-wise into `Φ` (n × d_f).
//! * `C = ΦᵀΦ`: cross-covariance, with blocks `C_vw = Φ_vᵀ Φ_w`.
//! * `K = Σ_v M_c K_v M_c`: summed centered Gram.
//! * `Ũ` (d_f × s) orthonormal, `U = Ũ Γ^{1/2}`; `H` (n × s) orthonormal.
//!
//! The stationarity conditions tie these together:
//! `U_v = Φ_vᵀ H`, `h_i = Γ⁻¹ Σ_v U_vᵀ φ_v(x_i)` and `φ_v(x_i) = U_v h_i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{center_features, center_gram, feature_map, gram_matrix, FeatureMatrix, GramMatrix, KernelSpec};
use crate::linalg::SpdFactor;

/// Whether a view is observed at inference time or predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewRole {
    Input,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewConfig {
    pub name: String,
    pub kernel: KernelSpec,
    pub role: ViewRole,
}

impl ViewConfig {
    pub fn new(name: impl Into<String>, kernel: KernelSpec, role: ViewRole) -> Self {
        Self {
            name: name.into(),
            kernel,
            role,
        }
    }
}

/// One view's configuration and its n × d_v data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub config: ViewConfig,
    pub data: DMatrix<f64>,
}

impl View {
    pub fn new(config: ViewConfig, data: DMatrix<f64>) -> Self {
        Self { config, data }
    }
}

/// Several views of the same `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<View>,
}

fn check_unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(Error::InvalidInput(format!("duplicate view name `{name}`")));
        }
    }
    Ok(())
}

impl MultiViewDataset {
    pub fn new(views: Vec<View>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::EmptyInput("a dataset needs at least one view".into()))?;
        let n = first.data.nrows();
        if n == 0 {
            return Err(Error::EmptyInput("views hold no samples".into()));
        }
        for v in &views {
            v.config.kernel.validate()?;
            if v.data.nrows() != n {
                return Err(Error::DimensionMismatch {
                    context: "samples per view",
                    expected: n,
                    found: v.data.nrows(),
                });
            }
        }
        check_unique_names(views.iter().map(|v| v.config.name.as_str()))?;
        Ok(Self { views })
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].data.nrows()
    }

    pub fn configs(&self) -> Vec<ViewConfig> {
        self.views.iter().map(|v| v.config.clone()).collect()
    }

    pub fn has_explicit_maps(&self) -> bool {
        self.views.iter().all(|v| v.config.kernel.has_explicit_map())
    }

    /// Total explicit feature dimension, if every view has an explicit map.
    pub fn total_feature_dim(&self) -> Option<usize> {
        self.views
            .iter()
            .map(|v| v.config.kernel.feature_dim(v.data.ncols()))
            .sum()
    }

    /// Centered explicit features of every view.
    pub fn explicit_features(&self) -> Result<ExplicitFeatures> {
        let features = self
            .views
            .iter()
            .map(|v| center_features(&feature_map(&v.config.kernel, &v.data)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExplicitFeatures {
            configs: self.configs(),
            input_dims: self.views.iter().map(|v| v.data.ncols()).collect(),
            features,
        })
    }

    /// Uncentered per-view Gram matrices.
    pub fn view_grams(&self) -> Result<Vec<GramMatrix>> {
        self.views
            .iter()
            .map(|v| gram_matrix(&v.config.kernel, &v.data))
            .collect()
    }
}

/// Centered training features together with the view metadata needed to
/// build a [`PrimalModel`] from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitFeatures {
    pub configs: Vec<ViewConfig>,
    pub input_dims: Vec<usize>,
    pub features: Vec<FeatureMatrix>,
}

impl ExplicitFeatures {
    pub fn n_samples(&self) -> usize {
        self.features[0].nrows()
    }

    pub fn total_dim(&self) -> usize {
        self.features.iter().map(|f| f.ncols()).sum()
    }

    /// All views side by side: the n × d_f matrix `Φ`.
    pub fn stacked(&self) -> DMatrix<f64> {
        stack_columns(self.features.iter().map(|f| f.values()))
    }
}

fn stack_columns<'a>(blocks: impl Iterator<Item = &'a DMatrix<f64>> + Clone) -> DMatrix<f64> {
    let n = blocks.clone().next().map_or(0, |b| b.nrows());
    let total: usize = blocks.clone().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, total);
    let mut offset = 0;
    for b in blocks {
        out.columns_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    out
}

/// `C = ΦᵀΦ` over the stacked centered features.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCovariance {
    pub values: DMatrix<f64>,
    /// Starting column of each view's block; one extra trailing entry holds `d_f`.
    pub block_offsets: Vec<usize>,
}

impl CrossCovariance {
    pub fn block(&self, v: usize, w: usize) -> DMatrix<f64> {
        let (r0, r1) = (self.block_offsets[v], self.block_offsets[v + 1]);
        let (c0, c1) = (self.block_offsets[w], self.block_offsets[w + 1]);
        self.values.view((r0, c0), (r1 - r0, c1 - c0)).into_owned()
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

fn offsets(dims: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for d in dims {
        out.push(out.last().unwrap() + d);
    }
    out
}

pub fn build_cross_covariance(features: &[FeatureMatrix]) -> Result<CrossCovariance> {
    let first = features
        .first()
        .ok_or_else(|| Error::EmptyInput("no feature matrices".into()))?;
    for f in features {
        if !f.is_centered() {
            return Err(Error::InvalidInput(
                "cross-covariance needs centered features".into(),
            ));
        }
        if f.nrows() != first.nrows() {
            return Err(Error::DimensionMismatch {
                context: "samples per view",
                expected: first.nrows(),
                found: f.nrows(),
            });
        }
    }
    let phi = stack_columns(features.iter().map(|f| f.values()));
    let values = crate::linalg::symmetrize(&(phi.transpose() * &phi));
    Ok(CrossCovariance {
        values,
        block_offsets: offsets(features.iter().map(|f| f.ncols())),
    })
}

/// `K = Σ_v M_c K_v M_c`.
pub fn summed_centered_gram(data: &MultiViewDataset) -> Result<GramMatrix> {
    sum_centered(&data.view_grams()?)
}

pub(crate) fn sum_centered(grams: &[GramMatrix]) -> Result<GramMatrix> {
    let n = grams[0].n();
    let mut values = DMatrix::zeros(n, n);
    for g in grams {
        if g.n() != n {
            return Err(Error::DimensionMismatch {
                context: "samples per view",
                expected: n,
                found: g.n(),
            });
        }
        values += center_gram(g).values;
    }
    Ok(GramMatrix {
        values,
        centered: true,
    })
}

/// `−½ Tr(AᵀBA) + ½ Tr(B)`.
pub fn trace_objective(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let ba = b * a;
    -0.5 * a.dot(&ba) + 0.5 * b.trace()
}

/// Primal objective `J_pr(Ũ)`.
pub fn primal_objective(u_tilde: &DMatrix<f64>, c: &CrossCovariance) -> f64 {
    trace_objective(u_tilde, &c.values)
}

/// Dual objective `J_d(H)` on the summed centered Gram.
pub fn dual_objective(h: &DMatrix<f64>, k: &GramMatrix) -> f64 {
    trace_objective(h, &k.values)
}

/// Trained primal variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalModel {
    #[serde(with = "crate::io::matrix_rows")]
    pub u: DMatrix<f64>,
    #[serde(with = "crate::io::matrix_rows")]
    pub u_tilde: DMatrix<f64>,
    #[serde(with = "crate::io::matrix_rows")]
    pub gamma: DMatrix<f64>,
    pub views: Vec<ViewConfig>,
    pub input_dims: Vec<usize>,
    pub feature_dims: Vec<usize>,
    /// Per-view column means subtracted from the training features.
    #[serde(with = "crate::io::vector_list")]
    pub feature_means: Vec<DVector<f64>>,
}

impl PrimalModel {
    pub fn s(&self) -> usize {
        self.u.ncols()
    }

    pub fn block_offsets(&self) -> Vec<usize> {
        offsets(self.feature_dims.iter().copied())
    }

    /// Rows of `U` belonging to view `v`.
    pub fn u_block(&self, v: usize) -> DMatrix<f64> {
        let off = self.block_offsets();
        self.u.rows(off[v], off[v + 1] - off[v]).into_owned()
    }

    pub fn view_index(&self, name: &str) -> Result<usize> {
        view_index(&self.views, name)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.views.len();
        let s = self.u.ncols();
        let consistent = self.input_dims.len() == v
            && self.feature_dims.len() == v
            && self.feature_means.len() == v
            && self.u.nrows() == self.feature_dims.iter().sum::<usize>()
            && self.u_tilde.shape() == self.u.shape()
            && self.gamma.shape() == (s, s)
            && self
                .feature_means
                .iter()
                .zip(&self.feature_dims)
                .all(|(m, d)| m.len() == *d);
        if !consistent {
            return Err(Error::InvalidInput("primal model dimensions are inconsistent".into()));
        }
        for (cfg, (&d_in, &d_f)) in self.views.iter().zip(self.input_dims.iter().zip(&self.feature_dims)) {
            cfg.kernel.validate()?;
            if cfg.kernel.feature_dim(d_in) != Some(d_f) {
                return Err(Error::InvalidInput(format!(
                    "view `{}`: feature dimension {d_f} does not match its {} kernel",
                    cfg.name,
                    cfg.kernel.name()
                )));
            }
        }
        check_unique_names(self.views.iter().map(|c| c.name.as_str()))
    }
}

/// Trained dual variables with everything needed for out-of-sample kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualModel {
    #[serde(with = "crate::io::matrix_rows")]
    pub h: DMatrix<f64>,
    #[serde(with = "crate::io::matrix_rows")]
    pub gamma: DMatrix<f64>,
    pub views: Vec<ViewConfig>,
    #[serde(with = "crate::io::matrix_list")]
    pub train_data: Vec<DMatrix<f64>>,
    pub train_grams_uncentered: Vec<GramMatrix>,
}

impl DualModel {
    pub fn s(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.h.nrows()
    }

    pub fn view_index(&self, name: &str) -> Result<usize> {
        view_index(&self.views, name)
    }

    /// The summed centered training Gram `K`.
    pub fn summed_centered_gram(&self) -> Result<GramMatrix> {
        sum_centered(&self.train_grams_uncentered)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.h.nrows();
        let s = self.h.ncols();
        let v = self.views.len();
        let consistent = self.gamma.shape() == (s, s)
            && self.train_data.len() == v
            && self.train_grams_uncentered.len() == v
            && self.train_data.iter().all(|x| x.nrows() == n)
            && self.train_grams_uncentered.iter().all(|g| g.values.shape() == (n, n) && !g.centered);
        if !consistent {
            return Err(Error::InvalidInput("dual model dimensions are inconsistent".into()));
        }
        for cfg in &self.views {
            cfg.kernel.validate()?;
        }
        check_unique_names(self.views.iter().map(|c| c.name.as_str()))
    }
}

fn view_index(views: &[ViewConfig], name: &str) -> Result<usize> {
    views
        .iter()
        .position(|c| c.name == name)
        .ok_or_else(|| Error::UnknownView(name.to_string()))
}

/// Primal variables from dual ones: `U_v = Φ_vᵀ H`, `Ũ = U Γ^{−1/2}`.
pub fn dual_to_primal(
    h: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    feats: &ExplicitFeatures,
) -> Result<PrimalModel> {
    let n = feats.n_samples();
    if h.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "dual_to_primal: rows of H",
            expected: n,
            found: h.nrows(),
        });
    }
    if gamma.shape() != (h.ncols(), h.ncols()) {
        return Err(Error::DimensionMismatch {
            context: "dual_to_primal: size of Gamma",
            expected: h.ncols(),
            found: gamma.nrows(),
        });
    }
    let factor = SpdFactor::new(gamma)?;
    let u = feats.stacked().transpose() * h;
    let u_tilde = &u * factor.inv_sqrt();
    Ok(PrimalModel {
        u,
        u_tilde,
        gamma: gamma.clone(),
        views: feats.configs.clone(),
        input_dims: feats.input_dims.clone(),
        feature_dims: feats.features.iter().map(|f| f.ncols()).collect(),
        feature_means: feats.features.iter().map(|f| f.column_means().clone()).collect(),
    })
}

/// Dual variables from primal ones: row `i` of `H` is `Γ⁻¹ Σ_v U_vᵀ φ_v(x_i)`.
pub fn primal_to_dual(model: &PrimalModel, feats: &ExplicitFeatures) -> Result<DMatrix<f64>> {
    let phi = feats.stacked();
    if phi.ncols() != model.u.nrows() {
        return Err(Error::DimensionMismatch {
            context: "primal_to_dual: feature dimension",
            expected: model.u.nrows(),
            found: phi.ncols(),
        });
    }
    let factor = SpdFactor::new(&model.gamma)?;
    Ok(phi * &model.u * factor.inverse())
}

/// Per-view score variables `E_v = Φ_v U_v` (row `i` is `e_{v,i}`).
pub fn score_variables(model: &PrimalModel, feats: &ExplicitFeatures) -> Vec<DMatrix<f64>> {
    feats
        .features
        .iter()
        .enumerate()
        .map(|(v, f)| f.values() * model.u_block(v))
        .collect()
}

/// Largest `‖φ_v(x_i) − U_v h_i‖` over all views and samples.
pub fn stationarity_residual(model: &PrimalModel, feats: &ExplicitFeatures, h: &DMatrix<f64>) -> f64 {
    let recon = h * model.u.transpose();
    let diff = feats.stacked() - recon;
    diff.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// `(V/2) eᵀΓ⁻¹e + (1/(2V)) hᵀΓh − eᵀh`, which is never negative for SPD `Γ`.
pub fn fenchel_young_gap(
    e: &DVector<f64>,
    h: &DVector<f64>,
    gamma: &DMatrix<f64>,
    views: usize,
) -> Result<f64> {
    if views == 0 {
        return Err(Error::InvalidInput("number of views must be positive".into()));
    }
    let factor = SpdFactor::new(gamma)?;
    let vf = views as f64;
    let quad_e = e.dot(&factor.solve(e));
    let quad_h = h.dot(&(gamma * h));
    Ok(0.5 * vf * quad_e + quad_h / (2.0 * vf) - e.dot(h))
}
