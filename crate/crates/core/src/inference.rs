//! Missing-view inference and pre-images.
//!
//! Everything up to the pre-image stays in centered coordinates: known views
//! are centered with the training statistics, and only [`preimage_linear`]
//! and [`preimage_dual_linear`] add the training mean back.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{center_gram, center_test_kernel_vector, cross_kernel_vector, feature_map_point, KernelSpec};
use crate::linalg::{sym_eigen_desc, symmetrize};
use crate::model::{DualModel, PrimalModel, ViewConfig};

/// Largest condition number accepted for the inner inference matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Known input-space values for every view but one, and the view to infer.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRequest {
    pub known_views: BTreeMap<String, Vec<f64>>,
    pub target_view: String,
}

impl InferenceRequest {
    pub fn new(target_view: impl Into<String>) -> Self {
        Self {
            known_views: BTreeMap::new(),
            target_view: target_view.into(),
        }
    }

    pub fn with_view(mut self, name: impl Into<String>, x: Vec<f64>) -> Self {
        self.known_views.insert(name.into(), x);
        self
    }

    /// Resolves the request against a model's views: `(target, [(index, input)])`.
    fn resolve<'a>(&'a self, views: &[ViewConfig]) -> Result<(usize, Vec<(usize, &'a [f64])>)> {
        let index = |name: &str| {
            views
                .iter()
                .position(|c| c.name == name)
                .ok_or_else(|| Error::UnknownView(name.to_string()))
        };
        let target = index(&self.target_view)?;
        if self.known_views.contains_key(&self.target_view) {
            return Err(Error::InvalidInput(format!(
                "view `{}` is both known and the inference target",
                self.target_view
            )));
        }
        let mut known = Vec::with_capacity(self.known_views.len());
        for (name, x) in &self.known_views {
            known.push((index(name)?, x.as_slice()));
        }
        if known.len() + 1 != views.len() {
            let missing: Vec<&str> = views
                .iter()
                .filter(|c| c.name != self.target_view && !self.known_views.contains_key(&c.name))
                .map(|c| c.name.as_str())
                .collect();
            return Err(Error::InvalidInput(format!(
                "only one view can be inferred at a time; also missing: {}",
                missing.join(", ")
            )));
        }
        Ok((target, known))
    }
}

/// Solves `M x = b` for symmetric `M`, refusing ill-conditioned systems.
fn guarded_solve(m: &DMatrix<f64>, b: &DVector<f64>, name: &'static str) -> Result<DVector<f64>> {
    let (values, vectors) = sym_eigen_desc(&symmetrize(m));
    let max = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { matrix: name, condition });
    }
    let coeffs = vectors.tr_mul(b).component_div(&values);
    Ok(&vectors * coeffs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalInference {
    /// Centered feature estimate of the target view.
    pub phi_hat: DVector<f64>,
    /// `(Γ − U_vᵀU_v)⁻¹ Σ_{w≠v} U_wᵀ φ_w`.
    pub h_hat: DVector<f64>,
}

/// `φ̂_v = U_v (Γ − U_vᵀU_v)⁻¹ Σ_{w≠v} U_wᵀ φ_w(x_w)`.
pub fn infer_primal(model: &PrimalModel, req: &InferenceRequest) -> Result<PrimalInference> {
    let (target, known) = req.resolve(&model.views)?;
    let mut drive = DVector::zeros(model.s());
    for (w, x) in known {
        if x.len() != model.input_dims[w] {
            return Err(Error::DimensionMismatch {
                context: "known view input width",
                expected: model.input_dims[w],
                found: x.len(),
            });
        }
        let phi = feature_map_point(&model.views[w].kernel, x)? - &model.feature_means[w];
        drive += model.u_block(w).tr_mul(&phi);
    }
    let u_v = model.u_block(target);
    let inner = &model.gamma - u_v.tr_mul(&u_v);
    let h_hat = guarded_solve(&inner, &drive, "Gamma - U_v^T U_v")?;
    Ok(PrimalInference {
        phi_hat: &u_v * &h_hat,
        h_hat,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualInference {
    /// Centered kernel-vector estimate of the target view.
    pub k_hat: DVector<f64>,
    /// `(Γ − HᵀK_vH)⁻¹ Hᵀ Σ_{w≠v} k_w`.
    pub h_hat: DVector<f64>,
}

/// `k̂_v = K_v H (Γ − HᵀK_vH)⁻¹ Hᵀ Σ_{w≠v} k_w(x_w)`.
///
/// The known-view sum runs over the kernel vectors of the *known* views `w`.
pub fn infer_dual(model: &DualModel, req: &InferenceRequest) -> Result<DualInference> {
    let (target, known) = req.resolve(&model.views)?;
    let mut drive = DVector::zeros(model.n_samples());
    for (w, x) in known {
        let raw = cross_kernel_vector(&model.views[w].kernel, &model.train_data[w], x)?;
        drive += center_test_kernel_vector(&model.train_grams_uncentered[w], &raw)?;
    }
    let k_v = center_gram(&model.train_grams_uncentered[target]).values;
    let kh = &k_v * &model.h;
    let inner = &model.gamma - model.h.tr_mul(&kh);
    let h_hat = guarded_solve(&inner, &model.h.tr_mul(&drive), "Gamma - H^T K_v H")?;
    Ok(DualInference {
        k_hat: kh * &h_hat,
        h_hat,
    })
}

fn require_linear(cfg: &ViewConfig, operation: &'static str) -> Result<()> {
    if cfg.kernel != KernelSpec::Linear {
        return Err(Error::WrongKernel {
            view: cfg.name.clone(),
            kernel: cfg.kernel.name(),
            operation,
        });
    }
    Ok(())
}

/// Pre-image for a linear-kernel view: the feature map is the identity, so
/// only the training mean has to be added back.
pub fn preimage_linear(model: &PrimalModel, view: &str, phi_hat: &DVector<f64>) -> Result<Vec<f64>> {
    let v = model.view_index(view)?;
    require_linear(&model.views[v], "preimage_linear")?;
    let mean = &model.feature_means[v];
    if phi_hat.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            context: "preimage_linear feature width",
            expected: mean.len(),
            found: phi_hat.len(),
        });
    }
    Ok((phi_hat + mean).iter().copied().collect())
}

/// Pre-image of a centered linear kernel vector: the minimum-norm solution of
/// `min ‖X_c x − k̂‖` over the centered training matrix, plus the mean.
pub fn preimage_dual_linear(model: &DualModel, view: &str, k_hat: &DVector<f64>) -> Result<Vec<f64>> {
    let v = model.view_index(view)?;
    require_linear(&model.views[v], "preimage_dual_linear")?;
    let x = &model.train_data[v];
    if k_hat.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            context: "preimage_dual_linear kernel vector length",
            expected: x.nrows(),
            found: k_hat.len(),
        });
    }
    let mean = x.row_mean();
    let mut xc = x.clone();
    for mut r in xc.row_iter_mut() {
        r -= &mean;
    }
    let svd = xc.svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return Ok(mean.iter().copied().collect());
    }
    let solution = svd
        .solve(k_hat, 1e-10 * sigma_max)
        .map_err(|e| Error::InvalidInput(format!("least-squares pre-image failed: {e}")))?;
    Ok((solution + mean.transpose()).iter().copied().collect())
}
