//! Kernel functions, Gram matrices, centering and random Fourier features.
//!
//! Conventions:
//!
//! * Gaussian kernel: `k(x, y) = exp(−‖x − y‖² / (2σ²))`.
//! * Random Fourier features: `φ(x) = sqrt(2/D) · cos(Wx + b)` with rows of
//!   `W` drawn from `N(0, σ⁻² I)` and `b` uniform on `[0, 2π)`. The draws come
//!   from a ChaCha20 stream seeded with the kernel's 64-bit seed: all of `W`
//!   row by row, then all of `b`. Identical specs and input widths therefore
//!   give bit-identical maps.
//! * Out-of-sample centering of a kernel vector `k` against an uncentered
//!   training Gram `K`: `M_c (k − K 1 / n)` with `M_c = I − 11ᵀ/n`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which kernel (and, implicitly, which feature map) a view uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Gaussian { bandwidth: f64 },
    /// Random Fourier feature approximation of the Gaussian kernel.
    Rff {
        bandwidth: f64,
        feature_dim: usize,
        seed: u64,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { bandwidth } | KernelSpec::Rff { bandwidth, .. }
                if !(bandwidth > 0.0 && bandwidth.is_finite()) =>
            {
                Err(Error::InvalidInput(format!(
                    "kernel bandwidth must be a positive finite number, got {bandwidth}"
                )))
            }
            KernelSpec::Rff { feature_dim: 0, .. } => Err(Error::InvalidInput(
                "random Fourier feature dimension must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Rff { .. } => "rff",
        }
    }

    /// True when the kernel comes with a finite explicit feature map.
    pub fn has_explicit_map(&self) -> bool {
        !matches!(self, KernelSpec::Gaussian { .. })
    }

    /// Width of the explicit feature map for inputs of width `input_dim`.
    pub fn feature_dim(&self, input_dim: usize) -> Option<usize> {
        match *self {
            KernelSpec::Linear => Some(input_dim),
            KernelSpec::Gaussian { .. } => None,
            KernelSpec::Rff { feature_dim, .. } => Some(feature_dim),
        }
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// Evaluates `k(x, y)`.
///
/// RFF specs are evaluated as the inner product of the two feature vectors,
/// which keeps this consistent with [`gram_matrix`].
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("kernel_eval", x.len(), y.len())?;
    match *spec {
        KernelSpec::Linear => Ok(x.iter().zip(y).map(|(a, b)| a * b).sum()),
        KernelSpec::Gaussian { bandwidth } => {
            let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((-sq / (2.0 * bandwidth * bandwidth)).exp())
        }
        KernelSpec::Rff { .. } => {
            let map = RffMap::new(spec, x.len())?;
            Ok(map.transform_point(x).dot(&map.transform_point(y)))
        }
    }
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

/// Symmetric kernel matrix of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    #[serde(with = "crate::io::matrix_rows")]
    pub values: DMatrix<f64>,
    pub centered: bool,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Builds `K_ij = k(x_i, x_j)` over the rows of `x`.
pub fn gram_matrix(spec: &KernelSpec, x: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("gram_matrix needs at least one sample".into()));
    }
    let values = match spec {
        KernelSpec::Linear => x * x.transpose(),
        KernelSpec::Rff { .. } => {
            let phi = rff_features(spec, x)?;
            &phi.values * phi.values.transpose()
        }
        KernelSpec::Gaussian { .. } => {
            let n = x.nrows();
            let rows: Vec<Vec<f64>> = (0..n).map(|i| row(x, i)).collect();
            let mut k = DMatrix::zeros(n, n);
            for i in 0..n {
                k[(i, i)] = 1.0;
                for j in 0..i {
                    let v = kernel_eval(spec, &rows[i], &rows[j])?;
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            k
        }
    };
    Ok(GramMatrix {
        values,
        centered: false,
    })
}

/// `[k(x_1, x_new), …, k(x_n, x_new)]` against the training rows.
pub fn cross_kernel_vector(
    spec: &KernelSpec,
    x_train: &DMatrix<f64>,
    x_new: &[f64],
) -> Result<DVector<f64>> {
    check_len("cross_kernel_vector", x_train.ncols(), x_new.len())?;
    match spec {
        KernelSpec::Linear => Ok(x_train * DVector::from_column_slice(x_new)),
        KernelSpec::Rff { .. } => {
            let map = RffMap::new(spec, x_new.len())?;
            Ok(map.transform(x_train).values * map.transform_point(x_new))
        }
        KernelSpec::Gaussian { .. } => {
            let n = x_train.nrows();
            let mut k = DVector::zeros(n);
            for i in 0..n {
                k[i] = kernel_eval(spec, &row(x_train, i), x_new)?;
            }
            Ok(k)
        }
    }
}

/// Double-centers a Gram matrix: `M_c K M_c`.
pub fn center_gram(k: &GramMatrix) -> GramMatrix {
    let n = k.n();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.values.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.values.column(j).sum() / nf).collect();
    let total = row_means.iter().sum::<f64>() / nf;
    let mut values = DMatrix::from_fn(n, n, |i, j| {
        k.values[(i, j)] - row_means[i] - col_means[j] + total
    });
    // The input is symmetric up to rounding; keep the output exactly so.
    values = crate::linalg::symmetrize(&values);
    GramMatrix {
        values,
        centered: true,
    }
}

/// Centers a test kernel vector consistently with [`center_gram`].
pub fn center_test_kernel_vector(
    k_train_uncentered: &GramMatrix,
    k_new: &DVector<f64>,
) -> Result<DVector<f64>> {
    if k_train_uncentered.centered {
        return Err(Error::InvalidInput(
            "out-of-sample centering needs the uncentered training Gram".into(),
        ));
    }
    let n = k_train_uncentered.n();
    check_len("center_test_kernel_vector", n, k_new.len())?;
    let nf = n as f64;
    let row_means = k_train_uncentered.values.column_sum() / nf;
    let shifted = k_new - row_means;
    let mean = shifted.sum() / nf;
    Ok(shifted.add_scalar(-mean))
}

/// Explicit feature representation: one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
    column_means: DVector<f64>,
    centered: bool,
}

impl FeatureMatrix {
    /// Wraps raw (uncentered) features.
    pub fn raw(values: DMatrix<f64>) -> Self {
        let d = values.ncols();
        Self {
            values,
            column_means: DVector::zeros(d),
            centered: false,
        }
    }

    /// Wraps features that are already centered, with the means that were
    /// subtracted from them.
    pub fn from_centered(values: DMatrix<f64>, column_means: DVector<f64>) -> Result<Self> {
        check_len("FeatureMatrix::from_centered", values.ncols(), column_means.len())?;
        Ok(Self {
            values,
            column_means,
            centered: true,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_means(&self) -> &DVector<f64> {
        &self.column_means
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Linear-kernel Gram of the rows.
    pub fn gram(&self) -> GramMatrix {
        GramMatrix {
            values: &self.values * self.values.transpose(),
            centered: self.centered,
        }
    }
}

/// Subtracts the column means and remembers them.
pub fn center_features(phi: &FeatureMatrix) -> Result<FeatureMatrix> {
    if phi.centered {
        return Err(Error::InvalidInput("features are already centered".into()));
    }
    let n = phi.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("cannot center zero samples".into()));
    }
    let means = phi.values.row_mean().transpose();
    let mut values = phi.values.clone();
    for mut r in values.row_iter_mut() {
        r -= means.transpose();
    }
    Ok(FeatureMatrix {
        values,
        column_means: means,
        centered: true,
    })
}

/// A materialized random Fourier feature map for a fixed input width.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    weights: DMatrix<f64>,
    offsets: DVector<f64>,
    scale: f64,
}

impl RffMap {
    pub fn new(spec: &KernelSpec, input_dim: usize) -> Result<Self> {
        spec.validate()?;
        let KernelSpec::Rff {
            bandwidth,
            feature_dim,
            seed,
        } = *spec
        else {
            return Err(Error::InvalidInput(format!(
                "random Fourier features need an rff kernel spec, got {}",
                spec.name()
            )));
        };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut weights = DMatrix::zeros(feature_dim, input_dim);
        for k in 0..feature_dim {
            for j in 0..input_dim {
                let z: f64 = rng.sample(StandardNormal);
                weights[(k, j)] = z / bandwidth;
            }
        }
        let offsets = DVector::from_fn(feature_dim, |_, _| rng.random::<f64>() * 2.0 * PI);
        Ok(Self {
            weights,
            offsets,
            scale: (2.0 / feature_dim as f64).sqrt(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn transform_point(&self, x: &[f64]) -> DVector<f64> {
        let proj = &self.weights * DVector::from_column_slice(x);
        DVector::from_fn(self.feature_dim(), |k, _| {
            self.scale * (proj[k] + self.offsets[k]).cos()
        })
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> FeatureMatrix {
        let mut proj = x * self.weights.transpose();
        for (j, mut col) in proj.column_iter_mut().enumerate() {
            let b = self.offsets[j];
            col.apply(|v| *v = self.scale * (*v + b).cos());
        }
        FeatureMatrix::raw(proj)
    }
}

/// Random Fourier features of every row of `x`.
pub fn rff_features(spec: &KernelSpec, x: &DMatrix<f64>) -> Result<FeatureMatrix> {
    Ok(RffMap::new(spec, x.ncols())?.transform(x))
}

/// Explicit (uncentered) features of `x`, if the kernel has a finite map.
pub fn feature_map(spec: &KernelSpec, x: &DMatrix<f64>) -> Result<FeatureMatrix> {
    match spec {
        KernelSpec::Linear => Ok(FeatureMatrix::raw(x.clone())),
        KernelSpec::Rff { .. } => rff_features(spec, x),
        KernelSpec::Gaussian { .. } => Err(no_explicit_map()),
    }
}

pub(crate) fn no_explicit_map() -> Error {
    Error::Unsupported(
        "the gaussian kernel has no explicit feature map; train in the dual setting \
         or approximate it with random Fourier features (see the algorithm-selection flowchart)"
            .into(),
    )
}

/// Explicit features of a single point.
pub fn feature_map_point(spec: &KernelSpec, x: &[f64]) -> Result<DVector<f64>> {
    match spec {
        KernelSpec::Linear => Ok(DVector::from_column_slice(x)),
        KernelSpec::Rff { .. } => Ok(RffMap::new(spec, x.len())?.transform_point(x)),
        KernelSpec::Gaussian { .. } => Err(no_explicit_map()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn kernel_eval_examples() {
        assert_eq!(kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let g1 = KernelSpec::Gaussian { bandwidth: 1.0 };
        assert_eq!(kernel_eval(&g1, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let g = KernelSpec::Gaussian { bandwidth: 2.1856 };
        // exp(-1 / (2 * 2.1856^2)) evaluated independently.
        assert_relative_eq!(kernel_eval(&g, &[0.0], &[1.0]).unwrap(), 0.900_620_286_003, epsilon = 1e-11);
    }

    #[test]
    fn kernel_eval_dimension_mismatch() {
        let err = kernel_eval(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("expected 1, found 2"), "{err}");
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::Gaussian { bandwidth: 0.0 }.validate().is_err());
        assert!(KernelSpec::Rff { bandwidth: 1.0, feature_dim: 0, seed: 1 }.validate().is_err());
        assert!(KernelSpec::Rff { bandwidth: -1.0, feature_dim: 3, seed: 1 }.validate().is_err());
    }

    #[test]
    fn gram_examples() {
        let k = gram_matrix(&KernelSpec::Linear, &m(2, 1, &[1.0, 2.0])).unwrap();
        assert_eq!(k.values, m(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert!(!k.centered);

        let g = gram_matrix(&KernelSpec::Gaussian { bandwidth: 1.0 }, &m(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0])).unwrap();
        assert_eq!(g.values, DMatrix::from_element(3, 3, 1.0));

        let k = gram_matrix(&KernelSpec::Linear, &m(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(k.values, m(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn cross_kernel_examples() {
        let k = cross_kernel_vector(&KernelSpec::Linear, &m(2, 1, &[1.0, 2.0]), &[3.0]).unwrap();
        assert_eq!(k.as_slice(), &[3.0, 6.0]);
        let x = m(3, 2, &[0.1, 0.2, -1.0, 0.5, 2.0, 2.0]);
        let k = cross_kernel_vector(&KernelSpec::Gaussian { bandwidth: 1.0 }, &x, &[-1.0, 0.5]).unwrap();
        assert_eq!(k[1], 1.0);
        let k = cross_kernel_vector(&KernelSpec::Linear, &m(2, 2, &[1.0, 1.0, 2.0, 0.0]), &[1.0, 2.0]).unwrap();
        assert_eq!(k.as_slice(), &[3.0, 2.0]);
        assert!(cross_kernel_vector(&KernelSpec::Linear, &x, &[1.0]).is_err());
    }

    #[test]
    fn center_gram_examples() {
        let ones = GramMatrix { values: DMatrix::from_element(3, 3, 1.0), centered: false };
        assert_relative_eq!(center_gram(&ones).values, DMatrix::zeros(3, 3), epsilon = 1e-15);

        let k = GramMatrix { values: m(2, 2, &[1.0, 2.0, 2.0, 4.0]), centered: false };
        let c = center_gram(&k);
        assert!(c.centered);
        assert_relative_eq!(c.values, m(2, 2, &[0.25, -0.25, -0.25, 0.25]), epsilon = 1e-15);

        let zero_sum = GramMatrix { values: m(2, 2, &[1.0, -1.0, -1.0, 1.0]), centered: false };
        assert_relative_eq!(center_gram(&zero_sum).values, zero_sum.values, epsilon = 1e-12);
    }

    #[test]
    fn center_test_vector_examples() {
        let k = GramMatrix { values: m(2, 2, &[1.0, 2.0, 2.0, 4.0]), centered: false };
        let c = center_test_kernel_vector(&k, &DVector::from_vec(vec![3.0, 6.0])).unwrap();
        assert_relative_eq!(c, DVector::from_vec(vec![-0.75, 0.75]), epsilon = 1e-15);

        let ones = GramMatrix { values: DMatrix::from_element(3, 3, 1.0), centered: false };
        let c = center_test_kernel_vector(&ones, &DVector::from_element(3, 1.0)).unwrap();
        assert_relative_eq!(c, DVector::zeros(3), epsilon = 1e-15);

        let centered = center_gram(&k);
        assert!(center_test_kernel_vector(&centered, &DVector::zeros(2)).is_err());
        assert!(center_test_kernel_vector(&k, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn center_test_vector_matches_training_columns() {
        let x = m(4, 2, &[0.3, -1.0, 2.0, 0.1, -0.7, 0.4, 1.1, 1.9]);
        let spec = KernelSpec::Gaussian { bandwidth: 0.8 };
        let k = gram_matrix(&spec, &x).unwrap();
        let kc = center_gram(&k);
        for j in 0..4 {
            let col = center_test_kernel_vector(&k, &k.values.column(j).into_owned()).unwrap();
            assert_relative_eq!(col, kc.values.column(j).into_owned(), epsilon = 1e-12);
        }
    }

    #[test]
    fn center_features_examples() {
        let one = center_features(&FeatureMatrix::raw(m(1, 3, &[1.0, -2.0, 5.0]))).unwrap();
        assert_eq!(one.values(), &DMatrix::zeros(1, 3));
        assert_eq!(one.column_means().as_slice(), &[1.0, -2.0, 5.0]);

        let two = center_features(&FeatureMatrix::raw(m(2, 1, &[1.0, 3.0]))).unwrap();
        assert_eq!(two.values(), &m(2, 1, &[-1.0, 1.0]));
        assert_eq!(two.column_means().as_slice(), &[2.0]);
        assert!(two.is_centered());
        assert!(center_features(&two).is_err());
    }

    #[test]
    fn rff_bounded_and_deterministic() {
        let spec = KernelSpec::Rff { bandwidth: 1.3, feature_dim: 1, seed: 9 };
        let x = m(3, 2, &[0.0, 1.0, 5.0, -3.0, 100.0, 2.0]);
        let phi = rff_features(&spec, &x).unwrap();
        assert!(phi.values().iter().all(|v| v.abs() <= 2f64.sqrt()));

        let spec = KernelSpec::Rff { bandwidth: 1.3, feature_dim: 64, seed: 42 };
        let a = rff_features(&spec, &x).unwrap();
        let b = rff_features(&spec, &x).unwrap();
        assert!(a.values().iter().zip(b.values().iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        let other = rff_features(&KernelSpec::Rff { bandwidth: 1.3, feature_dim: 64, seed: 43 }, &x).unwrap();
        assert_ne!(a.values(), other.values());
    }

    #[test]
    fn rff_kernel_eval_matches_gram() {
        let spec = KernelSpec::Rff { bandwidth: 0.9, feature_dim: 32, seed: 3 };
        let x = m(3, 2, &[0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        let k = gram_matrix(&spec, &x).unwrap();
        let v = kernel_eval(&spec, &[0.1, 0.2], &[0.5, -0.6]).unwrap();
        assert_relative_eq!(k.values[(0, 2)], v, epsilon = 1e-14);
        let kv = cross_kernel_vector(&spec, &x, &[-0.3, 0.4]).unwrap();
        assert_relative_eq!(kv, k.values.column(1).into_owned(), epsilon = 1e-14);
    }

    #[test]
    fn gaussian_has_no_explicit_map() {
        let err = feature_map(&KernelSpec::Gaussian { bandwidth: 1.0 }, &m(1, 1, &[0.0])).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        assert!(feature_map_point(&KernelSpec::Gaussian { bandwidth: 1.0 }, &[0.0]).is_err());
    }
}
