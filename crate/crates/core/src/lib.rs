//! Primal-dual multi-view kernel PCA.
//!
//! A model couples `V` views of the same samples through shared latent
//! variables. It can be trained in the primal (feature space) or dual
//! (kernel) setting, by eigendecomposition or by optimization on the Stiefel
//! manifold. All four routes reach the same solution; the only degrees of
//! freedom are column signs and, for unrotated Stiefel solutions, an
//! orthonormal rotation of the latent space.
//!
//! ```
//! use mvrkm::forecasting::{forecasting_dataset, last_window, recursive_forecast, LagSpec, SineConfig};
//! use mvrkm::kernels::KernelSpec;
//! use mvrkm::training::{train_dual_eig, train_primal_eig};
//!
//! let series = SineConfig::default().generate()?;
//! let lag = LagSpec::new(10)?;
//! let data = forecasting_dataset(&series[..200], lag, KernelSpec::Linear, KernelSpec::Linear)?;
//!
//! let (primal, _) = train_primal_eig(&data, 4)?;
//! let (dual, _) = train_dual_eig(&data, 4)?;
//!
//! let seed = last_window(&series[..200], lag)?;
//! let a = recursive_forecast(&primal, &seed, 20)?;
//! let b = recursive_forecast(&dual, &seed, 20)?;
//! assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
//! # Ok::<(), mvrkm::Error>(())
//! ```
//!
//! The `book/` directory next to this crate walks through the concepts; its
//! code snippets are compiled and run as doctests of this crate.

pub mod error;
pub mod forecasting;
pub mod inference;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod stiefel;
pub mod training;

pub use error::{Error, Result};
pub use kernels::{FeatureMatrix, GramMatrix, KernelSpec};
pub use model::{DualModel, MultiViewDataset, PrimalModel, View, ViewConfig, ViewRole};
pub use stiefel::StiefelOptions;
pub use training::{Algorithm, TrainReport, TrainedModel};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/primal-dual.md")]
    mod primal_dual {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/forecasting.md")]
    mod forecasting {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
