//! Experiment configuration: one JSON document, validated before any work.
//!
//! Every field has a default, so `{}` is a complete config describing the
//! two-tone sine experiment (400 training values, 100 test values, p = 40,
//! linear kernels, 4 components, primal eigendecomposition).

use std::path::{Path, PathBuf};

use mvrkm::forecasting::{gen_logistic_map, load_series_csv, LagSpec, SeriesSplit, SineConfig};
use mvrkm::training::Algorithm;
use mvrkm::{KernelSpec, StiefelOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Sine {
        #[serde(default = "default_amplitudes")]
        amplitudes: Vec<f64>,
        #[serde(default = "default_frequencies")]
        frequencies: Vec<f64>,
        #[serde(default = "default_sample_rate")]
        sample_rate: f64,
    },
    /// One value per line; a relative path is resolved against the config file.
    Csv { path: PathBuf },
    /// Logistic map `x ← r x (1 − x)`, a stand-in for chaotic recordings.
    Logistic {
        #[serde(default = "default_r")]
        r: f64,
        #[serde(default = "default_x0")]
        x0: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
}

fn default_amplitudes() -> Vec<f64> {
    SineConfig::default().amplitudes
}
fn default_frequencies() -> Vec<f64> {
    SineConfig::default().frequencies
}
fn default_sample_rate() -> f64 {
    SineConfig::default().sample_rate
}
fn default_r() -> f64 {
    3.9
}
fn default_x0() -> f64 {
    0.3
}
fn default_burn_in() -> usize {
    500
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Sine {
            amplitudes: default_amplitudes(),
            frequencies: default_frequencies(),
            sample_rate: default_sample_rate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub train: usize,
    pub test: usize,
}

impl Default for Split {
    fn default() -> Self {
        Self { train: 400, test: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewKernels {
    pub input: KernelSpec,
    pub target: KernelSpec,
}

impl Default for ViewKernels {
    fn default() -> Self {
        Self {
            input: KernelSpec::Linear,
            target: KernelSpec::Linear,
        }
    }
}

/// Stiefel optimizer settings; the starting point comes from the top-level seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StiefelConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub grad_tol: f64,
    pub obj_tol: f64,
}

impl Default for StiefelConfig {
    fn default() -> Self {
        let d = StiefelOptions::default();
        Self {
            max_iters: d.max_iters,
            learning_rate: d.learning_rate,
            adam_beta1: d.adam_beta1,
            adam_beta2: d.adam_beta2,
            grad_tol: d.grad_tol,
            obj_tol: d.obj_tol,
        }
    }
}

/// Pass/fail thresholds for `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max-abs difference allowed between two eigendecomposition models.
    pub eig_pair: f64,
    /// Max-abs difference allowed when either model is Stiefel-trained.
    pub stiefel_pair: f64,
    /// Largest relative difference between Γ spectra.
    pub spectrum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig_pair: 1e-6,
            stiefel_pair: 1e-3,
            spectrum: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetConfig,
    pub split: Split,
    /// Lag parameter `p`; windows hold `p + 1` values.
    pub lag: usize,
    pub views: ViewKernels,
    pub components: usize,
    pub algorithm: Algorithm,
    pub rotate: bool,
    pub stiefel: StiefelConfig,
    pub seed: u64,
    /// Forecast horizon; defaults to the test length.
    pub horizon: Option<usize>,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: DatasetConfig::default(),
            split: Split::default(),
            lag: 40,
            views: ViewKernels::default(),
            components: 4,
            algorithm: Algorithm::PrimalEig,
            rotate: true,
            stiefel: StiefelConfig::default(),
            seed: 0,
            horizon: None,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Reads a config; relative CSV paths become relative to the config
    /// file. Validation is left to the caller.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if let DatasetConfig::Csv { path: csv } = &mut cfg.dataset {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(cfg)
    }

    pub fn stiefel_options(&self) -> StiefelOptions {
        let s = self.stiefel;
        StiefelOptions {
            max_iters: s.max_iters,
            learning_rate: s.learning_rate,
            adam_beta1: s.adam_beta1,
            adam_beta2: s.adam_beta2,
            grad_tol: s.grad_tol,
            obj_tol: s.obj_tol,
            seed: self.seed,
        }
    }

    pub fn lag_spec(&self) -> Result<LagSpec, CliError> {
        LagSpec::new(self.lag).map_err(|e| invalid(e.to_string()))
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(self.split.test)
    }

    fn feature_dim(&self) -> Option<usize> {
        let p1 = self.lag + 1;
        Some(self.views.input.feature_dim(p1)? + self.views.target.feature_dim(1)?)
    }

    /// Why `algorithm` cannot run on this config, if it cannot.
    pub fn infeasibility(&self, algorithm: Algorithm) -> Option<String> {
        if !algorithm.is_primal() {
            return None;
        }
        match self.feature_dim() {
            None => Some(format!(
                "{algorithm} needs explicit feature maps, but a view uses a {} kernel \
                 (use the dual setting or random Fourier features)",
                if self.views.input.has_explicit_map() { self.views.target.name() } else { self.views.input.name() }
            )),
            Some(d_f) if self.components > d_f => Some(format!(
                "{algorithm}: components = {} exceeds the feature dimension d_f = {d_f}",
                self.components
            )),
            Some(_) => None,
        }
    }

    /// Full validation for commands that train `self.algorithm`.
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_common()?;
        match self.infeasibility(self.algorithm) {
            Some(reason) => Err(CliError::Config(reason)),
            None => Ok(()),
        }
    }

    /// Checks everything except whether `self.algorithm` is feasible.
    pub fn validate_common(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let lag = self.lag_spec()?;
        if self.split.train <= lag.window_len() {
            return Err(invalid(format!(
                "split.train = {} must exceed the window length p + 1 = {}",
                self.split.train,
                lag.window_len()
            )));
        }
        let n = self.split.train - lag.window_len();
        if self.components == 0 || self.components >= n {
            return Err(invalid(format!(
                "components = {} must lie in 1..{} for {n} training windows",
                self.components,
                n - 1
            )));
        }
        for (view, spec) in [("input", &self.views.input), ("target", &self.views.target)] {
            spec.validate().map_err(|e| invalid(format!("views.{view}: {e}")))?;
        }
        if self.views.target != KernelSpec::Linear {
            return Err(invalid(
                "views.target must use the linear kernel: forecasts need a pre-image of the target view",
            ));
        }
        self.stiefel_options()
            .validate()
            .map_err(|e| invalid(format!("stiefel: {e}")))?;
        let t = self.tolerances;
        if !(t.eig_pair > 0.0 && t.stiefel_pair > 0.0 && t.spectrum > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        match &self.dataset {
            DatasetConfig::Sine {
                amplitudes,
                frequencies,
                sample_rate,
            } => {
                if amplitudes.len() != frequencies.len() || amplitudes.is_empty() {
                    return Err(invalid("dataset: amplitudes and frequencies need equal, nonzero lengths"));
                }
                if !(*sample_rate > 0.0) {
                    return Err(invalid("dataset: sample_rate must be positive"));
                }
            }
            DatasetConfig::Logistic { r, x0, .. } => {
                if !(0.0..=4.0).contains(r) || !(0.0..=1.0).contains(x0) {
                    return Err(invalid("dataset: logistic map needs r in [0, 4] and x0 in [0, 1]"));
                }
            }
            DatasetConfig::Csv { .. } => {}
        }
        Ok(())
    }

    /// The full series the split is cut from.
    pub fn series(&self) -> Result<Vec<f64>, CliError> {
        let len = self.split.train + self.split.test;
        let series = match &self.dataset {
            DatasetConfig::Sine {
                amplitudes,
                frequencies,
                sample_rate,
            } => SineConfig {
                length: len,
                amplitudes: amplitudes.clone(),
                frequencies: frequencies.clone(),
                sample_rate: *sample_rate,
            }
            .generate()?,
            DatasetConfig::Logistic { r, x0, burn_in } => gen_logistic_map(len, *r, *x0, *burn_in)?,
            DatasetConfig::Csv { path } => load_series_csv(path).map_err(|e| match e {
                mvrkm::Error::Io(io) => invalid(format!("cannot read series {}: {io}", path.display())),
                other => invalid(format!("series {}: {other}", path.display())),
            })?,
        };
        Ok(series)
    }

    pub fn split(&self) -> Result<SeriesSplit, CliError> {
        let series = self.series()?;
        SeriesSplit::new("series", &series, self.split.train, self.split.test, self.lag_spec()?)
            .map_err(|e| invalid(format!("split: {e}")))
    }
}
