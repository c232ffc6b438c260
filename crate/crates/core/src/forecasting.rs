//! Nonlinear autoregressive forecasting on top of the two-view model.
//!
//! A series `x_1 … x_T` becomes a regression problem with inputs
//! `[x_ℓ, x_{ℓ−1}, …, x_{ℓ−p}]` (newest first) and targets `x_{ℓ+1}`. The
//! input windows form the `input` view and the next values the `target`
//! view; forecasting infers the target view from the input view and feeds
//! each prediction back into the window.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{infer_dual, infer_primal, preimage_dual_linear, preimage_linear, InferenceRequest};
use crate::kernels::KernelSpec;
use crate::model::{DualModel, MultiViewDataset, PrimalModel, View, ViewConfig, ViewRole};
use crate::training::TrainedModel;

/// Name of the lag-window view in forecasting datasets.
pub const INPUT_VIEW: &str = "x";
/// Name of the next-value view in forecasting datasets.
pub const TARGET_VIEW: &str = "y";

/// Lag parameter `p`; windows hold `p + 1` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    pub p: usize,
}

impl LagSpec {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("lag parameter p must be positive".into()));
        }
        Ok(Self { p })
    }

    pub fn window_len(&self) -> usize {
        self.p + 1
    }
}

/// A named train/test split of a univariate series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSplit {
    pub name: String,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

impl SeriesSplit {
    /// The first `t_train` values train, the following `t_test` values test.
    pub fn new(name: impl Into<String>, series: &[f64], t_train: usize, t_test: usize, lag: LagSpec) -> Result<Self> {
        if t_train <= lag.window_len() {
            return Err(Error::InvalidInput(format!(
                "training length {t_train} must exceed the window length {}",
                lag.window_len()
            )));
        }
        if series.len() < t_train + t_test {
            return Err(Error::InvalidInput(format!(
                "series has {} values but the split needs {t_train} + {t_test}",
                series.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            train: series[..t_train].to_vec(),
            test: series[t_train..t_train + t_test].to_vec(),
        })
    }
}

/// Lag embedding: `n = T − p − 1` rows `[x_ℓ, …, x_{ℓ−p}]` with targets `x_{ℓ+1}`.
pub fn lag_embed(series: &[f64], lag: LagSpec) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = lag.p;
    if series.len() < p + 2 {
        return Err(Error::InvalidInput(format!(
            "series of length {} is too short for lag {p} (needs at least {})",
            series.len(),
            p + 2
        )));
    }
    let n = series.len() - p - 1;
    let x = DMatrix::from_fn(n, p + 1, |r, c| series[r + p - c]);
    let y = DVector::from_fn(n, |r, _| series[r + p + 1]);
    Ok((x, y))
}

/// The last `p + 1` values of a series, newest first.
pub fn last_window(series: &[f64], lag: LagSpec) -> Result<Vec<f64>> {
    let w = lag.window_len();
    if series.len() < w {
        return Err(Error::InvalidInput(format!(
            "series of length {} is shorter than the window length {w}",
            series.len()
        )));
    }
    Ok(series.iter().rev().take(w).copied().collect())
}

/// Two-view dataset (lag windows → next value) for a training series.
pub fn forecasting_dataset(
    train: &[f64],
    lag: LagSpec,
    input_kernel: KernelSpec,
    target_kernel: KernelSpec,
) -> Result<MultiViewDataset> {
    let (x, y) = lag_embed(train, lag)?;
    let n = y.len();
    MultiViewDataset::new(vec![
        View::new(ViewConfig::new(INPUT_VIEW, input_kernel, ViewRole::Input), x),
        View::new(
            ViewConfig::new(TARGET_VIEW, target_kernel, ViewRole::Target),
            DMatrix::from_column_slice(n, 1, y.as_slice()),
        ),
    ])
}

/// Something that maps a lag window (newest first) to the next value.
pub trait OneStepPredictor {
    fn window_len(&self) -> usize;
    fn predict_next(&self, window: &[f64]) -> Result<f64>;
}

/// Locates the single input view and the single scalar target view.
fn roles(views: &[ViewConfig]) -> Result<(&str, &str)> {
    let pick = |role: ViewRole| {
        let mut it = views.iter().filter(|c| c.role == role);
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c.name.as_str()),
            _ => Err(Error::InvalidInput(format!(
                "forecasting needs exactly one {role:?} view, model has {}",
                views.iter().filter(|c| c.role == role).count()
            ))),
        }
    };
    Ok((pick(ViewRole::Input)?, pick(ViewRole::Target)?))
}

fn scalar(values: Vec<f64>) -> Result<f64> {
    match values.as_slice() {
        [v] => Ok(*v),
        _ => Err(Error::InvalidInput(format!(
            "forecasting needs a one-dimensional target view, got width {}",
            values.len()
        ))),
    }
}

impl OneStepPredictor for PrimalModel {
    fn window_len(&self) -> usize {
        roles(&self.views)
            .and_then(|(input, _)| self.view_index(input))
            .map_or(0, |i| self.input_dims[i])
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        let (input, target) = roles(&self.views)?;
        let req = InferenceRequest::new(target).with_view(input, window.to_vec());
        let out = infer_primal(self, &req)?;
        scalar(preimage_linear(self, target, &out.phi_hat)?)
    }
}

impl OneStepPredictor for DualModel {
    fn window_len(&self) -> usize {
        roles(&self.views)
            .and_then(|(input, _)| self.view_index(input))
            .map_or(0, |i| self.train_data[i].ncols())
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        let (input, target) = roles(&self.views)?;
        let req = InferenceRequest::new(target).with_view(input, window.to_vec());
        let out = infer_dual(self, &req)?;
        scalar(preimage_dual_linear(self, target, &out.k_hat)?)
    }
}

impl OneStepPredictor for TrainedModel {
    fn window_len(&self) -> usize {
        match self {
            TrainedModel::Primal(m) => m.window_len(),
            TrainedModel::Dual(m) => m.window_len(),
        }
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Primal(m) => m.predict_next(window),
            TrainedModel::Dual(m) => m.predict_next(window),
        }
    }
}

/// Forecasts `horizon` steps by feeding every prediction back into the window.
pub fn recursive_forecast<P: OneStepPredictor + ?Sized>(
    model: &P,
    last_window: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    if last_window.len() != model.window_len() {
        return Err(Error::DimensionMismatch {
            context: "forecast seed window",
            expected: model.window_len(),
            found: last_window.len(),
        });
    }
    let mut window = last_window.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = model.predict_next(&window)?;
        window.pop();
        window.insert(0, next);
        out.push(next);
    }
    Ok(out)
}

/// `x_ℓ = Σ_j α_j sin(2π ω_j ℓ / sample_rate)` for `ℓ = 0 … T−1`.
pub fn gen_sum_of_sines(t: usize, amplitudes: &[f64], frequencies: &[f64], sample_rate: f64) -> Result<Vec<f64>> {
    if amplitudes.len() != frequencies.len() {
        return Err(Error::DimensionMismatch {
            context: "sum of sines amplitudes vs frequencies",
            expected: amplitudes.len(),
            found: frequencies.len(),
        });
    }
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidInput(format!("sample rate must be positive, got {sample_rate}")));
    }
    Ok((0..t)
        .map(|l| {
            amplitudes
                .iter()
                .zip(frequencies)
                .map(|(a, w)| a * (2.0 * PI * w * l as f64 / sample_rate).sin())
                .sum()
        })
        .collect())
}

/// Parameters of the two-tone synthetic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SineConfig {
    pub length: usize,
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Divides `ℓ` inside the sine; integer `ℓ` with integer frequencies
    /// would otherwise sample every wave at its zeros.
    pub sample_rate: f64,
}

impl Default for SineConfig {
    fn default() -> Self {
        Self {
            length: 500,
            amplitudes: vec![1.0, 0.2],
            frequencies: vec![100.0, 2000.0],
            sample_rate: 1e4,
        }
    }
}

impl SineConfig {
    pub fn generate(&self) -> Result<Vec<f64>> {
        gen_sum_of_sines(self.length, &self.amplitudes, &self.frequencies, self.sample_rate)
    }
}

/// Logistic-map series `x_{k+1} = r x_k (1 − x_k)`, a chaotic stand-in for
/// real-world chaotic recordings when those are not at hand.
pub fn gen_logistic_map(t: usize, r: f64, x0: f64, burn_in: usize) -> Result<Vec<f64>> {
    if !(0.0..=4.0).contains(&r) || !(0.0..=1.0).contains(&x0) {
        return Err(Error::InvalidInput(format!(
            "logistic map needs r in [0, 4] and x0 in [0, 1], got r={r}, x0={x0}"
        )));
    }
    let mut x = x0;
    for _ in 0..burn_in {
        x = r * x * (1.0 - x);
    }
    Ok((0..t)
        .map(|_| {
            let current = x;
            x = r * x * (1.0 - x);
            current
        })
        .collect())
}

/// Parses one value per line; a non-numeric first line is taken as a header.
/// Blank lines are skipped.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("non-finite value `{field}`"),
                })
            }
            Err(_) if idx == 0 => {}
            Err(e) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("`{field}` is not a number ({e})"),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("series file holds no values".into()));
    }
    Ok(out)
}

pub fn load_series_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_series(&std::fs::read_to_string(path)?)
}

/// Mean squared error.
pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "mse",
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("mse of empty sequences".into()));
    }
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}
