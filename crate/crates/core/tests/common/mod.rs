#![allow(dead_code)]

use mvrkm::forecasting::{forecasting_dataset, last_window, LagSpec, SeriesSplit, SineConfig};
use mvrkm::{KernelSpec, MultiViewDataset};

pub const SINE_TRAIN: usize = 400;
pub const SINE_TEST: usize = 100;
pub const SINE_LAG: usize = 40;

pub struct Experiment {
    pub split: SeriesSplit,
    pub lag: LagSpec,
    pub data: MultiViewDataset,
    pub seed_window: Vec<f64>,
}

pub fn experiment(series: &[f64], t_train: usize, t_test: usize, p: usize, input_kernel: KernelSpec) -> Experiment {
    let lag = LagSpec::new(p).unwrap();
    let split = SeriesSplit::new("series", series, t_train, t_test, lag).unwrap();
    let data = forecasting_dataset(&split.train, lag, input_kernel, KernelSpec::Linear).unwrap();
    let seed_window = last_window(&split.train, lag).unwrap();
    Experiment { split, lag, data, seed_window }
}

pub fn sine_experiment() -> Experiment {
    let series = SineConfig::default().generate().unwrap();
    experiment(&series, SINE_TRAIN, SINE_TEST, SINE_LAG, KernelSpec::Linear)
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
