//! Cross-algorithm equivalence report.

use std::fmt::Write as _;

use mvrkm::forecasting::{mse, recursive_forecast};
use mvrkm::io::format_value;
use mvrkm::linalg::{align_signs, max_abs_diff, offdiag_frobenius, sym_eigen_desc};
use mvrkm::training::{train, Algorithm, TrainReport, TrainedModel};
use mvrkm::{MultiViewDataset, StiefelOptions};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::Tolerances;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub converged: bool,
    /// Eigenvalues of Γ, descending.
    pub gamma_spectrum: Vec<f64>,
    /// Off-diagonal Frobenius norm of Γ′ straight out of the optimizer.
    pub gamma_offdiag_before_rotation: f64,
    /// Off-diagonal Frobenius norm of the Γ stored in the model.
    pub gamma_offdiag: f64,
    pub test_mse: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub algorithm: Algorithm,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub first: Algorithm,
    pub second: Algorithm,
    /// Max-abs difference of the sign-aligned training components.
    pub components_max_abs_diff: f64,
    pub forecast_max_abs_diff: f64,
    /// Largest relative difference between the two Γ spectra.
    pub spectrum_rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub components: usize,
    pub horizon: usize,
    pub rotate: bool,
    pub tolerances: Tolerances,
    pub models: Vec<ModelSummary>,
    pub skipped: Vec<Skipped>,
    pub pairs: Vec<PairReport>,
    pub pass: bool,
}

pub struct CompareInput<'a> {
    pub data: &'a MultiViewDataset,
    pub algorithms: Vec<(Algorithm, Option<String>)>,
    pub components: usize,
    pub opts: StiefelOptions,
    pub rotate: bool,
    pub seed_window: &'a [f64],
    pub horizon: usize,
    pub truth: Option<&'a [f64]>,
    pub tolerances: Tolerances,
}

pub struct Comparison {
    pub report: EquivalenceReport,
    /// Forecast per compared algorithm, in report order.
    pub forecasts: Vec<(Algorithm, Vec<f64>)>,
}

struct Trained {
    algorithm: Algorithm,
    model: TrainedModel,
    report: TrainReport,
}

fn spectrum(gamma: &DMatrix<f64>) -> Vec<f64> {
    sym_eigen_desc(gamma).0.iter().copied().collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Trains every feasible algorithm (concurrently) and compares all pairs.
pub fn run(input: CompareInput<'_>) -> Result<Comparison, CliError> {
    let skipped: Vec<Skipped> = input
        .algorithms
        .iter()
        .filter_map(|(a, why)| why.clone().map(|reason| Skipped { algorithm: *a, reason }))
        .collect();
    let feasible: Vec<Algorithm> = input.algorithms.iter().filter(|(_, why)| why.is_none()).map(|(a, _)| *a).collect();

    let trained: Vec<Trained> = std::thread::scope(|scope| {
        let handles: Vec<_> = feasible
            .iter()
            .map(|&algorithm| {
                let input = &input;
                scope.spawn(move || {
                    train(algorithm, input.data, input.components, &input.opts, input.rotate)
                        .map(|(model, report)| Trained { algorithm, model, report })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut components = Vec::with_capacity(trained.len());
    let mut forecasts = Vec::with_capacity(trained.len());
    let mut models = Vec::with_capacity(trained.len());
    for t in &trained {
        let h = t.model.components(input.data)?;
        let h = match components.first() {
            Some(reference) => align_signs(reference, &h),
            None => h,
        };
        components.push(h);
        let f = recursive_forecast(&t.model, input.seed_window, input.horizon)?;
        let test_mse = match input.truth {
            Some(truth) if !f.is_empty() => Some(mse(&f, truth)?),
            _ => None,
        };
        models.push(ModelSummary {
            algorithm: t.algorithm,
            iterations: t.report.iterations,
            converged: t.report.converged,
            gamma_spectrum: spectrum(t.model.gamma()),
            gamma_offdiag_before_rotation: t.report.gamma_offdiag_norm,
            gamma_offdiag: offdiag_frobenius(t.model.gamma()),
            test_mse,
        });
        forecasts.push((t.algorithm, f));
    }

    let mut pairs = Vec::new();
    for i in 0..trained.len() {
        for j in i + 1..trained.len() {
            let (a, b) = (trained[i].algorithm, trained[j].algorithm);
            let tolerance = if a.is_stiefel() || b.is_stiefel() {
                input.tolerances.stiefel_pair
            } else {
                input.tolerances.eig_pair
            };
            let components_max_abs_diff = max_abs_diff(&components[i], &components[j]);
            let forecast_max_abs_diff = max_abs(&forecasts[i].1, &forecasts[j].1);
            let spectrum_rel_diff = rel_diff(&models[i].gamma_spectrum, &models[j].gamma_spectrum);
            let pass = components_max_abs_diff < tolerance
                && forecast_max_abs_diff < tolerance
                && spectrum_rel_diff < input.tolerances.spectrum;
            pairs.push(PairReport {
                first: a,
                second: b,
                components_max_abs_diff,
                forecast_max_abs_diff,
                spectrum_rel_diff,
                tolerance,
                pass,
            });
        }
    }
    let pass = !pairs.is_empty() && pairs.iter().all(|p| p.pass);
    Ok(Comparison {
        report: EquivalenceReport {
            components: input.components,
            horizon: input.horizon,
            rotate: input.rotate,
            tolerances: input.tolerances,
            models,
            skipped,
            pairs,
            pass,
        },
        forecasts,
    })
}

/// Plain-text table of the pairwise results.
pub fn table(report: &EquivalenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<34} {:>11} {:>11} {:>11} {:>9}  result",
        "pair", "components", "forecast", "spectrum", "tol"
    );
    for p in &report.pairs {
        let _ = writeln!(
            out,
            "{:<34} {:>11.3e} {:>11.3e} {:>11.3e} {:>9.0e}  {}",
            format!("{} vs {}", p.first, p.second),
            p.components_max_abs_diff,
            p.forecast_max_abs_diff,
            p.spectrum_rel_diff,
            p.tolerance,
            if p.pass { "pass" } else { "FAIL" }
        );
    }
    for s in &report.skipped {
        let _ = writeln!(out, "skipped {}: {}", s.algorithm, s.reason);
    }
    for m in &report.models {
        if !m.converged {
            let _ = writeln!(out, "note: {} stopped at the iteration cap ({})", m.algorithm, m.iterations);
        }
    }
    let _ = writeln!(out, "overall: {}", if report.pass { "pass" } else { "FAIL" });
    out
}

/// Long-format CSV (`series,step,value`) holding every forecast and the truth.
pub fn long_csv(forecasts: &[(Algorithm, Vec<f64>)], truth: Option<&[f64]>) -> String {
    let mut out = String::from("series,step,value\n");
    let truth = truth.map(|t| ("truth".to_string(), t));
    let named = forecasts.iter().map(|(a, f)| (a.to_string(), f.as_slice()));
    for (name, values) in named.chain(truth) {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{}", i + 1, format_value(*v));
        }
    }
    out
}
