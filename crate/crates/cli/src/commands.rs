use std::path::{Path, PathBuf};

use mvrkm::forecasting::{
    forecasting_dataset, gen_logistic_map, gen_sum_of_sines, last_window, load_series_csv, recursive_forecast,
    LagSpec, OneStepPredictor,
};
use mvrkm::io::{components_csv, forecast_csv, format_value, report_to_json, ModelFile};
use mvrkm::training::{select_algorithm, train as train_model, Algorithm, TrainedModel};
use mvrkm::MultiViewDataset;

use crate::compare::{self, CompareInput};
use crate::config::ExperimentConfig;
use crate::output::{ensure_writable, write_atomic, Outputs};
use crate::{CompareArgs, DataKind, ExperimentArgs, ForecastArgs, GenDataArgs, RecommendArgs, TrainArgs, CliError};

/// Loads the config (or the defaults) and applies command-line overrides.
fn experiment(args: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(rotate) = args.rotate {
        cfg.rotate = rotate;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

struct Prepared {
    data: MultiViewDataset,
    seed_window: Vec<f64>,
    test: Vec<f64>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let split = cfg.split()?;
    let lag = cfg.lag_spec()?;
    let data = forecasting_dataset(&split.train, lag, cfg.views.input.clone(), cfg.views.target.clone())?;
    let seed_window = last_window(&split.train, lag)?;
    Ok(Prepared {
        data,
        seed_window,
        test: split.test,
    })
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let mut cfg = experiment(&args.experiment)?;
    if let Some(algorithm) = args.algorithm {
        cfg.algorithm = algorithm;
    }
    cfg.validate()?;
    let dir = &cfg.output_dir;
    let targets = ["model.json", "report.json", "components.csv"].map(|f| dir.join(f));
    ensure_writable(&targets, args.experiment.force)?;

    let prepared = prepare(&cfg)?;
    let (model, report) = train_model(cfg.algorithm, &prepared.data, cfg.components, &cfg.stiefel_options(), cfg.rotate)?;
    let h = model.components(&prepared.data)?;
    let file = match model {
        TrainedModel::Primal(m) => ModelFile::from(m),
        TrainedModel::Dual(m) => ModelFile::from(m),
    };

    let [model_path, report_path, components_path] = targets;
    let mut out = Outputs::default();
    out.add(model_path, file.to_json()?);
    out.add(report_path, report_to_json(&report)?);
    out.add(components_path, components_csv(&h));
    for path in out.write(args.experiment.force)? {
        println!("wrote {}", path.display());
    }
    println!(
        "{}: {} components, objective {:.6e}, {}",
        cfg.algorithm,
        report.components,
        report.final_objective,
        if report.converged { "converged".to_string() } else { format!("stopped after {} iterations", report.iterations) }
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    let file = ModelFile::load(path).map_err(|e| match e {
        mvrkm::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Input(format!("model {}: {other}", path.display())),
    })?;
    Ok(match file {
        ModelFile::Primal { model, .. } => TrainedModel::Primal(model),
        ModelFile::Dual { model, .. } => TrainedModel::Dual(model),
    })
}

pub fn forecast(args: ForecastArgs) -> Result<(), CliError> {
    let target = args.out.join("forecast.csv");
    ensure_writable(std::slice::from_ref(&target), args.force)?;
    let model = load_model(&args.model)?;
    let window_len = model.window_len();
    if window_len == 0 {
        return Err(CliError::Input(format!(
            "model {} lacks one input and one target view",
            args.model.display()
        )));
    }

    let (seed_window, truth, horizon) = match (&args.config, &args.series) {
        (Some(path), _) => {
            let cfg = ExperimentConfig::load(path)?;
            cfg.validate_common()?;
            let split = cfg.split()?;
            let window = last_window(&split.train, cfg.lag_spec()?)?;
            (window, Some(split.test), args.horizon.unwrap_or(cfg.horizon()))
        }
        (None, Some(path)) => {
            let series = load_series_csv(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let lag = LagSpec::new(window_len - 1)?;
            let window = last_window(&series, lag).map_err(|e| CliError::Input(e.to_string()))?;
            (window, None, args.horizon.unwrap_or(100))
        }
        (None, None) => unreachable!("clap requires --config or --series"),
    };
    if seed_window.len() != window_len {
        return Err(CliError::Input(format!(
            "model expects windows of {window_len} values but the config produces {}",
            seed_window.len()
        )));
    }

    let predicted = recursive_forecast(&model, &seed_window, horizon)?;
    let truth = truth.filter(|t| t.len() >= horizon && horizon > 0).map(|t| t[..horizon].to_vec());
    if args.config.is_some() && truth.is_none() && horizon > 0 {
        log::warn!("horizon {horizon} exceeds the test split; writing forecasts without truth");
    }
    write_atomic(&target, forecast_csv(&predicted, truth.as_deref())?.as_bytes(), args.force)?;
    println!("wrote {}", target.display());
    Ok(())
}

pub fn compare(args: CompareArgs) -> Result<(), CliError> {
    let cfg = experiment(&args.experiment)?;
    if args.algorithms.len() < 2 {
        return Err(CliError::Config("compare needs at least two algorithms".into()));
    }
    let mut seen = Vec::new();
    for a in &args.algorithms {
        if seen.contains(a) {
            return Err(CliError::Config(format!("algorithm {a} listed twice")));
        }
        seen.push(*a);
    }
    cfg.validate_common()?;
    let dir = &cfg.output_dir;
    let targets = [dir.join("compare.json"), dir.join("compare_forecasts.csv")];
    ensure_writable(&targets, args.experiment.force)?;

    let prepared = prepare(&cfg)?;
    let horizon = args.horizon.unwrap_or(cfg.horizon());
    let truth = (prepared.test.len() >= horizon).then(|| &prepared.test[..horizon]);
    let algorithms: Vec<(Algorithm, Option<String>)> =
        args.algorithms.iter().map(|&a| (a, cfg.infeasibility(a))).collect();
    let result = compare::run(CompareInput {
        data: &prepared.data,
        algorithms,
        components: cfg.components,
        opts: cfg.stiefel_options(),
        rotate: cfg.rotate,
        seed_window: &prepared.seed_window,
        horizon,
        truth,
        tolerances: cfg.tolerances,
    })?;

    let [json_path, csv_path] = targets;
    let mut out = Outputs::default();
    out.add(json_path, serde_json::to_string_pretty(&result.report).map_err(mvrkm::Error::from)? + "\n");
    out.add(csv_path, compare::long_csv(&result.forecasts, truth));
    out.write(args.experiment.force)?;
    print!("{}", compare::table(&result.report));
    if result.report.pass {
        Ok(())
    } else if result.report.pairs.is_empty() {
        Err(CliError::NotEquivalent("fewer than two feasible algorithms to compare".into()))
    } else {
        let failed = result.report.pairs.iter().filter(|p| !p.pass).count();
        Err(CliError::NotEquivalent(format!("{failed} pair(s) above tolerance")))
    }
}

pub fn gen_data(args: GenDataArgs) -> Result<(), CliError> {
    ensure_writable(std::slice::from_ref(&args.out), args.force)?;
    let series = match args.kind {
        DataKind::Sine => gen_sum_of_sines(args.length, &args.amplitudes, &args.frequencies, args.sample_rate),
        DataKind::Logistic => gen_logistic_map(args.length, args.r, args.x0, args.burn_in),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut text = String::with_capacity(series.len() * 24);
    for v in &series {
        text.push_str(&format_value(*v));
        text.push('\n');
    }
    write_atomic(&args.out, text.as_bytes(), args.force)?;
    println!("wrote {} values to {}", series.len(), PathBuf::from(&args.out).display());
    Ok(())
}

pub fn recommend(args: RecommendArgs) -> Result<(), CliError> {
    match select_algorithm(args.n, args.d_f, args.explicit, args.parametric) {
        Ok(rec) => {
            println!("recommended: {}", rec.algorithm);
            println!("{}", rec.rationale);
        }
        Err(mvrkm::Error::Unsupported(reason)) => {
            println!("recommended: none of the built-in algorithms");
            println!("{reason}");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
