//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use projloss::dataio::{self, ModelFile, ModelHeader, RawDataset, MODEL_FORMAT_VERSION};
use projloss::decode::decomposition_for;
use projloss::training::{
    default_lambda_grid, predict_all, run_experiment, synthetic, Decoder, ExperimentRun, Pipeline, PipelineSpec,
    Standardizer, TrainConfig,
};
use projloss::verify::{calibration_trials, gradcheck_tolerance, gradient_check};
use projloss::{project, Geometry, Polytope, Task};

use crate::format::{fmt6, fmt_vec, table};
use crate::report::{
    metric_definitions, to_json, EvalReport, ExperimentConfig, ExperimentReport, ExperimentRow, OptimizerSummary,
    SplitSizes, TrainReport,
};
use crate::{CliError, Command, EvalArgs, ExperimentArgs, GradcheckArgs, ProjectArgs, TrainArgs, VerifyArgs};

type CliResult<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Project(a) => cmd_project(&a, out),
        Command::Gradcheck(a) => cmd_gradcheck(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    }
}

fn geometry(name: &str) -> CliResult<Geometry> {
    Geometry::parse(name).map_err(|e| CliError::Usage(e.to_string()))
}

/// Parses "a b c" or "a,b;c,d" into rows.
pub fn parse_input(text: &str) -> CliResult<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("bad number '{t}'"))))
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<_>>()?;
    if rows.iter().all(|r| r.is_empty()) {
        return Err(CliError::Usage("empty input".into()));
    }
    if rows.len() > 1 && rows.iter().any(|r| r.len() != rows.len()) {
        return Err(CliError::Usage("matrix input must be square".into()));
    }
    Ok(rows)
}

fn cmd_project(a: &ProjectArgs, out: &mut dyn Write) -> CliResult<()> {
    let g = geometry(&a.geometry)?;
    let rows = parse_input(&a.input)?;
    let theta: Vec<f64> = rows.concat();
    let set = Polytope::<f64>::parse(&a.set, theta.len()).map_err(|e| CliError::Usage(e.to_string()))?;
    let r = project(&set, g, &theta)?;
    if a.json {
        let doc = serde_json::json!({
            "set": set.identifier(),
            "geometry": g.name(),
            "mu": r.mu,
            "residual": r.residual,
            "iterations": r.iterations,
        });
        write!(out, "{}", to_json(&doc))?;
    } else {
        let width = if rows.len() > 1 { rows.len() } else { theta.len() };
        for row in r.mu.chunks(width.max(1)) {
            writeln!(out, "{}", fmt_vec(row))?;
        }
        writeln!(out, "residual {} iterations {}", fmt6(r.residual), r.iterations)?;
    }
    Ok(())
}

/// Point dimension of set `id` with size parameter `k`.
fn set_dim(id: &str, k: usize) -> usize {
    match id.split(':').next().unwrap_or("") {
        "birkhoff" | "rowstochastic" | "row_stochastic" => k * k,
        "ordersimplex" | "order_simplex" => k.saturating_sub(1),
        _ => k,
    }
}

fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let g = geometry(&a.geometry)?;
    let set = Polytope::<f64>::parse(&a.set, set_dim(&a.set.to_ascii_lowercase(), a.k))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let report = gradient_check(&set, g, a.points, a.seed, a.corrupt_gradient)?;
    let tol = gradcheck_tolerance(&set);
    let pass = report.max_rel_error <= tol;
    writeln!(
        out,
        "set {} geometry {} points {} max_rel_error {:.3e} tolerance {:.0e} resampled {}: {}",
        set.identifier(),
        g.name(),
        report.points,
        report.max_rel_error,
        tol,
        report.resampled,
        if pass { "pass" } else { "FAIL" }
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "gradient check failed: relative error {:.3e} above {tol:.0e}",
            report.max_rel_error
        )))
    }
}

fn resolve(path: &str, base: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(path);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

/// Loads a dataset file or a named synthetic generator.
pub fn load_data(source: &str, base: Option<&Path>, task: &str, k: Option<usize>, seed: u64) -> CliResult<RawDataset> {
    let data = match source {
        "synthetic:ordinal" => synthetic::ordinal_linear(500, 5, 0.3, seed)?,
        "synthetic:separable" => synthetic::separable_two_class(200, seed)?,
        _ => {
            let path = resolve(source, base);
            if !path.is_file() {
                return Err(CliError::Io(format!("dataset not found: {}", path.display())));
            }
            match task {
                "multilabel" | "ranking" | "label_ranking" => {
                    let k = k.ok_or_else(|| CliError::Usage(format!("--k is required for {task} data")))?;
                    dataio::load_dataset(&path, task, k)?
                }
                "ordinal" | "multiclass" => dataio::parse_labeled_csv_str(&dataio::read_to_string(&path)?, task, k)?,
                other => return Err(CliError::Usage(format!("unknown task '{other}'"))),
            }
        }
    };
    let expected = Task::parse(task, data.task.k()).map_err(|e| CliError::Usage(e.to_string()))?;
    if expected != data.task {
        return Err(CliError::Usage(format!(
            "dataset '{source}' holds {} data with k = {}, not {task}{}",
            data.task.name(),
            data.task.k(),
            k.map(|k| format!(" with k = {k}")).unwrap_or_default()
        )));
    }
    if let Some(k) = k {
        if k != data.task.k() {
            return Err(CliError::Usage(format!("dataset has k = {}, not {k}", data.task.k())));
        }
    }
    Ok(data)
}

fn parse_lambdas(text: Option<&str>) -> CliResult<Vec<f64>> {
    match text {
        None => Ok(default_lambda_grid()),
        Some(t) => {
            let grid = t
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| *v > 0.0 && v.is_finite())
                        .ok_or_else(|| CliError::Usage(format!("bad λ '{s}'")))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            if grid.is_empty() {
                return Err(CliError::Usage("empty λ grid".into()));
            }
            Ok(grid)
        }
    }
}

fn decoder_id(p: &Pipeline) -> String {
    match &p.decoder {
        Decoder::Calibrated { set, .. } => set.identifier(),
        Decoder::Round { .. } => "round".into(),
    }
}

fn loss_name(p: &Pipeline) -> String {
    match &p.decoder {
        Decoder::Calibrated { decomposition, .. } => decomposition.name.clone(),
        Decoder::Round { .. } => "round".into(),
    }
}

fn status_name(run: &ExperimentRun) -> String {
    serde_json::to_value(run.fit.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let g = geometry(&a.geometry)?;
    let lambda_grid = parse_lambdas(a.lambdas.as_deref())?;
    let mut data = load_data(&a.data, None, &a.task, a.k, a.seed)?;
    if let Some(test) = &a.test_data {
        let test = load_data(&test.to_string_lossy(), None, &a.task, Some(data.task.k()), a.seed)?;
        data = RawDataset::with_test(data, test)?;
    }
    let spec = PipelineSpec {
        task: data.task,
        projection: a.projection.clone(),
        decoding: a.decoding.clone(),
        geometry: g,
    };
    let cfg = TrainConfig {
        lambda_grid,
        ..TrainConfig::default()
    };
    let run = run_experiment(&data, &spec, &cfg, a.seed)?;
    if let Some(path) = &a.model {
        dataio::save_model(path, &model_file(&run))?;
    }
    let report = TrainReport {
        kind: "train".into(),
        dataset: a.data.clone(),
        task: data.task.name().into(),
        k: data.task.k(),
        projection: run.pipeline.projection.identifier(),
        decoding: decoder_id(&run.pipeline),
        geometry: g.name().into(),
        seed: a.seed,
        selection_metric: data.task.primary_metric().into(),
        chosen_lambda: run.fit.lambda,
        val_metrics: run.fit.val_metrics.clone(),
        test_metrics: run.test_metrics.clone(),
        candidates: run.fit.candidates.clone(),
        split: SplitSizes {
            train: run.split.train.len(),
            val: run.split.val.len(),
            test: run.split.test.len(),
        },
        optimizer: OptimizerSummary {
            status: status_name(&run),
            iterations: run.fit.iterations,
        },
        definitions: metric_definitions(),
        timing_seconds: a.timing.then(|| started.elapsed().as_secs_f64()),
    };
    write_or_print(a.report.as_deref(), &to_json(&report), out)
}

fn model_file(run: &ExperimentRun) -> ModelFile {
    let p = &run.pipeline;
    ModelFile {
        header: ModelHeader {
            format_version: MODEL_FORMAT_VERSION,
            rows: run.fit.model.rows,
            cols: run.fit.model.cols,
            task: p.spec.task,
            projection: p.projection.identifier(),
            decoding: decoder_id(p),
            geometry: p.spec.geometry.name().into(),
            loss: loss_name(p),
            lambda: run.fit.lambda,
            feature_mean: run.standardizer.mean.clone(),
            feature_scale: run.standardizer.scale.clone(),
        },
        weights: run.fit.model.w.clone(),
    }
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    if !a.model.is_file() {
        return Err(CliError::Io(format!("model not found: {}", a.model.display())));
    }
    let file = dataio::load_model(&a.model)?;
    let h = &file.header;
    let spec = PipelineSpec {
        task: h.task,
        projection: h.projection.clone(),
        decoding: h.decoding.clone(),
        geometry: geometry(&h.geometry)?,
    };
    let pipeline = Pipeline::build(&spec, &[])?;
    if pipeline.dim() != h.rows || h.feature_mean.len() + 1 != h.cols {
        return Err(projloss::Error::Format("model dimensions do not match its pipeline".into()).into());
    }
    let data = load_data(&a.data.to_string_lossy(), None, h.task.name(), Some(h.task.k()), 0)?;
    if data.n_features != h.feature_mean.len() {
        return Err(CliError::Usage(format!(
            "dataset has {} features, model expects {}",
            data.n_features,
            h.feature_mean.len()
        )));
    }
    let standardizer = Standardizer {
        mean: h.feature_mean.clone(),
        scale: h.feature_scale.clone(),
    };
    let model = projloss::training::LinearModel::from_vec(h.rows, h.cols, file.weights.clone())?;
    let x: Vec<Vec<f64>> = data.features.iter().map(|r| standardizer.design_row(r)).collect();
    let predicted = predict_all(&pipeline, &model, &x)?;
    let metrics = h.task.metrics(&predicted, &data.labels)?;
    let report = EvalReport {
        kind: "eval".into(),
        model: a.model.display().to_string(),
        dataset: a.data.display().to_string(),
        task: h.task.name().into(),
        samples: data.len(),
        metrics,
        definitions: metric_definitions(),
    };
    write_or_print(a.report.as_deref(), &to_json(&report), out)
}

pub fn read_experiment_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let cfg = read_experiment_config(&a.config)?;
    if cfg.runs.is_empty() {
        return Err(CliError::Usage("experiment grid has no runs".into()));
    }
    let base = a.config.parent();
    let (source, source_base) = match &a.dataset {
        Some(d) => (d.clone(), None),
        None => (cfg.dataset.clone(), base),
    };
    let mut data = load_data(&source, source_base, &cfg.task, cfg.k, cfg.seed)?;
    if let Some(test) = &cfg.test_dataset {
        let test = load_data(test, base, &cfg.task, Some(data.task.k()), cfg.seed)?;
        data = RawDataset::with_test(data, test)?;
    }
    let train_cfg = TrainConfig {
        lambda_grid: match &cfg.lambda_grid {
            Some(g) if g.is_empty() => return Err(CliError::Usage("empty λ grid".into())),
            Some(g) => g.clone(),
            None => default_lambda_grid(),
        },
        ..TrainConfig::default()
    };
    let metric = data.task.primary_metric().to_string();
    let mut rows = Vec::new();
    for run_cfg in &cfg.runs {
        let g = geometry(run_cfg.geometry.as_deref().unwrap_or(&cfg.geometry))?;
        let spec = PipelineSpec {
            task: data.task,
            projection: run_cfg.projection.clone(),
            decoding: run_cfg.decoding.clone(),
            geometry: g,
        };
        let run = run_experiment(&data, &spec, &train_cfg, cfg.seed)?;
        rows.push(ExperimentRow {
            dataset: source.clone(),
            projection: run.pipeline.projection.identifier(),
            decoding: decoder_id(&run.pipeline),
            geometry: g.name().into(),
            metric: metric.clone(),
            value: run.test_metrics[&metric],
            seed: cfg.seed,
            lambda: run.fit.lambda,
            metrics: run.test_metrics.clone(),
        });
    }
    let header = ["projection", "decoding", "geometry", metric.as_str(), "lambda"];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.projection.clone(),
                r.decoding.clone(),
                r.geometry.clone(),
                format!("{:.2}", r.value),
                format!("{:.2e}", r.lambda),
            ]
        })
        .collect();
    writeln!(out, "{} ({}, k = {}, seed {})", cfg.name, source, data.task.k(), cfg.seed)?;
    write!(out, "{}", table(&header, &cells))?;
    let report = ExperimentReport {
        kind: "experiment".into(),
        name: cfg.name.clone(),
        task: data.task.name().into(),
        k: data.task.k(),
        rows,
        definitions: metric_definitions(),
        timing_seconds: a.timing.then(|| started.elapsed().as_secs_f64()),
    };
    let json = to_json(&report);
    let target = a.out.clone().or_else(|| cfg.output.as_deref().map(|o| resolve(o, base)));
    write_or_print(target.as_deref(), &json, out)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let cases: [(Polytope<f64>, &str, usize); 3] = [
        (Polytope::Simplex(3), "zero_one", 3),
        (Polytope::Cube(3), "hamming_multilabel", 3),
        (Polytope::OrderSimplex(4), "absolute_ordinal", 4),
    ];
    let mut rows = Vec::new();
    let mut failed = 0;
    for (set, loss, k) in &cases {
        let d = decomposition_for::<f64>(loss, *k)?;
        for g in [Geometry::Euclidean, Geometry::ShannonKl] {
            let s = calibration_trials(set, g, &d, a.trials, a.seed)?;
            let ok = s.violations == 0 && !s.negative_risk;
            failed += usize::from(!ok);
            rows.push(vec![
                set.identifier(),
                loss.to_string(),
                g.name().to_string(),
                s.trials.to_string(),
                s.violations.to_string(),
                format!("{:.3e}", s.worst_margin),
                if ok { "pass" } else { "FAIL" }.to_string(),
            ]);
        }
    }
    write!(
        out,
        "{}",
        table(&["set", "loss", "geometry", "trials", "violations", "worst_margin", "result"], &rows)
    )?;
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("{failed} calibration configuration(s) violated")))
    }
}
