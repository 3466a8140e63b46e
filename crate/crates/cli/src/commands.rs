use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bvr_core::dataset::{encode, encode_features, DatasetStats, EncodedMatrix, ExtractFilter, FeatureVector};
use bvr_core::gbt::{GbtModel, ParamGrid};
use bvr_core::lhs::{default_plan, SamplePlan, DEFAULT_SPEC_NAMES};
use bvr_core::pipeline::{build_scenarios, collect_engagements, run_seed, simulate_batch, train_and_evaluate};
use bvr_core::sim::{EventLog, ScenarioTemplate};
use bvr_service::{serve as run_service, ServiceConfig};
use serde::Serialize;
use serde_json::Value;

use crate::manifest::{sha256_hex, Manifest, RunEntry, MANIFEST_FILE};
use crate::{
    CmdResult, DatasetArgs, Failure, Format, PlanArgs, PredictArgs, ServeArgs, SimulateArgs, TrainArgs,
};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| usage(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// `dir/name.csv` -> `dir/name.<suffix>`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn plan(a: PlanArgs) -> CmdResult {
    let plan = default_plan(a.n, a.seed);
    plan.validate()?;
    write_json(&a.out, &plan)
}

pub fn simulate(a: SimulateArgs) -> CmdResult {
    let mut plan = match &a.plan {
        Some(p) => SamplePlan::load(p)?,
        None => default_plan(a.n, a.seed.unwrap_or(42)),
    };
    if let Some(seed) = a.seed {
        plan.seed = seed;
    }
    plan.validate()?;
    let names = plan.names();
    if let Some(i) = (0..DEFAULT_SPEC_NAMES.len()).find(|&i| names.get(i).map(String::as_str) != Some(DEFAULT_SPEC_NAMES[i])) {
        return Err(usage(format!(
            "plan parameter {i} must be `{}` (the scenario builder needs the default 17 parameters in order)",
            DEFAULT_SPEC_NAMES[i]
        )));
    }
    if names.len() != DEFAULT_SPEC_NAMES.len() {
        return Err(usage(format!("plan has {} parameters, expected 17", names.len())));
    }
    let template = match &a.template {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<ScenarioTemplate>(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => ScenarioTemplate::default(),
    };
    let scenarios = build_scenarios(&plan, &template)?;
    fs::create_dir_all(&a.out).map_err(|e| usage(format!("cannot create {}: {e}", a.out.display())))?;

    let started = Instant::now();
    let results = simulate_batch(&scenarios, plan.seed, a.workers);
    let mut runs = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (cfg, res) in scenarios.iter().zip(results) {
        let seed = run_seed(plan.seed, cfg.id);
        let entry = match res.and_then(|log| log.to_jsonl_bytes()) {
            Ok(bytes) => {
                let file = format!("run_{:05}.jsonl", cfg.id);
                write_file(&a.out.join(&file), &bytes)?;
                RunEntry {
                    id: cfg.id,
                    seed,
                    file: Some(file),
                    sha256: Some(sha256_hex(&bytes)),
                    error: None,
                }
            }
            Err(e) => {
                failures.push(format!("run {}: {e}", cfg.id));
                RunEntry {
                    id: cfg.id,
                    seed,
                    file: None,
                    sha256: None,
                    error: Some(e.to_string()),
                }
            }
        };
        runs.push(entry);
    }
    let manifest = Manifest {
        version: bvr_core::VERSION.to_string(),
        plan,
        template,
        runs,
    };
    write_json(&a.out.join(MANIFEST_FILE), &manifest)?;
    eprintln!(
        "{} runs in {:.1}s, {} failed -> {}",
        manifest.runs.len(),
        started.elapsed().as_secs_f64(),
        failures.len(),
        a.out.display()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!("{} runs failed:\n  {}", failures.len(), failures.join("\n  "))))
    }
}

/// Loads every successful run of a batch, checking each file's digest.
pub fn load_logs(dir: &Path) -> Result<Vec<EventLog>, Failure> {
    let manifest = Manifest::load(dir)?;
    let mut logs = Vec::with_capacity(manifest.runs.len());
    for run in &manifest.runs {
        let (Some(file), Some(digest)) = (&run.file, &run.sha256) else {
            continue;
        };
        let path = dir.join(file);
        let bytes = fs::read(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if &sha256_hex(&bytes) != digest {
            return Err(usage(format!("{}: digest does not match the manifest", path.display())));
        }
        logs.push(EventLog::read_jsonl(&bytes[..], &path.display().to_string())?);
    }
    Ok(logs)
}

#[derive(Serialize)]
struct StatsSidecar {
    #[serde(flatten)]
    stats: DatasetStats,
    unimodal: bool,
    logs: usize,
    first_episode_only: bool,
    include_truncated: bool,
}

pub fn dataset(a: DatasetArgs) -> CmdResult {
    let logs = load_logs(&a.logs)?;
    let filter = ExtractFilter {
        first_episode_only: a.first_episode_only,
        include_truncated: a.include_truncated,
    };
    let records = collect_engagements(&logs, filter)?;
    let targets: Vec<f64> = records.iter().map(|r| r.target).collect();
    let stats = DatasetStats::from_targets(&targets);
    let sidecar = StatsSidecar {
        unimodal: stats.is_unimodal(),
        stats,
        logs: logs.len(),
        first_episode_only: a.first_episode_only,
        include_truncated: a.include_truncated,
    };
    write_json(&sibling(&a.out, "stats.json"), &sidecar)?;
    if records.is_empty() {
        return Err(Failure::Partial(format!("0 engagements extracted from {} logs", logs.len())));
    }
    encode(&records)?.write_csv(&a.out)?;
    eprintln!("{} engagements from {} logs -> {}", records.len(), logs.len(), a.out.display());
    Ok(())
}

fn load_grid(spec: &str) -> Result<ParamGrid, Failure> {
    match spec {
        "full" => Ok(ParamGrid::full()),
        "quick" => Ok(ParamGrid::quick()),
        path => Ok(ParamGrid::load(Path::new(path))?),
    }
}

pub fn train(a: TrainArgs) -> CmdResult {
    let grid = load_grid(&a.grid)?;
    let data = EncodedMatrix::read_csv(&a.data, None)?;
    let started = Instant::now();
    let (mut model, report) = train_and_evaluate(&data, &grid, a.k, a.budget, a.seed)?;
    model.meta.trained_at = a.trained_at;
    model.save(&a.out)?;
    let report_path = a.report.unwrap_or_else(|| sibling(&a.out, "report.json"));
    write_json(&report_path, &report)?;
    let best = report.search.best_entry();
    eprintln!(
        "evaluated {} of {} configurations in {:.1}s; cv rmse {:.4} +/- {:.4}; held-out rmse {:.4} (baseline {:.4}), r2 {:.4}",
        report.search.entries.len(),
        report.search.grid_size,
        started.elapsed().as_secs_f64(),
        best.cv.mean_rmse,
        best.cv.std_rmse,
        report.holdout.rmse,
        report.holdout.baseline_rmse,
        report.holdout.r2
    );
    Ok(())
}

fn read_states(path: &Path) -> Result<Vec<FeatureVector>, Failure> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| usage(format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let items = match value {
        Value::Array(items) => items,
        other => vec![other],
    };
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            FeatureVector::from_value(v).map_err(|errs| {
                let detail: Vec<String> = errs.iter().map(|e| format!("state {i}: {e}")).collect();
                usage(detail.join("\n"))
            })
        })
        .collect()
}

pub fn predict(a: PredictArgs) -> CmdResult {
    let model = GbtModel::load(&a.model)?;
    let rows: Vec<f64> = match (&a.data, &a.state) {
        (Some(path), _) => {
            let file = fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let m = EncodedMatrix::read_features_csv_from(file, &path.display().to_string(), Some(&model.schema))?;
            m.data
        }
        (None, Some(path)) => {
            if model.schema != bvr_core::dataset::encoded_columns() {
                return Err(usage("model schema does not match the engagement feature encoder"));
            }
            read_states(path)?.iter().flat_map(encode_features).collect()
        }
        (None, None) => return Err(usage("one of --data or --state is required")),
    };
    let preds = model.predict_batch(&rows)?;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let io = |e: std::io::Error| usage(format!("stdout: {e}"));
    match a.format {
        Format::Csv => {
            writeln!(out, "index").map_err(io)?;
            for p in &preds {
                writeln!(out, "{}", p.clamp(0.0, 1.0)).map_err(io)?;
            }
        }
        Format::Json => {
            let v: Vec<f64> = preds.iter().map(|p| p.clamp(0.0, 1.0)).collect();
            serde_json::to_writer(&mut out, &v).map_err(|e| usage(e.to_string()))?;
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn serve(a: ServeArgs) -> CmdResult {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| usage(e.to_string()))?;
    let config = ServiceConfig {
        addr: a.addr,
        model: a.model,
        cors_origins: a.cors_origins,
    };
    runtime.block_on(run_service(config)).map_err(Failure::Usage)
}
