//! Batch orchestration shared by the CLI and the acceptance suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{extract_engagements, split_indices, EncodedMatrix, EngagementRecord, ExtractFilter};
use crate::error::Result;
use crate::gbt::{fit, grid_search, r2, rmse, GbtModel, GridReport, HyperParams, ParamGrid};
use crate::lhs::{lhs_sample, scenario_from_row, SamplePlan};
use crate::sim::{run_simulation, EventLog, ScenarioConfig, ScenarioTemplate};

/// Per-run simulation seed: SplitMix64 of the plan seed and run index.
pub fn run_seed(plan_seed: u64, index: u64) -> u64 {
    let mut z = plan_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn build_scenarios(plan: &SamplePlan, template: &ScenarioTemplate) -> Result<Vec<ScenarioConfig>> {
    let matrix = lhs_sample(plan)?;
    matrix
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| scenario_from_row(row, template, i as u64))
        .collect()
}

/// Runs every scenario; result `i` belongs to scenario `i` whatever the
/// worker count. `workers == 0` uses rayon's global pool.
pub fn simulate_batch(scenarios: &[ScenarioConfig], plan_seed: u64, workers: usize) -> Vec<Result<EventLog>> {
    let job = || {
        scenarios
            .par_iter()
            .map(|cfg| run_simulation(cfg, run_seed(plan_seed, cfg.id)))
            .collect()
    };
    if workers == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Engagements from every log that pass `filter`, in log order.
pub fn collect_engagements(logs: &[EventLog], filter: ExtractFilter) -> Result<Vec<EngagementRecord>> {
    let per_log: Vec<Vec<EngagementRecord>> = logs
        .par_iter()
        .map(extract_engagements)
        .collect::<Result<_>>()?;
    let out: Vec<EngagementRecord> = per_log
        .into_iter()
        .flatten()
        .filter(|r| filter.accepts(r))
        .collect();
    Ok(out)
}

/// Fraction of rows used for grid search and the final fit.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutMetrics {
    pub rows: usize,
    pub rmse: f64,
    pub r2: f64,
    /// RMSE of predicting the training-set mean for every test row.
    pub baseline_rmse: f64,
    /// 1 − rmse / baseline_rmse.
    pub rmse_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub version: String,
    pub seed: u64,
    pub rows: usize,
    pub train_rows: Vec<usize>,
    /// Row numbers (0-based, CSV order) of the held-out split.
    pub test_rows: Vec<usize>,
    pub search: GridReport,
    pub best: HyperParams,
    pub holdout: HoldoutMetrics,
}

/// 80/20 split, grid search with k-fold CV on the 80 %, refit of the winner
/// on the whole 80 %, held-out evaluation on the 20 %.
pub fn train_and_evaluate(
    data: &EncodedMatrix,
    grid: &ParamGrid,
    k: usize,
    budget: Option<usize>,
    seed: u64,
) -> Result<(GbtModel, TrainReport)> {
    let (train_rows, test_rows) = split_indices(data.n_rows(), TRAIN_FRACTION, seed)?;
    let train = data.select(&train_rows);
    let test = data.select(&test_rows);
    let search = grid_search(&train, grid, k, seed, budget)?;
    let best = search.best_entry().clone();
    let mut model = fit(&train, &best.params, seed)?;

    let pred = model.predict_batch(&test.data)?;
    let mean = train.target.iter().sum::<f64>() / train.n_rows() as f64;
    let baseline = vec![mean; test.n_rows()];
    let e = rmse(&test.target, &pred)?;
    let base = rmse(&test.target, &baseline)?;
    let holdout = HoldoutMetrics {
        rows: test.n_rows(),
        rmse: e,
        r2: r2(&test.target, &pred)?,
        baseline_rmse: base,
        rmse_reduction: if base > 0.0 { 1.0 - e / base } else { 0.0 },
    };

    model.meta.cv = Some(best.cv.clone());
    let metrics = &mut model.meta.metrics;
    metrics.insert("holdout_rmse".into(), json!(holdout.rmse));
    metrics.insert("holdout_r2".into(), json!(holdout.r2));
    metrics.insert("baseline_rmse".into(), json!(holdout.baseline_rmse));
    metrics.insert("grid_size".into(), json!(search.grid_size));
    metrics.insert("evaluated".into(), json!(search.entries.len()));

    let report = TrainReport {
        version: crate::VERSION.to_string(),
        seed,
        rows: data.n_rows(),
        train_rows,
        test_rows,
        best: best.params,
        search,
        holdout,
    };
    Ok((model, report))
}
