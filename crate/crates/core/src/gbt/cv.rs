use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::builder::fit;
use super::metrics::{r2, rmse};
use super::params::{HyperParams, ParamGrid};
use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub fold_rmse: Vec<f64>,
    pub fold_r2: Vec<f64>,
    pub mean_rmse: f64,
    /// Population standard deviation over folds.
    pub std_rmse: f64,
    pub mean_r2: f64,
    pub std_r2: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Fold index for every row: a seeded shuffle cut into k contiguous folds
/// whose sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("{n} rows cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &r in &order[at..at + size] {
            fold[r] = f;
        }
        at += size;
    }
    Ok(fold)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains on k−1 folds and scores the held-out one, k times.
pub fn kfold_cv(matrix: &EncodedMatrix, k: usize, hp: &HyperParams, seed: u64) -> Result<CvResult> {
    hp.validate()?;
    let folds = fold_assignment(matrix.n_rows(), k, seed)?;
    let mut fold_rmse = Vec::with_capacity(k);
    let mut fold_r2 = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == f).collect();
        let model = fit(&matrix.select(&train), hp, fold_seed(seed, f))?;
        let held = matrix.select(&test);
        let pred = model.predict_batch(&held.data)?;
        fold_rmse.push(rmse(&held.target, &pred)?);
        // a constant held-out target has no defined R²; count it as 0
        fold_r2.push(r2(&held.target, &pred).unwrap_or(0.0));
    }
    let (mean_rmse, std_rmse) = mean_std(&fold_rmse);
    let (mean_r2, std_r2) = mean_std(&fold_r2);
    Ok(CvResult {
        k,
        fold_rmse,
        fold_r2,
        mean_rmse,
        std_rmse,
        mean_r2,
        std_r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    /// Position in the full cross product.
    pub index: usize,
    pub params: HyperParams,
    pub cv: CvResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub grid_size: usize,
    pub budget: Option<usize>,
    pub k: usize,
    pub seed: u64,
    /// In evaluation order (ascending cross-product index).
    pub entries: Vec<GridEntry>,
    /// Position of the winner within `entries`.
    pub best: usize,
}

impl GridReport {
    pub fn best_entry(&self) -> &GridEntry {
        &self.entries[self.best]
    }
}

/// Cross-validates every configuration of `grid` (or `budget` of them drawn
/// uniformly without replacement) and picks the lowest mean RMSE. Ties go
/// to fewer rounds, then shallower trees, then the earlier index.
pub fn grid_search(
    matrix: &EncodedMatrix,
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    budget: Option<usize>,
) -> Result<GridReport> {
    grid.validate()?;
    let size = grid.len();
    if budget == Some(0) {
        return Err(Error::invalid("grid budget must be >= 1"));
    }
    // fail fast on fold errors before spawning work
    fold_assignment(matrix.n_rows(), k, seed)?;
    let mut indices: Vec<usize> = match budget {
        Some(b) if b < size => sample(&mut ChaCha8Rng::seed_from_u64(seed), size, b).into_vec(),
        _ => (0..size).collect(),
    };
    indices.sort_unstable();

    let entries = indices
        .par_iter()
        .map(|&index| {
            let params = grid.get(index).expect("index within grid");
            let cv = kfold_cv(matrix, k, &params, seed)?;
            Ok(GridEntry { index, params, cv })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = (0..entries.len())
        .min_by(|&a, &b| {
            let (ea, eb) = (&entries[a], &entries[b]);
            ea.cv
                .mean_rmse
                .total_cmp(&eb.cv.mean_rmse)
                .then(ea.params.n_estimators.cmp(&eb.params.n_estimators))
                .then(ea.params.max_depth.cmp(&eb.params.max_depth))
                .then(ea.index.cmp(&eb.index))
        })
        .expect("grid is non-empty");

    Ok(GridReport {
        grid_size: size,
        budget,
        k,
        seed,
        entries,
        best,
    })
}
