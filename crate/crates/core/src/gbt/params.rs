use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum gain for a split to be kept.
    pub gamma: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    /// L1 penalty on leaf weights.
    pub reg_alpha: f64,
    /// L2 penalty on leaf weights.
    pub reg_lambda: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 6,
            gamma: 0.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            reg_alpha: 0.0,
            reg_lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::config(name, format!("{v} outside (0, 1]")))
            }
        };
        let non_neg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("{v} must be finite and >= 0")))
            }
        };
        if self.n_estimators == 0 {
            return Err(Error::config("n_estimators", "must be >= 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth", "must be >= 1"));
        }
        unit("learning_rate", self.learning_rate)?;
        unit("subsample", self.subsample)?;
        unit("colsample_bytree", self.colsample_bytree)?;
        non_neg("gamma", self.gamma)?;
        non_neg("reg_alpha", self.reg_alpha)?;
        non_neg("reg_lambda", self.reg_lambda)?;
        non_neg("min_child_weight", self.min_child_weight)
    }
}

/// Candidate values per hyperparameter; the search space is their cross
/// product, enumerated with `n_estimators` varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub n_estimators: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub gamma: Vec<f64>,
    pub subsample: Vec<f64>,
    pub colsample_bytree: Vec<f64>,
    pub reg_alpha: Vec<f64>,
    pub min_child_weight: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub reg_lambda: Vec<f64>,
}

fn default_lambda() -> Vec<f64> {
    vec![1.0]
}

impl ParamGrid {
    /// The full search grid (248,832 points). Only practical with a budget.
    pub fn full() -> Self {
        ParamGrid {
            n_estimators: vec![100, 1000, 5000],
            learning_rate: vec![0.1, 0.01, 0.001],
            max_depth: vec![2, 3, 6, 10, 15, 20],
            gamma: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            subsample: vec![0.6, 0.7, 0.8, 0.9],
            colsample_bytree: vec![0.6, 0.7, 0.8, 0.9],
            reg_alpha: vec![0.001, 0.01, 0.1, 1.0, 10.0, 100.0],
            min_child_weight: vec![1.0, 3.0, 5.0, 7.0, 9.0, 10.0, 13.0, 15.0],
            reg_lambda: vec![1.0],
        }
    }

    /// Desk-scale grid: moderate round counts and shallow trees, cheap
    /// enough to cross-validate a budgeted sample in about a minute on
    /// 5,000 rows.
    pub fn quick() -> Self {
        ParamGrid {
            n_estimators: vec![100, 300, 1000],
            learning_rate: vec![0.1, 0.05],
            max_depth: vec![2, 3, 4, 6],
            gamma: vec![0.0],
            subsample: vec![0.8, 1.0],
            colsample_bytree: vec![0.8, 1.0],
            reg_alpha: vec![0.0, 0.1],
            min_child_weight: vec![1.0, 5.0],
            reg_lambda: vec![1.0],
        }
    }

    pub fn singleton(hp: &HyperParams) -> Self {
        ParamGrid {
            n_estimators: vec![hp.n_estimators],
            learning_rate: vec![hp.learning_rate],
            max_depth: vec![hp.max_depth],
            gamma: vec![hp.gamma],
            subsample: vec![hp.subsample],
            colsample_bytree: vec![hp.colsample_bytree],
            reg_alpha: vec![hp.reg_alpha],
            min_child_weight: vec![hp.min_child_weight],
            reg_lambda: vec![hp.reg_lambda],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: ParamGrid = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn radices(&self) -> [usize; 9] {
        [
            self.n_estimators.len(),
            self.learning_rate.len(),
            self.max_depth.len(),
            self.gamma.len(),
            self.subsample.len(),
            self.colsample_bytree.len(),
            self.reg_alpha.len(),
            self.min_child_weight.len(),
            self.reg_lambda.len(),
        ]
    }

    pub fn len(&self) -> usize {
        self.radices().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every value list non-empty and every combination valid.
    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 9] = [
            "n_estimators",
            "learning_rate",
            "max_depth",
            "gamma",
            "subsample",
            "colsample_bytree",
            "reg_alpha",
            "min_child_weight",
            "reg_lambda",
        ];
        for (name, len) in NAMES.iter().zip(self.radices()) {
            if len == 0 {
                return Err(Error::config(*name, "grid value list is empty"));
            }
        }
        // Each axis is checked on its own, with the defaults elsewhere.
        let base = HyperParams::default();
        for &v in &self.n_estimators {
            HyperParams { n_estimators: v, ..base.clone() }.validate()?;
        }
        for &v in &self.learning_rate {
            HyperParams { learning_rate: v, ..base.clone() }.validate()?;
        }
        for &v in &self.max_depth {
            HyperParams { max_depth: v, ..base.clone() }.validate()?;
        }
        for &v in &self.gamma {
            HyperParams { gamma: v, ..base.clone() }.validate()?;
        }
        for &v in &self.subsample {
            HyperParams { subsample: v, ..base.clone() }.validate()?;
        }
        for &v in &self.colsample_bytree {
            HyperParams { colsample_bytree: v, ..base.clone() }.validate()?;
        }
        for &v in &self.reg_alpha {
            HyperParams { reg_alpha: v, ..base.clone() }.validate()?;
        }
        for &v in &self.min_child_weight {
            HyperParams { min_child_weight: v, ..base.clone() }.validate()?;
        }
        for &v in &self.reg_lambda {
            HyperParams { reg_lambda: v, ..base.clone() }.validate()?;
        }
        Ok(())
    }

    /// Configuration at mixed-radix position `index` of the cross product.
    pub fn get(&self, index: usize) -> Option<HyperParams> {
        if index >= self.len() {
            return None;
        }
        let r = self.radices();
        let mut digits = [0usize; 9];
        let mut rest = index;
        for i in (0..9).rev() {
            digits[i] = rest % r[i];
            rest /= r[i];
        }
        Some(HyperParams {
            n_estimators: self.n_estimators[digits[0]],
            learning_rate: self.learning_rate[digits[1]],
            max_depth: self.max_depth[digits[2]],
            gamma: self.gamma[digits[3]],
            subsample: self.subsample[digits[4]],
            colsample_bytree: self.colsample_bytree[digits[5]],
            reg_alpha: self.reg_alpha[digits[6]],
            min_child_weight: self.min_child_weight[digits[7]],
            reg_lambda: self.reg_lambda[digits[8]],
        })
    }
}
