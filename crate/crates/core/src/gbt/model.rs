use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::cv::CvResult;
use super::params::HyperParams;
use super::tree::{FlatForest, Node, Tree, LANES};
use crate::error::{Error, Result};

/// Training provenance carried inside the model artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: u64,
    pub train_rows: usize,
    pub version: String,
    /// Left empty by `fit` so artifacts stay byte-identical; callers that
    /// want a timestamp set it explicitly.
    #[serde(default)]
    pub trained_at: Option<String>,
    #[serde(default)]
    pub cv: Option<CvResult>,
    /// Free-form evaluation metrics, e.g. held-out RMSE.
    #[serde(default)]
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

impl ModelMeta {
    pub fn new(seed: u64, train_rows: usize) -> Self {
        ModelMeta {
            seed,
            train_rows,
            version: crate::VERSION.to_string(),
            trained_at: None,
            cv: None,
            metrics: serde_json::Map::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtModel {
    pub schema: Vec<String>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub hyperparams: HyperParams,
    trees: Vec<Tree>,
    pub meta: ModelMeta,
    /// Packed copy of `trees` for inference, built on first use.
    #[serde(skip)]
    packed: OnceLock<FlatForest>,
}

impl PartialEq for GbtModel {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.base_score == other.base_score
            && self.learning_rate == other.learning_rate
            && self.hyperparams == other.hyperparams
            && self.trees == other.trees
            && self.meta == other.meta
    }
}

impl GbtModel {
    pub fn new(
        schema: Vec<String>,
        base_score: f64,
        learning_rate: f64,
        hyperparams: HyperParams,
        trees: Vec<Tree>,
        meta: ModelMeta,
    ) -> Self {
        GbtModel {
            schema,
            base_score,
            learning_rate,
            hyperparams,
            trees,
            meta,
            packed: OnceLock::new(),
        }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn set_trees(&mut self, trees: Vec<Tree>) {
        self.trees = trees;
        self.packed = OnceLock::new();
    }

    fn packed(&self) -> &FlatForest {
        self.packed.get_or_init(|| FlatForest::new(&self.trees))
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    /// base_score + lr·Σ tree outputs.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.schema.len() {
            return Err(Error::Schema(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.schema.len()
            )));
        }
        Ok(self.predict_unchecked(row))
    }

    #[inline]
    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        let sum = self.packed().sum_row(row);
        self.base_score + self.learning_rate * sum
    }

    /// Row-major batch of `rows.len() / n_features` rows.
    pub fn predict_batch(&self, rows: &[f64]) -> Result<Vec<f64>> {
        let f = self.schema.len();
        if f == 0 || rows.len() % f != 0 {
            return Err(Error::Schema(format!(
                "batch of {} values is not a multiple of {} columns",
                rows.len(),
                f
            )));
        }
        let n = rows.len() / f;
        // Tree-outer over blocks of rows: a large forest does not fit in
        // cache, so walking it once per row is memory bound. Per-row sums
        // are accumulated in the same order as `predict`.
        const BLOCK: usize = 256;
        let forest = self.packed();
        let mut out = Vec::with_capacity(n);
        let mut acc = [[0.0; LANES]; BLOCK / LANES];
        for block in rows.chunks(BLOCK * f) {
            let m = block.len() / f;
            let full = m / LANES;
            for a in &mut acc {
                *a = [0.0; LANES];
            }
            for t in 0..self.trees.len() {
                for (g, a) in acc[..full].iter_mut().enumerate() {
                    forest.accumulate_lanes(t, &block[g * LANES * f..(g + 1) * LANES * f], f, a);
                }
                for r in full * LANES..m {
                    acc[r / LANES][r % LANES] += forest.predict_tree(t, &block[r * f..(r + 1) * f]);
                }
            }
            out.extend(acc.iter().flatten().take(m).map(|s| self.base_score + self.learning_rate * s));
        }
        Ok(out)
    }

    /// Structural checks for artifacts read from disk.
    pub fn validate(&self) -> Result<()> {
        if !self.base_score.is_finite() {
            return Err(Error::Schema("base_score is not finite".into()));
        }
        self.hyperparams.validate()?;
        let f = self.schema.len();
        for (t, tree) in self.trees.iter().enumerate() {
            for node in &tree.nodes {
                match node {
                    Node::Leaf { weight } if !weight.is_finite() => {
                        return Err(Error::Schema(format!("tree {t} has a non-finite leaf")));
                    }
                    Node::Split { feature, threshold, .. } if *feature >= f || threshold.is_nan() => {
                        return Err(Error::Schema(format!(
                            "tree {t} splits on feature {feature}, schema has {f}"
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: GbtModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
