//! Exact greedy tree construction.
//!
//! Each feature is sorted once per fit. Trees grow level by level: one pass
//! over a feature's sorted rows accumulates left-side gradient sums for every
//! open node of the level at once, so a level costs O(rows x features)
//! regardless of how many nodes it holds.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{GbtModel, ModelMeta};
use super::params::HyperParams;
use super::tree::{DefaultDirection, Node, Tree};
use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};

/// Splits whose regularized gain does not exceed this are rejected. Guards
/// against splitting on rounding noise when all residuals are ~0.
pub const MIN_SPLIT_GAIN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub g_left: f64,
    pub h_left: f64,
    pub g_right: f64,
    pub h_right: f64,
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

/// ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ
#[inline]
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(gl + gr, hl + hr, lambda)) - gamma
}

/// −sign(G)·max(|G|−α, 0)/(H+λ)
#[inline]
pub fn leaf_weight(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    let shrunk = (g.abs() - alpha).max(0.0);
    let d = h + lambda;
    if shrunk == 0.0 || d <= 0.0 {
        return 0.0;
    }
    -g.signum() * shrunk / d
}

/// Threshold strictly above `lo` and at most `hi`, so `lo` goes left and
/// `hi` goes right under the `x < threshold` rule.
#[inline]
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) * 0.5;
    if m > lo {
        m
    } else {
        hi
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn consider(
    best: &mut Option<SplitCandidate>,
    feature: usize,
    lo: f64,
    hi: f64,
    gl: f64,
    hl: f64,
    g: f64,
    h: f64,
    hp: &HyperParams,
) {
    let hr = h - hl;
    if hl < hp.min_child_weight || hr < hp.min_child_weight {
        return;
    }
    let gr = g - gl;
    let gain = split_gain(gl, hl, gr, hr, hp.reg_lambda, hp.gamma);
    if gain > MIN_SPLIT_GAIN && best.map_or(true, |b| gain > b.gain) {
        *best = Some(SplitCandidate {
            feature,
            threshold: midpoint(lo, hi),
            gain,
            g_left: gl,
            h_left: hl,
            g_right: gr,
            h_right: hr,
        });
    }
}

/// Best split of a single node. `columns` is feature-major. Ties go to the
/// lowest feature index, then the lowest threshold. `None` when the node is
/// below 2·min_child_weight or no split has positive gain.
pub fn best_split(columns: &[Vec<f64>], grad: &[f64], hess: &[f64], hp: &HyperParams) -> Option<SplitCandidate> {
    let g: f64 = grad.iter().sum();
    let h: f64 = hess.iter().sum();
    if h < 2.0 * hp.min_child_weight {
        return None;
    }
    let mut best = None;
    let mut order: Vec<usize> = (0..grad.len()).collect();
    for (j, col) in columns.iter().enumerate() {
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let (mut gl, mut hl) = (0.0, 0.0);
        for w in 0..order.len() {
            let r = order[w];
            if w > 0 {
                let prev = col[order[w - 1]];
                if col[r] != prev {
                    consider(&mut best, j, prev, col[r], gl, hl, g, h, hp);
                }
            }
            gl += grad[r];
            hl += hess[r];
        }
    }
    best
}

const NONE: u32 = u32::MAX;

struct OpenNode {
    arena: usize,
    g: f64,
    h: f64,
}

/// Sorted row lists, one per feature, shared by all trees of a fit.
struct Presorted {
    /// Feature-major values.
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    fn new(x: &EncodedMatrix) -> Self {
        let n = x.n_rows();
        let f = x.n_cols();
        let mut cols = vec![Vec::with_capacity(n); f];
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                cols[j].push(v);
            }
        }
        let order = cols
            .iter()
            .map(|c| {
                let mut o: Vec<u32> = (0..n as u32).collect();
                o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        Presorted { cols, order }
    }
}

fn build_tree(
    pre: &Presorted,
    grad: &[f64],
    hess: &[f64],
    rows: &[u32],
    features: &[usize],
    hp: &HyperParams,
    in_tree: &[bool],
) -> Tree {
    let n = grad.len();
    let mut slot = vec![NONE; n];
    let (mut g0, mut h0) = (0.0, 0.0);
    for &r in rows {
        slot[r as usize] = 0;
        g0 += grad[r as usize];
        h0 += hess[r as usize];
    }
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut level = vec![OpenNode { arena: 0, g: g0, h: h0 }];

    // per-feature sorted lists restricted to this tree's rows
    let mut lists: Vec<(usize, Vec<u32>, Vec<f64>)> = features
        .iter()
        .map(|&j| {
            let col = &pre.cols[j];
            let idx: Vec<u32> = pre.order[j].iter().copied().filter(|&r| in_tree[r as usize]).collect();
            let vals = idx.iter().map(|&r| col[r as usize]).collect();
            (j, idx, vals)
        })
        .collect();
    let mut active = rows.len();

    let mut depth = 0;
    while !level.is_empty() {
        let m = level.len();
        let splittable: Vec<bool> = level
            .iter()
            .map(|nd| depth < hp.max_depth && nd.h >= 2.0 * hp.min_child_weight)
            .collect();
        let mut best: Vec<Option<SplitCandidate>> = vec![None; m];
        if splittable.iter().any(|&s| s) {
            let mut gl = vec![0.0; m];
            let mut hl = vec![0.0; m];
            let mut last = vec![f64::NAN; m];
            let mut seen = vec![false; m];
            for (j, idx, vals) in &lists {
                gl.iter_mut().for_each(|v| *v = 0.0);
                hl.iter_mut().for_each(|v| *v = 0.0);
                seen.iter_mut().for_each(|v| *v = false);
                for (k, &r) in idx.iter().enumerate() {
                    let s = slot[r as usize];
                    if s == NONE {
                        continue;
                    }
                    let s = s as usize;
                    if !splittable[s] {
                        continue;
                    }
                    let v = vals[k];
                    if seen[s] && v != last[s] {
                        let nd = &level[s];
                        consider(&mut best[s], *j, last[s], v, gl[s], hl[s], nd.g, nd.h, hp);
                    }
                    gl[s] += grad[r as usize];
                    hl[s] += hess[r as usize];
                    last[s] = v;
                    seen[s] = true;
                }
            }
        }

        let mut next = Vec::new();
        // child slot pairs per current slot
        let mut child_slot = vec![(NONE, NONE); m];
        for (s, nd) in level.iter().enumerate() {
            match best[s] {
                Some(c) => {
                    let l = nodes.len();
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes[nd.arena] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        default: if c.h_left >= c.h_right {
                            DefaultDirection::Left
                        } else {
                            DefaultDirection::Right
                        },
                        left: l,
                        right: l + 1,
                    };
                    child_slot[s] = (next.len() as u32, next.len() as u32 + 1);
                    next.push(OpenNode {
                        arena: l,
                        g: c.g_left,
                        h: c.h_left,
                    });
                    next.push(OpenNode {
                        arena: l + 1,
                        g: c.g_right,
                        h: c.h_right,
                    });
                }
                None => {
                    nodes[nd.arena] = Node::Leaf {
                        weight: leaf_weight(nd.g, nd.h, hp.reg_alpha, hp.reg_lambda),
                    };
                }
            }
        }
        if next.is_empty() {
            break;
        }
        let mut still = 0;
        for &r in rows {
            let r = r as usize;
            let s = slot[r];
            if s == NONE {
                continue;
            }
            let s = s as usize;
            match best[s] {
                Some(c) => {
                    let (a, b) = child_slot[s];
                    slot[r] = if pre.cols[c.feature][r] < c.threshold { a } else { b };
                    still += 1;
                }
                None => slot[r] = NONE,
            }
        }
        if still * 2 < active {
            for (_, idx, vals) in lists.iter_mut() {
                let mut w = 0;
                for k in 0..idx.len() {
                    if slot[idx[k] as usize] != NONE {
                        idx[w] = idx[k];
                        vals[w] = vals[k];
                        w += 1;
                    }
                }
                idx.truncate(w);
                vals.truncate(w);
            }
            active = still;
        }
        level = next;
        depth += 1;
    }
    Tree { nodes }.preorder()
}

/// Fits `hp.n_estimators` trees on the squared-error objective. The result
/// depends only on (data, hp, seed).
pub fn fit(train: &EncodedMatrix, hp: &HyperParams, seed: u64) -> Result<GbtModel> {
    hp.validate()?;
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::invalid(format!("fit needs at least 2 rows, got {n}")));
    }
    if let Some(i) = train.target.iter().position(|y| !y.is_finite()) {
        return Err(Error::invalid(format!("target row {i} is not finite")));
    }
    if let Some(i) = train.data.iter().position(|v| v.is_nan()) {
        return Err(Error::invalid(format!(
            "feature value at row {}, column {} is NaN",
            i / train.n_cols(),
            i % train.n_cols()
        )));
    }
    let f = train.n_cols();
    let base_score = train.target.iter().sum::<f64>() / n as f64;
    let pre = Presorted::new(train);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pred = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let hess = vec![1.0; n];
    let n_rows = ((hp.subsample * n as f64).round() as usize).clamp(1, n);
    let n_feats = ((hp.colsample_bytree * f as f64).round() as usize).clamp(1, f);
    let mut in_tree = vec![false; n];
    let mut trees = Vec::with_capacity(hp.n_estimators);

    for _ in 0..hp.n_estimators {
        for i in 0..n {
            grad[i] = pred[i] - train.target[i];
        }
        let rows: Vec<u32> = if n_rows == n {
            (0..n as u32).collect()
        } else {
            let mut r: Vec<u32> = sample(&mut rng, n, n_rows).into_iter().map(|i| i as u32).collect();
            r.sort_unstable();
            r
        };
        let mut features: Vec<usize> = if n_feats == f {
            (0..f).collect()
        } else {
            sample(&mut rng, f, n_feats).into_vec()
        };
        features.sort_unstable();
        in_tree.iter_mut().for_each(|v| *v = false);
        for &r in &rows {
            in_tree[r as usize] = true;
        }
        let tree = build_tree(&pre, &grad, &hess, &rows, &features, hp, &in_tree);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += hp.learning_rate * tree.predict(train.row(i));
        }
        trees.push(tree);
    }

    Ok(GbtModel::new(
        train.columns.clone(),
        base_score,
        hp.learning_rate,
        hp.clone(),
        trees,
        ModelMeta::new(seed, n),
    ))
}
