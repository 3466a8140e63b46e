use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::EncodedMatrix;

fn matrix(cols: usize, rows: &[Vec<f64>], y: Vec<f64>) -> EncodedMatrix {
    let names = (0..cols).map(|j| format!("x{j}")).collect();
    EncodedMatrix::from_rows(names, rows, y).unwrap()
}

fn line(n: usize) -> EncodedMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
    let y = rows.iter().map(|r| r[0]).collect();
    matrix(1, &rows, y)
}

fn stump() -> HyperParams {
    HyperParams {
        n_estimators: 1,
        learning_rate: 1.0,
        max_depth: 1,
        reg_lambda: 0.0,
        min_child_weight: 0.0,
        ..HyperParams::default()
    }
}

fn std(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64).sqrt()
}

#[test]
fn constant_target_predicts_constant() {
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
    let m = fit(&matrix(2, &rows, vec![0.37; 30]), &HyperParams::default(), 1).unwrap();
    assert!(m.trees().iter().all(|t| t.nodes.len() == 1));
    for r in &rows {
        assert!((m.predict(r).unwrap() - 0.37).abs() < 1e-12);
    }
    assert!((m.predict(&[1e6, -3.0]).unwrap() - 0.37).abs() < 1e-12);
}

#[test]
fn identity_fit_is_tight() {
    let x = line(100);
    let hp = HyperParams {
        n_estimators: 50,
        max_depth: 3,
        ..HyperParams::default()
    };
    let m = fit(&x, &hp, 0).unwrap();
    let pred = m.predict_batch(&x.data).unwrap();
    let e = rmse(&x.target, &pred).unwrap();
    assert!(e < 0.02 * std(&x.target), "rmse {e}");
}

#[test]
fn fit_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.gen()).collect()).collect();
    let y = rows.iter().map(|r| r[0] * 2.0 - r[3] + rng.gen::<f64>() * 0.1).collect();
    let x = matrix(4, &rows, y);
    let hp = HyperParams {
        n_estimators: 30,
        subsample: 0.7,
        colsample_bytree: 0.5,
        ..HyperParams::default()
    };
    let a = fit(&x, &hp, 11).unwrap().to_json().unwrap();
    let b = fit(&x, &hp, 11).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let c = fit(&x, &hp, 12).unwrap().to_json().unwrap();
    assert_ne!(a, c);
}

#[test]
fn four_point_split() {
    let cols = vec![vec![1.0, 2.0, 3.0, 4.0]];
    let y = [0.0, 0.0, 1.0, 1.0];
    let base = 0.5;
    let g: Vec<f64> = y.iter().map(|v| base - v).collect();
    let h = vec![1.0; 4];
    let s = best_split(&cols, &g, &h, &stump()).unwrap();
    assert_eq!(s.feature, 0);
    assert_eq!(s.threshold, 2.5);
    // ½·ΔSSE: SSE drops from 1 to 0
    assert!((s.gain - 0.5).abs() < 1e-12);
}

#[test]
fn huge_gamma_blocks_splits() {
    let hp = HyperParams {
        gamma: 1e9,
        ..stump()
    };
    let cols = vec![vec![1.0, 2.0, 3.0, 4.0]];
    assert!(best_split(&cols, &[-5.0, -5.0, 5.0, 5.0], &[1.0; 4], &hp).is_none());
    let x = line(50);
    let m = fit(&x, &HyperParams { n_estimators: 5, ..hp }, 0).unwrap();
    assert!(m.trees().iter().all(|t| t.nodes.len() == 1));
}

#[test]
fn min_child_weight_gates_splits() {
    let cols = vec![vec![1.0, 2.0, 3.0, 4.0]];
    let g = [-1.0, 1.0, 1.0, 1.0];
    let hp = HyperParams {
        min_child_weight: 2.0,
        ..stump()
    };
    // only the middle threshold leaves 2 rows per side
    assert_eq!(best_split(&cols, &g, &[1.0; 4], &hp).unwrap().threshold, 2.5);
    let hp = HyperParams {
        min_child_weight: 2.5,
        ..stump()
    };
    assert!(best_split(&cols, &g, &[1.0; 4], &hp).is_none());
}

#[test]
fn l1_soft_threshold() {
    assert_eq!(leaf_weight(0.5, 3.0, 1.0, 1.0), 0.0);
    assert_eq!(leaf_weight(-0.5, 0.0, 1.0, 0.0), 0.0);
    assert!((leaf_weight(3.0, 1.0, 1.0, 1.0) + 1.0).abs() < 1e-15);
    assert!((leaf_weight(-3.0, 1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
    // increasing alpha never grows |w|
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let g = rng.gen_range(-10.0..10.0);
        let h = rng.gen_range(0.0..10.0);
        let a1: f64 = rng.gen_range(0.0..5.0);
        let a2 = a1 + rng.gen_range(0.0..5.0);
        assert!(leaf_weight(g, h, a2, 1.0).abs() <= leaf_weight(g, h, a1, 1.0).abs());
    }
}

#[test]
fn gain_formula() {
    let g = split_gain(-2.0, 2.0, 2.0, 2.0, 0.0, 0.0);
    assert!((g - 2.0).abs() < 1e-12);
    assert!((split_gain(-2.0, 2.0, 2.0, 2.0, 0.0, 0.5) - 1.5).abs() < 1e-12);
    // λ shrinks gain
    assert!(split_gain(-2.0, 2.0, 2.0, 2.0, 1.0, 0.0) < g);
}

#[test]
fn empty_forest_and_single_leaf() {
    let mut m = fit(&line(10), &stump(), 0).unwrap();
    m.predict(&[0.3]).unwrap();
    m.set_trees(Vec::new());
    assert_eq!(m.predict(&[0.3]).unwrap(), m.base_score);
    m.set_trees(vec![Tree::leaf(0.25)]);
    m.learning_rate = 0.4;
    assert!((m.predict(&[0.3]).unwrap() - (m.base_score + 0.1)).abs() < 1e-15);
    assert!(m.predict(&[0.3, 1.0]).is_err());
}

#[test]
fn batch_matches_single() {
    let x = line(40);
    let m = fit(&x, &HyperParams::default(), 2).unwrap();
    let batch = m.predict_batch(&x.data).unwrap();
    for (i, b) in batch.iter().enumerate() {
        assert_eq!(*b, m.predict(x.row(i)).unwrap());
    }
    assert!(m.predict_batch(&[0.0; 0]).unwrap().is_empty());
}

#[test]
fn large_batch_matches_single() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..700).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
    let y = rows.iter().map(|r| (6.0 * r[0]).sin() + r[1] * r[2]).collect();
    let x = matrix(3, &rows, y);
    let hp = HyperParams {
        n_estimators: 40,
        max_depth: 5,
        ..HyperParams::default()
    };
    let mut m = fit(&x, &hp, 4).unwrap();
    let mut trees = m.trees().to_vec();
    // arena not in preorder, NaN going left
    trees.insert(0, Tree {
        nodes: vec![
            Node::Split {
                feature: 2,
                threshold: 0.5,
                default: DefaultDirection::Left,
                left: 3,
                right: 1,
            },
            Node::Leaf { weight: 0.25 },
            Node::Leaf { weight: -0.5 },
            Node::Split {
                feature: 1,
                threshold: 0.3,
                default: DefaultDirection::Right,
                left: 2,
                right: 4,
            },
            Node::Leaf { weight: 0.75 },
        ],
    });
    m.set_trees(trees);
    let mut data = x.data.clone();
    for i in (0..data.len()).step_by(7) {
        data[i] = f64::NAN;
    }
    let batch = m.predict_batch(&data).unwrap();
    assert_eq!(batch.len(), 700);
    for (i, b) in batch.iter().enumerate() {
        let row = &data[3 * i..3 * i + 3];
        let single = m.predict(row).unwrap();
        let sum = m.trees().iter().fold(0.0, |acc, t| acc + t.predict(row));
        let direct = m.base_score + m.learning_rate * sum;
        assert_eq!(b.to_bits(), single.to_bits(), "row {i}");
        assert_eq!(b.to_bits(), direct.to_bits(), "row {i}");
    }
}

#[test]
fn metric_examples() {
    let y = [0.0, 1.0];
    assert_eq!(rmse(&y, &y).unwrap(), 0.0);
    assert_eq!(r2(&y, &y).unwrap(), 1.0);
    assert_eq!(rmse(&y, &[0.5, 0.5]).unwrap(), 0.5);
    assert_eq!(r2(&y, &[0.5, 0.5]).unwrap(), 0.0);
    assert!(r2(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    assert!(rmse(&[], &[]).is_err());
    assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn folds_partition_rows() {
    let f = fold_assignment(100, 10, 5).unwrap();
    let mut counts = [0; 10];
    for &k in &f {
        counts[k] += 1;
    }
    assert!(counts.iter().all(|&c| c == 10));
    assert_eq!(f, fold_assignment(100, 10, 5).unwrap());
    let f = fold_assignment(103, 10, 5).unwrap();
    let mut counts = [0; 10];
    for &k in &f {
        counts[k] += 1;
    }
    assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    assert!(fold_assignment(5, 10, 0).is_err());
    assert!(fold_assignment(50, 1, 0).is_err());
}

#[test]
fn cv_on_noise_has_no_skill() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.gen()]).collect();
    let y = (0..300).map(|_| rng.gen()).collect();
    let hp = HyperParams {
        n_estimators: 20,
        max_depth: 2,
        ..HyperParams::default()
    };
    let cv = kfold_cv(&matrix(1, &rows, y), 5, &hp, 1).unwrap();
    assert_eq!(cv.fold_r2.len(), 5);
    assert!(cv.mean_r2 < 0.05 && cv.mean_r2 > -0.2, "r2 {}", cv.mean_r2);
    assert!(cv.std_rmse >= 0.0);
}

#[test]
fn singleton_grid() {
    let hp = HyperParams {
        n_estimators: 10,
        ..HyperParams::default()
    };
    let x = line(60);
    let rep = grid_search(&x, &ParamGrid::singleton(&hp), 3, 7, None).unwrap();
    assert_eq!(rep.entries.len(), 1);
    assert_eq!(rep.best_entry().params, hp);
    assert_eq!(rep.best_entry().cv, kfold_cv(&x, 3, &hp, 7).unwrap());
}

#[test]
fn learning_rate_grid_prefers_faster_rate() {
    let mut grid = ParamGrid::singleton(&HyperParams {
        n_estimators: 20,
        max_depth: 3,
        ..HyperParams::default()
    });
    grid.learning_rate = vec![0.1, 0.001];
    let rep = grid_search(&line(100), &grid, 5, 0, None).unwrap();
    assert_eq!(rep.entries.len(), 2);
    assert_eq!(rep.best_entry().params.learning_rate, 0.1);
}

#[test]
fn ties_prefer_fewer_rounds_then_shallower() {
    // constant target: every configuration scores RMSE 0
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
    let x = matrix(1, &rows, vec![1.0; 40]);
    let mut grid = ParamGrid::singleton(&HyperParams::default());
    grid.n_estimators = vec![5, 2];
    grid.max_depth = vec![4, 1, 3];
    let rep = grid_search(&x, &grid, 4, 0, None).unwrap();
    let best = &rep.best_entry().params;
    assert_eq!((best.n_estimators, best.max_depth), (2, 1));
}

#[test]
fn budget_caps_evaluations() {
    let grid = ParamGrid::full();
    assert!(grid.len() > 124_416);
    // cheap stand-in: same grid shape, tiny round counts so the test is fast
    let mut cheap = grid.clone();
    cheap.n_estimators = vec![1, 2, 3];
    let rep = grid_search(&line(30), &cheap, 3, 42, Some(10)).unwrap();
    assert_eq!(rep.entries.len(), 10);
    assert_eq!(rep.budget, Some(10));
    assert_eq!(rep.grid_size, grid.len());
    let mut seen = std::collections::HashSet::new();
    for e in &rep.entries {
        assert!(seen.insert(e.index));
        assert_eq!(cheap.get(e.index).unwrap(), e.params);
    }
    assert!(grid_search(&line(30), &cheap, 3, 42, Some(0)).is_err());
    let mut empty = cheap;
    empty.gamma.clear();
    assert!(grid_search(&line(30), &empty, 3, 42, None).is_err());
}

#[test]
fn grid_index_is_mixed_radix() {
    let g = ParamGrid::full();
    let first = g.get(0).unwrap();
    assert_eq!((first.n_estimators, first.learning_rate, first.min_child_weight), (100, 0.1, 1.0));
    let second = g.get(1).unwrap();
    assert_eq!(second.min_child_weight, 3.0);
    let last = g.get(g.len() - 1).unwrap();
    assert_eq!((last.n_estimators, last.max_depth, last.min_child_weight), (5000, 20, 15.0));
    assert!(g.get(g.len()).is_none());
}

#[test]
fn training_loss_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| (r[0] * 6.0).sin() + r[1] * r[2] + rng.gen::<f64>() * 0.2)
        .collect();
    let x = matrix(3, &rows, y);
    let hp = HyperParams {
        n_estimators: 60,
        max_depth: 4,
        gamma: 0.01,
        reg_alpha: 0.1,
        min_child_weight: 3.0,
        ..HyperParams::default()
    };
    let mut m = fit(&x, &hp, 0).unwrap();
    let trees = m.trees().to_vec();
    let mut prev = f64::INFINITY;
    for k in 1..=trees.len() {
        m.set_trees(trees[..k].to_vec());
        let e = rmse(&x.target, &m.predict_batch(&x.data).unwrap()).unwrap();
        assert!(e <= prev + 1e-12, "{e} > {prev}");
        prev = e;
    }
}

/// Exhaustive search for the SSE-minimizing stump; ties resolved like the
/// builder (feature, then threshold).
fn brute_force(cols: &[Vec<f64>], y: &[f64]) -> Option<(usize, f64)> {
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let all: Vec<usize> = (0..y.len()).collect();
    let parent = sse(&all);
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, col) in cols.iter().enumerate() {
        let mut vals = col.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| col[i] < thr);
            let red = parent - sse(&l) - sse(&r);
            let better = match best {
                None => red > 1e-9,
                Some((_, _, b)) => red > b + 1e-9,
            };
            if better {
                best = Some((j, thr, red));
            }
        }
    }
    best.map(|(j, t, _)| (j, t))
}

#[test]
fn stump_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..300 {
        let n = rng.gen_range(2..=64);
        let f = rng.gen_range(1..=4);
        let discrete = case % 2 == 0;
        let cols: Vec<Vec<f64>> = (0..f)
            .map(|_| {
                (0..n)
                    .map(|_| if discrete { rng.gen_range(0..6) as f64 } else { rng.gen() })
                    .collect()
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let m = fit(&matrix(f, &rows, y.clone()), &stump(), 0).unwrap();
        let got = match m.trees()[0].nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        };
        assert_eq!(got, brute_force(&cols, &y), "case {case}");
    }
}

#[test]
fn tree_json_round_trip() {
    let x = line(50);
    let m = fit(&x, &HyperParams { n_estimators: 3, ..HyperParams::default() }, 0).unwrap();
    let text = m.to_json().unwrap();
    let back = GbtModel::from_json(&text).unwrap();
    assert_eq!(back, m);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let root = &v["trees"][0];
    for key in ["feature", "threshold", "default", "left", "right"] {
        assert!(root.get(key).is_some(), "{key}");
    }
    assert!(GbtModel::from_json(&text.replace("\"feature\": 0", "\"feature\": 7")).is_err());
}

#[test]
fn nan_follows_default_direction() {
    let t = Tree {
        nodes: vec![
            Node::Split {
                feature: 0,
                threshold: 0.5,
                default: DefaultDirection::Right,
                left: 1,
                right: 2,
            },
            Node::Leaf { weight: -1.0 },
            Node::Leaf { weight: 1.0 },
        ],
    };
    assert_eq!(t.predict(&[0.2]), -1.0);
    assert_eq!(t.predict(&[0.5]), 1.0);
    assert_eq!(t.predict(&[f64::NAN]), 1.0);
    // -1 sentinels are ordinary values
    assert_eq!(t.predict(&[-1.0]), -1.0);
}

#[test]
fn fit_rejects_bad_input() {
    let x = line(1);
    assert!(fit(&x, &HyperParams::default(), 0).is_err());
    let mut x = line(5);
    x.target[2] = f64::INFINITY;
    assert!(fit(&x, &HyperParams::default(), 0).is_err());
    let bad = HyperParams {
        subsample: 0.0,
        ..HyperParams::default()
    };
    assert!(fit(&line(5), &bad, 0).is_err());
}
