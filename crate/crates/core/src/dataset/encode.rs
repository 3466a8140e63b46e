use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EngagementRecord, FeatureVector};
use crate::error::{Error, Result};
use crate::sim::scenario::ShotPhilosophy;

/// 13 pass-through numerics, two sin/cos pairs, two 3-way one-hots.
pub const ENCODED_WIDTH: usize = 23;

pub fn encoded_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "distance",
        "aspect_sin",
        "aspect_cos",
        "delta_head_sin",
        "delta_head_cos",
        "delta_alt",
        "delta_vel",
        "wez_max_o2t",
        "wez_nez_o2t",
        "wez_max_t2o",
        "wez_nez_t2o",
        "vul_thr_bef_shot",
        "vul_thr_aft_shot",
        "shot_point",
        "rwr_warning",
        "hp_tgt_off",
        "hp_thr_vul",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for prefix in ["own_shot_phi", "enemy_shot_phi"] {
        for name in ShotPhilosophy::NAMES {
            cols.push(format!("{prefix}_{name}"));
        }
    }
    cols
}

pub fn encode_features(f: &FeatureVector) -> [f64; ENCODED_WIDTH] {
    let (a_sin, a_cos) = f.aspect.to_radians().sin_cos();
    let (h_sin, h_cos) = f.delta_head.to_radians().sin_cos();
    let mut row = [0.0; ENCODED_WIDTH];
    let head = [
        f.distance,
        a_sin,
        a_cos,
        h_sin,
        h_cos,
        f.delta_alt,
        f.delta_vel,
        f.wez_max_o2t,
        f.wez_nez_o2t,
        f.wez_max_t2o,
        f.wez_nez_t2o,
        f.vul_thr_bef_shot,
        f.vul_thr_aft_shot,
        f.shot_point,
        if f.rwr_warning { 1.0 } else { 0.0 },
        f.hp_tgt_off,
        f.hp_thr_vul,
    ];
    row[..head.len()].copy_from_slice(&head);
    row[head.len() + f.own_shot_phi.ordinal()] = 1.0;
    row[head.len() + 3 + f.enemy_shot_phi.ordinal()] = 1.0;
    row
}

/// Dense row-major design matrix with its regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub columns: Vec<String>,
    pub data: Vec<f64>,
    pub target: Vec<f64>,
}

impl EncodedMatrix {
    pub fn new(columns: Vec<String>, data: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("matrix needs at least one column".into()));
        }
        if data.len() != columns.len() * target.len() {
            return Err(Error::Schema(format!(
                "{} values do not fill {} rows of {} columns",
                data.len(),
                target.len(),
                columns.len()
            )));
        }
        Ok(EncodedMatrix { columns, data, target })
    }

    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::Schema(format!(
                "row {bad} has {} values, expected {}",
                rows[bad].len(),
                columns.len()
            )));
        }
        Self::new(columns, rows.concat(), target)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols())
    }

    /// New matrix holding `indices` in the given order.
    pub fn select(&self, indices: &[usize]) -> EncodedMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EncodedMatrix {
            columns: self.columns.clone(),
            data,
            target: indices.iter().map(|&i| self.target[i]).collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(BufWriter::new(file))
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(String::as_str).chain(["target"]))?;
        let mut buf = Vec::with_capacity(self.n_cols() + 1);
        for (row, y) in self.rows().zip(&self.target) {
            buf.clear();
            buf.extend(row.iter().chain([y]).map(|v| v.to_string()));
            w.write_record(&buf)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv) and checks its
    /// header against `expected` (the 23 engagement columns when `None`).
    pub fn read_csv(path: &Path, expected: Option<&[String]>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(file, &path.display().to_string(), expected)
    }

    pub fn read_csv_from<R: std::io::Read>(input: R, source: &str, expected: Option<&[String]>) -> Result<Self> {
        Self::read_impl(input, source, expected, true)
    }

    /// Like [`read_csv_from`](Self::read_csv_from) but the `target` column
    /// may be absent, in which case every target is NaN.
    pub fn read_features_csv_from<R: std::io::Read>(
        input: R,
        source: &str,
        expected: Option<&[String]>,
    ) -> Result<Self> {
        Self::read_impl(input, source, expected, false)
    }

    fn read_impl<R: std::io::Read>(
        input: R,
        source: &str,
        expected: Option<&[String]>,
        target_required: bool,
    ) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let default_cols;
        let expected = match expected {
            Some(e) => e,
            None => {
                default_cols = encoded_columns();
                &default_cols
            }
        };
        let mut want: Vec<&str> = expected.iter().map(String::as_str).collect();
        let has_target = target_required || header.last().map(String::as_str) == Some("target");
        if has_target {
            want.push("target");
        }
        if header != want {
            let first_diff = header
                .iter()
                .zip(&want)
                .position(|(a, b)| a != b)
                .unwrap_or(header.len().min(want.len()));
            return Err(Error::Schema(format!(
                "{source}: header has {} columns, expected {}; first mismatch at column {} ({:?} vs {:?})",
                header.len(),
                want.len(),
                first_diff,
                header.get(first_diff),
                want.get(first_diff)
            )));
        }
        let w = expected.len();
        let mut data = Vec::new();
        let mut target = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    path: source.into(),
                    line,
                    reason: format!("column `{}`: `{field}` is not a number", want[j]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: source.into(),
                        line,
                        reason: format!("column `{}` is not finite", want[j]),
                    });
                }
                if j < w {
                    data.push(v);
                } else {
                    target.push(v);
                }
            }
            if !has_target {
                target.push(f64::NAN);
            }
        }
        EncodedMatrix::new(expected.to_vec(), data, target)
    }
}

pub fn encode(records: &[EngagementRecord]) -> Result<EncodedMatrix> {
    if records.is_empty() {
        return Err(Error::invalid("cannot encode an empty record set"));
    }
    let mut data = Vec::with_capacity(records.len() * ENCODED_WIDTH);
    for r in records {
        data.extend_from_slice(&encode_features(&r.features));
    }
    EncodedMatrix::new(encoded_columns(), data, records.iter().map(|r| r.target).collect())
}

/// Seeded shuffle, then the first `round(ratio * n)` rows train. Returns
/// (train, test) row indices.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 10 {
        return Err(Error::invalid(format!("split needs at least 10 rows, got {n}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split(matrix: &EncodedMatrix, ratio: f64, seed: u64) -> Result<(EncodedMatrix, EncodedMatrix)> {
    let (train, test) = split_indices(matrix.n_rows(), ratio, seed)?;
    Ok((matrix.select(&train), matrix.select(&test)))
}
