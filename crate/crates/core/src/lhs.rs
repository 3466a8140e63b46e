//! Latin hypercube sampling of scenario inputs.
//!
//! Each dimension gets its own ChaCha stream keyed by `(seed, dimension index)`,
//! so a column does not depend on how many other columns were drawn or in what
//! order.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::scenario::{
    AgentConfig, AircraftSetup, ScenarioConfig, ScenarioTemplate, ShotPhilosophy, Side,
};
use crate::units::{FT_TO_M, NM_TO_M};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterKind {
    Continuous {
        lo: f64,
        hi: f64,
        #[serde(default)]
        units: String,
    },
    Categorical {
        values: Vec<String>,
    },
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParameterKind,
}

impl ParameterSpec {
    pub fn continuous(name: &str, lo: f64, hi: f64, units: &str) -> Self {
        ParameterSpec {
            name: name.to_string(),
            kind: ParameterKind::Continuous {
                lo,
                hi,
                units: units.to_string(),
            },
        }
    }

    pub fn categorical(name: &str, values: &[&str]) -> Self {
        ParameterSpec {
            name: name.to_string(),
            kind: ParameterKind::Categorical {
                values: values.iter().map(|v| v.to_string()).collect(),
            },
        }
    }

    pub fn boolean(name: &str) -> Self {
        ParameterSpec {
            name: name.to_string(),
            kind: ParameterKind::Boolean,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            ParameterKind::Continuous { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::config(&self.name, format!("need lo < hi, got [{lo}, {hi}]")));
                }
            }
            ParameterKind::Categorical { values } => {
                let mut distinct = values.clone();
                distinct.sort();
                distinct.dedup();
                if distinct.len() < 2 || distinct.len() != values.len() {
                    return Err(Error::config(&self.name, "categorical needs >= 2 distinct values"));
                }
            }
            ParameterKind::Boolean => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub specs: Vec<ParameterSpec>,
    pub n: usize,
    pub seed: u64,
}

impl SamplePlan {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "sample count must be >= 1"));
        }
        if self.specs.is_empty() {
            return Err(Error::config("specs", "plan has no parameters"));
        }
        for (i, s) in self.specs.iter().enumerate() {
            s.validate()?;
            if self.specs[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::config(&s.name, "duplicate parameter name"));
            }
        }
        Ok(())
    }

    /// Parses and validates a plan; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config("plan", "expected a JSON object"))?;
        for key in obj.keys() {
            if !["specs", "n", "seed"].contains(&key.as_str()) {
                return Err(Error::config(key, "unknown field"));
            }
        }
        fn field<T: serde::de::DeserializeOwned>(
            obj: &serde_json::Map<String, serde_json::Value>,
            name: &str,
        ) -> Result<T> {
            let v = obj.get(name).ok_or_else(|| Error::config(name, "missing"))?;
            serde_json::from_value(v.clone()).map_err(|e| Error::config(name, e.to_string()))
        }
        let raw: Vec<serde_json::Value> = field(obj, "specs")?;
        let specs = raw
            .into_iter()
            .enumerate()
            .map(|(i, v)| serde_json::from_value(v).map_err(|e| Error::config(format!("specs[{i}]"), e.to_string())))
            .collect::<Result<Vec<ParameterSpec>>>()?;
        let plan = SamplePlan {
            specs,
            n: field(obj, "n")?,
            seed: field(obj, "seed")?,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleValue {
    Bool(bool),
    Num(f64),
    Cat(String),
}

impl SampleValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SampleValue::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            SampleValue::Bool(b) => b.to_string(),
            SampleValue::Num(v) => v.to_string(),
            SampleValue::Cat(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SampleValue>>,
}

impl SampleMatrix {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(SampleValue::render))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Stratified uniform draws in [0, 1): one per stratum, strata visited in a
/// random order.
fn stratified_unit(n: usize, seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(dim as u64);
    let mut strata: Vec<usize> = (0..n).collect();
    strata.shuffle(&mut rng);
    strata
        .into_iter()
        .map(|k| {
            let u = (k as f64 + rng.gen::<f64>()) / n as f64;
            // keep the draw inside its stratum if rounding pushed it up
            let hi = (k + 1) as f64 / n as f64;
            if u >= hi {
                f64::from_bits(hi.to_bits() - 1)
            } else {
                u
            }
        })
        .collect()
}

fn equal_partition(u: f64, k: usize) -> usize {
    ((u * k as f64) as usize).min(k - 1)
}

pub fn lhs_sample(plan: &SamplePlan) -> Result<SampleMatrix> {
    plan.validate()?;
    let columns: Vec<Vec<SampleValue>> = plan
        .specs
        .iter()
        .enumerate()
        .map(|(dim, spec)| {
            let unit = stratified_unit(plan.n, plan.seed, dim);
            unit.into_iter()
                .map(|u| match &spec.kind {
                    ParameterKind::Continuous { lo, hi, .. } => SampleValue::Num(lo + u * (hi - lo)),
                    ParameterKind::Categorical { values } => {
                        SampleValue::Cat(values[equal_partition(u, values.len())].clone())
                    }
                    ParameterKind::Boolean => SampleValue::Bool(equal_partition(u, 2) == 1),
                })
                .collect()
        })
        .collect();

    let rows = (0..plan.n)
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect();
    Ok(SampleMatrix {
        columns: plan.names(),
        rows,
    })
}

/// Column order of the default scenario plan.
pub const DEFAULT_SPEC_NAMES: [&str; 17] = [
    "threat_bearing_deg",
    "blue_range_nm",
    "red_range_nm",
    "blue_flight_level",
    "red_flight_level",
    "blue_commit_nm",
    "red_commit_nm",
    "blue_vul_thr_bef_shot",
    "red_vul_thr_bef_shot",
    "blue_vul_thr_aft_shot",
    "red_vul_thr_aft_shot",
    "blue_shot_point",
    "red_shot_point",
    "blue_shot_phi",
    "red_shot_phi",
    "blue_rwr",
    "red_rwr",
];

/// Start distance of each formation from the shared CAP point (NM). Both
/// sides approach it from opposite directions and meet well outside it.
pub const BLUE_RANGE_NM: (f64, f64) = (40.0, 60.0);
pub const RED_RANGE_NM: (f64, f64) = (40.0, 60.0);
pub const COMMIT_NM: (f64, f64) = (20.0, 50.0);

fn range_bounds(side: Side) -> (f64, f64) {
    match side {
        Side::Blue => BLUE_RANGE_NM,
        Side::Red => RED_RANGE_NM,
    }
}

pub fn default_specs() -> Vec<ParameterSpec> {
    let phis = ShotPhilosophy::NAMES;
    let mut specs = vec![ParameterSpec::continuous("threat_bearing_deg", 0.0, 360.0, "deg")];
    for side in [Side::Blue, Side::Red] {
        let (lo, hi) = range_bounds(side);
        specs.push(ParameterSpec::continuous(&format!("{}_range_nm", side.as_str()), lo, hi, "NM"));
    }
    for side in ["blue", "red"] {
        specs.push(ParameterSpec::continuous(&format!("{side}_flight_level"), 150.0, 400.0, "FL"));
    }
    for side in ["blue", "red"] {
        specs.push(ParameterSpec::continuous(&format!("{side}_commit_nm"), COMMIT_NM.0, COMMIT_NM.1, "NM"));
    }
    for field in ["vul_thr_bef_shot", "vul_thr_aft_shot", "shot_point"] {
        for side in ["blue", "red"] {
            specs.push(ParameterSpec::continuous(&format!("{side}_{field}"), 0.0, 1.0, ""));
        }
    }
    for side in ["blue", "red"] {
        specs.push(ParameterSpec::categorical(&format!("{side}_shot_phi"), &phis));
    }
    for side in ["blue", "red"] {
        specs.push(ParameterSpec::boolean(&format!("{side}_rwr")));
    }
    debug_assert!(specs.iter().map(|s| s.name.as_str()).eq(DEFAULT_SPEC_NAMES));
    specs
}

pub fn default_plan(n: usize, seed: u64) -> SamplePlan {
    SamplePlan {
        specs: default_specs(),
        n,
        seed,
    }
}

fn num(row: &[SampleValue], i: usize, lo: f64, hi: f64) -> Result<f64> {
    let name = DEFAULT_SPEC_NAMES[i];
    let v = row[i]
        .as_f64()
        .ok_or_else(|| Error::config(name, "expected a number"))?;
    if !(v >= lo && v <= hi) {
        return Err(Error::config(name, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(v)
}

fn flag(row: &[SampleValue], i: usize) -> Result<bool> {
    match &row[i] {
        SampleValue::Bool(b) => Ok(*b),
        _ => Err(Error::config(DEFAULT_SPEC_NAMES[i], "expected a boolean")),
    }
}

fn philosophy(row: &[SampleValue], i: usize) -> Result<ShotPhilosophy> {
    match &row[i] {
        SampleValue::Cat(s) => s.parse().map_err(|_| Error::UnknownCategory {
            field: DEFAULT_SPEC_NAMES[i].to_string(),
            value: s.clone(),
        }),
        _ => Err(Error::config(DEFAULT_SPEC_NAMES[i], "expected a category")),
    }
}

/// Builds a 2-v-2 scenario from one row of the default plan. Red sits on the
/// sampled threat bearing from the CAP point, blue on the reciprocal; each
/// lead has its wingman abeam at the template spacing.
pub fn scenario_from_row(
    row: &[SampleValue],
    template: &ScenarioTemplate,
    scenario_id: u64,
) -> Result<ScenarioConfig> {
    if row.len() != DEFAULT_SPEC_NAMES.len() {
        return Err(Error::invalid(format!(
            "row has {} values, default plan has {}",
            row.len(),
            DEFAULT_SPEC_NAMES.len()
        )));
    }
    let bearing = num(row, 0, 0.0, 360.0)?;
    let mut aircraft = Vec::with_capacity(4);
    for (s, side) in [Side::Blue, Side::Red].into_iter().enumerate() {
        let (lo, hi) = range_bounds(side);
        let range = num(row, 1 + s, lo, hi)? * NM_TO_M;
        let fl = num(row, 3 + s, 150.0, 400.0)?;
        let commit = num(row, 5 + s, COMMIT_NM.0, COMMIT_NM.1)? * NM_TO_M;
        let vul_bef = num(row, 7 + s, 0.0, 1.0)?;
        let vul_aft = num(row, 9 + s, 0.0, 1.0)?;
        let shot_point = num(row, 11 + s, 0.0, 1.0)?;
        let phi = philosophy(row, 13 + s)?;
        let rwr = flag(row, 15 + s)?;

        let axis = match side {
            Side::Red => bearing,
            Side::Blue => (bearing + 180.0) % 360.0,
        };
        let (sin_a, cos_a) = axis.to_radians().sin_cos();
        // formation centre, then wingman abeam on the right when facing the CAP
        let cx = template.cap_point[0] + range * sin_a;
        let cy = template.cap_point[1] + range * cos_a;
        let heading_in = (axis + 180.0) % 360.0;
        let (sin_h, cos_h) = heading_in.to_radians().sin_cos();
        let right = [cos_h, -sin_h];
        let altitude = fl * 100.0 * FT_TO_M;
        for slot in 0..2u32 {
            let lateral = (slot as f64 - 0.5) * template.wingman_spacing_m;
            let id = s as u32 * 2 + slot;
            aircraft.push(AircraftSetup {
                id,
                side,
                position: [cx + lateral * right[0], cy + lateral * right[1]],
                altitude,
                heading: heading_in,
                speed: template.initial_speed_kn,
                config: AgentConfig {
                    commit_distance: commit,
                    vul_thr_bef_shot: vul_bef,
                    vul_thr_aft_shot: vul_aft,
                    shot_point,
                    shot_philosophy: phi,
                    rwr_present: rwr,
                    cap_point: [template.cap_point[0], template.cap_point[1], altitude],
                    cap_orbit_radius: template.cap_orbit_radius_m,
                },
            });
        }
    }
    let cfg = ScenarioConfig {
        id: scenario_id,
        aircraft,
        constants: template.constants.clone(),
    };
    cfg.validate()?;
    Ok(cfg)
}
