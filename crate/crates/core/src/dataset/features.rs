use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::sim::scenario::ShotPhilosophy;

/// Raw engagement state at the instant before COMMIT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Metres.
    pub distance: f64,
    /// Degrees, [0, 180]; 0 when the target flies directly away.
    pub aspect: f64,
    /// Degrees, [0, 180].
    pub delta_head: f64,
    /// Own minus target altitude, metres.
    pub delta_alt: f64,
    /// Own minus target speed, knots.
    pub delta_vel: f64,
    pub wez_max_o2t: f64,
    pub wez_nez_o2t: f64,
    pub wez_max_t2o: f64,
    pub wez_nez_t2o: f64,
    pub vul_thr_bef_shot: f64,
    pub vul_thr_aft_shot: f64,
    pub shot_point: f64,
    pub rwr_warning: bool,
    pub hp_tgt_off: f64,
    pub hp_thr_vul: f64,
    pub own_shot_phi: ShotPhilosophy,
    pub enemy_shot_phi: ShotPhilosophy,
}

pub const FEATURE_NAMES: [&str; 17] = [
    "distance",
    "aspect",
    "delta_head",
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
    "own_shot_phi",
    "enemy_shot_phi",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl FieldError {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        FieldError {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

const WEZ_FIELDS: [&str; 4] = ["wez_max_o2t", "wez_nez_o2t", "wez_max_t2o", "wez_nez_t2o"];
const UNIT_FIELDS: [&str; 5] = [
    "vul_thr_bef_shot",
    "vul_thr_aft_shot",
    "shot_point",
    "hp_tgt_off",
    "hp_thr_vul",
];

impl FeatureVector {
    pub fn numeric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "distance" => self.distance,
            "aspect" => self.aspect,
            "delta_head" => self.delta_head,
            "delta_alt" => self.delta_alt,
            "delta_vel" => self.delta_vel,
            "wez_max_o2t" => self.wez_max_o2t,
            "wez_nez_o2t" => self.wez_nez_o2t,
            "wez_max_t2o" => self.wez_max_t2o,
            "wez_nez_t2o" => self.wez_nez_t2o,
            "vul_thr_bef_shot" => self.vul_thr_bef_shot,
            "vul_thr_aft_shot" => self.vul_thr_aft_shot,
            "shot_point" => self.shot_point,
            "hp_tgt_off" => self.hp_tgt_off,
            "hp_thr_vul" => self.hp_thr_vul,
            _ => return None,
        })
    }

    /// Every invariant violation, one entry per offending field.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        for name in FEATURE_NAMES {
            let Some(v) = self.numeric(name) else { continue };
            if !v.is_finite() {
                errs.push(FieldError::new(name, "must be finite"));
            }
        }
        if !(self.distance >= 0.0) {
            errs.push(FieldError::new("distance", "must be >= 0"));
        }
        for (name, v) in [("aspect", self.aspect), ("delta_head", self.delta_head)] {
            if !(0.0..=180.0).contains(&v) {
                errs.push(FieldError::new(name, format!("{v} outside [0, 180]")));
            }
        }
        for name in WEZ_FIELDS {
            let v = self.numeric(name).unwrap();
            if !(v >= 0.0 || v == -1.0) {
                errs.push(FieldError::new(name, format!("{v} must be >= 0 or exactly -1")));
            }
        }
        for name in UNIT_FIELDS {
            let v = self.numeric(name).unwrap();
            if !(0.0..=1.0).contains(&v) {
                errs.push(FieldError::new(name, format!("{v} outside [0, 1]")));
            }
        }
        errs
    }

    /// Parses a flat JSON object, collecting a diagnostic for every missing,
    /// mistyped, unknown or out-of-range field.
    pub fn from_value(value: &Value) -> Result<Self, Vec<FieldError>> {
        let Some(obj) = value.as_object() else {
            return Err(vec![FieldError::new("$", "expected a JSON object")]);
        };
        let mut errs = Vec::new();
        for key in obj.keys() {
            if !FEATURE_NAMES.contains(&key.as_str()) {
                errs.push(FieldError::new(key, "unknown field"));
            }
        }
        let mut num = |name: &str| -> f64 {
            match obj.get(name) {
                None => {
                    errs.push(FieldError::new(name, "missing"));
                    f64::NAN
                }
                Some(v) => v.as_f64().unwrap_or_else(|| {
                    errs.push(FieldError::new(name, "expected a number"));
                    f64::NAN
                }),
            }
        };
        let distance = num("distance");
        let aspect = num("aspect");
        let delta_head = num("delta_head");
        let delta_alt = num("delta_alt");
        let delta_vel = num("delta_vel");
        let wez_max_o2t = num("wez_max_o2t");
        let wez_nez_o2t = num("wez_nez_o2t");
        let wez_max_t2o = num("wez_max_t2o");
        let wez_nez_t2o = num("wez_nez_t2o");
        let vul_thr_bef_shot = num("vul_thr_bef_shot");
        let vul_thr_aft_shot = num("vul_thr_aft_shot");
        let shot_point = num("shot_point");
        let hp_tgt_off = num("hp_tgt_off");
        let hp_thr_vul = num("hp_thr_vul");

        let rwr_warning = match obj.get("rwr_warning") {
            Some(Value::Bool(b)) => *b,
            Some(Value::Number(n)) if n.as_f64() == Some(0.0) => false,
            Some(Value::Number(n)) if n.as_f64() == Some(1.0) => true,
            Some(_) => {
                errs.push(FieldError::new("rwr_warning", "expected a boolean"));
                false
            }
            None => {
                errs.push(FieldError::new("rwr_warning", "missing"));
                false
            }
        };
        let mut phi = |name: &str| -> ShotPhilosophy {
            match obj.get(name) {
                Some(Value::String(s)) => s.parse().unwrap_or_else(|_| {
                    errs.push(FieldError::new(
                        name,
                        format!("unknown category `{s}`; expected one of {}", ShotPhilosophy::NAMES.join(", ")),
                    ));
                    ShotPhilosophy::MaxRange
                }),
                Some(_) => {
                    errs.push(FieldError::new(name, "expected a string"));
                    ShotPhilosophy::MaxRange
                }
                None => {
                    errs.push(FieldError::new(name, "missing"));
                    ShotPhilosophy::MaxRange
                }
            }
        };
        let own_shot_phi = phi("own_shot_phi");
        let enemy_shot_phi = phi("enemy_shot_phi");

        let fv = FeatureVector {
            distance,
            aspect,
            delta_head,
            delta_alt,
            delta_vel,
            wez_max_o2t,
            wez_nez_o2t,
            wez_max_t2o,
            wez_nez_t2o,
            vul_thr_bef_shot,
            vul_thr_aft_shot,
            shot_point,
            rwr_warning,
            hp_tgt_off,
            hp_thr_vul,
            own_shot_phi,
            enemy_shot_phi,
        };
        if errs.is_empty() {
            errs = fv.validate();
        } else {
            // Skip range checks on fields that already failed to parse.
            let failed: Vec<String> = errs.iter().map(|e| e.field.clone()).collect();
            errs.extend(fv.validate().into_iter().filter(|e| !failed.contains(&e.field)));
        }
        if errs.is_empty() {
            Ok(fv)
        } else {
            Err(errs)
        }
    }
}
