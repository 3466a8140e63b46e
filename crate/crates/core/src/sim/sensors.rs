//! Radar detection, weapon engagement zone estimates and the offense and
//! vulnerability indices that drive the tactics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::kinematics::AircraftState;
use crate::units::{wrap_180, wrap_360, NM_TO_M};

pub fn range3(a: &AircraftState, b: &AircraftState) -> f64 {
    let dx = b.pos[0] - a.pos[0];
    let dy = b.pos[1] - a.pos[1];
    let dz = b.alt - a.alt;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// True bearing (deg, [0, 360)) from `from` to `to` in the horizontal plane.
pub fn bearing(from: [f64; 2], to: [f64; 2]) -> f64 {
    wrap_360((to[0] - from[0]).atan2(to[1] - from[1]).to_degrees())
}

/// Unsigned angle between two directions, in [0, 180].
pub fn angle_between(a_deg: f64, b_deg: f64) -> f64 {
    wrap_180(a_deg - b_deg).abs()
}

/// Angle between the target's rearward axis and the line of sight from the
/// target to the reference: 0 when the reference sits dead astern of the
/// target, 180 when the target points straight at it.
pub fn aspect_deg(target: &AircraftState, reference: &AircraftState) -> f64 {
    let los = bearing(target.pos, reference.pos);
    angle_between(target.heading + 180.0, los)
}

pub fn delta_heading_deg(a: &AircraftState, b: &AircraftState) -> f64 {
    angle_between(a.heading, b.heading)
}

/// Own-radar detection: range and azimuth gimbal gates.
pub fn radar_detects(own: &AircraftState, other: &AircraftState, range_m: f64, gimbal_deg: f64) -> bool {
    if !own.alive || !other.alive {
        return false;
    }
    if range3(own, other) > range_m {
        return false;
    }
    angle_between(own.heading, bearing(own.pos, other.pos)) <= gimbal_deg
}

/// Ids of live opponents seen by `own`'s radar, ascending.
pub fn radar_contacts(own: &AircraftState, others: &[AircraftState], range_m: f64, gimbal_deg: f64) -> Vec<u32> {
    let mut ids: Vec<u32> = others
        .iter()
        .filter(|o| o.side != own.side && radar_detects(own, o, range_m, gimbal_deg))
        .map(|o| o.id)
        .collect();
    ids.sort_unstable();
    ids
}

/// Union of the live team members' own-radar detections (datalink picture).
pub fn merged_picture(team: &[&AircraftState], all: &[AircraftState], range_m: f64, gimbal_deg: f64) -> Vec<u32> {
    let mut ids: Vec<u32> = team
        .iter()
        .filter(|m| m.alive)
        .flat_map(|m| radar_contacts(m, all, range_m, gimbal_deg))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WezParams {
    /// Maximum range (m) at the top of the altitude and speed envelope, head-on.
    pub r_base_m: f64,
    /// NEZ range as a fraction of the maximum range.
    pub nez_ratio: f64,
    /// Aspect factor against a tail-on target.
    pub tail_factor: f64,
    /// Altitude factor at the floor altitude; grows linearly to 1 at the ceiling.
    pub alt_floor_factor: f64,
    pub alt_floor_m: f64,
    pub alt_ceiling_m: f64,
    /// Speed factor at the minimum speed; grows linearly to 1 at the maximum.
    pub speed_floor_factor: f64,
    pub speed_floor_kn: f64,
    pub speed_ceiling_kn: f64,
}

impl Default for WezParams {
    fn default() -> Self {
        WezParams {
            r_base_m: 40.0 * NM_TO_M,
            nez_ratio: 0.3,
            tail_factor: 0.35,
            alt_floor_factor: 0.55,
            alt_floor_m: 1_000.0,
            alt_ceiling_m: 15_000.0,
            speed_floor_factor: 0.85,
            speed_floor_kn: 150.0,
            speed_ceiling_kn: 600.0,
        }
    }
}

impl WezParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_base_m > 0.0) {
            return Err(Error::config("constants.wez.r_base_m", "must be > 0"));
        }
        if !(self.nez_ratio > 0.0 && self.nez_ratio <= 1.0) {
            return Err(Error::config("constants.wez.nez_ratio", "must be in (0, 1]"));
        }
        for (name, v) in [
            ("tail_factor", self.tail_factor),
            ("alt_floor_factor", self.alt_floor_factor),
            ("speed_floor_factor", self.speed_floor_factor),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("constants.wez.{name}"), "must be in (0, 1]"));
            }
        }
        if !(self.alt_floor_m < self.alt_ceiling_m && self.speed_floor_kn < self.speed_ceiling_kn) {
            return Err(Error::config("constants.wez", "floor must be below ceiling"));
        }
        Ok(())
    }

    fn ramp(floor_factor: f64, lo: f64, hi: f64, x: f64) -> f64 {
        let u = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        floor_factor + (1.0 - floor_factor) * u
    }

    pub fn altitude_factor(&self, alt: f64) -> f64 {
        Self::ramp(self.alt_floor_factor, self.alt_floor_m, self.alt_ceiling_m, alt)
    }

    pub fn speed_factor(&self, speed_kn: f64) -> f64 {
        Self::ramp(self.speed_floor_factor, self.speed_floor_kn, self.speed_ceiling_kn, speed_kn)
    }

    /// 1 head-on (aspect 180), `tail_factor` tail-on (aspect 0). The blend is
    /// the squared half-cosine, so the envelope shrinks quickly off the nose.
    pub fn aspect_factor(&self, aspect: f64) -> f64 {
        let head_on = 0.5 * (1.0 - aspect.to_radians().cos());
        self.tail_factor + (1.0 - self.tail_factor) * head_on * head_on
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WezEstimate {
    pub r_max: f64,
    pub r_nez: f64,
    pub valid: bool,
}

impl WezEstimate {
    pub const SENTINEL: f64 = -1.0;

    pub fn invalid() -> Self {
        WezEstimate {
            r_max: Self::SENTINEL,
            r_nez: Self::SENTINEL,
            valid: false,
        }
    }

    /// `(r_max, r_nez)` with the -1 sentinel when the estimate is unavailable.
    pub fn feature_pair(&self) -> (f64, f64) {
        if self.valid {
            (self.r_max, self.r_nez)
        } else {
            (Self::SENTINEL, Self::SENTINEL)
        }
    }
}

/// Launch envelope of `shooter`'s missile against `target`. `target_detected`
/// is whether the party making the estimate holds the relevant track.
pub fn wez_estimate(
    shooter: &AircraftState,
    target: &AircraftState,
    target_detected: bool,
    params: &WezParams,
) -> WezEstimate {
    if !target_detected || !shooter.alive || !target.alive {
        return WezEstimate::invalid();
    }
    let r_max = params.r_base_m
        * params.altitude_factor(shooter.alt)
        * params.speed_factor(shooter.speed)
        * params.aspect_factor(aspect_deg(target, shooter));
    WezEstimate {
        r_max,
        r_nez: params.nez_ratio * r_max,
        valid: true,
    }
}

/// How deep `target` sits inside `own`'s WEZ: 0 at or beyond the maximum
/// range, 1 inside the NEZ, linear between.
pub fn offense_index(own: &AircraftState, target: &AircraftState, wez: &WezEstimate) -> f64 {
    depth_in_wez(range3(own, target), wez)
}

pub fn depth_in_wez(range: f64, wez: &WezEstimate) -> f64 {
    if !wez.valid || range >= wez.r_max {
        return 0.0;
    }
    if range <= wez.r_nez {
        return 1.0;
    }
    (wez.r_max - range) / (wez.r_max - wez.r_nez)
}

/// How deep `own` sits inside the threat's estimated WEZ.
pub fn vulnerability_index(
    own: &AircraftState,
    threat: &AircraftState,
    threat_detected: bool,
    params: &WezParams,
) -> f64 {
    let wez = wez_estimate(threat, own, threat_detected, params);
    offense_index(threat, own, &wez)
}
