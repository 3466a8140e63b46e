use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dca_index::DcaIndexParams;
use crate::error::{Error, Result};
use crate::sim::missile::MissileParams;
use crate::sim::sensors::WezParams;
use crate::units::NM_TO_M;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Blue,
    Red,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Blue => "blue",
            Side::Red => "red",
        }
    }

    pub fn opponent(self) -> Side {
        match self {
            Side::Blue => Side::Red,
            Side::Red => Side::Blue,
        }
    }
}

/// Where inside the WEZ, between the maximum range and the no-escape range,
/// the shooter plans to launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShotPhilosophy {
    #[serde(rename = "MAX_RANGE")]
    MaxRange,
    #[serde(rename = "MIDPOINT")]
    Midpoint,
    #[serde(rename = "NEZ")]
    Nez,
}

impl ShotPhilosophy {
    pub const ALL: [ShotPhilosophy; 3] = [Self::MaxRange, Self::Midpoint, Self::Nez];
    pub const NAMES: [&'static str; 3] = ["MAX_RANGE", "MIDPOINT", "NEZ"];

    pub fn as_str(self) -> &'static str {
        Self::NAMES[self.ordinal()]
    }

    pub fn ordinal(self) -> usize {
        match self {
            Self::MaxRange => 0,
            Self::Midpoint => 1,
            Self::Nez => 2,
        }
    }

    /// Band of the normalized WEZ depth (0 = NEZ, 1 = maximum range) that the
    /// sampled shot point is mapped into.
    pub fn band(self) -> (f64, f64) {
        match self {
            Self::MaxRange => (2.0 / 3.0, 1.0),
            Self::Midpoint => (1.0 / 3.0, 2.0 / 3.0),
            Self::Nez => (0.0, 1.0 / 3.0),
        }
    }
}

impl fmt::Display for ShotPhilosophy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShotPhilosophy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownCategory {
                field: "shot_philosophy".into(),
                value: s.into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Range (m) to a detected opponent at which the agent leaves CAP.
    pub commit_distance: f64,
    pub vul_thr_bef_shot: f64,
    pub vul_thr_aft_shot: f64,
    pub shot_point: f64,
    pub shot_philosophy: ShotPhilosophy,
    pub rwr_present: bool,
    /// ENU metres; the third component is the orbit altitude.
    pub cap_point: [f64; 3],
    pub cap_orbit_radius: f64,
}

impl AgentConfig {
    /// Normalized WEZ depth at which to launch.
    pub fn effective_shot_point(&self) -> f64 {
        let (lo, hi) = self.shot_philosophy.band();
        lo + self.shot_point * (hi - lo)
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("vul_thr_bef_shot", self.vul_thr_bef_shot),
            ("vul_thr_aft_shot", self.vul_thr_aft_shot),
            ("shot_point", self.shot_point),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{prefix}.{name}"), format!("{v} outside [0, 1]")));
            }
        }
        if !(self.commit_distance > 0.0 && self.commit_distance.is_finite()) {
            return Err(Error::config(format!("{prefix}.commit_distance"), "must be > 0"));
        }
        if !(self.cap_orbit_radius > 0.0) {
            return Err(Error::config(format!("{prefix}.cap_orbit_radius"), "must be > 0"));
        }
        if self.cap_point.iter().any(|c| !c.is_finite()) {
            return Err(Error::config(format!("{prefix}.cap_point"), "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftSetup {
    pub id: u32,
    pub side: Side,
    /// ENU metres (east, north).
    pub position: [f64; 2],
    /// Metres.
    pub altitude: f64,
    /// Degrees true.
    pub heading: f64,
    /// Knots.
    pub speed: f64,
    pub config: AgentConfig,
}

/// Engine constants. Everything tunable about the platform, sensors and
/// weapon lives here so a scenario file fully describes a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConstants {
    pub dt: f64,
    pub duration_s: f64,
    pub radar_range_m: f64,
    pub radar_gimbal_deg: f64,
    pub missile_warning_range_m: f64,
    pub recovery_hold_s: f64,
    pub missiles_per_aircraft: u32,
    pub g_limit: f64,
    pub min_speed_kn: f64,
    pub max_speed_kn: f64,
    pub min_altitude_m: f64,
    pub max_altitude_m: f64,
    pub max_accel_kn_s: f64,
    pub max_climb_ms: f64,
    pub cruise_speed_kn: f64,
    pub commit_speed_kn: f64,
    pub escape_speed_kn: f64,
    pub index: DcaIndexParams,
    pub wez: WezParams,
    pub missile: MissileParams,
}

impl Default for SimConstants {
    fn default() -> Self {
        SimConstants {
            dt: 0.25,
            duration_s: 720.0,
            radar_range_m: 60.0 * NM_TO_M,
            radar_gimbal_deg: 60.0,
            missile_warning_range_m: 15_000.0,
            recovery_hold_s: 20.0,
            missiles_per_aircraft: 4,
            g_limit: 7.0,
            min_speed_kn: 150.0,
            max_speed_kn: 600.0,
            min_altitude_m: 1_000.0,
            max_altitude_m: 15_000.0,
            max_accel_kn_s: 6.0,
            max_climb_ms: 100.0,
            cruise_speed_kn: 420.0,
            commit_speed_kn: 500.0,
            escape_speed_kn: 580.0,
            index: DcaIndexParams::default(),
            wez: WezParams::default(),
            missile: MissileParams::default(),
        }
    }
}

impl SimConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("duration_s", self.duration_s),
            ("radar_range_m", self.radar_range_m),
            ("radar_gimbal_deg", self.radar_gimbal_deg),
            ("g_limit", self.g_limit),
            ("max_accel_kn_s", self.max_accel_kn_s),
            ("max_climb_ms", self.max_climb_ms),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("constants.{name}"), "must be > 0"));
            }
        }
        if self.g_limit <= 1.0 {
            return Err(Error::config("constants.g_limit", "must exceed 1 g"));
        }
        if self.missiles_per_aircraft == 0 {
            return Err(Error::config("constants.missiles_per_aircraft", "must be >= 1"));
        }
        if !(self.min_speed_kn < self.max_speed_kn) {
            return Err(Error::config("constants.min_speed_kn", "must be below max_speed_kn"));
        }
        if !(self.min_altitude_m < self.max_altitude_m) {
            return Err(Error::config("constants.min_altitude_m", "must be below max_altitude_m"));
        }
        self.index.validate()?;
        self.wez.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: u64,
    pub aircraft: Vec<AircraftSetup>,
    pub constants: SimConstants,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let c = &self.constants;
        if self.aircraft.is_empty() {
            return Err(Error::config("aircraft", "scenario has no aircraft"));
        }
        for side in [Side::Blue, Side::Red] {
            if !self.aircraft.iter().any(|a| a.side == side) {
                return Err(Error::config("aircraft", format!("no {side:?} aircraft")));
            }
        }
        for (i, a) in self.aircraft.iter().enumerate() {
            let prefix = format!("aircraft[{i}]");
            if self.aircraft[..i].iter().any(|o| o.id == a.id) {
                return Err(Error::config(format!("{prefix}.id"), "duplicate aircraft id"));
            }
            if !(c.min_speed_kn..=c.max_speed_kn).contains(&a.speed) {
                return Err(Error::config(format!("{prefix}.speed"), format!("{} kn out of range", a.speed)));
            }
            if !(c.min_altitude_m..=c.max_altitude_m).contains(&a.altitude) {
                return Err(Error::config(
                    format!("{prefix}.altitude"),
                    format!("{} m out of range", a.altitude),
                ));
            }
            if !a.heading.is_finite() || a.position.iter().any(|p| !p.is_finite()) {
                return Err(Error::config(format!("{prefix}.position"), "must be finite"));
            }
            a.config.validate(&format!("{prefix}.config"))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fixed parts of a sampled scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub cap_point: [f64; 2],
    pub cap_orbit_radius_m: f64,
    pub wingman_spacing_m: f64,
    pub initial_speed_kn: f64,
    pub constants: SimConstants,
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        ScenarioTemplate {
            cap_point: [0.0, 0.0],
            cap_orbit_radius_m: 5_000.0,
            wingman_spacing_m: 1.5 * NM_TO_M,
            initial_speed_kn: 420.0,
            constants: SimConstants::default(),
        }
    }
}
