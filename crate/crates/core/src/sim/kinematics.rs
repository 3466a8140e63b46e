//! Three-degree-of-freedom point-mass aircraft.

use serde::{Deserialize, Serialize};

use crate::sim::scenario::{AircraftSetup, Side, SimConstants};
use crate::units::{wrap_360, G0, KT_TO_MS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub id: u32,
    pub side: Side,
    /// ENU metres (east, north).
    pub pos: [f64; 2],
    /// Metres.
    pub alt: f64,
    /// Degrees true, [0, 360).
    pub heading: f64,
    /// Knots.
    pub speed: f64,
    pub g_limit: f64,
    pub missiles_avail: u32,
    pub alive: bool,
}

impl AircraftState {
    pub fn from_setup(setup: &AircraftSetup, constants: &SimConstants) -> Self {
        AircraftState {
            id: setup.id,
            side: setup.side,
            pos: setup.position,
            alt: setup.altitude,
            heading: wrap_360(setup.heading),
            speed: setup.speed,
            g_limit: constants.g_limit,
            missiles_avail: constants.missiles_per_aircraft,
            alive: true,
        }
    }

    pub fn position3(&self) -> [f64; 3] {
        [self.pos[0], self.pos[1], self.alt]
    }

    /// Ground velocity in m/s (east, north).
    pub fn velocity(&self) -> [f64; 2] {
        let (s, c) = self.heading.to_radians().sin_cos();
        let v = self.speed * KT_TO_MS;
        [v * s, v * c]
    }
}

/// Rates requested by the tactics layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ManeuverCommand {
    /// Degrees per second, positive clockwise.
    pub turn_rate: f64,
    /// Knots per second.
    pub accel: f64,
    /// Metres per second.
    pub climb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicLimits {
    pub min_speed_kn: f64,
    pub max_speed_kn: f64,
    pub min_altitude_m: f64,
    pub max_altitude_m: f64,
    pub max_accel_kn_s: f64,
    pub max_climb_ms: f64,
}

impl From<&SimConstants> for KinematicLimits {
    fn from(c: &SimConstants) -> Self {
        KinematicLimits {
            min_speed_kn: c.min_speed_kn,
            max_speed_kn: c.max_speed_kn,
            min_altitude_m: c.min_altitude_m,
            max_altitude_m: c.max_altitude_m,
            max_accel_kn_s: c.max_accel_kn_s,
            max_climb_ms: c.max_climb_ms,
        }
    }
}

/// Sustained level-turn rate (deg/s) at the load-factor limit.
pub fn max_turn_rate(state: &AircraftState) -> f64 {
    let v = state.speed * KT_TO_MS;
    let lateral = G0 * (state.g_limit * state.g_limit - 1.0).max(0.0).sqrt();
    (lateral / v).to_degrees()
}

/// Advances one aircraft by `dt` seconds. Commands beyond the platform limits
/// are clamped.
pub fn step_kinematics(
    state: &AircraftState,
    cmd: &ManeuverCommand,
    dt: f64,
    limits: &KinematicLimits,
) -> AircraftState {
    let max_turn = max_turn_rate(state);
    let turn = cmd.turn_rate.clamp(-max_turn, max_turn);
    let accel = cmd.accel.clamp(-limits.max_accel_kn_s, limits.max_accel_kn_s);
    let climb = cmd.climb.clamp(-limits.max_climb_ms, limits.max_climb_ms);

    let speed = (state.speed + accel * dt).clamp(limits.min_speed_kn, limits.max_speed_kn);
    let mean_heading = state.heading + 0.5 * turn * dt;
    let mean_speed = 0.5 * (state.speed + speed) * KT_TO_MS;
    let (s, c) = mean_heading.to_radians().sin_cos();

    let mut next = state.clone();
    next.pos = [state.pos[0] + mean_speed * dt * s, state.pos[1] + mean_speed * dt * c];
    next.alt = (state.alt + climb * dt).clamp(limits.min_altitude_m, limits.max_altitude_m);
    next.heading = wrap_360(state.heading + turn * dt);
    next.speed = speed;
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> AircraftState {
        AircraftState {
            id: 0,
            side: Side::Blue,
            pos: [0.0, 0.0],
            alt: 8_000.0,
            heading: 30.0,
            speed: 400.0,
            g_limit: 7.0,
            missiles_avail: 4,
            alive: true,
        }
    }

    fn limits() -> KinematicLimits {
        KinematicLimits::from(&SimConstants::default())
    }

    #[test]
    fn straight_and_level_displacement() {
        let next = step_kinematics(&state(), &ManeuverCommand::default(), 1.0, &limits());
        let d = next.pos[0].hypot(next.pos[1]);
        // 400 kn = 400 * 1852 / 3600 m/s
        assert!((d - 205.78).abs() < 0.01, "{d}");
        let bearing = next.pos[0].atan2(next.pos[1]).to_degrees();
        assert!((bearing - 30.0).abs() < 1e-9);
        assert_eq!(next.alt, 8_000.0);
    }

    #[test]
    fn turn_rate_is_clamped() {
        let s = state();
        let max = max_turn_rate(&s);
        let cmd = ManeuverCommand { turn_rate: 90.0, ..Default::default() };
        let next = step_kinematics(&s, &cmd, 1.0, &limits());
        assert!((next.heading - (30.0 + max)).abs() < 1e-9);
        let cmd = ManeuverCommand { turn_rate: -2.0, ..Default::default() };
        let next = step_kinematics(&s, &cmd, 1.0, &limits());
        assert!((next.heading - 28.0).abs() < 1e-9);
    }

    #[test]
    fn climb_at_ceiling_holds_altitude() {
        let mut s = state();
        s.alt = 15_000.0;
        let cmd = ManeuverCommand { climb: 50.0, ..Default::default() };
        let next = step_kinematics(&s, &cmd, 1.0, &limits());
        assert_eq!(next.alt, 15_000.0);
    }

    #[test]
    fn speed_stays_in_envelope() {
        let mut s = state();
        s.speed = 595.0;
        let cmd = ManeuverCommand { accel: 100.0, ..Default::default() };
        let next = step_kinematics(&s, &cmd, 1.0, &limits());
        assert_eq!(next.speed, 600.0);
        let cmd = ManeuverCommand { accel: -1000.0, ..Default::default() };
        let next = step_kinematics(&s, &cmd, 1.0, &limits());
        assert!((next.speed - (595.0 - limits().max_accel_kn_s)).abs() < 1e-12);
    }

    #[test]
    fn heading_wraps() {
        let mut s = state();
        s.heading = 359.0;
        let cmd = ManeuverCommand { turn_rate: 4.0, ..Default::default() };
        let next = step_kinematics(&s, &cmd, 0.5, &limits());
        assert!((next.heading - 1.0).abs() < 1e-9);
    }
}
