//! Kinematic missile flyout: pure pursuit with a boost-sustain-coast speed
//! profile and an altitude-dependent quadratic drag during coast.

use serde::{Deserialize, Serialize};

use crate::sim::kinematics::AircraftState;
use crate::units::{G0, KT_TO_MS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissileParams {
    /// m/s^2 during boost.
    pub boost_accel: f64,
    pub boost_time_s: f64,
    pub sustain_time_s: f64,
    /// Coast drag coefficient at sea level (1/m): dv/dt = -k(h) v^2.
    pub drag_sea_level: f64,
    pub drag_scale_height_m: f64,
    pub max_lateral_g: f64,
    pub fuse_radius_m: f64,
    pub max_time_of_flight_s: f64,
}

impl Default for MissileParams {
    fn default() -> Self {
        MissileParams {
            boost_accel: 220.0,
            boost_time_s: 4.0,
            sustain_time_s: 6.0,
            drag_sea_level: 1.35e-4,
            drag_scale_height_m: 20_000.0,
            max_lateral_g: 30.0,
            fuse_radius_m: 500.0,
            max_time_of_flight_s: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissileState {
    pub id: u32,
    pub shooter: u32,
    pub target: u32,
    /// ENU metres, third component altitude.
    pub pos: [f64; 3],
    /// Unit velocity direction.
    pub dir: [f64; 3],
    /// m/s.
    pub speed: f64,
    pub time_of_flight: f64,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissReason {
    Energy,
    TimeOfFlight,
    TargetLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissileOutcome {
    InFlight,
    Hit,
    Miss(MissReason),
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

impl MissileState {
    /// Missile leaving the rail, pointed at the target.
    pub fn launch(id: u32, shooter: &AircraftState, target: &AircraftState) -> Self {
        let from = shooter.position3();
        let los = sub(target.position3(), from);
        let n = norm(los);
        let dir = if n > 0.0 {
            scale(los, 1.0 / n)
        } else {
            let (s, c) = shooter.heading.to_radians().sin_cos();
            [s, c, 0.0]
        };
        MissileState {
            id,
            shooter: shooter.id,
            target: target.id,
            pos: from,
            dir,
            speed: shooter.speed * KT_TO_MS,
            time_of_flight: 0.0,
            active: true,
        }
    }
}

/// Rotates unit vector `from` toward unit vector `to` by at most `max_angle` radians.
fn rotate_toward(from: [f64; 3], to: [f64; 3], max_angle: f64) -> [f64; 3] {
    let cos = dot(from, to).clamp(-1.0, 1.0);
    let angle = cos.acos();
    if angle <= max_angle || angle < 1e-12 {
        return to;
    }
    // component of `to` orthogonal to `from`
    let ortho = sub(to, scale(from, cos));
    let on = norm(ortho);
    if on < 1e-12 {
        return from;
    }
    let ortho = scale(ortho, 1.0 / on);
    let (s, c) = max_angle.sin_cos();
    let v = [
        from[0] * c + ortho[0] * s,
        from[1] * c + ortho[1] * s,
        from[2] * c + ortho[2] * s,
    ];
    scale(v, 1.0 / norm(v))
}

/// Advances one missile by `dt`. `target` is the target's state at the end of
/// the step; its start-of-step position is reconstructed from its velocity to
/// find the closest approach inside the step.
pub fn missile_step(
    m: &MissileState,
    target: &AircraftState,
    dt: f64,
    params: &MissileParams,
) -> (MissileState, MissileOutcome) {
    let mut next = m.clone();
    if !m.active {
        return (next, MissileOutcome::Miss(MissReason::TargetLost));
    }
    if !target.alive || target.id != m.target {
        next.active = false;
        return (next, MissileOutcome::Miss(MissReason::TargetLost));
    }

    let tof = m.time_of_flight;
    let speed = if tof < params.boost_time_s {
        m.speed + params.boost_accel * dt
    } else if tof < params.boost_time_s + params.sustain_time_s {
        m.speed
    } else {
        let k = params.drag_sea_level * (-m.pos[2].max(0.0) / params.drag_scale_height_m).exp();
        // exact solution of dv/dt = -k v^2 over the step
        m.speed / (1.0 + k * m.speed * dt)
    };

    let tgt_end = target.position3();
    let tv = target.velocity();
    let tgt_start = [tgt_end[0] - tv[0] * dt, tgt_end[1] - tv[1] * dt, tgt_end[2]];

    let los = sub(tgt_start, m.pos);
    let range = norm(los);
    let desired = if range > 0.0 { scale(los, 1.0 / range) } else { m.dir };
    let max_angle = params.max_lateral_g * G0 / speed.max(1.0) * dt;
    let dir = rotate_toward(m.dir, desired, max_angle);

    let mean_speed = 0.5 * (m.speed + speed);
    next.pos = [
        m.pos[0] + dir[0] * mean_speed * dt,
        m.pos[1] + dir[1] * mean_speed * dt,
        (m.pos[2] + dir[2] * mean_speed * dt).max(0.0),
    ];
    next.dir = dir;
    next.speed = speed;
    next.time_of_flight = tof + dt;

    // closest approach of the relative motion over the step
    let r0 = sub(m.pos, tgt_start);
    let r1 = sub(next.pos, tgt_end);
    let dr = sub(r1, r0);
    let dd = dot(dr, dr);
    let s = if dd > 0.0 { (-dot(r0, dr) / dd).clamp(0.0, 1.0) } else { 0.0 };
    let closest = norm([r0[0] + s * dr[0], r0[1] + s * dr[1], r0[2] + s * dr[2]]);
    let closing = dot(r0, dr) < 0.0;
    if closing && closest <= params.fuse_radius_m {
        next.active = false;
        return (next, MissileOutcome::Hit);
    }

    let target_speed = target.speed * KT_TO_MS;
    if tof >= params.boost_time_s && speed < target_speed {
        next.active = false;
        return (next, MissileOutcome::Miss(MissReason::Energy));
    }
    if next.time_of_flight >= params.max_time_of_flight_s {
        next.active = false;
        return (next, MissileOutcome::Miss(MissReason::TimeOfFlight));
    }
    (next, MissileOutcome::InFlight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::kinematics::{step_kinematics, KinematicLimits, ManeuverCommand};
    use crate::sim::scenario::{Side, SimConstants};
    use crate::sim::sensors::{wez_estimate, WezParams};

    fn ac(id: u32, side: Side, pos: [f64; 2], heading: f64, alt: f64, speed: f64) -> AircraftState {
        AircraftState {
            id,
            side,
            pos,
            alt,
            heading,
            speed,
            g_limit: 7.0,
            missiles_avail: 4,
            alive: true,
        }
    }

    /// Flies a non-maneuvering target and the missile until the missile resolves.
    fn flyout(shooter: &AircraftState, target: &AircraftState, dt: f64) -> MissileOutcome {
        let p = MissileParams::default();
        let limits = KinematicLimits::from(&SimConstants::default());
        let mut m = MissileState::launch(0, shooter, target);
        let mut tgt = target.clone();
        loop {
            tgt = step_kinematics(&tgt, &ManeuverCommand::default(), dt, &limits);
            let (next, outcome) = missile_step(&m, &tgt, dt, &p);
            if outcome != MissileOutcome::InFlight {
                return outcome;
            }
            m = next;
        }
    }

    fn geometry(frac: f64, target_heading: f64, alt: f64, speed: f64) -> (AircraftState, AircraftState) {
        let shooter = ac(0, Side::Blue, [0.0, 0.0], 0.0, alt, speed);
        let probe = ac(2, Side::Red, [0.0, 10_000.0], target_heading, alt, speed);
        let w = wez_estimate(&shooter, &probe, true, &WezParams::default());
        let target = ac(2, Side::Red, [0.0, frac * w.r_max], target_heading, alt, speed);
        (shooter, target)
    }

    #[test]
    fn head_on_inside_half_rmax_hits() {
        for (alt, speed) in [(3_000.0, 350.0), (8_000.0, 450.0), (13_000.0, 550.0)] {
            let (s, t) = geometry(0.5, 180.0, alt, speed);
            assert_eq!(flyout(&s, &t, 0.01), MissileOutcome::Hit, "alt {alt}");
            assert_eq!(flyout(&s, &t, 0.25), MissileOutcome::Hit, "alt {alt}");
        }
    }

    #[test]
    fn cold_target_beyond_rmax_escapes_on_energy() {
        for (alt, speed) in [(3_000.0, 350.0), (8_000.0, 450.0), (13_000.0, 550.0)] {
            let (s, t) = geometry(1.2, 0.0, alt, speed);
            assert_eq!(flyout(&s, &t, 0.01), MissileOutcome::Miss(MissReason::Energy), "alt {alt}");
            assert_eq!(flyout(&s, &t, 0.25), MissileOutcome::Miss(MissReason::Energy), "alt {alt}");
        }
    }

    #[test]
    fn dead_target_deactivates_missile() {
        let (s, mut t) = geometry(0.5, 180.0, 8_000.0, 450.0);
        let m = MissileState::launch(0, &s, &t);
        t.alive = false;
        let (next, outcome) = missile_step(&m, &t, 0.25, &MissileParams::default());
        assert!(!next.active);
        assert_eq!(outcome, MissileOutcome::Miss(MissReason::TargetLost));
    }

    #[test]
    fn fast_closure_does_not_tunnel_through_fuse() {
        // relative travel over the step (~1077 m) exceeds the fuse diameter:
        // both endpoints sit outside the fuse radius, the crossing does not
        let shooter = ac(0, Side::Blue, [0.0, 0.0], 0.0, 8_000.0, 450.0);
        let mut m = MissileState::launch(0, &shooter, &ac(2, Side::Red, [0.0, 1.0], 180.0, 8_000.0, 600.0));
        m.speed = 4_000.0;
        m.time_of_flight = 5.0;
        let target = ac(2, Side::Red, [0.0, 463.0], 180.0, 8_000.0, 600.0);
        let (next, outcome) = missile_step(&m, &target, 0.25, &MissileParams::default());
        assert!((next.pos[1] - 463.0).abs() > 500.0);
        assert_eq!(outcome, MissileOutcome::Hit);
    }
}
