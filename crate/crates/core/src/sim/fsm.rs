//! Tactics state machine: CAP, COMMIT, ABORT and BREAK.
//!
//! - CAP -> COMMIT when a contact in the shared picture is inside the commit
//!   distance.
//! - COMMIT -> ABORT when the priority threat's vulnerability index reaches
//!   the active risk threshold (before/after own first launch of the commit),
//!   or when the picture empties.
//! - any -> BREAK on a missile warning (RWR-equipped aircraft only).
//! - ABORT/BREAK -> CAP once the triggering condition has stayed clear for
//!   the recovery hold time.

use serde::{Deserialize, Serialize};

use crate::sim::kinematics::{AircraftState, ManeuverCommand};
use crate::sim::scenario::{AgentConfig, SimConstants};
use crate::sim::sensors::{bearing, WezEstimate};
use crate::units::wrap_180;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FsmState {
    Cap,
    Commit,
    Abort,
    Break,
}

impl FsmState {
    pub fn as_str(self) -> &'static str {
        match self {
            FsmState::Cap => "CAP",
            FsmState::Commit => "COMMIT",
            FsmState::Abort => "ABORT",
            FsmState::Break => "BREAK",
        }
    }
}

/// One opponent in the agent's shared picture.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub id: u32,
    pub range: f64,
    pub bearing: f64,
    /// Own weapon against this contact.
    pub wez: WezEstimate,
    pub offense: f64,
    /// Own ship inside this contact's estimated weapon envelope.
    pub vulnerability: f64,
    /// An own missile is already flying at this contact.
    pub missile_in_flight: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Percepts {
    pub t: f64,
    /// Shared picture, nearest first.
    pub contacts: Vec<Contact>,
    /// Bearing to the nearest inbound missile when the RWR is warning.
    pub missile_warning: Option<f64>,
}

impl Percepts {
    pub fn nearest(&self) -> Option<&Contact> {
        self.contacts.first()
    }

    pub fn get(&self, id: u32) -> Option<&Contact> {
        self.contacts.iter().find(|c| c.id == id)
    }

    /// Contact with the highest vulnerability index, nearest on ties.
    pub fn priority_threat(&self) -> Option<&Contact> {
        self.contacts
            .iter()
            .fold(None, |best: Option<&Contact>, c| match best {
                Some(b) if b.vulnerability >= c.vulnerability => Some(b),
                _ => Some(c),
            })
    }
}

/// Per-agent tactical memory carried between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMemory {
    pub state: FsmState,
    pub target: Option<u32>,
    /// Launched at least once during the current commit.
    pub launched: bool,
    /// Time since which the ABORT/BREAK trigger has been clear.
    pub clear_since: Option<f64>,
    pub orbit_clockwise: bool,
    pub assigned_alt: f64,
}

impl AgentMemory {
    pub fn new(assigned_alt: f64, orbit_clockwise: bool) -> Self {
        AgentMemory {
            state: FsmState::Cap,
            target: None,
            launched: false,
            clear_since: None,
            orbit_clockwise,
            assigned_alt,
        }
    }

    fn active_threshold(&self, config: &AgentConfig) -> f64 {
        if self.launched {
            config.vul_thr_aft_shot
        } else {
            config.vul_thr_bef_shot
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: FsmState,
    pub to: FsmState,
    pub target: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsmDecision {
    pub state: FsmState,
    pub command: ManeuverCommand,
    /// Target id of a missile to launch this tick.
    pub launch: Option<u32>,
    pub transition: Option<Transition>,
}

fn steer(own: &AircraftState, desired_heading: f64) -> f64 {
    2.0 * wrap_180(desired_heading - own.heading)
}

fn hold(current: f64, wanted: f64, gain: f64) -> f64 {
    gain * (wanted - current)
}

fn threat_triggered(threat: Option<&Contact>, threshold: f64) -> bool {
    threat.is_some_and(|c| c.vulnerability > 0.0 && c.vulnerability >= threshold)
}

fn recovered(mem: &mut AgentMemory, t: f64, clear: bool, hold_s: f64) -> bool {
    if !clear {
        mem.clear_since = None;
        return false;
    }
    let since = *mem.clear_since.get_or_insert(t);
    t - since >= hold_s
}

/// Heading that flies to the CAP point and then orbits it at the configured radius.
fn cap_heading(own: &AircraftState, config: &AgentConfig, clockwise: bool) -> f64 {
    let cap = [config.cap_point[0], config.cap_point[1]];
    let dx = cap[0] - own.pos[0];
    let dy = cap[1] - own.pos[1];
    let r = dx.hypot(dy);
    let to_cap = bearing(own.pos, cap);
    let radius = config.cap_orbit_radius;
    // 0 on the circle, up to 90 (direct) when far outside, -45 when inside
    let correction = (90.0 * (r - radius) / radius).clamp(-45.0, 90.0);
    if clockwise {
        to_cap - 90.0 + correction
    } else {
        to_cap + 90.0 - correction
    }
}

pub fn fsm_step(
    mem: &mut AgentMemory,
    own: &AircraftState,
    percepts: &Percepts,
    config: &AgentConfig,
    constants: &SimConstants,
) -> FsmDecision {
    let from = mem.state;
    let t = percepts.t;
    let warning = if config.rwr_present { percepts.missile_warning } else { None };
    let mut launch = None;

    let next = if warning.is_some() {
        mem.clear_since = None;
        FsmState::Break
    } else {
        match from {
            FsmState::Cap => match percepts.nearest() {
                Some(c) if c.range <= config.commit_distance => {
                    mem.target = Some(c.id);
                    mem.launched = false;
                    FsmState::Commit
                }
                _ => FsmState::Cap,
            },
            FsmState::Commit => {
                if mem.target.and_then(|id| percepts.get(id)).is_none() {
                    mem.target = percepts.nearest().map(|c| c.id);
                }
                let threshold = mem.active_threshold(config);
                if percepts.contacts.is_empty() || threat_triggered(percepts.priority_threat(), threshold) {
                    mem.clear_since = None;
                    FsmState::Abort
                } else {
                    let target = mem.target.and_then(|id| percepts.get(id));
                    if let Some(c) = target {
                        let launch_range = c.wez.r_nez + config.effective_shot_point() * (c.wez.r_max - c.wez.r_nez);
                        if c.wez.valid && own.missiles_avail > 0 && !c.missile_in_flight && c.range <= launch_range {
                            launch = Some(c.id);
                            mem.launched = true;
                        }
                    }
                    FsmState::Commit
                }
            }
            FsmState::Abort => {
                let threshold = mem.active_threshold(config);
                let clear = !threat_triggered(percepts.priority_threat(), threshold);
                if recovered(mem, t, clear, constants.recovery_hold_s) {
                    FsmState::Cap
                } else {
                    FsmState::Abort
                }
            }
            FsmState::Break => {
                if recovered(mem, t, true, constants.recovery_hold_s) {
                    FsmState::Cap
                } else {
                    FsmState::Break
                }
            }
        }
    };

    if next == FsmState::Cap && from != FsmState::Cap {
        mem.target = None;
        mem.clear_since = None;
    }
    mem.state = next;

    let climb_hold = hold(own.alt, mem.assigned_alt, 0.2);
    let command = match next {
        FsmState::Cap => ManeuverCommand {
            turn_rate: steer(own, cap_heading(own, config, mem.orbit_clockwise)),
            accel: hold(own.speed, constants.cruise_speed_kn, 0.5),
            climb: climb_hold,
        },
        FsmState::Commit => {
            let heading = mem
                .target
                .and_then(|id| percepts.get(id))
                .map_or(own.heading, |c| c.bearing);
            ManeuverCommand {
                turn_rate: steer(own, heading),
                accel: hold(own.speed, constants.commit_speed_kn, 0.5),
                climb: climb_hold,
            }
        }
        FsmState::Abort => {
            let heading = percepts
                .priority_threat()
                .map_or(own.heading, |c| c.bearing + 180.0);
            ManeuverCommand {
                turn_rate: steer(own, heading),
                accel: hold(own.speed, constants.escape_speed_kn, 0.5),
                climb: climb_hold,
            }
        }
        FsmState::Break => {
            // hard turn to put the missile astern, dive, full acceleration
            let away = warning.map_or(own.heading, |b| b + 180.0);
            let err = wrap_180(away - own.heading);
            let dir = if err >= 0.0 { 1.0 } else { -1.0 };
            ManeuverCommand {
                turn_rate: if err.abs() < 1.0 { steer(own, away) } else { dir * 1_000.0 },
                accel: constants.max_accel_kn_s,
                climb: -constants.max_climb_ms,
            }
        }
    };

    let transition = (next != from).then_some(Transition {
        from,
        to: next,
        target: mem.target,
    });
    FsmDecision {
        state: next,
        command,
        launch,
        transition,
    }
}
