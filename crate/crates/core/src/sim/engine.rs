//! Fixed-step 2-v-2 engine.
//!
//! Each tick: sense, decide (FSM), launch, log, then integrate aircraft and
//! missiles to the next tick. The run stops after 720 s or on the tick where
//! one side has no live aircraft left.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dca_index::dca_index;
use crate::error::Result;
use crate::sim::fsm::{fsm_step, AgentMemory, Contact, FsmState, Percepts};
use crate::sim::kinematics::{step_kinematics, AircraftState, KinematicLimits};
use crate::sim::log::{
    AgentRecord, Event, EventLog, HitEvent, LaunchEvent, MissEvent, TickRecord, TransitionEvent,
};
use crate::sim::missile::{missile_step, MissileOutcome, MissileState};
use crate::sim::scenario::{ScenarioConfig, Side};
use crate::sim::sensors::{
    bearing, radar_contacts, range3, vulnerability_index, wez_estimate, offense_index,
};
use crate::units::KT_TO_MS;

/// 3-D distance from an aircraft to a CAP point given as (east, north, altitude).
pub fn distance_to_cap(pos: [f64; 2], alt: f64, cap: [f64; 3]) -> f64 {
    let dx = pos[0] - cap[0];
    let dy = pos[1] - cap[1];
    let dz = alt - cap[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// DCA index of a blue agent from one tick's logged states.
pub fn index_for_record(log_scenario: &ScenarioConfig, tick: &TickRecord, agent: u32) -> Result<f64> {
    let setup = log_scenario
        .aircraft
        .iter()
        .find(|a| a.id == agent)
        .ok_or_else(|| crate::error::Error::invalid(format!("unknown agent {agent}")))?;
    let rec = tick
        .agent(agent)
        .ok_or_else(|| crate::error::Error::invalid(format!("agent {agent} missing from tick")))?;
    let cap = setup.config.cap_point;
    let enemies: Vec<f64> = tick
        .agents
        .iter()
        .filter(|a| a.side != setup.side && a.alive)
        .map(|a| distance_to_cap(a.pos, a.alt, cap))
        .collect();
    dca_index(
        rec.missiles_avail,
        log_scenario.constants.missiles_per_aircraft,
        distance_to_cap(rec.pos, rec.alt, cap),
        &enemies,
        &log_scenario.constants.index,
    )
}

fn missile_warning(own: &AircraftState, missiles: &[MissileState], range_m: f64) -> Option<f64> {
    let own_v = own.velocity();
    missiles
        .iter()
        .filter(|m| m.active && m.target == own.id)
        .filter_map(|m| {
            let r = [own.pos[0] - m.pos[0], own.pos[1] - m.pos[1], own.alt - m.pos[2]];
            let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            let rel = [
                m.dir[0] * m.speed - own_v[0],
                m.dir[1] * m.speed - own_v[1],
                m.dir[2] * m.speed,
            ];
            let closing = r[0] * rel[0] + r[1] * rel[1] + r[2] * rel[2] > 0.0;
            (dist <= range_m && closing).then_some((dist, m.id, [m.pos[0], m.pos[1]]))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, p)| bearing(own.pos, p))
}

pub fn run_simulation(config: &ScenarioConfig, seed: u64) -> Result<EventLog> {
    config.validate()?;
    let c = &config.constants;
    let limits = KinematicLimits::from(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut states: Vec<AircraftState> = config
        .aircraft
        .iter()
        .map(|s| AircraftState::from_setup(s, c))
        .collect();
    let mut memory: Vec<AgentMemory> = config
        .aircraft
        .iter()
        .map(|s| AgentMemory::new(s.altitude, rng.gen_bool(0.5)))
        .collect();
    let index_of = |id: u32, states: &[AircraftState]| states.iter().position(|s| s.id == id);

    let mut missiles: Vec<MissileState> = Vec::new();
    let mut next_missile = 0u32;
    let mut ticks = Vec::new();
    let mut events = Vec::new();
    let n_ticks = (c.duration_s / c.dt).round() as usize;

    for k in 0..n_ticks {
        let t = k as f64 * c.dt;

        let own_radar: Vec<Vec<u32>> = states
            .iter()
            .map(|s| {
                if s.alive {
                    radar_contacts(s, &states, c.radar_range_m, c.radar_gimbal_deg)
                } else {
                    Vec::new()
                }
            })
            .collect();
        let picture = |side: Side| -> Vec<u32> {
            let mut ids: Vec<u32> = states
                .iter()
                .zip(&own_radar)
                .filter(|(s, _)| s.side == side && s.alive)
                .flat_map(|(_, r)| r.iter().copied())
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };
        let pictures = [picture(Side::Blue), picture(Side::Red)];

        let mut decisions = Vec::with_capacity(states.len());
        let mut logged_indices = Vec::with_capacity(states.len());
        for i in 0..states.len() {
            let own = &states[i];
            if !own.alive {
                decisions.push(None);
                logged_indices.push((0.0, 0.0));
                continue;
            }
            let shared = &pictures[if own.side == Side::Blue { 0 } else { 1 }];
            let mut contacts: Vec<Contact> = shared
                .iter()
                .filter_map(|&id| index_of(id, &states))
                .map(|j| {
                    let other = &states[j];
                    let wez = wez_estimate(own, other, true, &c.wez);
                    Contact {
                        id: other.id,
                        range: range3(own, other),
                        bearing: bearing(own.pos, other.pos),
                        wez,
                        offense: offense_index(own, other, &wez),
                        vulnerability: vulnerability_index(own, other, own_radar[i].contains(&other.id), &c.wez),
                        missile_in_flight: missiles
                            .iter()
                            .any(|m| m.active && m.shooter == own.id && m.target == other.id),
                    }
                })
                .collect();
            contacts.sort_by(|a, b| a.range.total_cmp(&b.range).then(a.id.cmp(&b.id)));
            let percepts = Percepts {
                t,
                contacts,
                missile_warning: missile_warning(own, &missiles, c.missile_warning_range_m),
            };
            let decision = fsm_step(&mut memory[i], own, &percepts, &config.aircraft[i].config, c);

            let target_contact = match decision.state {
                FsmState::Commit => memory[i].target.and_then(|id| percepts.get(id)),
                _ => percepts.nearest(),
            };
            logged_indices.push((
                target_contact.map_or(0.0, |tc| tc.offense),
                percepts.priority_threat().map_or(0.0, |tc| tc.vulnerability),
            ));
            decisions.push(Some(decision));
        }

        for (i, d) in decisions.iter().enumerate() {
            let Some(d) = d else { continue };
            if let Some(tr) = d.transition {
                events.push(Event::Transition(TransitionEvent {
                    t,
                    agent: states[i].id,
                    from: tr.from,
                    to: tr.to,
                    target: tr.target,
                }));
            }
            if let Some(target_id) = d.launch {
                let Some(j) = index_of(target_id, &states) else { continue };
                if states[i].missiles_avail == 0 {
                    continue;
                }
                let m = MissileState::launch(next_missile, &states[i], &states[j]);
                events.push(Event::Launch(LaunchEvent {
                    t,
                    missile: next_missile,
                    shooter: states[i].id,
                    target: target_id,
                    range: range3(&states[i], &states[j]),
                }));
                next_missile += 1;
                states[i].missiles_avail -= 1;
                missiles.push(m);
            }
        }

        let mut tick = TickRecord {
            t,
            agents: states
                .iter()
                .enumerate()
                .map(|(i, s)| AgentRecord {
                    id: s.id,
                    side: s.side,
                    pos: s.pos,
                    alt: s.alt,
                    heading: s.heading,
                    speed: s.speed,
                    missiles_avail: s.missiles_avail,
                    alive: s.alive,
                    fsm: memory[i].state,
                    offense: logged_indices[i].0,
                    vulnerability: logged_indices[i].1,
                    dca: None,
                })
                .collect(),
        };
        for i in 0..states.len() {
            if states[i].side == Side::Blue && states[i].alive {
                tick.agents[i].dca = Some(index_for_record(config, &tick, states[i].id)?);
            }
        }
        ticks.push(tick);

        let side_down = |side: Side| !states.iter().any(|s| s.side == side && s.alive);
        if side_down(Side::Blue) || side_down(Side::Red) {
            break;
        }

        for (i, d) in decisions.iter().enumerate() {
            if let Some(d) = d {
                states[i] = step_kinematics(&states[i], &d.command, c.dt, &limits);
            }
        }
        let t_next = (k + 1) as f64 * c.dt;
        for m in missiles.iter_mut().filter(|m| m.active) {
            let Some(j) = index_of(m.target, &states) else {
                m.active = false;
                continue;
            };
            let (next, outcome) = missile_step(m, &states[j], c.dt, &c.missile);
            *m = next;
            match outcome {
                MissileOutcome::InFlight => {}
                MissileOutcome::Hit => {
                    states[j].alive = false;
                    events.push(Event::Hit(HitEvent {
                        t: t_next,
                        missile: m.id,
                        shooter: m.shooter,
                        target: m.target,
                    }));
                }
                MissileOutcome::Miss(reason) => events.push(Event::Miss(MissEvent {
                    t: t_next,
                    missile: m.id,
                    shooter: m.shooter,
                    target: m.target,
                    reason,
                })),
            }
        }
    }

    Ok(EventLog {
        seed,
        scenario: config.clone(),
        ticks,
        events,
    })
}

/// Consistency audit of a finished log: fixed step, FSM episode structure,
/// missile conservation, kinematic limits and index recomputation.
pub fn audit_log(log: &EventLog, index_tol: f64) -> std::result::Result<(), String> {
    let c = &log.scenario.constants;
    let total = c.missiles_per_aircraft;
    let n_agents = log.scenario.aircraft.len();
    let mut launched = vec![0u32; n_agents];
    let mut launches = log.launches().peekable();

    for (k, tick) in log.ticks.iter().enumerate() {
        if (tick.t - k as f64 * c.dt).abs() > 1e-9 {
            return Err(format!("tick {k} at t={} off the fixed step", tick.t));
        }
        if tick.agents.len() != n_agents {
            return Err(format!("tick {k}: expected {n_agents} agents"));
        }
        for (i, a) in tick.agents.iter().enumerate() {
            if a.id != log.scenario.aircraft[i].id {
                return Err(format!("tick {k}: agent order changed"));
            }
        }
        while let Some(l) = launches.next_if(|l| l.t <= tick.t) {
            let i = log
                .scenario
                .aircraft
                .iter()
                .position(|a| a.id == l.shooter)
                .ok_or_else(|| format!("launch by unknown shooter {}", l.shooter))?;
            launched[i] += 1;
        }
        for (i, a) in tick.agents.iter().enumerate() {
            if launched[i] > total || a.missiles_avail + launched[i] != total {
                return Err(format!(
                    "t={}: agent {} has {} available after {} launches",
                    tick.t, a.id, a.missiles_avail, launched[i]
                ));
            }
            match (a.side, a.alive, a.dca) {
                (Side::Blue, true, Some(v)) => {
                    let again = index_for_record(&log.scenario, tick, a.id).map_err(|e| e.to_string())?;
                    if (again - v).abs() > index_tol {
                        return Err(format!("t={}: agent {} index {v} recomputes to {again}", tick.t, a.id));
                    }
                    if !(v > 0.0 && v < 1.0) {
                        return Err(format!("t={}: index {v} outside (0, 1)", tick.t));
                    }
                }
                (Side::Blue, true, None) => return Err(format!("t={}: live blue agent {} lacks index", tick.t, a.id)),
                (_, _, Some(_)) if a.side == Side::Red || !a.alive => {
                    return Err(format!("t={}: unexpected index on agent {}", tick.t, a.id))
                }
                _ => {}
            }
            if !(0.0..=1.0).contains(&a.offense) || !(0.0..=1.0).contains(&a.vulnerability) {
                return Err(format!("t={}: agent {} indices out of [0, 1]", tick.t, a.id));
            }
        }
        if k > 0 {
            let prev = &log.ticks[k - 1];
            for (p, a) in prev.agents.iter().zip(&tick.agents) {
                if !p.alive {
                    continue;
                }
                let eps = 1e-9;
                if (a.speed - p.speed).abs() > c.max_accel_kn_s * c.dt + eps {
                    return Err(format!("t={}: agent {} speed jump", tick.t, a.id));
                }
                if a.speed < c.min_speed_kn - eps || a.speed > c.max_speed_kn + eps {
                    return Err(format!("t={}: agent {} speed out of envelope", tick.t, a.id));
                }
                if (a.alt - p.alt).abs() > c.max_climb_ms * c.dt + eps {
                    return Err(format!("t={}: agent {} climb rate exceeded", tick.t, a.id));
                }
                let probe = AircraftState {
                    id: p.id,
                    side: p.side,
                    pos: p.pos,
                    alt: p.alt,
                    heading: p.heading,
                    speed: p.speed,
                    g_limit: c.g_limit,
                    missiles_avail: 0,
                    alive: true,
                };
                let max_turn = crate::sim::kinematics::max_turn_rate(&probe);
                let dh = crate::units::wrap_180(a.heading - p.heading).abs();
                if dh > max_turn * c.dt + 1e-6 {
                    return Err(format!("t={}: agent {} turn rate exceeded", tick.t, a.id));
                }
                let step = (a.pos[0] - p.pos[0]).hypot(a.pos[1] - p.pos[1]);
                if step > c.max_speed_kn * KT_TO_MS * c.dt + 1e-6 {
                    return Err(format!("t={}: agent {} moved too far", tick.t, a.id));
                }
            }
        }
    }

    // logged FSM states agree with the transition stream, and every COMMIT
    // ends in BREAK or ABORT (death and end of run close it implicitly)
    for (i, setup) in log.scenario.aircraft.iter().enumerate() {
        let mut state = FsmState::Cap;
        let mut trans = log.transitions().filter(|e| e.agent == setup.id).peekable();
        for tick in &log.ticks {
            while let Some(e) = trans.next_if(|e| e.t <= tick.t) {
                if e.from != state {
                    return Err(format!("t={}: agent {} transition from {:?} while in {:?}", e.t, setup.id, e.from, state));
                }
                if state == FsmState::Commit && !matches!(e.to, FsmState::Break | FsmState::Abort) {
                    return Err(format!("t={}: agent {} left COMMIT for {:?}", e.t, setup.id, e.to));
                }
                state = e.to;
            }
            let rec = &tick.agents[i];
            if rec.alive && rec.fsm != state {
                return Err(format!("t={}: agent {} logged {:?}, transitions say {:?}", tick.t, setup.id, rec.fsm, state));
            }
        }
    }
    Ok(())
}
