//! Engagement extraction, feature snapshots and the encoded training matrix.
//!
//! An engagement runs from a blue agent's COMMIT transition to the next BREAK
//! or ABORT. Features describe the tick just before the commit; the target is
//! the mean DCA index over the engagement window.

mod encode;
mod features;
mod stats;

pub use encode::{encode, encode_features, encoded_columns, split, split_indices, EncodedMatrix, ENCODED_WIDTH};
pub use features::{FeatureVector, FieldError, FEATURE_NAMES};
pub use stats::{histogram_modes, DatasetStats, Histogram};

use serde::{Deserialize, Serialize};

use crate::dca_index::{engagement_target, IndexSample};
use crate::error::{Error, Result};
use crate::sim::fsm::FsmState;
use crate::sim::log::{EventLog, TickRecord};
use crate::sim::scenario::Side;
use crate::sim::sensors::{
    aspect_deg, delta_heading_deg, merged_picture, radar_detects, range3, wez_estimate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminalKind {
    Break,
    Abort,
    /// Cut short by the end of the run or the agent's loss; the mean index is
    /// right-censored.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementRecord {
    pub scenario_id: u64,
    pub agent_id: u32,
    /// 1 for the agent's first commit in the run.
    pub ordinal: u32,
    pub t_start: f64,
    pub t_end: f64,
    pub target_id: u32,
    pub features: FeatureVector,
    pub target: f64,
    pub terminal_kind: TerminalKind,
}

/// Which engagements feed a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractFilter {
    pub first_episode_only: bool,
    pub include_truncated: bool,
}

impl Default for ExtractFilter {
    fn default() -> Self {
        ExtractFilter {
            first_episode_only: false,
            include_truncated: false,
        }
    }
}

impl ExtractFilter {
    pub fn accepts(&self, r: &EngagementRecord) -> bool {
        (!self.first_episode_only || r.ordinal == 1)
            && (self.include_truncated || r.terminal_kind != TerminalKind::Truncated)
    }
}

fn tick_index(log: &EventLog, t: f64) -> Result<usize> {
    let dt = log.scenario.constants.dt;
    let k = (t / dt).round();
    if k < 0.0 || (k * dt - t).abs() > 1e-9 || k as usize >= log.ticks.len() {
        return Err(Error::invalid(format!("no tick at t={t}")));
    }
    Ok(k as usize)
}

/// Every COMMIT episode of every blue agent, ordered by agent then time.
pub fn extract_engagements(log: &EventLog) -> Result<Vec<EngagementRecord>> {
    let mut out = Vec::new();
    let blue: Vec<u32> = log
        .scenario
        .aircraft
        .iter()
        .filter(|a| a.side == Side::Blue)
        .map(|a| a.id)
        .collect();
    let Some(last_tick) = log.ticks.last() else {
        return Ok(out);
    };

    for agent in blue {
        let mut open: Option<(f64, Option<u32>)> = None;
        let mut ordinal = 0;
        let mut closed = Vec::new();
        for tr in log.transitions().filter(|tr| tr.agent == agent) {
            if tr.to == FsmState::Commit {
                open = Some((tr.t, tr.target));
            } else if tr.from == FsmState::Commit {
                let (t0, target) = open
                    .take()
                    .ok_or_else(|| Error::invalid(format!("agent {agent} leaves COMMIT at t={} without entering it", tr.t)))?;
                let kind = match tr.to {
                    FsmState::Break => TerminalKind::Break,
                    FsmState::Abort => TerminalKind::Abort,
                    other => {
                        return Err(Error::invalid(format!(
                            "agent {agent} leaves COMMIT for {} at t={}",
                            other.as_str(),
                            tr.t
                        )))
                    }
                };
                closed.push((t0, tr.t, target, kind));
            }
        }
        if let Some((t0, target)) = open {
            // Runs to the last tick the agent was alive.
            let t_end = log
                .ticks
                .iter()
                .rev()
                .find(|tick| tick.agent(agent).is_some_and(|a| a.alive))
                .map_or(last_tick.t, |tick| tick.t);
            closed.push((t0, t_end, target, TerminalKind::Truncated));
        }

        for (t0, t1, target, kind) in closed {
            ordinal += 1;
            if !(t1 > t0) {
                continue;
            }
            let (features, target_id) = snapshot_features_with_target(log, agent, t0, target)?;
            let k0 = tick_index(log, t0)?;
            let k1 = tick_index(log, t1)?;
            let series: Vec<IndexSample> = log.ticks[k0..=k1]
                .iter()
                .filter_map(|tick| {
                    tick.agent(agent)
                        .and_then(|a| a.dca)
                        .map(|value| IndexSample { t: tick.t, value })
                })
                .collect();
            let target_value = engagement_target(&series)?;
            out.push(EngagementRecord {
                scenario_id: log.scenario_id(),
                agent_id: agent,
                ordinal,
                t_start: t0,
                t_end: t1,
                target_id,
                features,
                target: target_value,
                terminal_kind: kind,
            });
        }
    }
    Ok(out)
}

/// Features of `agent` on the tick before its COMMIT at `t_commit`.
pub fn snapshot_features(log: &EventLog, agent: u32, t_commit: f64) -> Result<FeatureVector> {
    let target = log
        .transitions()
        .find(|tr| tr.agent == agent && tr.to == FsmState::Commit && (tr.t - t_commit).abs() < 1e-9)
        .ok_or_else(|| Error::invalid(format!("agent {agent} has no COMMIT at t={t_commit}")))?
        .target;
    snapshot_features_with_target(log, agent, t_commit, target).map(|(f, _)| f)
}

fn snapshot_features_with_target(
    log: &EventLog,
    agent: u32,
    t_commit: f64,
    committed_target: Option<u32>,
) -> Result<(FeatureVector, u32)> {
    let k = tick_index(log, t_commit)?;
    if k == 0 {
        return Err(Error::invalid(format!("agent {agent} commits at t=0; no prior tick")));
    }
    let prev: &TickRecord = &log.ticks[k - 1];
    let c = &log.scenario.constants;
    let config = log
        .config(agent)
        .ok_or_else(|| Error::invalid(format!("unknown agent {agent}")))?;
    let states: Vec<_> = prev.agents.iter().map(|a| a.to_state(c.g_limit)).collect();
    let own = states
        .iter()
        .find(|s| s.id == agent)
        .ok_or_else(|| Error::invalid(format!("agent {agent} missing from tick t={}", prev.t)))?;
    let team: Vec<_> = states.iter().filter(|s| s.side == own.side).collect();
    let picture = merged_picture(&team, &states, c.radar_range_m, c.radar_gimbal_deg);

    let target = match committed_target.and_then(|id| states.iter().find(|s| s.id == id && s.alive)) {
        Some(t) => t,
        None => states
            .iter()
            .filter(|s| s.side != own.side && s.alive)
            .min_by(|a, b| {
                let in_a = !picture.contains(&a.id);
                let in_b = !picture.contains(&b.id);
                in_a.cmp(&in_b)
                    .then(range3(own, a).total_cmp(&range3(own, b)))
                    .then(a.id.cmp(&b.id))
            })
            .ok_or_else(|| Error::invalid(format!("no live opponent for agent {agent} at t={}", prev.t)))?,
    };
    let target_config = log
        .config(target.id)
        .ok_or_else(|| Error::invalid(format!("unknown agent {}", target.id)))?;

    let o2t = wez_estimate(own, target, picture.contains(&target.id), &c.wez);
    let own_sees = radar_detects(own, target, c.radar_range_m, c.radar_gimbal_deg);
    let t2o = wez_estimate(target, own, own_sees, &c.wez);
    let own_rec = prev.agent(agent).expect("agent present");

    let features = FeatureVector {
        distance: range3(own, target),
        aspect: aspect_deg(target, own),
        delta_head: delta_heading_deg(own, target),
        delta_alt: own.alt - target.alt,
        delta_vel: own.speed - target.speed,
        wez_max_o2t: o2t.feature_pair().0,
        wez_nez_o2t: o2t.feature_pair().1,
        wez_max_t2o: t2o.feature_pair().0,
        wez_nez_t2o: t2o.feature_pair().1,
        vul_thr_bef_shot: config.vul_thr_bef_shot,
        vul_thr_aft_shot: config.vul_thr_aft_shot,
        shot_point: config.shot_point,
        rwr_warning: config.rwr_present,
        hp_tgt_off: own_rec.offense,
        hp_thr_vul: own_rec.vulnerability,
        own_shot_phi: config.shot_philosophy,
        enemy_shot_phi: target_config.shot_philosophy,
    };
    Ok((features, target.id))
}

#[cfg(test)]
mod tests;
