//! Per-run event log and its JSON-lines file format.
//!
//! Line 1 is a `header` record carrying the full scenario; every tick then
//! contributes one `state` record, preceded by the discrete events
//! (`transition`, `launch`, `hit`, `miss`) stamped with the same time.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::fsm::FsmState;
use crate::sim::kinematics::AircraftState;
use crate::sim::missile::MissReason;
use crate::sim::scenario::{AgentConfig, ScenarioConfig, Side};

pub const LOG_FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: u32,
    pub side: Side,
    pub pos: [f64; 2],
    pub alt: f64,
    pub heading: f64,
    pub speed: f64,
    pub missiles_avail: u32,
    pub alive: bool,
    pub fsm: FsmState,
    /// Offense index against the priority target.
    pub offense: f64,
    /// Vulnerability index against the priority threat.
    pub vulnerability: f64,
    /// DCA index sample; present for live blue aircraft only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dca: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub agents: Vec<AgentRecord>,
}

impl AgentRecord {
    /// Kinematic state for geometry queries against a logged tick.
    pub fn to_state(&self, g_limit: f64) -> AircraftState {
        AircraftState {
            id: self.id,
            side: self.side,
            pos: self.pos,
            alt: self.alt,
            heading: self.heading,
            speed: self.speed,
            g_limit,
            missiles_avail: self.missiles_avail,
            alive: self.alive,
        }
    }
}

impl TickRecord {
    pub fn agent(&self, id: u32) -> Option<&AgentRecord> {
        self.agents.iter().find(|a| a.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub t: f64,
    pub agent: u32,
    pub from: FsmState,
    pub to: FsmState,
    #[serde(default)]
    pub target: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchEvent {
    pub t: f64,
    pub missile: u32,
    pub shooter: u32,
    pub target: u32,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitEvent {
    pub t: f64,
    pub missile: u32,
    pub shooter: u32,
    pub target: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissEvent {
    pub t: f64,
    pub missile: u32,
    pub shooter: u32,
    pub target: u32,
    pub reason: MissReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Event {
    Transition(TransitionEvent),
    Launch(LaunchEvent),
    Hit(HitEvent),
    Miss(MissEvent),
}

impl Event {
    pub fn t(&self) -> f64 {
        match self {
            Event::Transition(e) => e.t,
            Event::Launch(e) => e.t,
            Event::Hit(e) => e.t,
            Event::Miss(e) => e.t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub ticks: Vec<TickRecord>,
    pub events: Vec<Event>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LineRef<'a> {
    Header {
        version: &'a str,
        seed: u64,
        scenario: &'a ScenarioConfig,
    },
    State(&'a TickRecord),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Header {
        version: String,
        seed: u64,
        scenario: ScenarioConfig,
    },
    State(TickRecord),
    Transition(TransitionEvent),
    Launch(LaunchEvent),
    Hit(HitEvent),
    Miss(MissEvent),
}

impl EventLog {
    pub fn scenario_id(&self) -> u64 {
        self.scenario.id
    }

    pub fn config(&self, agent: u32) -> Option<&AgentConfig> {
        self.scenario.aircraft.iter().find(|a| a.id == agent).map(|a| &a.config)
    }

    pub fn side(&self, agent: u32) -> Option<Side> {
        self.scenario.aircraft.iter().find(|a| a.id == agent).map(|a| a.side)
    }

    pub fn transitions(&self) -> impl Iterator<Item = &TransitionEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Transition(t) => Some(t),
            _ => None,
        })
    }

    pub fn launches(&self) -> impl Iterator<Item = &LaunchEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Launch(l) => Some(l),
            _ => None,
        })
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        let io = |e| Error::io("<event log>", e);
        serde_json::to_writer(
            &mut w,
            &LineRef::Header {
                version: LOG_FORMAT_VERSION,
                seed: self.seed,
                scenario: &self.scenario,
            },
        )?;
        w.write_all(b"\n").map_err(io)?;
        let mut events = self.events.iter().peekable();
        for tick in &self.ticks {
            while let Some(e) = events.next_if(|e| e.t() <= tick.t) {
                serde_json::to_writer(&mut w, e)?;
                w.write_all(b"\n").map_err(io)?;
            }
            serde_json::to_writer(&mut w, &LineRef::State(tick))?;
            w.write_all(b"\n").map_err(io)?;
        }
        for e in events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(f)
    }

    pub fn read_jsonl<R: BufRead>(input: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: source.to_string(),
            line,
            reason,
        };
        let mut header = None;
        let mut ticks: Vec<TickRecord> = Vec::new();
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| parse_err(n, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Line = serde_json::from_str(&line).map_err(|e| parse_err(n, e.to_string()))?;
            match rec {
                Line::Header { version, seed, scenario } => {
                    if header.is_some() || !ticks.is_empty() || !events.is_empty() {
                        return Err(parse_err(n, "header must be the first record".into()));
                    }
                    if version != LOG_FORMAT_VERSION {
                        return Err(parse_err(n, format!("unsupported log version {version}")));
                    }
                    header = Some((seed, scenario));
                }
                _ if header.is_none() => {
                    return Err(parse_err(n, "record before header".into()));
                }
                Line::State(tick) => {
                    let (_, scenario) = header.as_ref().expect("checked above");
                    let expected = ticks.len() as f64 * scenario.constants.dt;
                    if (tick.t - expected).abs() > 1e-9 {
                        return Err(parse_err(n, format!("tick at t={} breaks the fixed step (expected {expected})", tick.t)));
                    }
                    if tick.agents.len() != scenario.aircraft.len() {
                        return Err(parse_err(n, "tick agent count differs from scenario".into()));
                    }
                    ticks.push(tick);
                }
                Line::Transition(e) => events.push(Event::Transition(e)),
                Line::Launch(e) => events.push(Event::Launch(e)),
                Line::Hit(e) => events.push(Event::Hit(e)),
                Line::Miss(e) => events.push(Event::Miss(e)),
            }
        }
        let (seed, scenario) = header.ok_or_else(|| parse_err(0, "missing header".into()))?;
        Ok(EventLog { seed, scenario, ticks, events })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(BufReader::new(f), &path.display().to_string())
    }
}
