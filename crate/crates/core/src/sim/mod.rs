//! Constructive 2-v-2 BVR simulation.

pub mod engine;
pub mod fsm;
pub mod kinematics;
pub mod log;
pub mod missile;
pub mod scenario;
pub mod sensors;

pub use engine::{audit_log, run_simulation};
pub use fsm::FsmState;
pub use kinematics::{AircraftState, ManeuverCommand};
pub use log::EventLog;
pub use scenario::{AgentConfig, ScenarioConfig, ScenarioTemplate, ShotPhilosophy, Side, SimConstants};
pub use sensors::WezEstimate;
