use super::*;
use crate::lhs::{default_plan, lhs_sample, scenario_from_row};
use crate::sim::engine::index_for_record;
use crate::sim::log::{AgentRecord, Event, TransitionEvent};
use crate::sim::scenario::{ScenarioConfig, ScenarioTemplate, ShotPhilosophy};
use crate::sim::{run_simulation, FsmState};
use crate::units::NM_TO_M;

fn scenarios(n: usize, seed: u64) -> Vec<ScenarioConfig> {
    let template = ScenarioTemplate::default();
    lhs_sample(&default_plan(n, seed))
        .unwrap()
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| scenario_from_row(r, &template, i as u64).unwrap())
        .collect()
}

/// Static geometry: blue 0 at the origin heading north, blue 1 parked far
/// west, red 2 at (0, 40 km) heading `red_heading`, red 3 parked far east.
fn fixture(duration: f64, red_heading: f64, red_alt: f64, transitions: &[(f64, FsmState, FsmState)]) -> EventLog {
    let scenario = scenarios(1, 11).remove(0);
    let dt = scenario.constants.dt;
    let n = (duration / dt).round() as usize;
    let place = |id: u32| -> ([f64; 2], f64, f64) {
        match id {
            0 => ([0.0, 0.0], 8_000.0, 0.0),
            1 => ([-200_000.0, 0.0], 8_000.0, 180.0),
            2 => ([0.0, 40_000.0], red_alt, red_heading),
            _ => ([200_000.0, 0.0], 8_000.0, 0.0),
        }
    };
    let mut ticks = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let agents = scenario
            .aircraft
            .iter()
            .map(|a| {
                let (pos, alt, heading) = place(a.id);
                let fsm = transitions
                    .iter()
                    .filter(|(tt, _, _)| a.id == 0 && *tt <= t)
                    .last()
                    .map_or(FsmState::Cap, |x| x.2);
                AgentRecord {
                    id: a.id,
                    side: a.side,
                    pos,
                    alt,
                    heading,
                    speed: 450.0,
                    missiles_avail: 4,
                    alive: true,
                    fsm,
                    offense: 0.25,
                    vulnerability: 0.5,
                    dca: None,
                }
            })
            .collect();
        let mut tick = TickRecord { t, agents };
        for i in 0..2 {
            tick.agents[i].dca = Some(index_for_record(&scenario, &tick, i as u32).unwrap());
        }
        ticks.push(tick);
    }
    let events = transitions
        .iter()
        .map(|&(t, from, to)| {
            Event::Transition(TransitionEvent {
                t,
                agent: 0,
                from,
                to,
                target: (to == FsmState::Commit).then_some(2),
            })
        })
        .collect();
    EventLog {
        seed: 0,
        scenario,
        ticks,
        events,
    }
}

#[test]
fn commit_then_abort_gives_one_record() {
    let log = fixture(
        200.0,
        180.0,
        8_000.0,
        &[(100.0, FsmState::Cap, FsmState::Commit), (160.0, FsmState::Commit, FsmState::Abort)],
    );
    let recs = extract_engagements(&log).unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!((r.t_start, r.t_end), (100.0, 160.0));
    assert_eq!(r.terminal_kind, TerminalKind::Abort);
    assert_eq!(r.ordinal, 1);
    assert_eq!(r.agent_id, 0);
    assert_eq!(r.target_id, 2);
    // static geometry, so the target equals any single sample
    let v = log.ticks[400].agent(0).unwrap().dca.unwrap();
    assert!((r.target - v).abs() < 1e-12);
}

#[test]
fn no_commit_no_records() {
    let log = fixture(50.0, 180.0, 8_000.0, &[]);
    assert!(extract_engagements(&log).unwrap().is_empty());
}

#[test]
fn commit_running_to_end_is_truncated() {
    let log = fixture(720.0, 180.0, 8_000.0, &[(700.0, FsmState::Cap, FsmState::Commit)]);
    let recs = extract_engagements(&log).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].terminal_kind, TerminalKind::Truncated);
    assert_eq!(recs[0].t_start, 700.0);
    assert_eq!(recs[0].t_end, log.ticks.last().unwrap().t);
    assert!(!ExtractFilter::default().accepts(&recs[0]));
}

#[test]
fn multiple_episodes_get_ordinals() {
    let log = fixture(
        300.0,
        180.0,
        8_000.0,
        &[
            (50.0, FsmState::Cap, FsmState::Commit),
            (80.0, FsmState::Commit, FsmState::Break),
            (100.0, FsmState::Break, FsmState::Cap),
            (150.0, FsmState::Cap, FsmState::Commit),
            (170.0, FsmState::Commit, FsmState::Abort),
        ],
    );
    let recs = extract_engagements(&log).unwrap();
    assert_eq!(recs.iter().map(|r| r.ordinal).collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(recs[0].terminal_kind, TerminalKind::Break);
    let first_only = ExtractFilter {
        first_episode_only: true,
        include_truncated: false,
    };
    assert_eq!(recs.iter().filter(|r| first_only.accepts(r)).count(), 1);
}

#[test]
fn co_altitude_gives_zero_delta_alt() {
    let log = fixture(120.0, 180.0, 8_000.0, &[(100.0, FsmState::Cap, FsmState::Commit)]);
    let f = snapshot_features(&log, 0, 100.0).unwrap();
    assert_eq!(f.delta_alt, 0.0);
    assert!(f.validate().is_empty(), "{:?}", f.validate());
}

#[test]
fn snapshot_geometry() {
    // red heading north, directly away from blue 0
    let log = fixture(120.0, 0.0, 6_000.0, &[(100.0, FsmState::Cap, FsmState::Commit)]);
    let f = snapshot_features(&log, 0, 100.0).unwrap();
    assert!(f.aspect.abs() < 1e-9);
    assert!(f.delta_head.abs() < 1e-9);
    assert_eq!(f.delta_alt, 2_000.0);
    assert!((f.distance - (40_000f64.powi(2) + 2_000f64.powi(2)).sqrt()).abs() < 1e-9);
    assert_eq!(f.hp_tgt_off, 0.25);
    assert_eq!(f.hp_thr_vul, 0.5);

    // head-on
    let log = fixture(120.0, 180.0, 8_000.0, &[(100.0, FsmState::Cap, FsmState::Commit)]);
    let f = snapshot_features(&log, 0, 100.0).unwrap();
    assert!((f.aspect - 180.0).abs() < 1e-9);
    assert!((f.delta_head - 180.0).abs() < 1e-9);
}

#[test]
fn undetected_threat_gives_sentinels() {
    // blue 0 points north at red 2: both estimates valid
    let log = fixture(120.0, 180.0, 8_000.0, &[(100.0, FsmState::Cap, FsmState::Commit)]);
    let f = snapshot_features(&log, 0, 100.0).unwrap();
    assert!(f.wez_max_o2t > 0.0 && f.wez_max_t2o > 0.0);

    // move red 2 out of radar range: both sentinel
    let mut log = log;
    for tick in &mut log.ticks {
        tick.agents[2].pos = [0.0, 200.0 * NM_TO_M];
    }
    let f = snapshot_features(&log, 0, 100.0).unwrap();
    assert_eq!((f.wez_max_o2t, f.wez_nez_o2t), (-1.0, -1.0));
    assert_eq!((f.wez_max_t2o, f.wez_nez_t2o), (-1.0, -1.0));
    assert!(f.validate().is_empty());
}

#[test]
fn commit_at_t0_rejected() {
    let log = fixture(10.0, 180.0, 8_000.0, &[(0.0, FsmState::Cap, FsmState::Commit)]);
    assert!(snapshot_features(&log, 0, 0.0).is_err());
}

fn sample_features() -> FeatureVector {
    FeatureVector {
        distance: 50_000.0,
        aspect: 90.0,
        delta_head: 30.0,
        delta_alt: -500.0,
        delta_vel: 20.0,
        wez_max_o2t: 40_000.0,
        wez_nez_o2t: 12_000.0,
        wez_max_t2o: -1.0,
        wez_nez_t2o: -1.0,
        vul_thr_bef_shot: 0.3,
        vul_thr_aft_shot: 0.6,
        shot_point: 0.5,
        rwr_warning: true,
        hp_tgt_off: 0.0,
        hp_thr_vul: 0.1,
        own_shot_phi: ShotPhilosophy::Midpoint,
        enemy_shot_phi: ShotPhilosophy::Nez,
    }
}

#[test]
fn encoding_layout() {
    let cols = encoded_columns();
    // 17 raw fields: 13 pass through, 2 angles become 4 columns, 2 categoricals become 6
    let angles = 2;
    let categoricals = 2;
    let passthrough = FEATURE_NAMES.len() - angles - categoricals;
    assert_eq!(cols.len(), passthrough + 2 * angles + ShotPhilosophy::ALL.len() * categoricals);
    assert_eq!(cols.len(), ENCODED_WIDTH);
    let row = encode_features(&sample_features());
    let at = |name: &str| row[cols.iter().position(|c| c == name).unwrap()];
    assert!((at("aspect_sin") - 1.0).abs() < 1e-12);
    assert!(at("aspect_cos").abs() < 1e-12);
    assert_eq!(
        [at("own_shot_phi_MAX_RANGE"), at("own_shot_phi_MIDPOINT"), at("own_shot_phi_NEZ")],
        [0.0, 1.0, 0.0]
    );
    assert_eq!(
        [at("enemy_shot_phi_MAX_RANGE"), at("enemy_shot_phi_MIDPOINT"), at("enemy_shot_phi_NEZ")],
        [0.0, 0.0, 1.0]
    );
    assert_eq!(at("rwr_warning"), 1.0);
    assert_eq!(at("wez_max_t2o"), -1.0);
    assert_eq!(at("distance"), 50_000.0);
}

#[test]
fn encode_rejects_empty() {
    assert!(encode(&[]).is_err());
}

fn toy_matrix(n: usize) -> EncodedMatrix {
    let cols = vec!["a".to_string(), "b".to_string()];
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, -1.0]).collect();
    EncodedMatrix::from_rows(cols, &rows, (0..n).map(|i| i as f64 / n as f64).collect()).unwrap()
}

#[test]
fn split_partitions() {
    let m = toy_matrix(100);
    let (tr, te) = split(&m, 0.8, 3).unwrap();
    assert_eq!((tr.n_rows(), te.n_rows()), (80, 20));
    let mut ids: Vec<usize> = tr.rows().chain(te.rows()).map(|r| r[0] as usize).collect();
    ids.sort_unstable();
    assert_eq!(ids, (0..100).collect::<Vec<_>>());
    let (tr2, te2) = split(&m, 0.8, 3).unwrap();
    assert_eq!((tr, te), (tr2, te2));
    assert!(split(&toy_matrix(9), 0.8, 3).is_err());
}

#[test]
fn csv_round_trip_and_schema() {
    let recs: Vec<EngagementRecord> = (0..12)
        .map(|i| {
            let mut f = sample_features();
            f.distance = 1.0 / 3.0 + i as f64 * 1234.567;
            f.delta_vel = -0.1 * i as f64;
            EngagementRecord {
                scenario_id: 0,
                agent_id: 0,
                ordinal: 1,
                t_start: 1.0,
                t_end: 2.0,
                target_id: 2,
                features: f,
                target: 0.1 + 0.05 * i as f64,
                terminal_kind: TerminalKind::Abort,
            }
        })
        .collect();
    let m = encode(&recs).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    m.write_csv(&path).unwrap();
    let back = EncodedMatrix::read_csv(&path, None).unwrap();
    assert_eq!(back, m);
    assert!(back.rows().all(|r| r[9] == -1.0));

    let other = vec!["x".to_string(); ENCODED_WIDTH];
    assert!(matches!(
        EncodedMatrix::read_csv(&path, Some(&other)),
        Err(crate::Error::Schema(_))
    ));
}

#[test]
fn stats_and_modes() {
    assert_eq!(histogram_modes(&[10, 30, 60, 90, 70, 40, 20, 10, 0, 0]), 1);
    assert_eq!(histogram_modes(&[90, 90, 10, 0, 0, 0, 10, 80, 90, 90]), 2);
    assert_eq!(histogram_modes(&[50; 10]), 1);
    // an edge bump inside counting noise is not a mode
    assert_eq!(histogram_modes(&[26, 17, 20, 74, 477, 1507, 162, 57, 15, 12]), 1);
    // a clear secondary atom is
    assert_eq!(histogram_modes(&[400, 20, 20, 74, 477, 1507, 162, 57, 15, 12]), 2);
    let v: Vec<f64> = (0..1000).map(|i| 0.5 + 0.1 * ((i as f64) * 0.37).sin()).collect();
    let s = DatasetStats::from_targets(&v);
    assert_eq!(s.count, 1000);
    let (lo, hi, mean) = (s.min.unwrap(), s.max.unwrap(), s.mean.unwrap());
    assert!(lo <= mean && mean <= hi);
    assert_eq!(s.histogram.as_ref().unwrap().counts.iter().sum::<usize>(), 1000);
    assert_eq!(DatasetStats::from_targets(&[]).count, 0);
}

#[test]
fn parse_state_diagnostics() {
    let good = serde_json::to_value(sample_features()).unwrap();
    assert_eq!(FeatureVector::from_value(&good).unwrap(), sample_features());

    let mut bad = good.clone();
    bad["own_shot_phi"] = "SNIPER".into();
    bad["aspect"] = 200.0.into();
    bad.as_object_mut().unwrap().remove("distance");
    let errs = FeatureVector::from_value(&bad).unwrap_err();
    let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
    assert!(fields.contains(&"own_shot_phi"));
    assert!(fields.contains(&"aspect"));
    assert!(fields.contains(&"distance"));
    assert!(errs.iter().any(|e| e.reason.contains("SNIPER")));
}

#[test]
fn simulated_engagements_are_well_formed() {
    let mut n = 0;
    for (i, cfg) in scenarios(8, 5).iter().enumerate() {
        let log = run_simulation(cfg, i as u64).unwrap();
        for r in extract_engagements(&log).unwrap() {
            n += 1;
            assert!(r.target > 0.0 && r.target < 1.0);
            assert!(r.t_start < r.t_end);
            assert!(r.features.validate().is_empty(), "{:?}", r.features.validate());
        }
    }
    assert!(n > 0);
}
