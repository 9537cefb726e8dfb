use super::*;
use crate::sim::{CommsChange, GroundTruthArtifact, SimConfig};
use crate::store::{replay, WallClock};

fn robots(n: usize) -> Vec<RobotId> {
    (1..=n).map(|i| RobotId::new(format!("spot{i}"))).collect()
}

fn scenario(n: usize) -> Scenario {
    let mut s = Scenario::new("unit", robots(n), SimConfig::new(3));
    s.sim.detection_rate = 0.0;
    s.artifacts = vec![GroundTruthArtifact { id: "gt-1".into(), class: "survivor".into(), position: [40.0, 8.0, 0.0] }];
    s
}

fn control(n: usize, budget: u32) -> MissionControl {
    let mut s = scenario(n);
    s.submission_budget = budget;
    MissionControl::new(MissionTemplate::default_mission(), &s, robots(n), Store::in_memory(WallClock::simulated(10.0)))
        .unwrap()
}

fn launch_gate(c: &MissionControl) -> String {
    c.snapshot()
        .open_gates
        .values()
        .find(|g| g.instance_id == InstanceId::base("launch_base_sw"))
        .map(|g| g.id.clone())
        .expect("launch gate open")
}

fn detection(id: &str, position: [f64; 3]) -> Detection {
    Detection {
        id: format!("det-{id}"),
        robot: RobotId::from("spot1"),
        class: "survivor".into(),
        confidence: 0.7,
        position,
        at: 0.0,
        truth: None,
    }
}

#[test]
fn initial_state() {
    let c = control(2, 5);
    let snap = c.snapshot();
    assert_eq!(snap.phase, MissionPhase::SetupPending);
    assert_eq!(snap.clock, 0.0);
    assert_eq!(snap.budget, 5);
    assert_eq!(c.state().next_seq, 1);
}

#[test]
fn duplicate_robot_list_is_rejected() {
    let s = scenario(1);
    let r = MissionControl::new(
        MissionTemplate::default_mission(),
        &s,
        vec![RobotId::from("spot1"), RobotId::from("spot1")],
        Store::in_memory(WallClock::simulated(10.0)),
    );
    assert!(matches!(r, Err(ServiceError::Rejected(_))));
}

#[test]
fn start_generates_base_tasks_and_prompts_selection() {
    let mut c = control(3, 5);
    c.start().unwrap();
    assert_eq!(c.snapshot().phase, MissionPhase::Setup);
    assert_eq!(c.snapshot().graph.len(), 8);
    launch_gate(&c);
    assert!(matches!(c.start(), Err(ServiceError::IllegalPhase { command: "start-mission", .. })));
}

#[test]
fn selection_is_required_before_confirming_launch() {
    let mut c = control(3, 5);
    c.start().unwrap();
    let gate = launch_gate(&c);
    let before = c.store().len();
    let err = c
        .apply_command(OperatorCommand::GateDecision { request: gate.clone(), decision: GateDecision::Confirm })
        .unwrap_err();
    assert!(matches!(err, ServiceError::Rejected(_)));
    // The command is logged, followed by the rejection notice.
    let tail = &c.store().events()[before as usize..];
    assert!(matches!(tail[0].body, EventBody::OperatorCommand(_)));
    assert!(matches!(&tail[1].body, EventBody::Alert(a) if a.level == AlertLevel::Info));

    let err = c.apply_command(OperatorCommand::SelectRobots { robots: vec![RobotId::from("ghost")] }).unwrap_err();
    assert!(matches!(err, ServiceError::UnknownTarget(_)));

    let ack = c.apply_command(OperatorCommand::SelectRobots { robots: robots(2) }).unwrap();
    assert!(ack.detail.unwrap().contains('2'));
    assert_eq!(c.snapshot().graph.len(), 8 + 2 * 13);
    assert!(c.apply_command(OperatorCommand::SelectRobots { robots: robots(3) }).is_err());

    c.apply_command(OperatorCommand::GateDecision { request: gate, decision: GateDecision::Confirm }).unwrap();
    assert_eq!(c.executor().status(&InstanceId::base("launch_base_sw")), Some(TaskStatus::Active));
}

#[test]
fn selection_outside_the_launch_gate_is_illegal() {
    let mut c = control(1, 5);
    let err = c.apply_command(OperatorCommand::SelectRobots { robots: robots(1) }).unwrap_err();
    assert!(matches!(err, ServiceError::IllegalPhase { .. }));
}

#[test]
fn ticking_advances_clock_and_replans() {
    let mut c = control(1, 5);
    c.start().unwrap();
    c.apply_command(OperatorCommand::SelectRobots { robots: robots(1) }).unwrap();
    let gate = launch_gate(&c);
    c.apply_command(OperatorCommand::GateDecision { request: gate, decision: GateDecision::Confirm }).unwrap();
    for _ in 0..4 {
        c.tick(0.5).unwrap();
    }
    assert_eq!(c.now(), 2.0);
    let snap = c.snapshot();
    assert_eq!(snap.graph.len(), 21);
    assert_eq!(snap.schedule.as_ref().unwrap().entries.len(), 21);
    assert!(snap.plan_id >= 2);
    let counts = snap.status_counts();
    assert_eq!(counts.values().sum::<usize>(), 21);
}

#[test]
fn artifact_review_flow() {
    let mut c = control(1, 2);
    c.start().unwrap();
    let near = c.add_report(&detection("00001", [41.0, 10.0, 0.0])).unwrap();
    assert!(near.flagged);
    assert!(c.add_report(&detection("00001", [0.0, 0.0, 0.0])).is_err());

    let err = c.review_artifact(&near.id, ReviewAction::Submit).unwrap_err();
    assert!(matches!(err, ServiceError::Rejected(_)));

    c.review_artifact(&near.id, ReviewAction::Open).unwrap();
    c.tick(0.5).unwrap();
    c.review_artifact(&near.id, ReviewAction::Adjust { dx: 1.0, dy: -2.0, dz: 0.0 }).unwrap();
    c.review_artifact(&near.id, ReviewAction::Accept).unwrap();
    let r = c.review_artifact(&near.id, ReviewAction::Submit).unwrap();
    assert_eq!(r.status, ArtifactStatus::Submitted);
    assert_eq!(r.adjusted_position, Some([42.0, 8.0, 0.0]));
    assert_eq!(r.correct, Some(true));
    assert_eq!(r.reviewed_in, 0.5);
    assert_eq!(c.snapshot().budget, 1);
    assert!(c.review_artifact(&near.id, ReviewAction::Submit).is_err());
    assert_eq!(c.snapshot().budget, 1);

    let far = c.add_report(&detection("00002", [0.0, 0.0, 0.0])).unwrap();
    let r = c.review_artifact(&far.id, ReviewAction::Reject).unwrap();
    assert_eq!(r.status, ArtifactStatus::Rejected);
    assert_eq!(c.snapshot().budget, 1);
    assert!(c.review_artifact(&far.id, ReviewAction::Accept).is_err());

    assert!(matches!(c.review_artifact("art-77777", ReviewAction::Open), Err(ServiceError::UnknownTarget(_))));
}

#[test]
fn submit_with_no_budget_is_rejected() {
    let mut c = control(1, 0);
    c.start().unwrap();
    let r = c.add_report(&detection("00001", [40.0, 8.0, 0.0])).unwrap();
    c.review_artifact(&r.id, ReviewAction::Accept).unwrap();
    let err = c.apply_command(OperatorCommand::ArtifactSubmit { artifact: r.id.clone() }).unwrap_err();
    assert!(matches!(err, ServiceError::BudgetExhausted));
    assert_eq!(c.snapshot().artifacts[&r.id].status, ArtifactStatus::Accepted);
}

#[test]
fn command_to_disconnected_robot_is_queued() {
    let mut s = scenario(1);
    s.sim.comms_script = vec![
        CommsChange { at: 1.0, robot: RobotId::from("spot1"), connected: false },
        CommsChange { at: 3.0, robot: RobotId::from("spot1"), connected: true },
    ];
    let mut c = MissionControl::new(
        MissionTemplate::default_mission(),
        &s,
        robots(1),
        Store::in_memory(WallClock::simulated(10.0)),
    )
    .unwrap();
    c.start().unwrap();
    let ack = c.apply_command(OperatorCommand::Waypoint { robot: RobotId::from("spot1"), node: 3 }).unwrap();
    assert_eq!(ack.detail, None);
    c.tick(1.5).unwrap();
    let ack = c.apply_command(OperatorCommand::Waypoint { robot: RobotId::from("spot1"), node: 3 }).unwrap();
    assert!(ack.detail.unwrap().contains("queued"));
    let err = c.apply_command(OperatorCommand::Waypoint { robot: RobotId::from("spot1"), node: 100_000 }).unwrap_err();
    assert!(matches!(err, ServiceError::UnknownTarget(_)));
}

#[test]
fn telemetry_ingestion() {
    let mut c = control(1, 1);
    let samples: Vec<CursorSample> =
        (0..90).map(|i| CursorSample { t: i as f64 / 1.5, x: i as f64, y: 10.0 }).collect();
    let views = vec![ViewSwitch { t: 0.0, view: "artifact-drawer".into() }];
    let seqs = c.ingest_telemetry(TelemetryBatch { samples, views }).unwrap();
    assert_eq!(seqs.len(), 91);
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    assert_eq!(c.snapshot().view.as_deref(), Some("artifact-drawer"));
    let e = c.events_from(seqs[0]).unwrap();
    assert!(matches!(&e[0].body, EventBody::ViewSwitch(v) if v.view == "artifact-drawer"));

    let bad = TelemetryBatch {
        samples: vec![CursorSample { t: 5.0, x: 0.0, y: 0.0 }, CursorSample { t: 4.0, x: 0.0, y: 0.0 }],
        views: Vec::new(),
    };
    assert!(matches!(c.ingest_telemetry(bad), Err(ServiceError::Telemetry(_))));
}

#[test]
fn state_view_serializes_cursor_with_snapshot() {
    let c = control(1, 1);
    let v = serde_json::to_value(c.state()).unwrap();
    assert_eq!(v["next_seq"], 1);
    assert_eq!(v["phase"], "setup-pending");
}

#[test]
fn full_run_is_replayable_and_audited() {
    let mut s = scenario(2);
    s.duration = Some(2000.0);
    s.sim.detection_rate = 2.0;
    let (summary, store) = run_scenario(MissionTemplate::default_mission(), &s, robots(2), Store::in_memory(WallClock::simulated(10.0))).unwrap();
    assert_eq!(summary.course_entries.len(), 2);
    assert_eq!(&replay(store.events()).unwrap(), store.snapshot());
    let snap = store.snapshot();
    assert_eq!(snap.phase, MissionPhase::Ended);
    assert_eq!(snap.initial_budget - snap.submitted, snap.budget);

    // Every gate resolution follows the operator command that caused it.
    let events = store.events();
    for (i, e) in events.iter().enumerate() {
        if let EventBody::Gate(crate::store::GateEvent::Resolved { request, .. }) = &e.body {
            let cause = events[..i].iter().rev().find_map(|p| match &p.body {
                EventBody::OperatorCommand(OperatorCommand::GateDecision { request: r, .. }) => Some(r),
                _ => None,
            });
            assert_eq!(cause, Some(request));
        }
    }
}

#[test]
fn commands_after_end_are_illegal() {
    let mut s = scenario(1);
    s.duration = Some(5.0);
    let mut c =
        MissionControl::new(MissionTemplate::default_mission(), &s, robots(1), Store::in_memory(WallClock::simulated(10.0)))
            .unwrap();
    c.start().unwrap();
    for _ in 0..10 {
        c.tick(1.0).unwrap();
    }
    assert!(c.is_finished());
    assert_eq!(c.now(), 5.0);
    let err = c.apply_command(OperatorCommand::Retry { task: InstanceId::base("launch_base_sw") }).unwrap_err();
    assert!(matches!(err, ServiceError::IllegalPhase { phase: MissionPhase::Ended, .. }));
}
