//! Properties of task generation over random acyclic templates.

use std::collections::BTreeSet;

use copilot_core::model::{
    generate_tasks, DepScope, InstanceId, MissionTemplate, Phase, RobotId, TaskDef, TaskGraph,
};
use proptest::prelude::*;

/// One def in a random template: whether it is per-robot, plus raw choices
/// used to pick dependencies among the defs listed before it.
#[derive(Debug, Clone)]
struct DefSpec {
    per_robot: bool,
    deps: Vec<(usize, bool)>,
}

fn def_specs() -> impl Strategy<Value = Vec<DefSpec>> {
    prop::collection::vec(
        (any::<bool>(), prop::collection::vec((any::<usize>(), any::<bool>()), 0..3))
            .prop_map(|(per_robot, deps)| DefSpec { per_robot, deps }),
        1..10,
    )
}

/// Template whose def-level dependencies only point backwards in `specs`.
fn template(specs: &[DefSpec]) -> MissionTemplate {
    let mut base_tasks = Vec::new();
    let mut robot_tasks = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let mut def = TaskDef::new(&format!("d{i}"), 10.0, (0.0, 1000.0), Phase::Setup);
        if i > 0 {
            let mut seen = BTreeSet::new();
            for &(pick, all) in &spec.deps {
                let j = pick % i;
                if !seen.insert(j) {
                    continue;
                }
                let scope = match (specs[j].per_robot, spec.per_robot, all) {
                    (false, _, _) => DepScope::Base,
                    (true, true, false) => DepScope::SameRobot,
                    (true, _, _) => DepScope::AllRobots,
                };
                def = def.with_dep(&format!("d{j}"), scope);
            }
        }
        if spec.per_robot {
            robot_tasks.push(def);
        } else {
            base_tasks.push(def);
        }
    }
    let shipped = MissionTemplate::default_mission();
    MissionTemplate {
        schema: shipped.schema,
        base_tasks,
        robot_tasks,
        phases: shipped.phases,
        resources: shipped.resources,
        robot_selection_task: None,
    }
}

fn robots(n: usize) -> Vec<RobotId> {
    (0..n).map(|i| RobotId::new(format!("r{i}"))).collect()
}

fn owner(graph: &TaskGraph, id: &InstanceId) -> Option<RobotId> {
    graph.task(id).and_then(|t| t.robot.clone())
}

proptest! {
    #[test]
    fn task_count_is_linear_in_robots(specs in def_specs(), n in 0usize..12) {
        let t = template(&specs);
        prop_assert!(t.validate().is_ok());
        let g = generate_tasks(&t, &robots(n)).unwrap();
        prop_assert_eq!(g.len(), t.base_tasks.len() + n * t.robot_tasks.len());
    }

    #[test]
    fn shipped_templates_scale_linearly(n in 0usize..12) {
        for t in [MissionTemplate::default_mission(), MissionTemplate::manual_baseline()] {
            prop_assert_eq!(generate_tasks(&t, &robots(n)).unwrap().len(), 8 + 13 * n);
        }
    }

    #[test]
    fn acyclic_templates_give_acyclic_graphs(specs in def_specs(), n in 0usize..6) {
        let g = generate_tasks(&template(&specs), &robots(n)).unwrap();
        let order = g.topological_order();
        prop_assert!(order.is_ok());
        let order = order.unwrap();
        let pos = |id: &InstanceId| order.iter().position(|x| x == id).unwrap();
        for (a, b) in &g.edges {
            prop_assert!(pos(a) < pos(b));
        }
    }

    #[test]
    fn generation_is_deterministic(specs in def_specs(), n in 0usize..6) {
        let t = template(&specs);
        let a = generate_tasks(&t, &robots(n)).unwrap();
        let b = generate_tasks(&t, &robots(n)).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn robot_subgraphs_meet_only_through_all_robot_edges(specs in def_specs(), n in 2usize..5) {
        let t = template(&specs);
        let g = generate_tasks(&t, &robots(n)).unwrap();
        for (a, b) in &g.edges {
            let (ra, rb) = (owner(&g, a), owner(&g, b));
            if let (Some(ra), Some(rb)) = (&ra, &rb) {
                if ra != rb {
                    let def = &g.task(b).unwrap().def;
                    let pred_def = &g.task(a).unwrap().def.id;
                    prop_assert!(
                        def.deps.iter().any(|d| &d.task == pred_def && d.scope == DepScope::AllRobots),
                        "{a} -> {b} crosses robots without an all-robots dependency"
                    );
                }
            }
        }
    }
}

#[test]
fn shipped_default_is_sixty_tasks_for_four_robots() {
    let g = generate_tasks(&MissionTemplate::default_mission(), &robots(4)).unwrap();
    assert_eq!(g.len(), 60);
    assert_eq!(g.tasks_of(None).count(), 8);
    for r in robots(4) {
        assert_eq!(g.tasks_of(Some(&r)).count(), 13);
    }
}
