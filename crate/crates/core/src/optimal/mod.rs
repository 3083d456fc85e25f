//! Exact scheduling: the linearised MILP with LP-text export, and a
//! branch-and-bound oracle for small instances.

mod exact;
mod lp;
mod milp;

pub use exact::{solve_exact, ExactSolution, OptimalError, OptimalLimits};
pub use lp::{export_lp, parse_lp, LpParseError};
pub use milp::{
    build_milp, default_stage_count, delta_max, point_from_schedule, Constraint, MilpError, MilpModel, Sense, VarKind,
    Variable,
};

/// The example instance's model, as exported to `fixtures/sec3-example.lp`.
pub fn sec3_example_lp() -> String {
    let inst = crate::fixture::sec3_example();
    let k = default_stage_count(&inst.flows);
    let model = build_milp(&inst.name, &inst.flows, k, None).expect("bundled fixture has usable paths");
    export_lp(&model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::sec3_example;
    use crate::model::{validate_schedule, DirectionalLink, Flow, FlowClass, LinkKind, NodeId};
    use crate::pathsel::PathChoice;
    use crate::radio::AlwaysPass;

    fn one_hop(demand: u64, rate: u32) -> Flow {
        Flow {
            id: 1,
            src: NodeId(0),
            dst: NodeId(1),
            class: FlowClass::BetweenWns,
            ordinary_path: vec![DirectionalLink::new(NodeId(0), NodeId(1), rate, LinkKind::Access)],
            direct_link: None,
            demand,
        }
    }

    #[test]
    fn example_optimum_is_nine() {
        let inst = sec3_example();
        let sol = solve_exact(&inst.flows, inst.node_count(), &AlwaysPass, &OptimalLimits::default()).unwrap();
        assert_eq!(sol.total_slots, 9);
        assert!(sol.optimal);
        assert_eq!(sol.schedule.total_slots(), 9);
        let expected = [(1, PathChoice::Ordinary), (2, PathChoice::Direct), (3, PathChoice::Direct), (4, PathChoice::Direct)];
        assert_eq!(sol.choices, expected.into());
        assert!(validate_schedule(&sol.schedule, &inst.flows, inst.node_count()).is_valid());
    }

    #[test]
    fn single_hop_takes_ceiling() {
        let sol = solve_exact(&[one_hop(7, 2)], 2, &AlwaysPass, &OptimalLimits::default()).unwrap();
        assert_eq!(sol.total_slots, 4);
        let none = solve_exact(&[], 0, &AlwaysPass, &OptimalLimits::default()).unwrap();
        assert_eq!(none.total_slots, 0);
    }

    #[test]
    fn limits_are_enforced() {
        let inst = sec3_example();
        let tight = OptimalLimits { max_flows: 3, ..OptimalLimits::default() };
        assert!(matches!(
            solve_exact(&inst.flows, inst.node_count(), &AlwaysPass, &tight),
            Err(OptimalError::LimitExceeded(_))
        ));
        let hops = OptimalLimits { max_total_hops: 5, ..OptimalLimits::default() };
        assert!(matches!(
            solve_exact(&inst.flows, inst.node_count(), &AlwaysPass, &hops),
            Err(OptimalError::LimitExceeded(_))
        ));
    }

    #[test]
    fn zero_budget_returns_flagged_incumbent() {
        let inst = sec3_example();
        let limits = OptimalLimits { time_budget: Some(std::time::Duration::ZERO), ..OptimalLimits::default() };
        let sol = solve_exact(&inst.flows, inst.node_count(), &AlwaysPass, &limits).unwrap();
        assert!(sol.total_slots >= 9);
        assert!(validate_schedule(&sol.schedule, &inst.flows, inst.node_count()).is_valid());
    }

    #[test]
    fn single_hop_model_needs_two_slots() {
        // d = 4, c = 2, one stage: δ = 2 works, δ = 1 does not
        let m = build_milp("one", &[one_hop(4, 2)], 1, None).unwrap();
        let names: Vec<&str> = m.variables.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["delta_1", "b_1_1_1", "u_1_1_1"]);
        assert!(m.check_point(&[2.0, 1.0, 2.0], 1e-9).is_ok());
        assert!(m.check_point(&[1.0, 1.0, 1.0], 1e-9).is_err());
        assert!(m.check_point(&[2.0, 1.0, 1.0], 1e-9).is_err());
        assert_eq!(m.objective_value(&[2.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn empty_model_is_objective_only() {
        let m = build_milp("empty", &[], 1, None).unwrap();
        assert!(m.constraints.is_empty());
        assert_eq!(m.variables.len(), 1);
        assert_eq!(m.variables[0].upper, Some(0.0));
        assert_eq!(build_milp("none", &[], 0, None), Err(MilpError::NoStages));
    }

    #[test]
    fn example_witness_is_a_model_point() {
        let inst = sec3_example();
        let k = default_stage_count(&inst.flows);
        assert_eq!(k, 9);
        assert_eq!(delta_max(&inst.flows), 5);
        let m = build_milp(&inst.name, &inst.flows, k, None).unwrap();
        let sol = solve_exact(&inst.flows, inst.node_count(), &AlwaysPass, &OptimalLimits::default()).unwrap();
        let x = point_from_schedule(&m, &sol.schedule, k).unwrap();
        m.check_point(&x, 1e-9).unwrap();
        assert_eq!(m.objective_value(&x), 9.0);
    }

    #[test]
    fn lp_round_trip() {
        let inst = sec3_example();
        let m = build_milp(&inst.name, &inst.flows, 4, None).unwrap();
        let text = export_lp(&m);
        let back = parse_lp(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(export_lp(&back), text);
        assert!(text.lines().all(|l| l.len() <= 80));
    }

    #[test]
    fn lp_parser_rejects_garbage() {
        assert!(parse_lp("Minimize\n obj: x\nEnd\n").is_err());
        assert_eq!(
            parse_lp("Minimize\n obj: y\nSubject To\nBounds\n x >= 0\nEnd\n"),
            Err(LpParseError::UnknownVariable("y".into()))
        );
    }

    #[test]
    fn bundled_lp_matches_export() {
        assert_eq!(sec3_example_lp(), include_str!("../../fixtures/sec3-example.lp"));
    }
}
