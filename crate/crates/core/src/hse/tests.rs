use proptest::prelude::*;

use super::*;
use crate::sim::{DelayPolicy, FixedSource, RandomSource, Sampling};
use crate::timing::TimeInterval;

fn g(s: &str) -> Guard {
    parse_guard(s).unwrap()
}

#[test]
fn parses_four_phase_handshake() {
    let ps = parse_hse("*[[C1.r];C1.a+;[~C1.r];C1.a-]").unwrap();
    assert_eq!(
        ps.processes,
        vec![Statement::looped(Statement::Seq(vec![
            Statement::Wait(Guard::node("C1.r")),
            Statement::up("C1.a"),
            Statement::Wait(Guard::node("C1.r").not()),
            Statement::down("C1.a"),
        ]))]
    );
}

const FINAL_ASYM: &str = "
g=0;f=0;
*[[g&~C1.r_a&~C1.r_e];C1.a-;g-]
||
*[[| G->v+;[~G];v-
   [] C2.r->u+;[~C2.r];u-
  |]]
||
*[[ ~f&v->[C1.r_a];C1.a+;f+
  [] ~f&u->C2.a+;[~g&~C2.r];C2.a-
  []  f&u->g+;[~g];f-
  []  f&v->g+;f-
 ]]
";

#[test]
fn parses_final_single_arbiter_form() {
    let ps = parse_hse(FINAL_ASYM).unwrap();
    assert_eq!(ps.processes.len(), 3);
    let nodes: Vec<_> = ps.nodes().into_iter().collect();
    assert_eq!(nodes, ["C1.a", "C1.r_a", "C1.r_e", "C2.a", "C2.r", "G", "f", "g", "u", "v"]);
    assert_eq!(ps.nondet_selections(), 1);
    assert_eq!(ps.det_selections(), 1);
}

#[test]
fn unclosed_selection_is_a_syntax_error() {
    match parse_hse("*[[G1->S1") {
        Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos.line, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    match parse_hse("x+;\n  y+ z+") {
        Err(ParseError::Syntax { pos, .. }) => assert_eq!((pos.line, pos.col), (2, 6)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn undeclared_channel_wire_is_rejected() {
    let err = parse_hse("chan C1(r, a);\n*[[C1.r];C1.ack+]").unwrap_err();
    assert!(matches!(err, ParseError::UndeclaredWire { ref name, .. } if name == "C1.ack"), "{err}");
    let err = parse_hse("chan C1(r, a);\n*[[C1.q];C1.a+]").unwrap_err();
    assert!(matches!(err, ParseError::UndeclaredWire { .. }));
    assert!(parse_hse("chan C1(r, a);\n*[[C1.r];C1.a+;[~C1.r];C1.a-]").is_ok());
}

#[test]
fn empty_selection_is_rejected() {
    assert!(matches!(parse_hse("*[[]]"), Err(ParseError::EmptySelection { .. })));
    assert!(matches!(parse_hse("*[[| |]]"), Err(ParseError::EmptySelection { .. })));
}

#[test]
fn guard_precedence() {
    assert_eq!(g("a | b & c"), g("a | (b & c)"));
    assert_eq!(g("~a & b ^ c"), g("((~a) & b) ^ c"));
    assert_ne!(g("a | b & c"), g("(a | b) & c"));
    assert_eq!(g("~g & (f ^ C1.r_e)").to_string(), "~g & (f ^ C1.r_e)");
}

#[test]
fn definitions_and_comments() {
    let ps = parse_hse("# derived guard\nG := ~g & (f ^ x);\n*[[G];y+;[~G];y-] # trailing").unwrap();
    assert_eq!(ps.defs.len(), 1);
    assert_eq!(ps.defs[0].0, "G");
}

fn handshake_run(decisions: &mut dyn crate::sim::DecisionSource) -> crate::sim::Trace {
    let ps = parse_hse("*[[C1.r];C1.a+;[~C1.r];C1.a-]").unwrap();
    let env: Box<dyn Environment> = Box::new(FourPhaseRequester::new("C1.r", "C1.a", 1, 0, 1));
    run_with(&ps, vec![env], 1_000, decisions, &DelayPolicy::default()).unwrap()
}

#[test]
fn four_phase_handshake_hand_execution() {
    let t = handshake_run(&mut FixedSource { branch: 0 });
    let got: Vec<_> = t.transitions.iter().map(|t| (t.time, t.node.as_str(), t.value)).collect();
    assert_eq!(got, [(0, "C1.r", true), (1, "C1.a", true), (2, "C1.r", false), (3, "C1.a", false)]);
    assert!(!t.meta.deadlocked);
}

#[test]
fn forced_arbiter_decision_takes_second_branch() {
    let ps = parse_hse("a=1;b=1;\n[| a -> x+ [] b -> y+ |]").unwrap();
    let t = run_with(&ps, vec![], 100, &mut FixedSource { branch: 1 }, &DelayPolicy::default()).unwrap();
    assert_eq!(t.ordering(&["x", "y"]), vec![("y".to_string(), true)]);
}

#[test]
fn single_true_guard_commits_without_consulting_source() {
    let ps = parse_hse("a=1;\n[| a -> x+ [] b -> y+ |]").unwrap();
    let t = run_with(&ps, vec![], 100, &mut FixedSource { branch: 1 }, &DelayPolicy::default()).unwrap();
    assert_eq!(t.ordering(&["x", "y"]), vec![("x".to_string(), true)]);
}

#[test]
fn forced_overlapping_arbiter_outputs_violate_stability() {
    let ps = parse_hse(&FINAL_ASYM.replace("g=0;f=0;", "g=0;f=0;u=1;v=1;")).unwrap();
    let err = run_with(&ps, vec![], 100, &mut FixedSource { branch: 0 }, &DelayPolicy::default()).unwrap_err();
    assert!(matches!(err.error, HseError::Stability { process: 2, count: 2, .. }), "{err}");
}

#[test]
fn opposite_concurrent_drives_interfere() {
    let ps = parse_hse("x+ || x-").unwrap();
    let err = run_with(&ps, vec![], 100, &mut FixedSource { branch: 0 }, &DelayPolicy::default()).unwrap_err();
    assert!(matches!(err.error, HseError::Interference { ref node, .. } if node == "x"));
}

#[test]
fn parallel_composition_joins() {
    let ps = parse_hse("(a+ || b+; c+); d+").unwrap();
    let t = run_with(&ps, vec![], 100, &mut FixedSource { branch: 0 }, &DelayPolicy::default()).unwrap();
    let got: Vec<_> = t.transitions.iter().map(|t| (t.time, t.node.as_str())).collect();
    assert_eq!(got, [(1, "a"), (1, "b"), (2, "c"), (3, "d")]);
}

#[test]
fn horizon_zero_gives_empty_trace() {
    let ps = parse_hse("*[x+;x-]").unwrap();
    let t = run(&ps, vec![], 0, 1, &DelayPolicy::default()).unwrap();
    assert!(t.transitions.is_empty());
}

#[test]
fn blocked_requester_marks_deadlock() {
    let ps = parse_hse("[C1.r];skip").unwrap();
    let env: Box<dyn Environment> = Box::new(FourPhaseRequester::new("C1.r", "C1.a", 1, 5, 1));
    let t = run(&ps, vec![env], 1_000, 0, &DelayPolicy::default()).unwrap();
    assert!(t.meta.deadlocked);
    assert_eq!(t.meta.deadlock_time, Some(5));
}

#[test]
fn zero_time_loop_is_a_livelock() {
    let ps = parse_hse("*[skip]").unwrap();
    let err = run(&ps, vec![], 10, 0, &DelayPolicy::default()).unwrap_err();
    assert!(matches!(err.error, HseError::Livelock { .. }));
}

#[test]
fn zero_delay_nodes_react_in_process_order() {
    let mut policy = DelayPolicy::default();
    policy.set("v", TimeInterval::ZERO).set("f", TimeInterval::ZERO);
    // process 0 lowers v as soon as f rises; process 1 must not see v after f+
    let ps = parse_hse("v=1;\n[f];v- || f+;[v -> bad+ [] ~v -> ok+]").unwrap();
    let t = run_with(&ps, vec![], 100, &mut FixedSource { branch: 0 }, &policy).unwrap();
    assert_eq!(t.ordering(&["bad", "ok"]), vec![("ok".to_string(), true)]);
}

#[test]
fn runs_are_deterministic() {
    let policy = DelayPolicy { default: TimeInterval::new(1, 9).unwrap(), ..DelayPolicy::default() };
    let ps = parse_hse("*[[| true -> a+;a- [] true -> b+;b- |]]").unwrap();
    let a = run(&ps, vec![], 5_000, 11, &policy).unwrap();
    let b = run(&ps, vec![], 5_000, 11, &policy).unwrap();
    assert_eq!(a, b);
    assert!(a.is_time_sorted());
    let c = run_with(&ps, vec![], 5_000, &mut RandomSource::new(12, Sampling::UniformRandom), &policy).unwrap();
    assert_ne!(a.transitions, c.transitions);
}

fn arb_guard() -> impl Strategy<Value = Guard> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b", "C1.r_e", "g"]).prop_map(Guard::node),
        any::<bool>().prop_map(Guard::Const),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Guard::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.xor(b)),
        ]
    })
}

fn arb_stmt() -> impl Strategy<Value = Statement> {
    let leaf = prop_oneof![
        Just(Statement::Skip),
        (prop::sample::select(vec!["x", "y", "C2.a"]), any::<bool>()).prop_map(|(n, v)| Statement::assign(n, v)),
        arb_guard().prop_map(Statement::Wait),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        let arms = || {
            prop::collection::vec((arb_guard(), inner.clone()), 1..3)
                .prop_map(|v| v.into_iter().map(|(guard, body)| Arm { guard, body }).collect::<Vec<_>>())
        };
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Statement::Seq),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Statement::Par),
            arms().prop_map(Statement::DetSel),
            arms().prop_map(Statement::NondetSel),
            inner.clone().prop_map(Statement::looped),
        ]
    })
}

proptest! {
    #[test]
    fn guard_print_parse_round_trip(gd in arb_guard()) {
        prop_assert_eq!(parse_guard(&gd.to_string()).unwrap(), gd);
    }

    #[test]
    fn process_set_print_parse_round_trip(procs in prop::collection::vec(arb_stmt(), 1..3)) {
        let procs: Vec<_> = procs.into_iter().filter(|p| !matches!(p, Statement::Par(_))).collect();
        prop_assume!(!procs.is_empty());
        let ps = ProcessSet {
            channels: vec![ChannelDecl { name: "C2".into(), wires: vec!["a".into(), "r".into()] }],
            init: vec![("x".into(), true)],
            defs: vec![("D".into(), Guard::node("a").and(Guard::node("b")))],
            processes: procs,
        };
        let text = ps.to_string();
        let back = parse_hse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, ps);
    }
}
