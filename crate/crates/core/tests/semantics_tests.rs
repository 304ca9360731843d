//! Snapshot semantics: typing, structural satisfaction, expression
//! evaluation, and lasso-trace checking.

mod common;

use claflite_core::core_model::{ConstraintAst, ExprAst};
use claflite_core::instance::{
    check_structural, eval_expr, ity_star, Environment, InstanceId, StructuralViolation,
};
use claflite_core::pipeline::compile;
use claflite_core::temporal::{check_trace, eval_constraint, eval_top, LassoTrace, TraceViolation};
use claflite_core::{QuantKind, Snapshot, TopConstraint};
use common::snapshot;

const COMMANDS: &str = "\
abstract final Command
abstract final UserRequest
motorStop : Command 1..1
up : UserRequest 1..1
";

#[test]
fn ity_star_follows_the_generalization_chain() {
    let cm = compile(COMMANDS).unwrap();
    let motor_stop = cm.by_name("motorStop")[0];
    let command = cm.by_name("Command")[0];
    let user_request = cm.by_name("UserRequest")[0];
    let s = snapshot(&[(1, motor_stop, 0, None)]);
    let i = InstanceId(1);
    assert!(ity_star(&cm, &s, i, motor_stop));
    assert!(ity_star(&cm, &s, i, command));
    assert!(!ity_star(&cm, &s, i, user_request));
}

const FIG_1A: &str = "\
abstract final FeatureModel
abstract final Feature

WinFeatures : FeatureModel 1..1
  manualUpDown : Feature 1..1
  express : Feature 0..1
    pinchProtection : Feature 0..1
";

#[test]
fn mandatory_only_snapshot_is_valid() {
    let cm = compile(FIG_1A).unwrap();
    let wf = cm.by_name("WinFeatures")[0];
    let m = cm.by_name("manualUpDown")[0];
    let s = snapshot(&[(1, wf, 0, None), (2, m, 1, None)]);
    assert!(check_structural(&cm, &s).is_empty());
}

#[test]
fn missing_mandatory_child_violates_multiplicity() {
    let cm = compile(FIG_1A).unwrap();
    let wf = cm.by_name("WinFeatures")[0];
    let s = snapshot(&[(1, wf, 0, None)]);
    let violations = check_structural(&cm, &s);
    assert!(violations.iter().any(|v| matches!(
        v,
        StructuralViolation::Multiplicity { count: 0, clafer, .. } if clafer.contains("manualUpDown")
    )));
}

#[test]
fn empty_snapshot_reports_exactly_the_top_level_lower_bounds() {
    let cm = compile(FIG_1A).unwrap();
    let s = Snapshot::new();
    let violations = check_structural(&cm, &s);
    assert_eq!(violations.len(), 1);
    assert!(matches!(
        &violations[0],
        StructuralViolation::Multiplicity { clafer, count: 0, .. } if clafer == "WinFeatures"
    ));
}

#[test]
fn abstract_clafers_have_no_direct_instances() {
    let cm = compile(FIG_1A).unwrap();
    let feature = cm.by_name("Feature")[0];
    let s = snapshot(&[(1, feature, 0, None)]);
    let violations = check_structural(&cm, &s);
    assert!(violations
        .iter()
        .any(|v| matches!(v, StructuralViolation::AbstractInstance { .. })));
}

const XOR_STATES: &str = "\
abstract final StateMachine
abstract State
M : StateMachine 1..1
  1..1 winStates 1..1
    a : State 0..1
    b : State 0..1
";

#[test]
fn two_children_under_an_xor_group_violate_gcard() {
    let cm = compile(XOR_STATES).unwrap();
    let m = cm.by_name("M")[0];
    let ws = cm.by_name("winStates")[0];
    let a = cm.by_name("a")[0];
    let b = cm.by_name("b")[0];
    let s = snapshot(&[(1, m, 0, None), (2, ws, 1, None), (3, a, 2, None), (4, b, 2, None)]);
    let violations = check_structural(&cm, &s);
    assert!(violations
        .iter()
        .any(|v| matches!(v, StructuralViolation::GroupCardinality { .. })));
}

const REFS: &str = "\
abstract Component
abstract Port
abstract final Command
motorStop : Command 1..1
WinController : Component 1..1
  motor -> WinMotor 1..1
WinMotor : Component 1..1
  cmd : Port -> Command 1..1
";

#[test]
fn dref_navigates_the_link() {
    let cm = compile(REFS).unwrap();
    let wc = cm.by_name("WinController")[0];
    let motor = cm.by_name("motor")[0];
    let wm = cm.by_name("WinMotor")[0];
    let cmd = cm.by_name("cmd")[0];
    let ms = cm.by_name("motorStop")[0];
    let s = snapshot(&[
        (1, ms, 0, None),
        (2, wc, 0, None),
        (3, motor, 2, Some(4)),
        (4, wm, 0, None),
        (5, cmd, 4, Some(1)),
    ]);
    assert!(check_structural(&cm, &s).is_empty());
    let trace = LassoTrace::single(s);
    let env = Environment::default();
    // WinController.motor.dref is the linked motor instance
    let e = ExprAst::Dref(Box::new(ExprAst::Join(
        Box::new(ExprAst::Name(wc)),
        Box::new(ExprAst::Name(motor)),
    )));
    let result = eval_expr(&cm, &trace, 0, &env, &e);
    assert_eq!(result.into_iter().collect::<Vec<_>>(), vec![(InstanceId(4), 0)]);
}

#[test]
fn parent_of_top_level_is_sing() {
    let cm = compile(REFS).unwrap();
    let wc = cm.by_name("WinController")[0];
    let s = snapshot(&[(2, wc, 0, None)]);
    let trace = LassoTrace::single(s);
    let env = Environment::default();
    let e = ExprAst::Parent(Box::new(ExprAst::Name(wc)));
    let result = eval_expr(&cm, &trace, 0, &env, &e);
    assert_eq!(
        result.into_iter().collect::<Vec<_>>(),
        vec![(InstanceId(0), 0)]
    );
}

#[test]
fn vacuous_join_is_empty() {
    let cm = compile("A 0..1\n  B 0..1\n").unwrap();
    let a = cm.by_name("A")[0];
    let b = cm.by_name("B")[0];
    let trace = LassoTrace::single(Snapshot::new());
    let env = Environment::default();
    let e = ExprAst::Join(Box::new(ExprAst::Name(a)), Box::new(ExprAst::Name(b)));
    assert!(eval_expr(&cm, &trace, 0, &env, &e).is_empty());
}

#[test]
fn missing_reference_link_is_a_violation() {
    let cm = compile(REFS).unwrap();
    let wc = cm.by_name("WinController")[0];
    let motor = cm.by_name("motor")[0];
    let s = snapshot(&[(1, wc, 0, None), (2, motor, 1, None)]);
    let violations = check_structural(&cm, &s);
    assert!(violations
        .iter()
        .any(|v| matches!(v, StructuralViolation::ReferenceTotality { missing: true, .. })));
}

#[test]
fn set_reference_siblings_must_link_distinctly() {
    let cm = compile("T 0..2\nA 1..1\n  r -> T 0..2\n").unwrap();
    let t = cm.by_name("T")[0];
    let a = cm.by_name("A")[0];
    let r = cm.by_name("r")[0];
    let s = snapshot(&[
        (1, t, 0, None),
        (2, t, 0, None),
        (3, a, 0, None),
        (4, r, 3, Some(1)),
        (5, r, 3, Some(1)),
    ]);
    let violations = check_structural(&cm, &s);
    assert!(violations
        .iter()
        .any(|v| matches!(v, StructuralViolation::LocalInjectivity { .. })));
}

#[test]
fn bag_reference_siblings_may_share_a_target() {
    let cm = compile("T 0..2\nA 1..1\n  r ->> T 0..2\n").unwrap();
    let t = cm.by_name("T")[0];
    let a = cm.by_name("A")[0];
    let r = cm.by_name("r")[0];
    let s = snapshot(&[
        (1, t, 0, None),
        (2, t, 0, None),
        (3, a, 0, None),
        (4, r, 3, Some(1)),
        (5, r, 3, Some(1)),
    ]);
    assert!(check_structural(&cm, &s).is_empty());
}

// ---------------------------------------------------------------------------
// trace evaluation
// ---------------------------------------------------------------------------

fn p_model() -> (claflite_core::CoreModel, claflite_core::ClaferId) {
    let cm = compile("p 0..1\n").unwrap();
    let p = cm.by_name("p")[0];
    (cm, p)
}

fn some_p(p: claflite_core::ClaferId) -> ConstraintAst {
    ConstraintAst::Quant {
        q: QuantKind::Some,
        set: ExprAst::Name(p),
    }
}

#[test]
fn globally_true_holds_on_any_trace() {
    let (cm, _) = p_model();
    let trace = LassoTrace::single(Snapshot::new());
    let g_true = ConstraintAst::globally(ConstraintAst::True);
    let mut env = Environment::default();
    assert!(eval_constraint(&cm, &trace, 0, &mut env, &g_true));
}

#[test]
fn finally_p_reaches_into_the_loop() {
    let (cm, p) = p_model();
    // p only in s1; loop 0 covers both positions forever
    let s0 = Snapshot::new();
    let s1 = snapshot(&[(1, p, 0, None)]);
    let trace = LassoTrace::new(vec![s0, s1], 0);
    let f_p = ConstraintAst::finally_op(some_p(p));
    let mut env = Environment::default();
    assert!(eval_constraint(&cm, &trace, 0, &mut env, &f_p));
}

#[test]
fn until_without_a_witness_is_false() {
    let (cm, p) = p_model();
    // p everywhere, q nowhere: p U q must be false on every lasso
    let s0 = snapshot(&[(1, p, 0, None)]);
    let s1 = snapshot(&[(1, p, 0, None)]);
    for l in 0..2 {
        let trace = LassoTrace::new(vec![s0.clone(), s1.clone()], l);
        let u = ConstraintAst::Until(
            Box::new(some_p(p)),
            Box::new(ConstraintAst::Quant {
                q: QuantKind::No,
                set: ExprAst::Name(p),
            }),
        );
        let mut env = Environment::default();
        assert!(!eval_constraint(&cm, &trace, 0, &mut env, &u));
        // agree with the explicit unrolling oracle
        assert!(!common::oracle_eval(&cm, &trace, 0, &u));
    }
}

#[test]
fn stuttering_configuration_is_a_valid_trace() {
    let cm = compile(FIG_1A).unwrap();
    let wf = cm.by_name("WinFeatures")[0];
    let m = cm.by_name("manualUpDown")[0];
    let s = snapshot(&[(1, wf, 0, None), (2, m, 1, None)]);
    let trace = LassoTrace::single(s);
    assert!(check_trace(&cm, &trace).is_empty());
}

#[test]
fn reappearing_instance_is_rejected() {
    let (cm, p) = p_model();
    let with_p = snapshot(&[(1, p, 0, None)]);
    let without = Snapshot::new();
    let trace = LassoTrace::new(vec![with_p.clone(), without, with_p], 2);
    let violations = check_trace(&cm, &trace);
    assert!(violations
        .iter()
        .any(|v| matches!(v, TraceViolation::Reappearance { .. })));
}

#[test]
fn loop_segment_must_keep_its_instances() {
    let (cm, p) = p_model();
    // p alive at the loop entry but dead at the loop end: it would have to
    // reappear on the second iteration
    let with_p = snapshot(&[(1, p, 0, None)]);
    let without = Snapshot::new();
    let trace = LassoTrace::new(vec![with_p, without], 0);
    let violations = check_trace(&cm, &trace);
    assert!(violations
        .iter()
        .any(|v| matches!(v, TraceViolation::Reappearance { .. })));
}

#[test]
fn reparenting_is_rejected() {
    let cm = compile("A 0..2\n  B 0..1\n").unwrap();
    let a = cm.by_name("A")[0];
    let b = cm.by_name("B")[0];
    let s0 = snapshot(&[(1, a, 0, None), (2, a, 0, None), (3, b, 1, None)]);
    let s1 = snapshot(&[(1, a, 0, None), (2, a, 0, None), (3, b, 2, None)]);
    let trace = LassoTrace::new(vec![s0, s1], 1);
    let violations = check_trace(&cm, &trace);
    assert!(violations
        .iter()
        .any(|v| matches!(v, TraceViolation::ParentChanged { .. })));
}

#[test]
fn top_level_initially_evaluates_at_position_zero_only() {
    let (cm, p) = p_model();
    let tc = TopConstraint::Initially {
        context: claflite_core::core_model::SING,
        body: some_p(p),
    };
    let with_p = snapshot(&[(1, p, 0, None)]);
    let without = Snapshot::new();
    // holds when p is present at position 0, regardless of later positions
    let t1 = LassoTrace::new(vec![with_p.clone(), without.clone()], 1);
    assert!(eval_top(&cm, &t1, &tc));
    let t2 = LassoTrace::new(vec![without, with_p], 1);
    assert!(!eval_top(&cm, &t2, &tc));
}

#[test]
fn nested_initially_fires_on_each_appearance() {
    // every fresh M instance must contain an s child at its first moment
    let cm = compile("M 0..1\n  initial s 0..1\n").unwrap();
    let m = cm.by_name("M")[0];
    let s = cm.by_name("s")[0];
    let tc = cm
        .constraints
        .iter()
        .find(|t| matches!(t, TopConstraint::Initially { .. }))
        .unwrap();
    // m appears at position 1 with its child: satisfied
    let empty = Snapshot::new();
    let with_both = snapshot(&[(1, m, 0, None), (2, s, 1, None)]);
    let good = LassoTrace::new(vec![empty.clone(), with_both], 1);
    assert!(eval_top(&cm, &good, tc));
    // m appears at position 1 without the child: violated
    let with_m = snapshot(&[(1, m, 0, None)]);
    let bad = LassoTrace::new(vec![empty, with_m], 1);
    assert!(!eval_top(&cm, &bad, tc));
    // m alive from position 0 must satisfy it at position 0 as well
    let with_m0 = snapshot(&[(1, m, 0, None)]);
    let bad0 = LassoTrace::single(with_m0);
    assert!(!eval_top(&cm, &bad0, tc));
}

#[test]
fn multi_step_transition_keeps_the_source_alive() {
    // [ p -->> q ] under S: once p holds for a live S instance, the instance
    // and p must persist until q
    let cm = compile("S 0..1\n  p 0..1\n  q 0..1\n  [ p -->> q ]\n").unwrap();
    let s = cm.by_name("S")[0];
    let p = cm.by_name("p")[0];
    let q = cm.by_name("q")[0];
    let sp = snapshot(&[(1, s, 0, None), (2, p, 1, None)]);
    let spq = snapshot(&[(1, s, 0, None), (2, p, 1, None), (3, q, 1, None)]);
    let s_only = snapshot(&[(1, s, 0, None)]);
    // p holds, stays until q: satisfied
    let good = LassoTrace::new(vec![sp.clone(), spq.clone(), s_only.clone()], 2);
    assert!(check_trace(&cm, &good).is_empty());
    // p holds, then the postcondition never arrives: violated
    let bad = LassoTrace::new(vec![sp, s_only], 1);
    assert!(check_trace(&cm, &bad)
        .iter()
        .any(|v| matches!(v, TraceViolation::ConstraintFailed { .. })));
    let _ = q;
}
