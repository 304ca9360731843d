//! Rewrite schemas, lifting, and normalization.

use claflite_core::desugar::{
    assert_core_grammar, canonical_text, desugar_patterns, desugar_transitions, normalize,
    print_top,
};
use claflite_core::pipeline::compile;
use claflite_core::surface::{parse_model, print_expr, ConstraintSrc, ExprSrc};
use claflite_core::{ConstraintAst, ExprAst, QuantKind, TopConstraint};

fn first_constraint(src: &str) -> ConstraintSrc {
    let m = parse_model(src).unwrap();
    if !m.constraints.is_empty() {
        m.constraints[0].clone()
    } else {
        m.decls[0].constraints[0].clone()
    }
}

fn rewrite(src: &str) -> String {
    let c = desugar_patterns(&desugar_transitions(&first_constraint(src)));
    print_expr(&c.body)
}

#[test]
fn next_step_arrow() {
    // [ req=down --> movingDown ]  becomes  [ req=down => X movingDown ]
    assert_eq!(
        rewrite("[ req = down --> movingDown ]\n"),
        "((req = down) => (next movingDown))"
    );
}

#[test]
fn multi_step_arrow_references_this() {
    // [ p -->> q ]  becomes  [ p => (this && p) U q ]
    assert_eq!(rewrite("[ p -->> q ]\n"), "(p => ((this && p) U q))");
}

#[test]
fn guarded_next_step_arrow() {
    // the guard strengthens the precondition
    assert_eq!(
        rewrite("[ basic -[express && req = expressUp]-> movingUpX ]\n"),
        "((basic && (express && (req = expressUp))) => (next movingUpX))"
    );
}

#[test]
fn guarded_multi_step_arrow() {
    assert_eq!(
        rewrite("[ p -[g]->> q ]\n"),
        "((p && g) => ((this && p) U q))"
    );
}

#[test]
fn always_is_globally() {
    assert_eq!(rewrite("[ always true ]\n"), "(! (true U (! true)))");
}

#[test]
fn never_is_globally_not() {
    assert_eq!(
        rewrite("[ never closed && cmd = motorUp ]\n"),
        "(! (true U (closed && (cmd = motorUp))))"
    );
}

#[test]
fn sometime_is_finally() {
    assert_eq!(rewrite("[ sometime open ]\n"), "(true U open)");
}

#[test]
fn scenario_chain_combines_arrows_and_pattern() {
    // F(closed => (this && closed) U (partlyOpen => (this && partlyOpen) U open))
    assert_eq!(
        rewrite("[ sometime closed -->> partlyOpen -->> open ]\n"),
        "(true U (closed => ((this && closed) U (partlyOpen => ((this && partlyOpen) U open)))))"
    );
}

#[test]
fn between_pattern_uses_dwyer_mapping() {
    // always P between Q and R  =>  G ((Q && !R && F R) => (P U R))
    assert_eq!(
        rewrite("[ always p between q and r ]\n"),
        "(! (true U (! (((q && (! r)) && (true U r)) => (p U r)))))"
    );
}

#[test]
fn rewrites_are_idempotent() {
    let once = desugar_patterns(&desugar_transitions(&first_constraint(
        "[ sometime a -->> b ]\n",
    )));
    let twice = desugar_patterns(&desugar_transitions(&once));
    assert_eq!(once, twice);
}

#[test]
fn bare_set_becomes_some() {
    // [chime] is de-sugared to [some chime]
    let c = ConstraintAst::Bare(ExprAst::Var("chime".into()));
    assert_eq!(
        normalize(&c),
        ConstraintAst::Quant {
            q: QuantKind::Some,
            set: ExprAst::Var("chime".into())
        }
    );
}

#[test]
fn equality_splits_into_two_way_inclusion() {
    let a = || ExprAst::Var("a".into());
    let c = ConstraintAst::Eq(a(), a());
    let n = normalize(&c);
    assert_eq!(
        n,
        ConstraintAst::and(ConstraintAst::In(a(), a()), ConstraintAst::In(a(), a()))
    );
    // and != is its negation
    let ne = normalize(&ConstraintAst::Ne(a(), a()));
    assert_eq!(ne, ConstraintAst::not(n));
}

#[test]
fn normalize_is_idempotent() {
    let c = ConstraintAst::Eq(ExprAst::Var("a".into()), ExprAst::Var("b".into()));
    let once = normalize(&c);
    assert_eq!(normalize(&once), once);
}

#[test]
fn lifting_follows_the_two_level_schema() {
    // A 2..5 / B * / [ p ]  lifts to
    // G (all a : Sing.A | G (all b : a.B | (some b) => (some b.p)))
    let cm = compile("A 2..5\n  B *\n    p 0..1\n    [ p ]\n").unwrap();
    assert_eq!(cm.constraints.len(), 1);
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(
        printed,
        "G (all a : Sing.A | (G (all b : a.B | ((some b) => (some b.p)))))"
    );
}

#[test]
fn depth_one_lifting() {
    let cm = compile("C 0..2\n  p 0..1\n  [ p ]\n").unwrap();
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(printed, "G (all c : Sing.C | ((some c) => (some c.p)))");
}

#[test]
fn top_level_constraints_gain_a_default_g() {
    let cm = compile("A 0..1\n[ some A ]\n").unwrap();
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(printed, "G (some Sing.A)");
}

#[test]
fn top_level_initially_prevents_the_default_g() {
    let cm = compile("A 0..1\n[ initially some A ]\n").unwrap();
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(printed, "initially (some Sing.A)");
    assert!(matches!(
        cm.constraints[0],
        TopConstraint::Initially { .. }
    ));
}

#[test]
fn nested_initially_prints_the_appearance_schema() {
    let cm = compile("S 1..1\n  p 0..1\n  [ initially p ]\n").unwrap();
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(
        printed,
        "G (all s : Sing.S | (((no s) && (X (some s))) => (X (some s.p))))"
    );
}

#[test]
fn finally_marker_rewrites_to_disappearance_guard() {
    let cm = compile("S 0..1\n  p 0..1\n  [ finally p ]\n").unwrap();
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(
        printed,
        "G (all s : Sing.S | ((some s) => (((some s) && (X (no s))) => (some s.p))))"
    );
}

#[test]
fn initial_modifier_adds_initially_to_parent() {
    let cm = compile("M 1..1\n  initial stopped 0..1\n").unwrap();
    // the generated constraint is anchored on M's appearance
    let initially: Vec<&TopConstraint> = cm
        .constraints
        .iter()
        .filter(|t| matches!(t, TopConstraint::Initially { .. }))
        .collect();
    assert_eq!(initially.len(), 1);
    let printed = print_top(&cm, initially[0]);
    assert_eq!(
        printed,
        "G (all m : Sing.M | (((no m) && (X (some m))) => (X (some m.stopped))))"
    );
}

#[test]
fn final_modifier_adds_a_frame_rule() {
    let cm = compile("P 1..1\n  final c 0..1\n").unwrap();
    let frames: Vec<String> = cm
        .constraints
        .iter()
        .map(|t| print_top(&cm, t))
        .filter(|p| p.contains("let"))
        .collect();
    assert_eq!(frames.len(), 1);
    assert_eq!(
        frames[0],
        "G (all p : Sing.P | ((some p) => (let s = p.c | (X ((some p) => ((p.c in s) && (s in p.c)))))))"
    );
}

#[test]
fn initializer_adds_a_dref_equality() {
    let cm = compile(
        "abstract final Command\nmotorStop : Command 1..1\ncmd -> Command 1..1 = motorStop\n",
    )
    .unwrap();
    let printed: Vec<String> = cm.constraints.iter().map(|t| print_top(&cm, t)).collect();
    assert!(
        printed
            .iter()
            .any(|p| p.contains("c.dref in c.parent.motorStop")
                && p.contains("c.parent.motorStop in c.dref")),
        "got: {:?}",
        printed
    );
}

#[test]
fn pipeline_output_is_core_grammar_only() {
    let cm = compile(
        "S 1..1\n  p 0..1\n  q 0..1\n  [ p --> q ]\n  [ initially p ]\n  [ finally q ]\nassert [ never p && q ]\n",
    )
    .unwrap();
    for tc in cm.constraints.iter().chain(cm.assertions.iter()) {
        assert_core_grammar(tc).unwrap();
    }
}

#[test]
fn assertions_are_kept_apart_from_constraints() {
    let cm = compile("A 0..1\nassert [ some A ]\n[ no A ]\n").unwrap();
    assert_eq!(cm.constraints.len(), 1);
    assert_eq!(cm.assertions.len(), 1);
}

#[test]
fn canonical_text_is_stable() {
    let src = "A 2..5\n  B *\n    p 0..1\n    [ p ]\n";
    let a = canonical_text(&compile(src).unwrap());
    let b = canonical_text(&compile(src).unwrap());
    assert_eq!(a, b);
    assert!(a.starts_with("clafers:\n"));
}

#[test]
fn abstract_context_lifts_flat() {
    // Feature's concrete subtypes live under WinFeatures, not under Sing,
    // so the join chain cannot reach them and the lift quantifies flat
    let src = "\
abstract Feature
  [ some this ]
WinFeatures 1..1
  f : Feature 0..1
";
    let cm = compile(src).unwrap();
    let printed = print_top(&cm, &cm.constraints[0]);
    assert_eq!(printed, "G (all f : Sing.Feature | ((some f) => (some f)))");
}
