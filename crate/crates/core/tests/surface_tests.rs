//! Surface parser and defaulting behaviour.

use claflite_core::error::ParseError;
use claflite_core::surface::{
    apply_defaults, parse_model, pretty_print, ExprSrc, Interval, QuantKind, RefKind,
};

#[test]
fn minimal_nesting() {
    let m = parse_model("A\n  B\n").unwrap();
    assert_eq!(m.decls.len(), 1);
    assert_eq!(m.decls[0].name, "A");
    assert_eq!(m.decls[0].children.len(), 1);
    assert_eq!(m.decls[0].children[0].name, "B");
}

#[test]
fn tab_is_a_lex_error() {
    match parse_model("A\n\tB\n") {
        Err(ParseError::Lex { msg, .. }) => assert!(msg.contains("tab")),
        other => panic!("expected lex error, got {:?}", other),
    }
}

#[test]
fn dedent_to_unknown_level_is_an_indent_error() {
    let src = "A\n    B\n  C\n";
    match parse_model(src) {
        Err(ParseError::Indent { .. }) => {}
        other => panic!("expected indent error, got {:?}", other),
    }
}

#[test]
fn listing_2_controller_parses() {
    let src = "\
WinController : Component 1..1
  final motor -> WinMotor 1..1

  1..1 winStates : StateMachine 1..1
    movingUp : State 0..1
      [ motor.cmd = motorUp ]
    initial 1..1 stopped : State 0..1
      [ motor.cmd = motorStop ]
      closed : State 0..1
      partlyOpen : State 0..1
      open : State 0..1
    movingDown : State 0..1
      [ motor.cmd = motorDown ]
";
    let m = parse_model(src).unwrap();
    let wc = &m.decls[0];
    assert_eq!(wc.name, "WinController");
    assert_eq!(wc.super_name.as_deref(), Some("Component"));
    assert_eq!(wc.cmult, Some(Interval::new(1, Some(1))));
    let motor = &wc.children[0];
    assert!(motor.is_final);
    assert_eq!(motor.reference, Some((RefKind::Set, "WinMotor".into())));
    let win_states = &wc.children[1];
    assert_eq!(win_states.gcard, Some(Interval::new(1, Some(1))));
    assert_eq!(win_states.cmult, Some(Interval::new(1, Some(1))));
    let stopped = &win_states.children[1];
    assert!(stopped.is_initial);
    assert_eq!(stopped.gcard, Some(Interval::new(1, Some(1))));
    assert_eq!(stopped.children.len(), 3);
    assert_eq!(stopped.constraints.len(), 1);
}

#[test]
fn comment_lines_and_blank_lines_are_ignored() {
    let m = parse_model("// a comment\nA\n\n  // nested comment\n  B\n").unwrap();
    assert_eq!(m.decls[0].children.len(), 1);
}

#[test]
fn constraints_may_span_lines_inside_brackets() {
    let src = "\
A
  B 0..1
  [ one this.B <=>
      one this.B ]
";
    let m = parse_model(src).unwrap();
    assert_eq!(m.decls[0].constraints.len(), 1);
}

#[test]
fn defaults_fill_gcard_and_cmult() {
    let m = apply_defaults(parse_model("A\n  B\n").unwrap());
    let a = &m.decls[0];
    assert_eq!(a.gcard, Some(Interval::new(0, None)));
    assert_eq!(a.cmult, Some(Interval::new(1, Some(1))));
    assert_eq!(a.super_name.as_deref(), Some("clafer"));
    // parent gcard is 0..*, so B defaults to 1..1
    assert_eq!(a.children[0].cmult, Some(Interval::new(1, Some(1))));
}

#[test]
fn defaults_under_xor_parent_are_optional() {
    let m = apply_defaults(parse_model("xor A\n  B\n  C\n").unwrap());
    let a = &m.decls[0];
    assert_eq!(a.gcard, Some(Interval::new(1, Some(1))));
    assert_eq!(a.children[0].cmult, Some(Interval::new(0, Some(1))));
    assert_eq!(a.children[1].cmult, Some(Interval::new(0, Some(1))));
}

#[test]
fn abstract_clafers_default_to_any_multiplicity() {
    let m = apply_defaults(parse_model("abstract Feature\n").unwrap());
    assert_eq!(m.decls[0].cmult, Some(Interval::new(0, None)));
}

#[test]
fn multiplicity_keywords() {
    let m = apply_defaults(parse_model("a ?\nb *\nc +\nexpress : Feature ?\nabstract Feature\n").unwrap());
    assert_eq!(m.decls[0].cmult, Some(Interval::new(0, Some(1))));
    assert_eq!(m.decls[1].cmult, Some(Interval::new(0, None)));
    assert_eq!(m.decls[2].cmult, Some(Interval::new(1, None)));
    assert_eq!(m.decls[3].cmult, Some(Interval::new(0, Some(1))));
}

#[test]
fn group_keywords() {
    let m = parse_model("xor a\nor b\nmux c\n").unwrap();
    assert_eq!(m.decls[0].gcard, Some(Interval::new(1, Some(1))));
    assert_eq!(m.decls[1].gcard, Some(Interval::new(1, None)));
    assert_eq!(m.decls[2].gcard, Some(Interval::new(0, Some(1))));
}

#[test]
fn apply_defaults_is_idempotent() {
    let m = apply_defaults(parse_model("xor A\n  B\n  [ B ]\n").unwrap());
    assert_eq!(apply_defaults(m.clone()), m);
}

#[test]
fn round_trip_defaulted_model() {
    let src = "\
abstract final Command
motorUp : Command 1..1
A
  2..3 B -> Command 0..2
  [ assertive in B ]
  assertive ?
";
    let m = apply_defaults(parse_model(src).unwrap());
    let printed = pretty_print(&m);
    let reparsed = apply_defaults(parse_model(&printed).unwrap());
    assert_eq!(m.strip_positions(), reparsed.strip_positions());
}

#[test]
fn empty_interval_rejected() {
    assert!(matches!(
        parse_model("A 3..1\n"),
        Err(ParseError::Syntax { .. })
    ));
}

#[test]
fn never_scopes_over_conjunction() {
    let m = parse_model("[ never closed && cmd = motorUp ]\n").unwrap();
    match &m.constraints[0].body {
        ExprSrc::Never(inner) => assert!(matches!(**inner, ExprSrc::And(..))),
        other => panic!("expected never(and), got {:?}", other),
    }
}

#[test]
fn arrows_chain_to_the_right() {
    let m = parse_model("[ sometime closed -->> partlyOpen -->> open ]\n").unwrap();
    match &m.constraints[0].body {
        ExprSrc::Sometime(inner) => match &**inner {
            ExprSrc::Arrow { post, .. } => {
                assert!(matches!(**post, ExprSrc::Arrow { .. }))
            }
            other => panic!("expected arrow chain, got {:?}", other),
        },
        other => panic!("expected sometime, got {:?}", other),
    }
}

#[test]
fn guarded_arrow_parses() {
    let m = parse_model("[ basic -[express && req = expressUp]-> movingUpX ]\n").unwrap();
    match &m.constraints[0].body {
        ExprSrc::Arrow { guard, .. } => assert!(guard.is_some()),
        other => panic!("expected guarded arrow, got {:?}", other),
    }
}

#[test]
fn between_pattern_parses() {
    let m = parse_model("[ always req = stop between req = down and req = up ]\n").unwrap();
    assert!(matches!(&m.constraints[0].body, ExprSrc::Between { .. }));
}

#[test]
fn quantifier_forms() {
    let m = parse_model("[ all x : A | some x.B ]\n[ lone (req ++ endOfTravel) ]\n[ not audible ]\n").unwrap();
    assert!(matches!(
        &m.constraints[0].body,
        ExprSrc::QuantComp(QuantKind::All, ..)
    ));
    assert!(matches!(
        &m.constraints[1].body,
        ExprSrc::Quant(QuantKind::Lone, _)
    ));
    assert!(matches!(
        &m.constraints[2].body,
        ExprSrc::Quant(QuantKind::No, _)
    ));
}

#[test]
fn assert_and_markers() {
    let m = parse_model("assert [ sometime open ]\n[ initially stopped ]\n[ finally done ]\n").unwrap();
    assert!(m.constraints[0].is_assert);
    assert_eq!(
        m.constraints[1].marker,
        Some(claflite_core::surface::TimeMarker::Initially)
    );
    assert_eq!(
        m.constraints[2].marker,
        Some(claflite_core::surface::TimeMarker::Finally)
    );
}

#[test]
fn comma_is_union_sugar() {
    let m = parse_model("[ no (a, b) ]\n").unwrap();
    match &m.constraints[0].body {
        ExprSrc::Quant(QuantKind::No, inner) => {
            assert!(matches!(**inner, ExprSrc::Union(..)))
        }
        other => panic!("expected no(union), got {:?}", other),
    }
}

#[test]
fn integer_literals_rejected_in_expressions() {
    assert!(matches!(
        parse_model("[ a = 3 ]\n"),
        Err(ParseError::Syntax { .. })
    ));
}

#[test]
fn parse_is_deterministic() {
    let src = "A\n  B 0..1\n  [ B => next B ]\n";
    assert_eq!(parse_model(src).unwrap(), parse_model(src).unwrap());
}

#[test]
fn initializer_forms_parse() {
    let m = parse_model("cmd -> Command 1..1 = motorStop\nx := y\n").unwrap();
    assert!(m.decls[0].initializer.is_some());
    assert!(m.decls[1].initializer.is_some());
}
