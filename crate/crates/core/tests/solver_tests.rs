//! Bounded enumeration, trace search, and assertion checking.

use claflite_core::pipeline::{compile, compile_goal};
use claflite_core::solver::{
    check_assertion, enumerate_instances, find_trace, AssertMode, AssertVerdict, Goal, LoopChoice,
    Scope,
};
use claflite_core::temporal::check_trace;

const FIG_1A: &str = "\
abstract final FeatureModel
abstract final Feature

WinFeatures : FeatureModel 1..1
  manualUpDown : Feature 1..1
  express : Feature 0..1
    pinchProtection : Feature 0..1
";

const LISTING_1: &str = "\
abstract final FeatureModel
abstract final Feature
abstract final Component

WinFeatures : FeatureModel 1..1
  manualUpDown : Feature 1..1
  express : Feature 0..1
    pinchProtection : Feature 0..1

WinController : Component 1..1
  final motor -> WinMotor 1..1
  pinchDetector : Component 0..1
  [ one this.pinchDetector <=> one WinFeatures.express.pinchProtection ]

WinMotor : Component 1..1
";

#[test]
fn fig_1a_has_exactly_three_variants() {
    let cm = compile(FIG_1A).unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    assert_eq!(r.snapshots.len(), 3);
}

#[test]
fn single_mandatory_clafer_has_one_snapshot() {
    let cm = compile("A 1..1\n").unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    assert_eq!(r.snapshots.len(), 1);
    assert_eq!(r.snapshots[0].instances.len(), 2); // sing + A
}

#[test]
fn presence_condition_couples_detector_to_feature() {
    let cm = compile(LISTING_1).unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    assert_eq!(r.snapshots.len(), 3);
    let pd = cm.by_name("pinchDetector")[0];
    let pp = cm.by_name("pinchProtection")[0];
    for s in &r.snapshots {
        let has_pd = s.instances.values().any(|i| i.clafer == pd);
        let has_pp = s.instances.values().any(|i| i.clafer == pp);
        assert_eq!(has_pd, has_pp);
    }
}

#[test]
fn enumeration_respects_the_limit() {
    let cm = compile(FIG_1A).unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), 1);
    assert_eq!(r.snapshots.len(), 1);
}

#[test]
fn enumeration_is_deterministic() {
    let cm = compile(LISTING_1).unwrap();
    let a = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    let b = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    assert_eq!(a.snapshots, b.snapshots);
}

#[test]
fn parallel_enumeration_matches_sequential() {
    let cm = compile(LISTING_1).unwrap();
    let seq = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    let par = enumerate_instances(
        &cm,
        &Scope {
            jobs: 4,
            ..Scope::default()
        },
        usize::MAX,
    );
    assert_eq!(seq.snapshots, par.snapshots);
}

#[test]
fn enumerated_snapshots_are_pairwise_non_isomorphic() {
    use claflite_core::solver::canonical_key;
    let cm = compile("A 0..2\n  B 0..1\n").unwrap();
    let scope = Scope {
        default_max: 2,
        ..Scope::default()
    };
    let r = enumerate_instances(&cm, &scope, usize::MAX);
    let keys: Vec<_> = r.snapshots.iter().map(canonical_key).collect();
    let distinct: std::collections::BTreeSet<_> = keys.iter().cloned().collect();
    assert_eq!(keys.len(), distinct.len());
    // A absent, one A (with or without B), two As (BB, B-, --): 6 shapes
    assert_eq!(r.snapshots.len(), 6);
}

#[test]
fn scope_exhaustion_is_warned() {
    let cm = compile("A 2..3\n").unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    assert!(r.snapshots.is_empty());
    assert!(r.warnings.iter().any(|w| w.contains("SCOPE-EXHAUSTED")));
}

#[test]
fn chime_variants_enumerate_to_three() {
    // two optional refinements of a mandatory controller: without chime,
    // continuous chime, pulsing chime
    let src = "\
abstract Component
WinController : Component 1..1
WinCtrWithContChime : WinController 0..1
WinCtrWithChime : WinController 0..1
";
    let cm = compile(src).unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    assert_eq!(r.snapshots.len(), 3);
}

#[test]
fn abstract_inherited_constraints_apply_to_subtype_instances() {
    // the constraint under the abstract super restricts every instance of
    // its concrete subtypes
    let src = "\
abstract S
  p 0..1
  [ some this.p ]
a : S 0..1
b : S 0..1
";
    let cm = compile(src).unwrap();
    let r = enumerate_instances(&cm, &Scope::default(), usize::MAX);
    let p = cm.by_name("p")[0];
    for s in &r.snapshots {
        for (id, info) in &s.instances {
            if cm.in_closure(info.clafer, cm.by_name("S")[0]) {
                assert!(
                    s.children_of(*id).any(|(_, c)| c.clafer == p),
                    "an S instance without p slipped through"
                );
            }
        }
    }
    // the scope budget for p is global per snapshot, so a(p)+b(p) needs
    // scope 2: at scope 1 only {}, {a p}, {b p} fit
    assert_eq!(r.snapshots.len(), 3);
    let wide = Scope {
        default_max: 2,
        ..Scope::default()
    };
    let r2 = enumerate_instances(&cm, &wide, usize::MAX);
    assert!(r2.snapshots.len() > r.snapshots.len());
}

// ---------------------------------------------------------------------------
// traces
// ---------------------------------------------------------------------------

#[test]
fn every_found_trace_passes_the_trace_checker() {
    let cm = compile("A 1..1\n  e 0..1\n").unwrap();
    let scope = Scope {
        trace_len: 3,
        ..Scope::default()
    };
    let tr = find_trace(&cm, &scope, &[]).expect("some trace");
    assert!(check_trace(&cm, &tr).is_empty());
}

#[test]
fn contradictory_goal_finds_nothing() {
    let cm = compile("A 1..1\n").unwrap();
    let goal = compile_goal(&cm, "always no A").unwrap();
    let scope = Scope {
        trace_len: 4,
        ..Scope::default()
    };
    assert!(find_trace(&cm, &scope, &[Goal::Require(goal)]).is_none());
}

#[test]
fn unsatisfiable_formula_finds_nothing() {
    let cm = compile("p 0..1\n").unwrap();
    let goal = compile_goal(&cm, "(sometime p) && (always ! p)").unwrap();
    let scope = Scope {
        trace_len: 3,
        ..Scope::default()
    };
    assert!(find_trace(&cm, &scope, &[Goal::Require(goal)]).is_none());
}

#[test]
fn reachability_goal_is_found_and_satisfied() {
    let cm = compile("p 0..1\nq 0..1\n[ p --> q ]\n").unwrap();
    let goal = compile_goal(&cm, "sometime p").unwrap();
    let scope = Scope {
        trace_len: 4,
        ..Scope::default()
    };
    let tr = find_trace(&cm, &scope, &[Goal::Require(goal.clone())]).expect("trace");
    assert!(check_trace(&cm, &tr).is_empty());
    assert!(claflite_core::temporal::eval_top(&cm, &tr, &goal));
    let p = cm.by_name("p")[0];
    assert!(tr
        .snapshots
        .iter()
        .any(|s| s.instances.values().any(|i| i.clafer == p)));
}

#[test]
fn fixed_loop_choice_is_respected() {
    let cm = compile("p 0..1\n").unwrap();
    let goal = compile_goal(&cm, "sometime p").unwrap();
    let scope = Scope {
        trace_len: 4,
        loop_choices: LoopChoice::Fixed(1),
        ..Scope::default()
    };
    let tr = find_trace(&cm, &scope, &[Goal::Require(goal)]).expect("trace");
    assert_eq!(tr.loop_index, 1);
}

#[test]
fn shortest_trace_is_preferred() {
    let cm = compile("p 0..1\n").unwrap();
    let goal = compile_goal(&cm, "sometime p").unwrap();
    let scope = Scope {
        trace_len: 6,
        ..Scope::default()
    };
    let tr = find_trace(&cm, &scope, &[Goal::Require(goal)]).expect("trace");
    assert_eq!(tr.len(), 1);
}

#[test]
fn final_top_level_clafers_never_change() {
    let cm = compile("final f 0..1\ng 0..1\n").unwrap();
    let f = cm.by_name("f")[0];
    // a trace where f appears later would need the set to change
    let goal = compile_goal(&cm, "(no f) && (sometime f)").unwrap();
    let scope = Scope {
        trace_len: 4,
        ..Scope::default()
    };
    assert!(find_trace(&cm, &scope, &[Goal::Require(goal)]).is_none());
    // but a trace with f throughout exists
    let goal2 = compile_goal(&cm, "always f").unwrap();
    let tr = find_trace(&cm, &scope, &[Goal::Require(goal2)]).expect("trace");
    assert!(tr
        .snapshots
        .iter()
        .all(|s| s.instances.values().any(|i| i.clafer == f)));
}

#[test]
fn initial_state_holds_in_the_first_snapshot() {
    let cm = compile("M 1..1\n  xor states 1..1\n    initial s0 0..1\n    s1 0..1\n").unwrap();
    let scope = Scope {
        trace_len: 3,
        ..Scope::default()
    };
    let tr = find_trace(&cm, &scope, &[]).expect("trace");
    let s0 = cm.by_name("s0")[0];
    assert!(tr.snapshots[0]
        .instances
        .values()
        .any(|i| i.clafer == s0));
}

// ---------------------------------------------------------------------------
// assertions
// ---------------------------------------------------------------------------

#[test]
fn witness_mode_passes_with_a_trace() {
    let cm = compile("p 0..1\nassert [ sometime p ]\n").unwrap();
    let scope = Scope {
        trace_len: 3,
        ..Scope::default()
    };
    match check_assertion(&cm, &cm.assertions[0], AssertMode::Witness, &scope) {
        AssertVerdict::Pass(tr) => assert!(check_trace(&cm, &tr).is_empty()),
        other => panic!("expected pass, got {:?}", other),
    }
}

#[test]
fn witness_mode_fails_when_the_model_forces_presence() {
    let cm = compile("WinController 1..1\nassert [ no WinController ]\n").unwrap();
    let scope = Scope {
        trace_len: 2,
        ..Scope::default()
    };
    match check_assertion(&cm, &cm.assertions[0], AssertMode::Witness, &scope) {
        AssertVerdict::FailWithinBound => {}
        other => panic!("expected fail-within-bound, got {:?}", other),
    }
}

#[test]
fn refute_mode_passes_for_a_true_invariant() {
    // q is forced whenever p by a static constraint: never (p && !q) holds
    let cm = compile("p 0..1\nq 0..1\n[ p => q ]\nassert [ never p && ! q ]\n").unwrap();
    let scope = Scope {
        trace_len: 3,
        ..Scope::default()
    };
    match check_assertion(&cm, &cm.assertions[0], AssertMode::Refute, &scope) {
        AssertVerdict::PassWithinBound => {}
        other => panic!("expected pass-within-bound, got {:?}", other),
    }
}

#[test]
fn refute_mode_finds_a_counterexample() {
    let cm = compile("p 0..1\nassert [ never p ]\n").unwrap();
    let scope = Scope {
        trace_len: 3,
        ..Scope::default()
    };
    match check_assertion(&cm, &cm.assertions[0], AssertMode::Refute, &scope) {
        AssertVerdict::Fail(tr) => {
            assert!(check_trace(&cm, &tr).is_empty());
            let p = cm.by_name("p")[0];
            assert!(tr
                .snapshots
                .iter()
                .any(|s| s.instances.values().any(|i| i.clafer == p)));
        }
        other => panic!("expected fail, got {:?}", other),
    }
}

#[test]
fn refuting_true_passes_trivially() {
    let cm = compile("p 0..1\nassert [ always true ]\n").unwrap();
    let scope = Scope {
        trace_len: 2,
        ..Scope::default()
    };
    assert!(check_assertion(&cm, &cm.assertions[0], AssertMode::Refute, &scope).passed());
}
