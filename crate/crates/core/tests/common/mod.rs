//! Shared helpers for integration tests: hand-built snapshots and the
//! independent explicit-unrolling oracle for lasso evaluation.

#![allow(dead_code)]

use std::collections::BTreeSet;

use claflite_core::core_model::{ClaferId, ConstraintAst, CoreModel};
use claflite_core::instance::{ity_star, InstanceId, Snapshot};
use claflite_core::temporal::LassoTrace;
use claflite_core::QuantKind;

/// Build a snapshot from (id, clafer, parent, link) rows; sing is implicit.
pub fn snapshot(rows: &[(u32, ClaferId, u32, Option<u32>)]) -> Snapshot {
    let mut s = Snapshot::new();
    for (id, clafer, parent, link) in rows {
        s.add(
            InstanceId(*id),
            *clafer,
            Some(InstanceId(*parent)),
            link.map(InstanceId),
        );
    }
    s
}

/// Explicit-unrolling oracle: evaluates a binder-free constraint at unrolled
/// position `j` by scanning the infinite trace directly. Independent of the
/// fixpoint evaluator in `temporal`.
pub fn oracle_eval(cm: &CoreModel, trace: &LassoTrace, j: usize, c: &ConstraintAst) -> bool {
    use ConstraintAst as C;
    match c {
        C::True => true,
        C::In(a, b) => {
            let idx = trace.unrolled(j);
            let sa = oracle_set(cm, trace.snapshot(idx), a);
            let sb = oracle_set(cm, trace.snapshot(idx), b);
            sa.is_subset(&sb)
        }
        C::Quant { q, set } => {
            let idx = trace.unrolled(j);
            let n = oracle_set(cm, trace.snapshot(idx), set).len();
            match q {
                QuantKind::Some => n >= 1,
                QuantKind::No => n == 0,
                QuantKind::One => n == 1,
                QuantKind::Lone => n <= 1,
                QuantKind::All => unreachable!("binder-free formulas only"),
            }
        }
        C::Not(a) => !oracle_eval(cm, trace, j, a),
        C::And(a, b) => oracle_eval(cm, trace, j, a) && oracle_eval(cm, trace, j, b),
        C::Or(a, b) => oracle_eval(cm, trace, j, a) || oracle_eval(cm, trace, j, b),
        C::Implies(a, b) => !oracle_eval(cm, trace, j, a) || oracle_eval(cm, trace, j, b),
        C::Iff(a, b) => oracle_eval(cm, trace, j, a) == oracle_eval(cm, trace, j, b),
        C::Next(a) => oracle_eval(cm, trace, j + 1, a),
        C::Until(a, b) => {
            // every distinct suffix lies within one period past max(j, l)
            let k = trace.len();
            let l = trace.loop_index;
            let period = k - l;
            let limit = j.max(l) + period;
            for p in j..=limit {
                if oracle_eval(cm, trace, p, b) {
                    return true;
                }
                if !oracle_eval(cm, trace, p, a) {
                    return false;
                }
            }
            false
        }
        other => unreachable!("oracle handles binder-free formulas only: {:?}", other),
    }
}

/// Binder-free set denotation at one snapshot: a clafer name denotes all its
/// transitive instances.
fn oracle_set(
    cm: &CoreModel,
    s: &Snapshot,
    e: &claflite_core::core_model::ExprAst,
) -> BTreeSet<InstanceId> {
    use claflite_core::core_model::ExprAst as E;
    match e {
        E::Name(c) => s
            .instances
            .keys()
            .copied()
            .filter(|i| ity_star(cm, s, *i, *c))
            .collect(),
        E::Union(a, b) => {
            let mut x = oracle_set(cm, s, a);
            x.extend(oracle_set(cm, s, b));
            x
        }
        E::Diff(a, b) => {
            let sb = oracle_set(cm, s, b);
            oracle_set(cm, s, a)
                .into_iter()
                .filter(|i| !sb.contains(i))
                .collect()
        }
        E::Inter(a, b) => {
            let sb = oracle_set(cm, s, b);
            oracle_set(cm, s, a)
                .into_iter()
                .filter(|i| sb.contains(i))
                .collect()
        }
        other => unreachable!("oracle sets are unions of names: {:?}", other),
    }
}
