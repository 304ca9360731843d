//! Lasso traces and constraint evaluation over them.
//!
//! A lasso `s0 … s(k-1)` with loop index `l` denotes the infinite trace
//! `s0 … s(k-1) (sl … s(k-1))^ω`. `Until` is decided by a fixpoint over the
//! cycle followed by a backward pass through the stem, so evaluation
//! terminates without unrolling. A three-valued variant evaluates constraints
//! over loop-free prefixes and is used by the solver to prune search
//! branches whose failure no extension can repair.

use std::collections::BTreeSet;

use crate::core_model::{ConstraintAst, CoreModel, TopConstraint};
use crate::instance::{
    check_structural, eval_expr, live_count, projection, Environment, EvalSet, InstanceId,
    Snapshot, StructuralViolation,
};
use crate::surface::QuantKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoTrace {
    pub snapshots: Vec<Snapshot>,
    /// Loop-back index `l`, `0 ≤ l < k`; the successor of the last snapshot.
    pub loop_index: usize,
}

impl LassoTrace {
    pub fn new(snapshots: Vec<Snapshot>, loop_index: usize) -> LassoTrace {
        assert!(!snapshots.is_empty());
        assert!(loop_index < snapshots.len());
        LassoTrace {
            snapshots,
            loop_index,
        }
    }

    /// The single-snapshot self-loop used for static interpretation.
    pub fn single(s: Snapshot) -> LassoTrace {
        LassoTrace::new(vec![s], 0)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn succ(&self, t: usize) -> usize {
        if t + 1 < self.snapshots.len() {
            t + 1
        } else {
            self.loop_index
        }
    }

    /// Snapshot index at unrolled position `j` of the infinite trace.
    pub fn unrolled(&self, j: usize) -> usize {
        let k = self.snapshots.len();
        if j < k {
            j
        } else {
            let p = k - self.loop_index;
            self.loop_index + (j - self.loop_index) % p
        }
    }

    pub fn to_text(&self, cm: &CoreModel) -> String {
        let mut out = String::new();
        for (t, s) in self.snapshots.iter().enumerate() {
            out.push_str(&format!("snapshot {}\n", t));
            out.push_str(&s.to_text(cm));
        }
        out.push_str(&format!("loop: {}\n", self.loop_index));
        out
    }

    pub fn to_json(&self, cm: &CoreModel) -> serde_json::Value {
        serde_json::json!({
            "snapshots": self.snapshots.iter().map(|s| s.to_json(cm)).collect::<Vec<_>>(),
            "loop": self.loop_index,
        })
    }
}

// ---------------------------------------------------------------------------
// exact evaluation
// ---------------------------------------------------------------------------

/// Evaluate a constraint at position `t` of the lasso.
pub fn eval_constraint(
    cm: &CoreModel,
    trace: &LassoTrace,
    t: usize,
    env: &mut Environment,
    c: &ConstraintAst,
) -> bool {
    use ConstraintAst as C;
    match c {
        C::True => true,
        C::Eq(..) | C::Ne(..) | C::Bare(..) => {
            unreachable!("convenience nodes must be normalized before evaluation")
        }
        C::In(a, b) => {
            let sa = eval_expr(cm, trace, t, env, a);
            let sb = eval_expr(cm, trace, t, env, b);
            projection(&sa).is_subset(&projection(&sb))
        }
        C::Not(a) => !eval_constraint(cm, trace, t, env, a),
        C::And(a, b) => {
            eval_constraint(cm, trace, t, env, a) && eval_constraint(cm, trace, t, env, b)
        }
        C::Or(a, b) => {
            eval_constraint(cm, trace, t, env, a) || eval_constraint(cm, trace, t, env, b)
        }
        C::Implies(a, b) => {
            !eval_constraint(cm, trace, t, env, a) || eval_constraint(cm, trace, t, env, b)
        }
        C::Iff(a, b) => {
            eval_constraint(cm, trace, t, env, a) == eval_constraint(cm, trace, t, env, b)
        }
        C::Next(a) => {
            let nt = trace.succ(t);
            eval_constraint(cm, trace, nt, env, a)
        }
        C::Until(a, b) => until_values(cm, trace, env, a, b)[t],
        C::All { var, set, body } => {
            let s = eval_expr(cm, trace, t, env, set);
            let instances = projection(&s);
            instances.into_iter().all(|i| {
                let mut single = EvalSet::new();
                single.insert((i, t));
                env.bind(var, single);
                let r = eval_constraint(cm, trace, t, env, body);
                env.unbind();
                r
            })
        }
        C::Let { var, set, body } => {
            let s = eval_expr(cm, trace, t, env, set);
            env.bind(var, s);
            let r = eval_constraint(cm, trace, t, env, body);
            env.unbind();
            r
        }
        C::Quant { q, set } => {
            let s = eval_expr(cm, trace, t, env, set);
            apply_quant(*q, live_count(trace, t, &s), usize::MAX)
        }
        C::QuantComp { q, var, set, body } => {
            let s = eval_expr(cm, trace, t, env, set);
            let instances = projection(&s);
            let total = instances.len();
            let mut hits = 0usize;
            for i in instances {
                let mut single = EvalSet::new();
                single.insert((i, t));
                env.bind(var, single);
                if eval_constraint(cm, trace, t, env, body) {
                    hits += 1;
                }
                env.unbind();
            }
            match q {
                QuantKind::All => hits == total,
                _ => apply_quant(*q, hits, total),
            }
        }
    }
}

fn apply_quant(q: QuantKind, n: usize, total: usize) -> bool {
    match q {
        QuantKind::Some => n >= 1,
        QuantKind::No => n == 0,
        QuantKind::One => n == 1,
        QuantKind::Lone => n <= 1,
        QuantKind::All => n == total,
    }
}

/// `ψ1 U ψ2` decided for every lasso position at once: on the cycle by a
/// bounded scan, on the stem by a backward pass.
fn until_values(
    cm: &CoreModel,
    trace: &LassoTrace,
    env: &mut Environment,
    psi1: &ConstraintAst,
    psi2: &ConstraintAst,
) -> Vec<bool> {
    let k = trace.len();
    let l = trace.loop_index;
    let v1: Vec<bool> = (0..k)
        .map(|t| eval_constraint(cm, trace, t, env, psi1))
        .collect();
    let v2: Vec<bool> = (0..k)
        .map(|t| eval_constraint(cm, trace, t, env, psi2))
        .collect();
    let mut u = vec![false; k];
    // cycle positions: scan forward at most one full period
    let period = k - l;
    for t in l..k {
        let mut val = false;
        let mut p = t;
        for _ in 0..period {
            if v2[p] {
                val = true;
                break;
            }
            if !v1[p] {
                break;
            }
            p = trace.succ(p);
        }
        u[t] = val;
    }
    // stem positions backward
    for t in (0..l).rev() {
        u[t] = v2[t] || (v1[t] && u[t + 1]);
    }
    u
}

/// Positions (over the first pass of the lasso) where an instance of a
/// clafer typed by `context` appears: alive at 0, or alive at `t` after
/// being absent at `t - 1`. In a valid trace the loop segment's instance
/// sets are constant, so no appearance is missed.
pub fn appearance_events(
    cm: &CoreModel,
    trace: &LassoTrace,
    context: crate::core_model::ClaferId,
) -> Vec<(InstanceId, usize)> {
    let mut out = Vec::new();
    for t in 0..trace.len() {
        let snap = trace.snapshot(t);
        for (id, info) in &snap.instances {
            if !cm.in_closure(info.clafer, context) {
                continue;
            }
            let fresh = t == 0 || !trace.snapshot(t - 1).alive(*id);
            if fresh {
                out.push((*id, t));
            }
        }
    }
    out
}

/// Evaluate a lifted constraint over the whole trace.
pub fn eval_top(cm: &CoreModel, trace: &LassoTrace, tc: &TopConstraint) -> bool {
    match tc {
        TopConstraint::Global(c) => {
            let mut env = Environment::default();
            eval_constraint(cm, trace, 0, &mut env, c)
        }
        TopConstraint::Initially { context, body } => {
            for (i, t) in appearance_events(cm, trace, *context) {
                let mut env = Environment::default();
                let mut single = EvalSet::new();
                single.insert((i, t));
                env.bind("this", single);
                if !eval_constraint(cm, trace, t, &mut env, body) {
                    return false;
                }
            }
            true
        }
    }
}

// ---------------------------------------------------------------------------
// three-valued prefix evaluation
// ---------------------------------------------------------------------------

type Tv = Option<bool>;

fn tv_not(a: Tv) -> Tv {
    a.map(|x| !x)
}

fn tv_and(a: Tv, b: Tv) -> Tv {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn tv_or(a: Tv, b: Tv) -> Tv {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// Evaluate over the prefix with unknown future; `Some(false)` means no
/// infinite extension of the prefix can satisfy the constraint.
pub fn tv_eval_top(cm: &CoreModel, prefix: &[Snapshot], tc: &TopConstraint) -> Tv {
    // reuse the exact evaluator's expression machinery by viewing the prefix
    // as a pseudo-lasso; positions beyond the prefix are never consulted
    let pseudo = LassoTrace {
        snapshots: prefix.to_vec(),
        loop_index: 0,
    };
    tv_eval_top_pseudo(cm, &pseudo, tc)
}

/// Same, over an already-built pseudo-lasso; the loop index is ignored.
pub fn tv_eval_top_pseudo(cm: &CoreModel, pseudo: &LassoTrace, tc: &TopConstraint) -> Tv {
    match tc {
        TopConstraint::Global(c) => {
            let mut env = Environment::default();
            tv_eval(cm, pseudo, 0, &mut env, c)
        }
        TopConstraint::Initially { context, body } => {
            for (i, t) in appearance_events(cm, pseudo, *context) {
                let mut env = Environment::default();
                let mut single = EvalSet::new();
                single.insert((i, t));
                env.bind("this", single);
                if tv_eval(cm, pseudo, t, &mut env, body) == Some(false) {
                    return Some(false);
                }
            }
            // future appearances may still fail, so never report true
            None
        }
    }
}

fn tv_eval(
    cm: &CoreModel,
    prefix: &LassoTrace,
    t: usize,
    env: &mut Environment,
    c: &ConstraintAst,
) -> Tv {
    use ConstraintAst as C;
    let m = prefix.len();
    if t >= m {
        return None;
    }
    match c {
        C::True => Some(true),
        C::Eq(..) | C::Ne(..) | C::Bare(..) => {
            unreachable!("convenience nodes must be normalized before evaluation")
        }
        C::In(a, b) => {
            let sa = eval_expr(cm, prefix, t, env, a);
            let sb = eval_expr(cm, prefix, t, env, b);
            Some(projection(&sa).is_subset(&projection(&sb)))
        }
        C::Not(a) => tv_not(tv_eval(cm, prefix, t, env, a)),
        C::And(a, b) => tv_and(tv_eval(cm, prefix, t, env, a), tv_eval(cm, prefix, t, env, b)),
        C::Or(a, b) => tv_or(tv_eval(cm, prefix, t, env, a), tv_eval(cm, prefix, t, env, b)),
        C::Implies(a, b) => tv_or(
            tv_not(tv_eval(cm, prefix, t, env, a)),
            tv_eval(cm, prefix, t, env, b),
        ),
        C::Iff(a, b) => match (tv_eval(cm, prefix, t, env, a), tv_eval(cm, prefix, t, env, b)) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        },
        C::Next(a) => {
            if t + 1 < m {
                tv_eval(cm, prefix, t + 1, env, a)
            } else {
                None
            }
        }
        C::Until(a, b) => {
            // backward Kleene recurrence with unknown beyond the prefix
            let mut u: Tv = None;
            for p in (t..m).rev() {
                let v2 = tv_eval(cm, prefix, p, env, b);
                let v1 = tv_eval(cm, prefix, p, env, a);
                u = tv_or(v2, tv_and(v1, u));
            }
            u
        }
        C::All { var, set, body } => {
            let s = eval_expr(cm, prefix, t, env, set);
            let mut acc = Some(true);
            for i in projection(&s) {
                let mut single = EvalSet::new();
                single.insert((i, t));
                env.bind(var, single);
                let r = tv_eval(cm, prefix, t, env, body);
                env.unbind();
                acc = tv_and(acc, r);
                if acc == Some(false) {
                    return acc;
                }
            }
            acc
        }
        C::Let { var, set, body } => {
            let s = eval_expr(cm, prefix, t, env, set);
            env.bind(var, s);
            let r = tv_eval(cm, prefix, t, env, body);
            env.unbind();
            r
        }
        C::Quant { q, set } => {
            let s = eval_expr(cm, prefix, t, env, set);
            Some(apply_quant(*q, live_count(prefix, t, &s), usize::MAX))
        }
        C::QuantComp { q, var, set, body } => {
            let s = eval_expr(cm, prefix, t, env, set);
            let instances = projection(&s);
            let total = instances.len();
            let mut known_hits = 0usize;
            let mut unknown = 0usize;
            for i in instances {
                let mut single = EvalSet::new();
                single.insert((i, t));
                env.bind(var, single);
                match tv_eval(cm, prefix, t, env, body) {
                    Some(true) => known_hits += 1,
                    Some(false) => {}
                    None => unknown += 1,
                }
                env.unbind();
            }
            let lo = known_hits;
            let hi = known_hits + unknown;
            let vals: Vec<bool> = (lo..=hi)
                .map(|n| match q {
                    QuantKind::All => n == total,
                    _ => apply_quant(*q, n, total),
                })
                .collect();
            if vals.iter().all(|v| *v) {
                Some(true)
            } else if vals.iter().all(|v| !*v) {
                Some(false)
            } else {
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// trace satisfaction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    Structural {
        position: usize,
        violation: StructuralViolation,
    },
    /// an instance id present, absent, then present again (the loop segment
    /// counts as repeating forever)
    Reappearance { inst: InstanceId },
    /// an instance changed parent during its lifetime
    ParentChanged { inst: InstanceId, position: usize },
    /// an instance id changed its direct type between snapshots
    TypeChanged { inst: InstanceId, position: usize },
    /// a lifted constraint failed
    ConstraintFailed { index: usize },
}

impl std::fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceViolation::Structural {
                position,
                violation,
            } => write!(f, "snapshot {}: {}", position, violation),
            TraceViolation::Reappearance { inst } => {
                write!(f, "instance {} disappears and reappears", inst.0)
            }
            TraceViolation::ParentChanged { inst, position } => {
                write!(f, "instance {} changes parent at snapshot {}", inst.0, position)
            }
            TraceViolation::TypeChanged { inst, position } => {
                write!(f, "instance {} changes type at snapshot {}", inst.0, position)
            }
            TraceViolation::ConstraintFailed { index } => {
                write!(f, "constraint {} not satisfied by the trace", index)
            }
        }
    }
}

/// Full trace satisfaction: every snapshot structurally valid, instance
/// lifetimes contiguous (with the loop segment stable so nothing reappears
/// on later iterations), parents and types fixed per instance, and every
/// lifted constraint true at position 0.
pub fn check_trace(cm: &CoreModel, trace: &LassoTrace) -> Vec<TraceViolation> {
    let mut out = Vec::new();
    let k = trace.len();
    let l = trace.loop_index;

    for (t, s) in trace.snapshots.iter().enumerate() {
        for v in check_structural(cm, s) {
            out.push(TraceViolation::Structural {
                position: t,
                violation: v,
            });
        }
    }

    // instance lifetimes
    let mut all_ids: BTreeSet<InstanceId> = BTreeSet::new();
    for s in &trace.snapshots {
        all_ids.extend(s.instances.keys().copied());
    }
    for id in all_ids {
        let presence: Vec<bool> = (0..k).map(|t| trace.snapshot(t).alive(id)).collect();
        // contiguity over the stem+loop as written
        let first = presence.iter().position(|p| *p).unwrap();
        let last = presence.iter().rposition(|p| *p).unwrap();
        let contiguous = (first..=last).all(|t| presence[t]);
        if !contiguous {
            out.push(TraceViolation::Reappearance { inst: id });
        } else {
            // loop stability: present anywhere in the loop means present
            // everywhere in it, else the second iteration reappears
            let in_loop = (l..k).any(|t| presence[t]);
            if in_loop && !(l..k).all(|t| presence[t]) {
                out.push(TraceViolation::Reappearance { inst: id });
            }
        }
        // fixed parent and type over the lifetime
        let mut seen: Option<(Option<InstanceId>, crate::core_model::ClaferId)> = None;
        for t in 0..k {
            if let Some(info) = trace.snapshot(t).instances.get(&id) {
                match seen {
                    None => seen = Some((info.parent, info.clafer)),
                    Some((p, c)) => {
                        if info.parent != p {
                            out.push(TraceViolation::ParentChanged {
                                inst: id,
                                position: t,
                            });
                            break;
                        }
                        if info.clafer != c {
                            out.push(TraceViolation::TypeChanged {
                                inst: id,
                                position: t,
                            });
                            break;
                        }
                    }
                }
            }
        }
    }

    for (idx, tc) in cm.constraints.iter().enumerate() {
        if !eval_top(cm, trace, tc) {
            out.push(TraceViolation::ConstraintFailed { index: idx });
        }
    }

    out
}
