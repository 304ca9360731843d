//! Rewrites from surface sugar to the constraint core, constraint lifting,
//! and the canonical textual form emitted by the `desugar` command.

use crate::core_model::{
    ClaferId, ConstraintAst, CoreModel, ExprAst, RawConstraint, TopConstraint, ROOT_TYPE, SING,
};
use crate::surface::{ArrowKind, ClaferDecl, ConstraintSrc, ExprSrc, QuantKind, SourceModel, TimeMarker};

// ---------------------------------------------------------------------------
// surface rewrites: transition arrows and property patterns
// ---------------------------------------------------------------------------

/// Rewrite transition arrows:
/// `φ --> ψ` to `φ => next ψ`, `φ -->> ψ` to `φ => (this && φ) U ψ`, and the
/// guarded forms with the precondition strengthened by the guard.
pub fn desugar_transitions(c: &ConstraintSrc) -> ConstraintSrc {
    ConstraintSrc {
        body: rewrite_arrows(&c.body),
        ..c.clone()
    }
}

fn rewrite_arrows(e: &ExprSrc) -> ExprSrc {
    map_expr(e, &|e| match e {
        ExprSrc::Arrow {
            kind,
            guard,
            pre,
            post,
        } => {
            let lhs = match guard {
                Some(g) => ExprSrc::And(pre.clone(), g.clone()),
                None => (**pre).clone(),
            };
            match kind {
                ArrowKind::Next => Some(ExprSrc::Implies(
                    Box::new(lhs),
                    Box::new(ExprSrc::Next(post.clone())),
                )),
                ArrowKind::Multi => Some(ExprSrc::Implies(
                    Box::new(lhs),
                    Box::new(ExprSrc::Until(
                        Box::new(ExprSrc::And(
                            Box::new(ExprSrc::This(Default::default())),
                            pre.clone(),
                        )),
                        post.clone(),
                    )),
                )),
            }
        }
        _ => None,
    })
}

/// Rewrite the property patterns:
/// `always φ` to `G φ`, `never φ` to `G !φ`, `sometime φ` to `F φ`,
/// `next φ` stays the temporal next, and
/// `always P between Q and R` to `G ((Q && !R && F R) => (P U R))`,
/// with `G φ ≡ !(true U !φ)` and `F φ ≡ true U φ`.
pub fn desugar_patterns(c: &ConstraintSrc) -> ConstraintSrc {
    ConstraintSrc {
        body: rewrite_patterns(&c.body),
        ..c.clone()
    }
}

fn g_src(e: ExprSrc) -> ExprSrc {
    ExprSrc::Not(Box::new(ExprSrc::Until(
        Box::new(ExprSrc::True),
        Box::new(ExprSrc::Not(Box::new(e))),
    )))
}

fn f_src(e: ExprSrc) -> ExprSrc {
    ExprSrc::Until(Box::new(ExprSrc::True), Box::new(e))
}

fn rewrite_patterns(e: &ExprSrc) -> ExprSrc {
    map_expr(e, &|e| match e {
        ExprSrc::Always(a) => Some(g_src((**a).clone())),
        // G !φ is !(true U φ)
        ExprSrc::Never(a) => Some(ExprSrc::Not(Box::new(f_src((**a).clone())))),
        ExprSrc::Sometime(a) => Some(f_src((**a).clone())),
        ExprSrc::Between { body, q, r } => {
            let not_r = ExprSrc::Not(r.clone());
            let antecedent = ExprSrc::And(
                Box::new(ExprSrc::And(q.clone(), Box::new(not_r))),
                Box::new(f_src((**r).clone())),
            );
            let consequent = ExprSrc::Until(body.clone(), r.clone());
            Some(g_src(ExprSrc::Implies(
                Box::new(antecedent),
                Box::new(consequent),
            )))
        }
        _ => None,
    })
}

/// Bottom-up structural map; `f` fires on the already-rewritten node.
fn map_expr(e: &ExprSrc, f: &dyn Fn(&ExprSrc) -> Option<ExprSrc>) -> ExprSrc {
    use ExprSrc as E;
    let rebuilt = match e {
        E::True | E::Name(..) | E::This(_) => e.clone(),
        E::Until(a, b) => E::Until(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Join(a, b) => E::Join(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Parent(a) => E::Parent(Box::new(map_expr(a, f))),
        E::Dref(a) => E::Dref(Box::new(map_expr(a, f))),
        E::Union(a, b) => E::Union(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Diff(a, b) => E::Diff(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Inter(a, b) => E::Inter(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::In(a, b) => E::In(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Eq(a, b) => E::Eq(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Ne(a, b) => E::Ne(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Not(a) => E::Not(Box::new(map_expr(a, f))),
        E::And(a, b) => E::And(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Or(a, b) => E::Or(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Implies(a, b) => E::Implies(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Iff(a, b) => E::Iff(Box::new(map_expr(a, f)), Box::new(map_expr(b, f))),
        E::Quant(q, a) => E::Quant(*q, Box::new(map_expr(a, f))),
        E::QuantComp(q, x, s, b) => E::QuantComp(
            *q,
            x.clone(),
            Box::new(map_expr(s, f)),
            Box::new(map_expr(b, f)),
        ),
        E::Let(x, s, b) => E::Let(x.clone(), Box::new(map_expr(s, f)), Box::new(map_expr(b, f))),
        E::Next(a) => E::Next(Box::new(map_expr(a, f))),
        E::Sometime(a) => E::Sometime(Box::new(map_expr(a, f))),
        E::Always(a) => E::Always(Box::new(map_expr(a, f))),
        E::Never(a) => E::Never(Box::new(map_expr(a, f))),
        E::Between { body, q, r } => E::Between {
            body: Box::new(map_expr(body, f)),
            q: Box::new(map_expr(q, f)),
            r: Box::new(map_expr(r, f)),
        },
        E::Arrow {
            kind,
            guard,
            pre,
            post,
        } => E::Arrow {
            kind: *kind,
            guard: guard.as_ref().map(|g| Box::new(map_expr(g, f))),
            pre: Box::new(map_expr(pre, f)),
            post: Box::new(map_expr(post, f)),
        },
    };
    f(&rebuilt).unwrap_or(rebuilt)
}

/// Run both rewrite passes over every constraint in a source model.
pub fn rewrite_model(m: &SourceModel) -> SourceModel {
    fn rw(c: &ConstraintSrc) -> ConstraintSrc {
        desugar_patterns(&desugar_transitions(c))
    }
    fn rw_decl(d: &ClaferDecl) -> ClaferDecl {
        ClaferDecl {
            constraints: d.constraints.iter().map(rw).collect(),
            children: d.children.iter().map(rw_decl).collect(),
            initializer: d
                .initializer
                .as_ref()
                .map(|(k, e)| (*k, rewrite_patterns(&rewrite_arrows(e)))),
            ..d.clone()
        }
    }
    SourceModel {
        decls: m.decls.iter().map(rw_decl).collect(),
        constraints: m.constraints.iter().map(rw).collect(),
    }
}

// ---------------------------------------------------------------------------
// modifier expansion
// ---------------------------------------------------------------------------

/// Expand the `initial` and `final` clafer modifiers and the `finally`
/// constraint marker into raw constraints.
///
/// `initial c` adds `[initially c]` to c's parent. `final c` adds a frame
/// rule to c's parent: while the parent instance persists into the next
/// snapshot, its set of c-children next equals its set now. `finally φ`
/// becomes `(this && next no this) => φ`. Both modifiers propagate by
/// inheritance.
pub fn desugar_modifiers(cm: &CoreModel, raws: &mut Vec<RawConstraint>) {
    // finally marker: rewrite in place
    for r in raws.iter_mut() {
        if r.marker == Some(TimeMarker::Finally) {
            let body = std::mem::replace(&mut r.ast, ConstraintAst::True);
            let antecedent = ConstraintAst::and(
                ConstraintAst::Bare(ExprAst::This),
                ConstraintAst::Next(Box::new(ConstraintAst::Quant {
                    q: QuantKind::No,
                    set: ExprAst::This,
                })),
            );
            r.ast = ConstraintAst::implies(antecedent, body);
            r.marker = None;
        }
    }

    // initial modifier: parent gains [initially some this.c]
    for c in &cm.clafers {
        if c.id == SING || c.id == ROOT_TYPE || c.is_abstract {
            continue;
        }
        if !cm.is_effectively_initial(c.id) {
            continue;
        }
        let parent = c.parent.expect("non-root clafer has a parent");
        raws.push(RawConstraint {
            context: parent,
            is_assert: false,
            marker: Some(TimeMarker::Initially),
            ast: ConstraintAst::Bare(ExprAst::Join(
                Box::new(ExprAst::This),
                Box::new(ExprAst::Name(c.id)),
            )),
        });
    }

    // final modifier: frame rule on the parent
    for c in &cm.clafers {
        if c.id == SING || c.id == ROOT_TYPE || c.is_abstract {
            continue;
        }
        if !cm.is_effectively_final(c.id) {
            continue;
        }
        let parent = c.parent.expect("non-root clafer has a parent");
        let children = || ExprAst::Join(Box::new(ExprAst::This), Box::new(ExprAst::Name(c.id)));
        let frame = ConstraintAst::Let {
            var: "s".to_string(),
            set: children(),
            body: Box::new(ConstraintAst::Next(Box::new(ConstraintAst::implies(
                ConstraintAst::Bare(ExprAst::This),
                ConstraintAst::Eq(children(), ExprAst::Var("s".to_string())),
            )))),
        };
        raws.push(RawConstraint {
            context: parent,
            is_assert: false,
            marker: None,
            ast: frame,
        });
    }
}

// ---------------------------------------------------------------------------
// lifting
// ---------------------------------------------------------------------------

/// Lift every raw constraint to top level. A constraint nested under the
/// chain `Sing ▸ c1 ▸ … ▸ cn` becomes
/// `G (all x1 : Sing.c1 | G (all x2 : x1.c2 | … xn => φ(xn) …))`;
/// a top-level constraint gains a leading `G` unless marked `initially`.
///
/// When a chain clafer has concrete subtypes declared under a different
/// parent, the join chain cannot reach their instances; such constraints are
/// lifted flat over all instances of the context clafer instead.
pub fn lift_constraints(cm: &CoreModel, raws: Vec<RawConstraint>) -> (Vec<TopConstraint>, Vec<TopConstraint>) {
    let mut constraints = Vec::new();
    let mut assertions = Vec::new();
    for r in raws {
        let lifted = lift_one(cm, &r);
        if r.is_assert {
            assertions.push(lifted);
        } else {
            constraints.push(lifted);
        }
    }
    (constraints, assertions)
}

fn lift_one(cm: &CoreModel, r: &RawConstraint) -> TopConstraint {
    if r.marker == Some(TimeMarker::Initially) {
        return TopConstraint::Initially {
            context: r.context,
            body: r.ast.clone(),
        };
    }
    if r.context == SING {
        let body = subst_this(&r.ast, &ExprAst::Name(SING));
        return TopConstraint::Global(ConstraintAst::globally(body));
    }
    let chain = cm.context_chain(r.context);
    let binders = binder_names(cm, &chain, &r.ast);
    if chain_is_join_complete(cm, &chain) {
        let last = binders.last().unwrap().clone();
        let mut node = ConstraintAst::implies(
            ConstraintAst::Bare(ExprAst::Var(last.clone())),
            subst_this(&r.ast, &ExprAst::Var(last)),
        );
        for i in (0..chain.len()).rev() {
            let prev: ExprAst = if i == 0 {
                ExprAst::Name(SING)
            } else {
                ExprAst::Var(binders[i - 1].clone())
            };
            let set = ExprAst::Join(Box::new(prev), Box::new(ExprAst::Name(chain[i])));
            node = ConstraintAst::globally(ConstraintAst::All {
                var: binders[i].clone(),
                set,
                body: Box::new(node),
            });
        }
        TopConstraint::Global(node)
    } else {
        let x = binders.last().unwrap().clone();
        let body = ConstraintAst::implies(
            ConstraintAst::Bare(ExprAst::Var(x.clone())),
            subst_this(&r.ast, &ExprAst::Var(x.clone())),
        );
        TopConstraint::Global(ConstraintAst::globally(ConstraintAst::All {
            var: x,
            set: ExprAst::Name(r.context),
            body: Box::new(body),
        }))
    }
}

/// True when every clafer on the chain keeps all its concrete subtypes under
/// the same declared parent, so nested joins reach every instance.
fn chain_is_join_complete(cm: &CoreModel, chain: &[ClaferId]) -> bool {
    chain.iter().all(|c| {
        let parent = cm.info(*c).parent;
        cm.concrete_subtypes(*c)
            .iter()
            .all(|d| cm.info(*d).parent == parent)
    })
}

fn binder_names(cm: &CoreModel, chain: &[ClaferId], body: &ConstraintAst) -> Vec<String> {
    let mut used = std::collections::BTreeSet::new();
    collect_vars(body, &mut used);
    let mut out = Vec::new();
    for c in chain {
        let base: String = cm
            .info(*c)
            .name
            .chars()
            .next()
            .unwrap_or('x')
            .to_ascii_lowercase()
            .to_string();
        let mut candidate = base.clone();
        let mut n = 1;
        while used.contains(&candidate) || out.contains(&candidate) {
            n += 1;
            candidate = format!("{}{}", base, n);
        }
        used.insert(candidate.clone());
        out.push(candidate);
    }
    out
}

fn collect_vars(c: &ConstraintAst, out: &mut std::collections::BTreeSet<String>) {
    use ConstraintAst as C;
    match c {
        C::True => {}
        C::In(a, b) | C::Eq(a, b) | C::Ne(a, b) => {
            collect_vars_expr(a, out);
            collect_vars_expr(b, out);
        }
        C::Bare(e) => collect_vars_expr(e, out),
        C::Not(a) | C::Next(a) => collect_vars(a, out),
        C::And(a, b) | C::Or(a, b) | C::Implies(a, b) | C::Iff(a, b) | C::Until(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        C::All { var, set, body } | C::Let { var, set, body } => {
            out.insert(var.clone());
            collect_vars_expr(set, out);
            collect_vars(body, out);
        }
        C::Quant { set, .. } => collect_vars_expr(set, out),
        C::QuantComp { var, set, body, .. } => {
            out.insert(var.clone());
            collect_vars_expr(set, out);
            collect_vars(body, out);
        }
    }
}

fn collect_vars_expr(e: &ExprAst, out: &mut std::collections::BTreeSet<String>) {
    match e {
        ExprAst::Var(x) => {
            out.insert(x.clone());
        }
        ExprAst::Name(_) | ExprAst::This => {}
        ExprAst::Join(a, b) | ExprAst::Union(a, b) | ExprAst::Diff(a, b) | ExprAst::Inter(a, b) => {
            collect_vars_expr(a, out);
            collect_vars_expr(b, out);
        }
        ExprAst::Dref(a) | ExprAst::Parent(a) => collect_vars_expr(a, out),
    }
}

/// Substitute `this` by the given expression.
pub fn subst_this(c: &ConstraintAst, with: &ExprAst) -> ConstraintAst {
    use ConstraintAst as C;
    match c {
        C::True => C::True,
        C::In(a, b) => C::In(subst_this_expr(a, with), subst_this_expr(b, with)),
        C::Eq(a, b) => C::Eq(subst_this_expr(a, with), subst_this_expr(b, with)),
        C::Ne(a, b) => C::Ne(subst_this_expr(a, with), subst_this_expr(b, with)),
        C::Bare(e) => C::Bare(subst_this_expr(e, with)),
        C::Not(a) => C::not(subst_this(a, with)),
        C::And(a, b) => C::and(subst_this(a, with), subst_this(b, with)),
        C::Or(a, b) => C::Or(Box::new(subst_this(a, with)), Box::new(subst_this(b, with))),
        C::Implies(a, b) => C::implies(subst_this(a, with), subst_this(b, with)),
        C::Iff(a, b) => C::Iff(Box::new(subst_this(a, with)), Box::new(subst_this(b, with))),
        C::Next(a) => C::Next(Box::new(subst_this(a, with))),
        C::Until(a, b) => C::Until(Box::new(subst_this(a, with)), Box::new(subst_this(b, with))),
        C::All { var, set, body } => C::All {
            var: var.clone(),
            set: subst_this_expr(set, with),
            body: Box::new(subst_this(body, with)),
        },
        C::Let { var, set, body } => C::Let {
            var: var.clone(),
            set: subst_this_expr(set, with),
            body: Box::new(subst_this(body, with)),
        },
        C::Quant { q, set } => C::Quant {
            q: *q,
            set: subst_this_expr(set, with),
        },
        C::QuantComp { q, var, set, body } => C::QuantComp {
            q: *q,
            var: var.clone(),
            set: subst_this_expr(set, with),
            body: Box::new(subst_this(body, with)),
        },
    }
}

fn subst_this_expr(e: &ExprAst, with: &ExprAst) -> ExprAst {
    match e {
        ExprAst::This => with.clone(),
        ExprAst::Name(c) => ExprAst::Name(*c),
        ExprAst::Var(x) => ExprAst::Var(x.clone()),
        ExprAst::Join(a, b) => ExprAst::Join(
            Box::new(subst_this_expr(a, with)),
            Box::new(subst_this_expr(b, with)),
        ),
        ExprAst::Dref(a) => ExprAst::Dref(Box::new(subst_this_expr(a, with))),
        ExprAst::Parent(a) => ExprAst::Parent(Box::new(subst_this_expr(a, with))),
        ExprAst::Union(a, b) => ExprAst::Union(
            Box::new(subst_this_expr(a, with)),
            Box::new(subst_this_expr(b, with)),
        ),
        ExprAst::Diff(a, b) => ExprAst::Diff(
            Box::new(subst_this_expr(a, with)),
            Box::new(subst_this_expr(b, with)),
        ),
        ExprAst::Inter(a, b) => ExprAst::Inter(
            Box::new(subst_this_expr(a, with)),
            Box::new(subst_this_expr(b, with)),
        ),
    }
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

/// Remove the convenience nodes: a bare set expression in boolean position
/// becomes `some e`; `e1 = e2` becomes two-way inclusion; `!=` its negation.
/// Idempotent.
pub fn normalize(c: &ConstraintAst) -> ConstraintAst {
    use ConstraintAst as C;
    match c {
        C::True => C::True,
        C::Bare(e) => C::Quant {
            q: QuantKind::Some,
            set: e.clone(),
        },
        C::Eq(a, b) => C::and(C::In(a.clone(), b.clone()), C::In(b.clone(), a.clone())),
        C::Ne(a, b) => C::not(C::and(C::In(a.clone(), b.clone()), C::In(b.clone(), a.clone()))),
        C::In(a, b) => C::In(a.clone(), b.clone()),
        C::Not(a) => C::not(normalize(a)),
        C::And(a, b) => C::and(normalize(a), normalize(b)),
        C::Or(a, b) => C::Or(Box::new(normalize(a)), Box::new(normalize(b))),
        C::Implies(a, b) => C::implies(normalize(a), normalize(b)),
        C::Iff(a, b) => C::Iff(Box::new(normalize(a)), Box::new(normalize(b))),
        C::Next(a) => C::Next(Box::new(normalize(a))),
        C::Until(a, b) => C::Until(Box::new(normalize(a)), Box::new(normalize(b))),
        C::All { var, set, body } => C::All {
            var: var.clone(),
            set: set.clone(),
            body: Box::new(normalize(body)),
        },
        C::Let { var, set, body } => C::Let {
            var: var.clone(),
            set: set.clone(),
            body: Box::new(normalize(body)),
        },
        C::Quant { q, set } => C::Quant {
            q: *q,
            set: set.clone(),
        },
        C::QuantComp { q, var, set, body } => C::QuantComp {
            q: *q,
            var: var.clone(),
            set: set.clone(),
            body: Box::new(normalize(body)),
        },
    }
}

pub fn normalize_top(tc: &TopConstraint) -> TopConstraint {
    match tc {
        TopConstraint::Global(c) => TopConstraint::Global(normalize(c)),
        TopConstraint::Initially { context, body } => TopConstraint::Initially {
            context: *context,
            body: normalize(body),
        },
    }
}

/// After the full pipeline only core-grammar nodes remain: no `Eq`, `Ne`,
/// `Bare`, and no free `this` outside initially-anchored bodies.
pub fn assert_core_grammar(tc: &TopConstraint) -> Result<(), String> {
    fn walk(c: &ConstraintAst, this_ok: bool, bound: &mut Vec<String>) -> Result<(), String> {
        use ConstraintAst as C;
        match c {
            C::True => Ok(()),
            C::Eq(..) => Err("Eq survived normalization".into()),
            C::Ne(..) => Err("Ne survived normalization".into()),
            C::Bare(..) => Err("bare set expression survived normalization".into()),
            C::In(a, b) => {
                walk_expr(a, this_ok, bound)?;
                walk_expr(b, this_ok, bound)
            }
            C::Not(a) | C::Next(a) => walk(a, this_ok, bound),
            C::And(a, b) | C::Or(a, b) | C::Implies(a, b) | C::Iff(a, b) | C::Until(a, b) => {
                walk(a, this_ok, bound)?;
                walk(b, this_ok, bound)
            }
            C::All { var, set, body }
            | C::Let { var, set, body }
            | C::QuantComp { var, set, body, .. } => {
                walk_expr(set, this_ok, bound)?;
                bound.push(var.clone());
                let r = walk(body, this_ok, bound);
                bound.pop();
                r
            }
            C::Quant { set, .. } => walk_expr(set, this_ok, bound),
        }
    }
    fn walk_expr(e: &ExprAst, this_ok: bool, bound: &mut Vec<String>) -> Result<(), String> {
        match e {
            ExprAst::This if !this_ok => Err("free `this` survived lifting".into()),
            ExprAst::This | ExprAst::Name(_) => Ok(()),
            ExprAst::Var(x) => {
                if bound.contains(x) {
                    Ok(())
                } else {
                    Err(format!("unbound variable `{}`", x))
                }
            }
            ExprAst::Join(a, b)
            | ExprAst::Union(a, b)
            | ExprAst::Diff(a, b)
            | ExprAst::Inter(a, b) => {
                walk_expr(a, this_ok, bound)?;
                walk_expr(b, this_ok, bound)
            }
            ExprAst::Dref(a) | ExprAst::Parent(a) => walk_expr(a, this_ok, bound),
        }
    }
    let mut bound = Vec::new();
    match tc {
        TopConstraint::Global(c) => walk(c, false, &mut bound),
        TopConstraint::Initially { body, .. } => walk(body, true, &mut bound),
    }
}

// ---------------------------------------------------------------------------
// canonical textual form
// ---------------------------------------------------------------------------

/// Print a constraint in the canonical fully parenthesized form, `G`/`F`
/// shown as sugar for their until encodings.
pub fn print_constraint(c: &ConstraintAst) -> String {
    print_c(c, true)
}

fn print_c(c: &ConstraintAst, root: bool) -> String {
    use ConstraintAst as C;
    let wrap = |s: String| if root { s } else { format!("({})", s) };
    match c {
        // G φ ≡ !(true U !φ)
        C::Not(inner) => {
            if let C::Until(l, r) = inner.as_ref() {
                if matches!(l.as_ref(), C::True) {
                    return match r.as_ref() {
                        C::Not(x) => wrap(format!("G {}", print_c(x, false))),
                        x => wrap(format!("G {}", print_c(&C::not(x.clone()), false))),
                    };
                }
            }
            wrap(format!("! {}", print_c(inner, false)))
        }
        C::Until(l, r) if matches!(l.as_ref(), C::True) => {
            wrap(format!("F {}", print_c(r, false)))
        }
        C::True => "true".to_string(),
        C::In(a, b) => wrap(format!("{} in {}", print_e(a), print_e(b))),
        C::Eq(a, b) => wrap(format!("{} = {}", print_e(a), print_e(b))),
        C::Ne(a, b) => wrap(format!("{} != {}", print_e(a), print_e(b))),
        C::Bare(e) => print_e(e),
        C::And(a, b) => wrap(format!("{} && {}", print_c(a, false), print_c(b, false))),
        C::Or(a, b) => wrap(format!("{} || {}", print_c(a, false), print_c(b, false))),
        C::Implies(a, b) => wrap(format!("{} => {}", print_c(a, false), print_c(b, false))),
        C::Iff(a, b) => wrap(format!("{} <=> {}", print_c(a, false), print_c(b, false))),
        C::Next(a) => wrap(format!("X {}", print_c(a, false))),
        C::Until(a, b) => wrap(format!("{} U {}", print_c(a, false), print_c(b, false))),
        C::All { var, set, body } => wrap(format!(
            "all {} : {} | {}",
            var,
            print_e(set),
            print_c(body, false)
        )),
        C::Let { var, set, body } => wrap(format!(
            "let {} = {} | {}",
            var,
            print_e(set),
            print_c(body, false)
        )),
        C::Quant { q, set } => wrap(format!("{} {}", q.keyword(), print_e(set))),
        C::QuantComp { q, var, set, body } => wrap(format!(
            "{} {} : {} | {}",
            q.keyword(),
            var,
            print_e(set),
            print_c(body, false)
        )),
    }
}

fn print_e(e: &ExprAst) -> String {
    match e {
        ExprAst::Name(SING) => "Sing".to_string(),
        ExprAst::Name(c) => format!("<clafer {}>", c.0),
        ExprAst::Var(x) => x.clone(),
        ExprAst::This => "this".to_string(),
        ExprAst::Join(a, b) => format!("{}.{}", print_e(a), print_e(b)),
        ExprAst::Dref(a) => format!("{}.dref", print_e(a)),
        ExprAst::Parent(a) => format!("{}.parent", print_e(a)),
        ExprAst::Union(a, b) => format!("({} ++ {})", print_e(a), print_e(b)),
        ExprAst::Diff(a, b) => format!("({} -- {})", print_e(a), print_e(b)),
        ExprAst::Inter(a, b) => format!("({} ** {})", print_e(a), print_e(b)),
    }
}

/// Same as [`print_constraint`] but with clafer names from the model; join
/// legs print as simple names, standalone names as absolute paths.
pub fn print_constraint_named(cm: &CoreModel, c: &ConstraintAst) -> String {
    print_cn(cm, c, true)
}

fn print_cn(cm: &CoreModel, c: &ConstraintAst, root: bool) -> String {
    use ConstraintAst as C;
    let wrap = |s: String| if root { s } else { format!("({})", s) };
    match c {
        C::Not(inner) => {
            if let C::Until(l, r) = inner.as_ref() {
                if matches!(l.as_ref(), C::True) {
                    return match r.as_ref() {
                        C::Not(x) => wrap(format!("G {}", print_cn(cm, x, false))),
                        x => wrap(format!("G {}", print_cn(cm, &C::not(x.clone()), false))),
                    };
                }
            }
            wrap(format!("! {}", print_cn(cm, inner, false)))
        }
        C::Until(l, r) if matches!(l.as_ref(), C::True) => {
            wrap(format!("F {}", print_cn(cm, r, false)))
        }
        C::True => "true".to_string(),
        C::In(a, b) => wrap(format!("{} in {}", print_en(cm, a, false), print_en(cm, b, false))),
        C::Eq(a, b) => wrap(format!("{} = {}", print_en(cm, a, false), print_en(cm, b, false))),
        C::Ne(a, b) => wrap(format!("{} != {}", print_en(cm, a, false), print_en(cm, b, false))),
        C::Bare(e) => print_en(cm, e, false),
        C::And(a, b) => wrap(format!("{} && {}", print_cn(cm, a, false), print_cn(cm, b, false))),
        C::Or(a, b) => wrap(format!("{} || {}", print_cn(cm, a, false), print_cn(cm, b, false))),
        C::Implies(a, b) => wrap(format!(
            "{} => {}",
            print_cn(cm, a, false),
            print_cn(cm, b, false)
        )),
        C::Iff(a, b) => wrap(format!(
            "{} <=> {}",
            print_cn(cm, a, false),
            print_cn(cm, b, false)
        )),
        C::Next(a) => wrap(format!("X {}", print_cn(cm, a, false))),
        C::Until(a, b) => wrap(format!(
            "{} U {}",
            print_cn(cm, a, false),
            print_cn(cm, b, false)
        )),
        C::All { var, set, body } => wrap(format!(
            "all {} : {} | {}",
            var,
            print_en(cm, set, false),
            print_cn(cm, body, false)
        )),
        C::Let { var, set, body } => wrap(format!(
            "let {} = {} | {}",
            var,
            print_en(cm, set, false),
            print_cn(cm, body, false)
        )),
        C::Quant { q, set } => wrap(format!("{} {}", q.keyword(), print_en(cm, set, false))),
        C::QuantComp { q, var, set, body } => wrap(format!(
            "{} {} : {} | {}",
            q.keyword(),
            var,
            print_en(cm, set, false),
            print_cn(cm, body, false)
        )),
    }
}

fn print_en(cm: &CoreModel, e: &ExprAst, join_leg: bool) -> String {
    match e {
        ExprAst::Name(c) => {
            if *c == SING {
                "Sing".to_string()
            } else if join_leg {
                cm.info(*c).name.clone()
            } else {
                format!("Sing.{}", cm.info(*c).path)
            }
        }
        ExprAst::Var(x) => x.clone(),
        ExprAst::This => "this".to_string(),
        ExprAst::Join(a, b) => format!("{}.{}", print_en(cm, a, false), print_en(cm, b, true)),
        ExprAst::Dref(a) => format!("{}.dref", print_en(cm, a, false)),
        ExprAst::Parent(a) => format!("{}.parent", print_en(cm, a, false)),
        ExprAst::Union(a, b) => format!(
            "({} ++ {})",
            print_en(cm, a, false),
            print_en(cm, b, false)
        ),
        ExprAst::Diff(a, b) => format!(
            "({} -- {})",
            print_en(cm, a, false),
            print_en(cm, b, false)
        ),
        ExprAst::Inter(a, b) => format!(
            "({} ** {})",
            print_en(cm, a, false),
            print_en(cm, b, false)
        ),
    }
}

/// The canonical text form of a fully desugared model, used for golden-file
/// testing: the clafer table, then one line per constraint and assertion.
pub fn canonical_text(cm: &CoreModel) -> String {
    let mut out = String::new();
    out.push_str("clafers:\n");
    for c in cm.clafers.iter().skip(2) {
        out.push_str("  ");
        if c.is_abstract {
            out.push_str("abstract ");
        }
        if c.is_final {
            out.push_str("final ");
        }
        if c.is_initial {
            out.push_str("initial ");
        }
        out.push_str(&c.path);
        out.push_str(&format!(" gcard {}", c.gcard));
        let sup = match c.super_id {
            Some(s) if s != ROOT_TYPE => cm.info(s).path.clone(),
            _ => "clafer".to_string(),
        };
        out.push_str(&format!(" : {}", sup));
        if let Some((kind, t)) = c.reference {
            let arrow = match kind {
                crate::surface::RefKind::Set => "->",
                crate::surface::RefKind::Bag => "->>",
            };
            out.push_str(&format!(" {} {}", arrow, cm.info(t).path));
        }
        out.push_str(&format!(" cmult {}", c.cmult));
        out.push('\n');
    }
    out.push_str("constraints:\n");
    for tc in &cm.constraints {
        out.push_str("  ");
        out.push_str(&print_top(cm, tc));
        out.push('\n');
    }
    out.push_str("assertions:\n");
    for tc in &cm.assertions {
        out.push_str("  ");
        out.push_str(&print_top(cm, tc));
        out.push('\n');
    }
    out
}

/// Render a lifted constraint. Initially-anchored constraints print in the
/// appearance schema `(no x && X (some x)) => X φ(x)` under their context
/// chain; with the root context they print as `initially φ`.
pub fn print_top(cm: &CoreModel, tc: &TopConstraint) -> String {
    match tc {
        TopConstraint::Global(c) => print_cn(cm, c, true),
        TopConstraint::Initially { context, body } => {
            if *context == SING {
                let b = subst_this(body, &ExprAst::Name(SING));
                format!("initially {}", print_cn(cm, &normalize(&b), false))
            } else {
                let chain = cm.context_chain(*context);
                let binders = binder_names(cm, &chain, body);
                let x = binders.last().unwrap().clone();
                let appear = ConstraintAst::and(
                    ConstraintAst::Quant {
                        q: QuantKind::No,
                        set: ExprAst::Var(x.clone()),
                    },
                    ConstraintAst::Next(Box::new(ConstraintAst::Quant {
                        q: QuantKind::Some,
                        set: ExprAst::Var(x.clone()),
                    })),
                );
                let mut node = ConstraintAst::implies(
                    appear,
                    ConstraintAst::Next(Box::new(normalize(&subst_this(
                        body,
                        &ExprAst::Var(x),
                    )))),
                );
                if chain_is_join_complete(cm, &chain) {
                    for i in (0..chain.len()).rev() {
                        let prev: ExprAst = if i == 0 {
                            ExprAst::Name(SING)
                        } else {
                            ExprAst::Var(binders[i - 1].clone())
                        };
                        let set = ExprAst::Join(Box::new(prev), Box::new(ExprAst::Name(chain[i])));
                        node = ConstraintAst::globally(ConstraintAst::All {
                            var: binders[i].clone(),
                            set,
                            body: Box::new(node),
                        });
                    }
                } else {
                    node = ConstraintAst::globally(ConstraintAst::All {
                        var: binders.last().unwrap().clone(),
                        set: ExprAst::Name(*context),
                        body: Box::new(node),
                    });
                }
                print_cn(cm, &node, true)
            }
        }
    }
}
