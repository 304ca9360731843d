//! Single snapshots: instance trees with links and typing, structural
//! satisfaction checking, and expression evaluation over traces.
//!
//! Evaluation sets are sets of (instance, snapshot index) pairs: quantifiers
//! bind at the position where they are evaluated while the body may look
//! ahead with `X`, so a binding can outlive its snapshot. Whether the bound
//! instance still exists is re-tested by whatever predicate uses the binding:
//! the simple quantifiers count only instances alive at the evaluation
//! position, and joins test parenthood in the snapshot they run in.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::core_model::{ClaferId, CoreModel, ExprAst, SING};
use crate::surface::RefKind;
use crate::temporal::LassoTrace;

/// Instance identifier; 0 is always the root instance `sing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(pub u32);

pub const SING_INST: InstanceId = InstanceId(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstInfo {
    pub clafer: ClaferId,
    pub parent: Option<InstanceId>,
    pub link: Option<InstanceId>,
}

/// One model instance: an instance tree rooted at `sing`, with links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub instances: BTreeMap<InstanceId, InstInfo>,
}

impl Default for Snapshot {
    fn default() -> Self {
        Self::new()
    }
}

impl Snapshot {
    pub fn new() -> Snapshot {
        let mut instances = BTreeMap::new();
        instances.insert(
            SING_INST,
            InstInfo {
                clafer: SING,
                parent: None,
                link: None,
            },
        );
        Snapshot { instances }
    }

    pub fn alive(&self, i: InstanceId) -> bool {
        self.instances.contains_key(&i)
    }

    pub fn typing(&self, i: InstanceId) -> Option<ClaferId> {
        self.instances.get(&i).map(|x| x.clafer)
    }

    pub fn parent_of(&self, i: InstanceId) -> Option<InstanceId> {
        self.instances.get(&i).and_then(|x| x.parent)
    }

    pub fn link_of(&self, i: InstanceId) -> Option<InstanceId> {
        self.instances.get(&i).and_then(|x| x.link)
    }

    pub fn children_of(&self, p: InstanceId) -> impl Iterator<Item = (InstanceId, &InstInfo)> {
        self.instances
            .iter()
            .filter(move |(_, info)| info.parent == Some(p))
            .map(|(id, info)| (*id, info))
    }

    pub fn add(
        &mut self,
        id: InstanceId,
        clafer: ClaferId,
        parent: Option<InstanceId>,
        link: Option<InstanceId>,
    ) {
        self.instances.insert(
            id,
            InstInfo {
                clafer,
                parent,
                link,
            },
        );
    }

    /// Deterministic text form: one `id:Type(parent)[->target]` line per
    /// instance, sorted by id; `-` for the root's missing parent.
    pub fn to_text(&self, cm: &CoreModel) -> String {
        let mut out = String::new();
        for (id, info) in &self.instances {
            let ty = if info.clafer == SING {
                "Sing".to_string()
            } else {
                cm.info(info.clafer).path.clone()
            };
            let parent = match info.parent {
                Some(p) => p.0.to_string(),
                None => "-".to_string(),
            };
            out.push_str(&format!("{}:{}({})", id.0, ty, parent));
            if let Some(t) = info.link {
                out.push_str(&format!("->{}", t.0));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, cm: &CoreModel) -> serde_json::Value {
        #[derive(Serialize)]
        struct J {
            id: u32,
            #[serde(rename = "type")]
            ty: String,
            parent: Option<u32>,
            target: Option<u32>,
        }
        let rows: Vec<J> = self
            .instances
            .iter()
            .map(|(id, info)| J {
                id: id.0,
                ty: if info.clafer == SING {
                    "Sing".to_string()
                } else {
                    cm.info(info.clafer).path.clone()
                },
                parent: info.parent.map(|p| p.0),
                target: info.link.map(|t| t.0),
            })
            .collect();
        serde_json::json!({ "instances": rows })
    }
}

/// Does instance `i` have `c` among its (transitive) types in `s`?
pub fn ity_star(cm: &CoreModel, s: &Snapshot, i: InstanceId, c: ClaferId) -> bool {
    match s.typing(i) {
        Some(d) => cm.in_closure(d, c),
        None => false,
    }
}

// ---------------------------------------------------------------------------
// structural satisfaction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructuralViolation {
    /// direct instance of an abstract clafer
    AbstractInstance { inst: InstanceId, clafer: String },
    /// parent edge not justified by any nesting edge
    IllTypedParent { inst: InstanceId },
    /// link not justified by any reference edge
    IllTypedLink { inst: InstanceId },
    /// two sibling instances of one set-reference clafer share a target
    LocalInjectivity { a: InstanceId, b: InstanceId },
    /// per-parent child count outside the child clafer's multiplicity
    Multiplicity {
        parent: InstanceId,
        clafer: String,
        count: usize,
    },
    /// total typed-children count outside the parent's group cardinality
    GroupCardinality {
        parent: InstanceId,
        clafer: String,
        count: usize,
    },
    /// instance of a reference clafer without a link, or a link on a
    /// clafer that declares no reference
    ReferenceTotality { inst: InstanceId, missing: bool },
}

impl std::fmt::Display for StructuralViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use StructuralViolation as V;
        match self {
            V::AbstractInstance { inst, clafer } => {
                write!(f, "instance {} directly types abstract `{}`", inst.0, clafer)
            }
            V::IllTypedParent { inst } => write!(f, "instance {} nested under ill-typed parent", inst.0),
            V::IllTypedLink { inst } => write!(f, "instance {} links to ill-typed target", inst.0),
            V::LocalInjectivity { a, b } => write!(
                f,
                "sibling reference instances {} and {} share a target",
                a.0, b.0
            ),
            V::Multiplicity {
                parent,
                clafer,
                count,
            } => write!(
                f,
                "instance {} has {} `{}` children, outside the multiplicity",
                parent.0, count, clafer
            ),
            V::GroupCardinality {
                parent,
                clafer,
                count,
            } => write!(
                f,
                "instance {} has {} children in the `{}` group, outside the group cardinality",
                parent.0, count, clafer
            ),
            V::ReferenceTotality { inst, missing } => {
                if *missing {
                    write!(f, "reference instance {} has no link", inst.0)
                } else {
                    write!(f, "instance {} has a link but no declared reference", inst.0)
                }
            }
        }
    }
}

/// Check the six structural satisfaction conditions, plus reference totality
/// (every instance of a reference clafer carries exactly one link).
pub fn check_structural(cm: &CoreModel, s: &Snapshot) -> Vec<StructuralViolation> {
    let mut out = check_structural_shape(cm, s);
    out.extend(check_structural_links(cm, s));
    out
}

/// The link-independent structural conditions: direct abstract instances,
/// parent typing, multiplicities and group cardinalities. The solver uses
/// this to reject instance trees before enumerating link assignments.
pub fn check_structural_shape(cm: &CoreModel, s: &Snapshot) -> Vec<StructuralViolation> {
    let mut out = Vec::new();

    for (id, info) in &s.instances {
        if *id == SING_INST {
            continue;
        }
        let ci = cm.info(info.clafer);
        // (1) no direct instances of abstract clafers
        if ci.is_abstract {
            out.push(StructuralViolation::AbstractInstance {
                inst: *id,
                clafer: ci.path.clone(),
            });
        }
        // (2) parent edge justified by some nesting edge via ity*; the
        // synthetic root type is not a nesting edge
        let parent_ok = match info.parent {
            Some(p) => match s.typing(p) {
                Some(_) => cm
                    .super_closure(info.clafer)
                    .iter()
                    .filter(|c2| **c2 != crate::core_model::ROOT_TYPE)
                    .any(|c2| {
                        cm.info(*c2)
                            .parent
                            .is_some_and(|c1| ity_star(cm, s, p, c1))
                    }),
                None => false,
            },
            None => false,
        };
        if !parent_ok {
            out.push(StructuralViolation::IllTypedParent { inst: *id });
        }
    }

    // (5) multiplicities: for each nesting edge c1 ◂ c2 and each instance of
    // c1, the count of its c2-typed children must lie in cmult(c2)
    for c2 in &cm.clafers {
        let c1 = match c2.parent {
            Some(p) => p,
            None => continue,
        };
        if c2.id == crate::core_model::ROOT_TYPE {
            continue;
        }
        for (pid, _) in s.instances.iter() {
            if !ity_star(cm, s, *pid, c1) {
                continue;
            }
            let count = s
                .children_of(*pid)
                .filter(|(cid, _)| ity_star(cm, s, *cid, c2.id))
                .count();
            if !c2.cmult.contains(count) {
                out.push(StructuralViolation::Multiplicity {
                    parent: *pid,
                    clafer: c2.path.clone(),
                    count,
                });
            }
        }
    }

    // (6) group cardinality: for each instance and each clafer it types,
    // the children typed by that clafer's own children fall in its gcard
    for (pid, _) in s.instances.iter() {
        let direct = s.typing(*pid).unwrap();
        for c1 in cm.super_closure(direct) {
            let ci = cm.info(*c1);
            if ci.gcard.is_unbounded_any() {
                continue;
            }
            let count = s
                .children_of(*pid)
                .filter(|(cid, _)| {
                    ci.children.iter().any(|c2| ity_star(cm, s, *cid, *c2))
                })
                .count();
            if !ci.gcard.contains(count) {
                out.push(StructuralViolation::GroupCardinality {
                    parent: *pid,
                    clafer: ci.path.clone(),
                    count,
                });
            }
        }
    }

    out
}

/// The link-dependent structural conditions: link typing, local injectivity
/// of set references, and reference totality.
pub fn check_structural_links(cm: &CoreModel, s: &Snapshot) -> Vec<StructuralViolation> {
    let mut out = Vec::new();

    for (id, info) in &s.instances {
        if *id == SING_INST {
            continue;
        }
        // (3) links justified by some reference edge via ity*
        if let Some(target) = info.link {
            let link_ok = s.alive(target)
                && cm.super_closure(info.clafer).iter().any(|c1| {
                    cm.info(*c1)
                        .reference
                        .is_some_and(|(_, c2)| ity_star(cm, s, target, c2))
                });
            if !link_ok {
                out.push(StructuralViolation::IllTypedLink { inst: *id });
            }
        }
        // reference totality
        let has_ref = cm.has_ref(info.clafer);
        match (has_ref, info.link) {
            (true, None) => out.push(StructuralViolation::ReferenceTotality {
                inst: *id,
                missing: true,
            }),
            (false, Some(_)) => out.push(StructuralViolation::ReferenceTotality {
                inst: *id,
                missing: false,
            }),
            _ => {}
        }
    }

    // (4) local injectivity per concrete declared set-reference clafer
    let mut groups: BTreeMap<(InstanceId, ClaferId), Vec<InstanceId>> = BTreeMap::new();
    for (id, info) in &s.instances {
        if *id == SING_INST {
            continue;
        }
        let is_set_ref = cm
            .refs_in_closure(info.clafer)
            .iter()
            .any(|(k, _)| *k == RefKind::Set);
        if is_set_ref {
            if let Some(p) = info.parent {
                groups.entry((p, info.clafer)).or_default().push(*id);
            }
        }
    }
    for sibs in groups.values() {
        for (ai, a) in sibs.iter().enumerate() {
            for b in sibs.iter().skip(ai + 1) {
                let (la, lb) = (s.link_of(*a), s.link_of(*b));
                if la.is_some() && la == lb {
                    out.push(StructuralViolation::LocalInjectivity { a: *a, b: *b });
                }
            }
        }
    }

    out
}

// ---------------------------------------------------------------------------
// expression evaluation
// ---------------------------------------------------------------------------

/// Set of (instance, snapshot index) pairs.
pub type EvalSet = BTreeSet<(InstanceId, usize)>;

/// Variable environment; bindings are immutable once made.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    frames: Vec<(String, EvalSet)>,
}

impl Environment {
    pub fn lookup(&self, x: &str) -> Option<&EvalSet> {
        self.frames.iter().rev().find(|(n, _)| n == x).map(|(_, s)| s)
    }

    pub fn bind(&mut self, x: &str, s: EvalSet) {
        self.frames.push((x.to_string(), s));
    }

    pub fn unbind(&mut self) {
        self.frames.pop();
    }
}

/// Evaluate an expression at trace position `t`.
pub fn eval_expr(
    cm: &CoreModel,
    trace: &LassoTrace,
    t: usize,
    env: &Environment,
    e: &ExprAst,
) -> EvalSet {
    let snap = trace.snapshot(t);
    match e {
        ExprAst::Name(c) => snap
            .instances
            .keys()
            .filter(|i| ity_star(cm, snap, **i, *c))
            .map(|i| (*i, t))
            .collect(),
        ExprAst::Var(x) => env.lookup(x).cloned().unwrap_or_else(|| {
            panic!("unbound variable `{}` during evaluation (checker bug)", x)
        }),
        ExprAst::This => env
            .lookup("this")
            .cloned()
            .expect("`this` unbound during evaluation (checker bug)"),
        ExprAst::Join(e1, e2) => {
            let a = eval_expr(cm, trace, t, env, e1);
            let parents: BTreeSet<InstanceId> = a.iter().map(|(i, _)| *i).collect();
            let b = eval_expr(cm, trace, t, env, e2);
            b.into_iter()
                .filter(|(i2, t2)| {
                    trace
                        .snapshot(*t2)
                        .parent_of(*i2)
                        .is_some_and(|p| parents.contains(&p))
                })
                .collect()
        }
        ExprAst::Dref(inner) => eval_expr(cm, trace, t, env, inner)
            .into_iter()
            .filter_map(|(i, ti)| trace.snapshot(ti).link_of(i).map(|l| (l, ti)))
            .collect(),
        ExprAst::Parent(inner) => eval_expr(cm, trace, t, env, inner)
            .into_iter()
            .filter_map(|(i, ti)| trace.snapshot(ti).parent_of(i).map(|p| (p, ti)))
            .collect(),
        ExprAst::Union(a, b) => {
            let mut s = eval_expr(cm, trace, t, env, a);
            s.extend(eval_expr(cm, trace, t, env, b));
            s
        }
        ExprAst::Diff(a, b) => {
            let sb = eval_expr(cm, trace, t, env, b);
            eval_expr(cm, trace, t, env, a)
                .into_iter()
                .filter(|p| !sb.contains(p))
                .collect()
        }
        ExprAst::Inter(a, b) => {
            let sb = eval_expr(cm, trace, t, env, b);
            eval_expr(cm, trace, t, env, a)
                .into_iter()
                .filter(|p| sb.contains(p))
                .collect()
        }
    }
}

/// Distinct instances in the set's projection.
pub fn projection(s: &EvalSet) -> BTreeSet<InstanceId> {
    s.iter().map(|(i, _)| *i).collect()
}

/// Distinct instances in the set that exist at position `t`.
pub fn live_count(trace: &LassoTrace, t: usize, s: &EvalSet) -> usize {
    let snap = trace.snapshot(t);
    let live: BTreeSet<InstanceId> = s
        .iter()
        .map(|(i, _)| *i)
        .filter(|i| snap.alive(*i))
        .collect();
    live.len()
}
