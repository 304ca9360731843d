//! The elaborated core model: a clafer table with nesting, generalization,
//! references and cardinalities, plus resolved constraints.
//!
//! Elaboration resolves every name to a [`ClaferId`]. Unqualified names in
//! constraints are searched (1) among the context clafer's children,
//! including inherited ones, (2) at each enclosing ancestor walking up to the
//! root, and (3) as a globally unique clafer name; an earlier tier shadows
//! later ones. Navigation through a reference clafer inserts a `dref` step
//! when the name only resolves on the reference target, and comparisons
//! between a reference clafer and its target type dereference the reference
//! side, so `motor.cmd = motorStop` means what it reads as.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{ElabError, Pos};
use crate::surface::{
    self, ClaferDecl, ConstraintSrc, ExprSrc, InitKind, Interval, QuantKind, RefKind, SourceModel,
    TimeMarker,
};

/// Dense index into the model's clafer table. Index 0 is the synthetic root
/// `Sing`; index 1 is the designated default super type `clafer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClaferId(pub u32);

pub const SING: ClaferId = ClaferId(0);
pub const ROOT_TYPE: ClaferId = ClaferId(1);

impl ClaferId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct ClaferInfo {
    pub id: ClaferId,
    pub name: String,
    /// Absolute dotted path, without the `Sing.` prefix; `Sing` for the root.
    pub path: String,
    pub pos: Pos,
    pub is_abstract: bool,
    pub is_final: bool,
    pub is_initial: bool,
    pub reference: Option<(RefKind, ClaferId)>,
    pub cmult: Interval,
    pub gcard: Interval,
    pub parent: Option<ClaferId>,
    pub super_id: Option<ClaferId>,
    pub children: Vec<ClaferId>,
}

/// Core expression grammar. `This` only appears before lifting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprAst {
    Name(ClaferId),
    Var(String),
    This,
    Join(Box<ExprAst>, Box<ExprAst>),
    Dref(Box<ExprAst>),
    Parent(Box<ExprAst>),
    Union(Box<ExprAst>, Box<ExprAst>),
    Diff(Box<ExprAst>, Box<ExprAst>),
    Inter(Box<ExprAst>, Box<ExprAst>),
}

/// Core constraint grammar plus the convenience nodes (`Eq`, `Ne`, `Bare`)
/// that `normalize` rewrites away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintAst {
    True,
    In(ExprAst, ExprAst),
    Eq(ExprAst, ExprAst),
    Ne(ExprAst, ExprAst),
    /// A set expression in boolean position; becomes `some e`.
    Bare(ExprAst),
    Not(Box<ConstraintAst>),
    And(Box<ConstraintAst>, Box<ConstraintAst>),
    Or(Box<ConstraintAst>, Box<ConstraintAst>),
    Implies(Box<ConstraintAst>, Box<ConstraintAst>),
    Iff(Box<ConstraintAst>, Box<ConstraintAst>),
    Next(Box<ConstraintAst>),
    Until(Box<ConstraintAst>, Box<ConstraintAst>),
    All {
        var: String,
        set: ExprAst,
        body: Box<ConstraintAst>,
    },
    Let {
        var: String,
        set: ExprAst,
        body: Box<ConstraintAst>,
    },
    /// Simple-form quantifier over a set; counts distinct instances that
    /// exist at the evaluation position.
    Quant { q: QuantKind, set: ExprAst },
    /// Counted comprehension: how many bindings satisfy the body.
    QuantComp {
        q: QuantKind,
        var: String,
        set: ExprAst,
        body: Box<ConstraintAst>,
    },
}

impl ConstraintAst {
    pub fn not(c: ConstraintAst) -> ConstraintAst {
        ConstraintAst::Not(Box::new(c))
    }
    pub fn and(a: ConstraintAst, b: ConstraintAst) -> ConstraintAst {
        ConstraintAst::And(Box::new(a), Box::new(b))
    }
    pub fn implies(a: ConstraintAst, b: ConstraintAst) -> ConstraintAst {
        ConstraintAst::Implies(Box::new(a), Box::new(b))
    }
    /// `G φ ≡ !(true U !φ)`
    pub fn globally(c: ConstraintAst) -> ConstraintAst {
        ConstraintAst::not(ConstraintAst::Until(
            Box::new(ConstraintAst::True),
            Box::new(ConstraintAst::not(c)),
        ))
    }
    /// `F φ ≡ true U φ`
    pub fn finally_op(c: ConstraintAst) -> ConstraintAst {
        ConstraintAst::Until(Box::new(ConstraintAst::True), Box::new(c))
    }
}

/// A fully lifted top-level constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopConstraint {
    /// A closed formula, evaluated at trace position 0.
    Global(ConstraintAst),
    /// Appearance-anchored: the body must hold, with `this` bound to the
    /// appearing instance, at every position where an instance of the context
    /// clafer appears (position 0 counts as an appearance point). For the
    /// root context this is exactly "evaluate at position 0 only".
    Initially {
        context: ClaferId,
        body: ConstraintAst,
    },
}

/// A resolved constraint still attached to its nesting context.
#[derive(Debug, Clone)]
pub struct RawConstraint {
    pub context: ClaferId,
    pub is_assert: bool,
    pub marker: Option<TimeMarker>,
    pub ast: ConstraintAst,
}

#[derive(Debug, Clone)]
pub struct CoreModel {
    pub clafers: Vec<ClaferInfo>,
    pub constraints: Vec<TopConstraint>,
    pub assertions: Vec<TopConstraint>,
    /// Snapshot-local projections of temporal-free constraints; hold at every
    /// position of any satisfying trace, so the solver may prune with them.
    pub static_filters: Vec<ConstraintAst>,
    // derived tables
    closures: Vec<Vec<ClaferId>>,
    closure_member: Vec<Vec<bool>>,
    concrete_subtypes: Vec<Vec<ClaferId>>,
    eff_final: Vec<bool>,
    eff_initial: Vec<bool>,
    eff_children: Vec<Vec<ClaferId>>,
}

impl CoreModel {
    pub fn info(&self, c: ClaferId) -> &ClaferInfo {
        &self.clafers[c.index()]
    }

    pub fn by_name(&self, name: &str) -> Vec<ClaferId> {
        self.clafers
            .iter()
            .filter(|c| c.name == name)
            .map(|c| c.id)
            .collect()
    }

    /// Reflexive transitive set of generalizers of `c`, `c` first.
    pub fn super_closure(&self, c: ClaferId) -> &[ClaferId] {
        &self.closures[c.index()]
    }

    pub fn in_closure(&self, c: ClaferId, sup: ClaferId) -> bool {
        self.closure_member[c.index()][sup.index()]
    }

    /// Concrete clafers whose closure contains `c` (including `c` itself when
    /// concrete).
    pub fn concrete_subtypes(&self, c: ClaferId) -> &[ClaferId] {
        &self.concrete_subtypes[c.index()]
    }

    /// `final` propagates by inheritance.
    pub fn is_effectively_final(&self, c: ClaferId) -> bool {
        self.eff_final[c.index()]
    }

    pub fn is_effectively_initial(&self, c: ClaferId) -> bool {
        self.eff_initial[c.index()]
    }

    /// Own children plus children inherited from all supers, declaration
    /// order within each level, most-derived level first.
    pub fn effective_children(&self, c: ClaferId) -> &[ClaferId] {
        &self.eff_children[c.index()]
    }

    /// Declared parent chain from just below `Sing` down to `c`; empty for
    /// `Sing` itself.
    pub fn context_chain(&self, c: ClaferId) -> Vec<ClaferId> {
        let mut chain = Vec::new();
        let mut cur = Some(c);
        while let Some(x) = cur {
            if x == SING {
                break;
            }
            chain.push(x);
            cur = self.info(x).parent;
        }
        chain.reverse();
        chain
    }

    /// References declared anywhere in the closure of `c`.
    pub fn refs_in_closure(&self, c: ClaferId) -> Vec<(RefKind, ClaferId)> {
        self.super_closure(c)
            .iter()
            .filter_map(|s| self.info(*s).reference)
            .collect()
    }

    pub fn has_ref(&self, c: ClaferId) -> bool {
        self.super_closure(c)
            .iter()
            .any(|s| self.info(*s).reference.is_some())
    }
}

// ---------------------------------------------------------------------------
// elaboration
// ---------------------------------------------------------------------------

/// Elaborate a defaulted, rewrite-free source model into a core model plus
/// resolved (but not yet lifted) constraints. Generalization cycles do not
/// fail elaboration; `validate_wellformed` reports them.
pub fn elaborate(m: &SourceModel) -> Result<(CoreModel, Vec<RawConstraint>), ElabError> {
    let mut cm = build_table(m)?;
    compute_derived(&mut cm)?;
    let mut raws = Vec::new();
    let mut resolver = Resolver { cm: &cm };
    // source constraints, in declaration order
    collect_constraints(&cm, m, &mut resolver, &mut raws)?;
    Ok((cm, raws))
}

fn build_table(m: &SourceModel) -> Result<CoreModel, ElabError> {
    let mut clafers: Vec<ClaferInfo> = Vec::new();
    clafers.push(ClaferInfo {
        id: SING,
        name: surface::SING_NAME.to_string(),
        path: surface::SING_NAME.to_string(),
        pos: Pos::default(),
        is_abstract: false,
        is_final: false,
        is_initial: false,
        reference: None,
        cmult: Interval::new(1, Some(1)),
        gcard: Interval::new(0, None),
        parent: None,
        super_id: None,
        children: Vec::new(),
    });
    clafers.push(ClaferInfo {
        id: ROOT_TYPE,
        name: surface::ROOT_TYPE_NAME.to_string(),
        path: surface::ROOT_TYPE_NAME.to_string(),
        pos: Pos::default(),
        is_abstract: true,
        is_final: false,
        is_initial: false,
        reference: None,
        cmult: Interval::new(0, None),
        gcard: Interval::new(0, None),
        parent: Some(SING),
        super_id: None,
        children: Vec::new(),
    });

    fn add_decl(
        clafers: &mut Vec<ClaferInfo>,
        d: &ClaferDecl,
        parent: ClaferId,
        parent_path: &str,
    ) -> Result<ClaferId, ElabError> {
        if d.name == surface::SING_NAME || d.name == surface::ROOT_TYPE_NAME {
            return Err(ElabError::Reserved {
                pos: d.pos,
                name: d.name.clone(),
            });
        }
        // duplicate sibling check against already-added children of parent
        let dup = clafers[parent.index()]
            .children
            .iter()
            .any(|c| clafers[c.index()].name == d.name);
        if dup {
            return Err(ElabError::DuplicateSibling {
                pos: d.pos,
                name: d.name.clone(),
                parent: clafers[parent.index()].path.clone(),
            });
        }
        let id = ClaferId(clafers.len() as u32);
        let path = if parent == SING {
            d.name.clone()
        } else {
            format!("{}.{}", parent_path, d.name)
        };
        clafers.push(ClaferInfo {
            id,
            name: d.name.clone(),
            path: path.clone(),
            pos: d.pos,
            is_abstract: d.is_abstract,
            is_final: d.is_final,
            is_initial: d.is_initial,
            reference: None, // resolved later
            cmult: d.cmult.expect("defaults applied"),
            gcard: d.gcard.expect("defaults applied"),
            parent: Some(parent),
            super_id: None, // resolved later
            children: Vec::new(),
        });
        clafers[parent.index()].children.push(id);
        for ch in &d.children {
            add_decl(clafers, ch, id, &path)?;
        }
        Ok(id)
    }

    for d in &m.decls {
        add_decl(&mut clafers, d, SING, "")?;
    }

    // resolve super and reference names: globally unique clafer names
    let mut by_name: BTreeMap<String, Vec<ClaferId>> = BTreeMap::new();
    for c in clafers.iter().skip(2) {
        by_name.entry(c.name.clone()).or_default().push(c.id);
    }
    let paths: Vec<String> = clafers.iter().map(|c| c.path.clone()).collect();
    let resolve_global = move |name: &str, pos: Pos| -> Result<ClaferId, ElabError> {
        if name == surface::ROOT_TYPE_NAME {
            return Ok(ROOT_TYPE);
        }
        match by_name.get(name).map(|v| v.as_slice()) {
            Some([one]) => Ok(*one),
            Some(many) if many.len() > 1 => Err(ElabError::Ambiguous {
                pos,
                name: name.to_string(),
                candidates: many.iter().map(|c| paths[c.index()].clone()).collect(),
            }),
            _ => Err(ElabError::Unresolved {
                pos,
                name: name.to_string(),
            }),
        }
    };

    fn wire_decl(
        clafers: &mut [ClaferInfo],
        d: &ClaferDecl,
        id_iter: &mut u32,
        resolve: &dyn Fn(&str, Pos) -> Result<ClaferId, ElabError>,
    ) -> Result<(), ElabError> {
        let id = ClaferId(*id_iter);
        *id_iter += 1;
        if let Some(s) = &d.super_name {
            let sid = resolve(s, d.pos)?;
            if sid != ROOT_TYPE {
                clafers[id.index()].super_id = Some(sid);
            } else {
                clafers[id.index()].super_id = Some(ROOT_TYPE);
            }
        }
        if let Some((kind, target)) = &d.reference {
            let tid = resolve(target, d.pos)?;
            clafers[id.index()].reference = Some((*kind, tid));
        }
        for ch in &d.children {
            wire_decl(clafers, ch, id_iter, resolve)?;
        }
        Ok(())
    }

    let mut next = 2u32;
    for d in &m.decls {
        wire_decl(&mut clafers, d, &mut next, &resolve_global)?;
    }

    Ok(CoreModel {
        clafers,
        constraints: Vec::new(),
        assertions: Vec::new(),
        static_filters: Vec::new(),
        closures: Vec::new(),
        closure_member: Vec::new(),
        concrete_subtypes: Vec::new(),
        eff_final: Vec::new(),
        eff_initial: Vec::new(),
        eff_children: Vec::new(),
    })
}

fn compute_derived(cm: &mut CoreModel) -> Result<(), ElabError> {
    let n = cm.clafers.len();
    let mut closures = Vec::with_capacity(n);
    let mut member = vec![vec![false; n]; n];
    for c in &cm.clafers {
        let mut cl = vec![c.id];
        let mut seen: BTreeSet<ClaferId> = std::iter::once(c.id).collect();
        let mut cur = c.super_id;
        while let Some(s) = cur {
            if !seen.insert(s) {
                break; // cycle; validate_wellformed reports it
            }
            cl.push(s);
            cur = cm.clafers[s.index()].super_id;
        }
        for s in &cl {
            member[c.id.index()][s.index()] = true;
        }
        closures.push(cl);
    }
    cm.closures = closures;
    cm.closure_member = member;

    let mut subs = vec![Vec::new(); n];
    for c in &cm.clafers {
        if c.is_abstract || c.id == SING {
            continue;
        }
        for s in &cm.closures[c.id.index()] {
            subs[s.index()].push(c.id);
        }
    }
    cm.concrete_subtypes = subs;

    cm.eff_final = cm
        .clafers
        .iter()
        .map(|c| cm.closures[c.id.index()].iter().any(|s| cm.clafers[s.index()].is_final))
        .collect();
    cm.eff_initial = cm
        .clafers
        .iter()
        .map(|c| cm.closures[c.id.index()].iter().any(|s| cm.clafers[s.index()].is_initial))
        .collect();

    // effective children: own first, then inherited; clashes are errors
    let mut eff = Vec::with_capacity(n);
    for c in &cm.clafers {
        let mut out: Vec<ClaferId> = Vec::new();
        let mut names: BTreeMap<&str, ClaferId> = BTreeMap::new();
        for s in &cm.closures[c.id.index()] {
            for ch in &cm.clafers[s.index()].children {
                let chname = cm.clafers[ch.index()].name.as_str();
                if let Some(prev) = names.get(chname) {
                    if prev != ch {
                        return Err(ElabError::DuplicateSibling {
                            pos: cm.clafers[ch.index()].pos,
                            name: chname.to_string(),
                            parent: cm.clafers[c.id.index()].path.clone(),
                        });
                    }
                } else {
                    names.insert(chname, *ch);
                    out.push(*ch);
                }
            }
        }
        eff.push(out);
    }
    cm.eff_children = eff;
    Ok(())
}

fn collect_constraints(
    cm: &CoreModel,
    m: &SourceModel,
    resolver: &mut Resolver,
    raws: &mut Vec<RawConstraint>,
) -> Result<(), ElabError> {
    // walk declarations in the same order the table was built
    fn walk(
        cm: &CoreModel,
        resolver: &mut Resolver,
        d: &ClaferDecl,
        id_iter: &mut u32,
        raws: &mut Vec<RawConstraint>,
    ) -> Result<(), ElabError> {
        let id = ClaferId(*id_iter);
        *id_iter += 1;
        for c in &d.constraints {
            raws.push(resolver.resolve_constraint_src(c, id)?);
        }
        if let Some((kind, e)) = &d.initializer {
            match kind {
                InitKind::Default => {
                    return Err(ElabError::NotSupported {
                        pos: d.pos,
                        msg: "default initializer `:=` is not supported; use `=`".into(),
                    })
                }
                InitKind::Constant => {
                    // [ this.dref = exp ] under the clafer
                    let mut binders = Vec::new();
                    let (rhs, rt) = resolver.resolve_set(e, id, &mut binders)?;
                    let lhs = ExprAst::Dref(Box::new(ExprAst::This));
                    let lhs_t = resolver.deref_types(&TypeSet::single(id));
                    let (lhs, rhs) =
                        resolver.coerce_comparison(lhs, lhs_t.unwrap_or_default(), rhs, rt);
                    raws.push(RawConstraint {
                        context: id,
                        is_assert: false,
                        marker: None,
                        ast: ConstraintAst::Eq(lhs, rhs),
                    });
                }
            }
        }
        for ch in &d.children {
            walk(cm, resolver, ch, id_iter, raws)?;
        }
        Ok(())
    }

    let mut next = 2u32;
    for d in &m.decls {
        walk(cm, resolver, d, &mut next, raws)?;
    }
    for c in &m.constraints {
        raws.push(resolver.resolve_constraint_src(c, SING)?);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// name resolution
// ---------------------------------------------------------------------------

/// The set of declared clafers an expression's instances may be typed by.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeSet(pub BTreeSet<ClaferId>);

impl TypeSet {
    fn single(c: ClaferId) -> TypeSet {
        TypeSet(std::iter::once(c).collect())
    }
    fn union(mut self, other: TypeSet) -> TypeSet {
        self.0.extend(other.0);
        self
    }
}

struct Resolver<'a> {
    cm: &'a CoreModel,
}

impl<'a> Resolver<'a> {
    fn resolve_constraint_src(
        &mut self,
        c: &ConstraintSrc,
        context: ClaferId,
    ) -> Result<RawConstraint, ElabError> {
        let mut binders = Vec::new();
        let ast = self.resolve_bool(&c.body, context, &mut binders)?;
        Ok(RawConstraint {
            context,
            is_assert: c.is_assert,
            marker: c.marker,
            ast,
        })
    }

    /// Resolve a goal expression in top-level context.
    pub fn resolve_goal(cm: &CoreModel, e: &ExprSrc) -> Result<ConstraintAst, ElabError> {
        let mut r = Resolver { cm };
        let mut binders = Vec::new();
        r.resolve_bool(e, SING, &mut binders)
    }

    fn resolve_bool(
        &mut self,
        e: &ExprSrc,
        ctx: ClaferId,
        binders: &mut Vec<(String, TypeSet)>,
    ) -> Result<ConstraintAst, ElabError> {
        use ConstraintAst as C;
        Ok(match e {
            ExprSrc::True => C::True,
            ExprSrc::Until(a, b) => C::Until(
                Box::new(self.resolve_bool(a, ctx, binders)?),
                Box::new(self.resolve_bool(b, ctx, binders)?),
            ),
            ExprSrc::Next(a) => C::Next(Box::new(self.resolve_bool(a, ctx, binders)?)),
            ExprSrc::Not(a) => C::Not(Box::new(self.resolve_bool(a, ctx, binders)?)),
            ExprSrc::And(a, b) => C::And(
                Box::new(self.resolve_bool(a, ctx, binders)?),
                Box::new(self.resolve_bool(b, ctx, binders)?),
            ),
            ExprSrc::Or(a, b) => C::Or(
                Box::new(self.resolve_bool(a, ctx, binders)?),
                Box::new(self.resolve_bool(b, ctx, binders)?),
            ),
            ExprSrc::Implies(a, b) => C::Implies(
                Box::new(self.resolve_bool(a, ctx, binders)?),
                Box::new(self.resolve_bool(b, ctx, binders)?),
            ),
            ExprSrc::Iff(a, b) => C::Iff(
                Box::new(self.resolve_bool(a, ctx, binders)?),
                Box::new(self.resolve_bool(b, ctx, binders)?),
            ),
            ExprSrc::In(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let (eb, tb) = self.resolve_set(b, ctx, binders)?;
                let (ea, eb) = self.coerce_comparison(ea, ta, eb, tb);
                C::In(ea, eb)
            }
            ExprSrc::Eq(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let (eb, tb) = self.resolve_set(b, ctx, binders)?;
                let (ea, eb) = self.coerce_comparison(ea, ta, eb, tb);
                C::Eq(ea, eb)
            }
            ExprSrc::Ne(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let (eb, tb) = self.resolve_set(b, ctx, binders)?;
                let (ea, eb) = self.coerce_comparison(ea, ta, eb, tb);
                C::Ne(ea, eb)
            }
            ExprSrc::Quant(q, set) => {
                let (es, _) = self.resolve_set(set, ctx, binders)?;
                C::Quant { q: *q, set: es }
            }
            ExprSrc::QuantComp(q, x, set, body) => {
                let (es, ts) = self.resolve_set(set, ctx, binders)?;
                binders.push((x.clone(), ts));
                let b = self.resolve_bool(body, ctx, binders);
                binders.pop();
                C::QuantComp {
                    q: *q,
                    var: x.clone(),
                    set: es,
                    body: Box::new(b?),
                }
            }
            ExprSrc::Let(x, set, body) => {
                let (es, ts) = self.resolve_set(set, ctx, binders)?;
                binders.push((x.clone(), ts));
                let b = self.resolve_bool(body, ctx, binders);
                binders.pop();
                C::Let {
                    var: x.clone(),
                    set: es,
                    body: Box::new(b?),
                }
            }
            // rewrite passes must run before elaboration
            ExprSrc::Sometime(_)
            | ExprSrc::Always(_)
            | ExprSrc::Never(_)
            | ExprSrc::Between { .. }
            | ExprSrc::Arrow { .. } => {
                return Err(ElabError::Other {
                    pos: e.pos(),
                    msg: "internal: surface sugar reached elaboration".into(),
                })
            }
            // a set expression in boolean position
            set_expr => {
                let (es, _) = self.resolve_set(set_expr, ctx, binders)?;
                C::Bare(es)
            }
        })
    }

    fn resolve_set(
        &mut self,
        e: &ExprSrc,
        ctx: ClaferId,
        binders: &mut Vec<(String, TypeSet)>,
    ) -> Result<(ExprAst, TypeSet), ElabError> {
        Ok(match e {
            ExprSrc::This(_) => (ExprAst::This, TypeSet::single(ctx)),
            ExprSrc::Name(n, pos) => {
                if let Some((_, t)) = binders.iter().rev().find(|(b, _)| b == n) {
                    (ExprAst::Var(n.clone()), t.clone())
                } else {
                    self.resolve_free_name(n, *pos, ctx)?
                }
            }
            ExprSrc::Join(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                match b.as_ref() {
                    ExprSrc::Name(n, pos) => self.resolve_join(ea, ta, n, *pos)?,
                    other => {
                        return Err(ElabError::Other {
                            pos: other.pos(),
                            msg: "navigation step must be a name".into(),
                        })
                    }
                }
            }
            ExprSrc::Parent(a) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let mut parents = TypeSet::default();
                for t in &ta.0 {
                    for d in self.cm.concrete_subtypes(*t) {
                        if let Some(p) = self.cm.info(*d).parent {
                            parents.0.insert(p);
                        }
                    }
                    if let Some(p) = self.cm.info(*t).parent {
                        parents.0.insert(p);
                    }
                }
                (ExprAst::Parent(Box::new(ea)), parents)
            }
            ExprSrc::Dref(a) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let targets = self.deref_types(&ta).ok_or_else(|| ElabError::Other {
                    pos: a.pos(),
                    msg: "`.dref` on a clafer without a reference".into(),
                })?;
                (ExprAst::Dref(Box::new(ea)), targets)
            }
            ExprSrc::Union(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let (eb, tb) = self.resolve_set(b, ctx, binders)?;
                (ExprAst::Union(Box::new(ea), Box::new(eb)), ta.union(tb))
            }
            ExprSrc::Diff(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let (eb, _) = self.resolve_set(b, ctx, binders)?;
                (ExprAst::Diff(Box::new(ea), Box::new(eb)), ta)
            }
            ExprSrc::Inter(a, b) => {
                let (ea, ta) = self.resolve_set(a, ctx, binders)?;
                let (eb, tb) = self.resolve_set(b, ctx, binders)?;
                (ExprAst::Inter(Box::new(ea), Box::new(eb)), ta.union(tb))
            }
            other => {
                return Err(ElabError::Other {
                    pos: other.pos(),
                    msg: "expected a set expression, found a boolean one".into(),
                })
            }
        })
    }

    /// Tiered resolution of an unqualified name in a clafer context.
    fn resolve_free_name(
        &self,
        n: &str,
        pos: Pos,
        ctx: ClaferId,
    ) -> Result<(ExprAst, TypeSet), ElabError> {
        // tier 1: children of the context, inherited included
        if let Some(c) = self.child_named(ctx, n) {
            return Ok((
                ExprAst::Join(Box::new(ExprAst::This), Box::new(ExprAst::Name(c))),
                TypeSet::single(c),
            ));
        }
        // tier 2: each ancestor walking up to Sing
        let mut hops = 1u32;
        let mut anc = self.cm.info(ctx).parent;
        while let Some(a) = anc {
            if let Some(c) = self.child_named(a, n) {
                let mut path = ExprAst::This;
                for _ in 0..hops {
                    path = ExprAst::Parent(Box::new(path));
                }
                return Ok((
                    ExprAst::Join(Box::new(path), Box::new(ExprAst::Name(c))),
                    TypeSet::single(c),
                ));
            }
            hops += 1;
            anc = self.cm.info(a).parent;
        }
        // tier 3: globally unique clafer name, as an absolute path
        let candidates = self.cm.by_name(n);
        match candidates.as_slice() {
            [one] => {
                let chain = self.cm.context_chain(*one);
                let mut path = ExprAst::Name(SING);
                for step in &chain {
                    path = ExprAst::Join(Box::new(path), Box::new(ExprAst::Name(*step)));
                }
                Ok((path, TypeSet::single(*one)))
            }
            [] => Err(ElabError::Unresolved {
                pos,
                name: n.to_string(),
            }),
            many => Err(ElabError::Ambiguous {
                pos,
                name: n.to_string(),
                candidates: many
                    .iter()
                    .map(|c| self.cm.info(*c).path.clone())
                    .collect(),
            }),
        }
    }

    /// A child clafer named `n` visible on instances typed by `t`: declared
    /// on `t`, inherited from a super, or declared on a subtype of `t`.
    fn child_named(&self, t: ClaferId, n: &str) -> Option<ClaferId> {
        for ch in self.cm.effective_children(t) {
            if self.cm.info(*ch).name == n {
                return Some(*ch);
            }
        }
        for d in self.cm.concrete_subtypes(t) {
            for ch in self.cm.effective_children(*d) {
                if self.cm.info(*ch).name == n {
                    return Some(*ch);
                }
            }
        }
        None
    }

    /// Resolve `e.n`, dereferencing through reference clafers as needed.
    fn resolve_join(
        &self,
        mut e: ExprAst,
        mut t: TypeSet,
        n: &str,
        pos: Pos,
    ) -> Result<(ExprAst, TypeSet), ElabError> {
        for _ in 0..8 {
            let mut found: BTreeSet<ClaferId> = BTreeSet::new();
            for base in &t.0 {
                if let Some(c) = self.child_named(*base, n) {
                    found.insert(c);
                }
            }
            match found.len() {
                1 => {
                    let c = found.into_iter().next().unwrap();
                    return Ok((
                        ExprAst::Join(Box::new(e), Box::new(ExprAst::Name(c))),
                        TypeSet::single(c),
                    ));
                }
                0 => match self.deref_types(&t) {
                    Some(targets) => {
                        e = ExprAst::Dref(Box::new(e));
                        t = targets;
                    }
                    None => {
                        return Err(ElabError::Unresolved {
                            pos,
                            name: n.to_string(),
                        })
                    }
                },
                _ => {
                    return Err(ElabError::Ambiguous {
                        pos,
                        name: n.to_string(),
                        candidates: found
                            .iter()
                            .map(|c| self.cm.info(*c).path.clone())
                            .collect(),
                    })
                }
            }
        }
        Err(ElabError::Unresolved {
            pos,
            name: n.to_string(),
        })
    }

    /// Reference targets reachable from instances typed by `t`, if any type
    /// in (or below) the set carries a reference.
    fn deref_types(&self, t: &TypeSet) -> Option<TypeSet> {
        let mut out = TypeSet::default();
        for base in &t.0 {
            for s in self.cm.super_closure(*base) {
                if let Some((_, tgt)) = self.cm.info(*s).reference {
                    out.0.insert(tgt);
                }
            }
            for d in self.cm.concrete_subtypes(*base) {
                for s in self.cm.super_closure(*d) {
                    if let Some((_, tgt)) = self.cm.info(*s).reference {
                        out.0.insert(tgt);
                    }
                }
            }
        }
        if out.0.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    /// Concrete instance types an expression may produce.
    fn concrete_types(&self, t: &TypeSet) -> BTreeSet<ClaferId> {
        let mut out = BTreeSet::new();
        for base in &t.0 {
            out.extend(self.cm.concrete_subtypes(*base).iter().copied());
            if *base == SING {
                out.insert(SING);
            }
        }
        out
    }

    /// If the two sides of a comparison cannot share instances but one side
    /// is a reference whose targets match the other, dereference that side.
    fn coerce_comparison(
        &self,
        ea: ExprAst,
        ta: TypeSet,
        eb: ExprAst,
        tb: TypeSet,
    ) -> (ExprAst, ExprAst) {
        let ca = self.concrete_types(&ta);
        let cb = self.concrete_types(&tb);
        if ca.intersection(&cb).next().is_some() {
            return (ea, eb);
        }
        if let Some(targets) = self.deref_types(&ta) {
            if self
                .concrete_types(&targets)
                .intersection(&cb)
                .next()
                .is_some()
            {
                return (ExprAst::Dref(Box::new(ea)), eb);
            }
        }
        if let Some(targets) = self.deref_types(&tb) {
            if self
                .concrete_types(&targets)
                .intersection(&ca)
                .next()
                .is_some()
            {
                return (ea, ExprAst::Dref(Box::new(eb)));
            }
        }
        (ea, eb)
    }
}

/// Resolve a goal constraint (already rewritten) in top-level context.
pub fn resolve_goal(cm: &CoreModel, e: &ExprSrc) -> Result<ConstraintAst, ElabError> {
    Resolver::resolve_goal(cm, e)
}

// ---------------------------------------------------------------------------
// well-formedness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WellformednessViolation {
    /// generalization relation has a cycle through this clafer
    SuperCycle { clafer: String },
    /// an abstract clafer extends a concrete one
    AbstractExtendsConcrete { clafer: String, super_: String },
    /// covariant-nesting condition: nested super demands the parent
    /// specialize the super's parent
    CovariantNesting {
        clafer: String,
        super_: String,
        parent: String,
        required: String,
    },
    /// parent map is not a tree rooted at Sing
    ParentNotTree { clafer: String },
    SingMultiplicity,
}

impl std::fmt::Display for WellformednessViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WellformednessViolation::SuperCycle { clafer } => {
                write!(f, "generalization cycle through `{}` (acyclicity)", clafer)
            }
            WellformednessViolation::AbstractExtendsConcrete { clafer, super_ } => write!(
                f,
                "abstract `{}` extends concrete `{}`",
                clafer, super_
            ),
            WellformednessViolation::CovariantNesting {
                clafer,
                super_,
                parent,
                required,
            } => write!(
                f,
                "`{}` specializes nested `{}` but its parent `{}` does not specialize `{}`",
                clafer, super_, parent, required
            ),
            WellformednessViolation::ParentNotTree { clafer } => {
                write!(f, "nesting of `{}` is not a tree rooted at Sing", clafer)
            }
            WellformednessViolation::SingMultiplicity => {
                write!(f, "Sing multiplicity must be exactly 1")
            }
        }
    }
}

/// Check the well-formedness conditions on the elaborated model; returns all
/// violations found.
pub fn validate_wellformed(cm: &CoreModel) -> Vec<WellformednessViolation> {
    let mut out = Vec::new();

    // parent map forms a tree rooted at Sing
    for c in &cm.clafers {
        if c.id == SING {
            continue;
        }
        let mut seen = BTreeSet::new();
        let mut cur = Some(c.id);
        let mut ok = false;
        while let Some(x) = cur {
            if x == SING {
                ok = true;
                break;
            }
            if !seen.insert(x) {
                break;
            }
            cur = cm.info(x).parent;
        }
        if !ok {
            out.push(WellformednessViolation::ParentNotTree {
                clafer: c.path.clone(),
            });
        }
    }

    // acyclic generalization
    for c in &cm.clafers {
        let mut seen = BTreeSet::new();
        seen.insert(c.id);
        let mut cur = c.super_id;
        loop {
            match cur {
                Some(s) => {
                    if !seen.insert(s) {
                        out.push(WellformednessViolation::SuperCycle {
                            clafer: c.path.clone(),
                        });
                        break;
                    }
                    cur = cm.info(s).super_id;
                }
                None => break,
            }
        }
    }

    // abstract clafers extend abstract clafers
    for c in &cm.clafers {
        if !c.is_abstract {
            continue;
        }
        if let Some(s) = c.super_id {
            if s != ROOT_TYPE && !cm.info(s).is_abstract {
                out.push(WellformednessViolation::AbstractExtendsConcrete {
                    clafer: c.path.clone(),
                    super_: cm.info(s).path.clone(),
                });
            }
        }
    }

    // covariant nesting: for c4 →* c2 (c2 nested, c2 ≠ Sing), the parent of
    // c4 must specialize the parent of c2; vacuous when c2 is top-level
    for c4 in &cm.clafers {
        if c4.id == SING {
            continue;
        }
        for c2 in cm.super_closure(c4.id) {
            if *c2 == c4.id || *c2 == SING || *c2 == ROOT_TYPE {
                continue;
            }
            let c1 = match cm.info(*c2).parent {
                Some(p) if p != SING => p,
                _ => continue,
            };
            let c3 = match c4.parent {
                Some(p) => p,
                None => continue,
            };
            if !cm.in_closure(c3, c1) {
                out.push(WellformednessViolation::CovariantNesting {
                    clafer: c4.path.clone(),
                    super_: cm.info(*c2).path.clone(),
                    parent: cm.info(c3).path.clone(),
                    required: cm.info(c1).path.clone(),
                });
            }
        }
    }

    if cm.info(SING).cmult != Interval::new(1, Some(1)) {
        out.push(WellformednessViolation::SingMultiplicity);
    }

    out
}
