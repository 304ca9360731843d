//! Surface syntax: declaration trees with sugar intact, plus the defaulting
//! pass and a pretty-printer used for round-trip testing.

mod lexer;
mod parser;

pub use lexer::{Lexer, Token, TokenKind};
pub use parser::{parse_goal, parse_model};

use crate::error::Pos;

/// A cardinality interval `lo..hi`; `hi == None` means unbounded (`*`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: Option<u32>,
}

impl Interval {
    pub const fn new(lo: u32, hi: Option<u32>) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, n: usize) -> bool {
        let n = n as u64;
        n >= self.lo as u64 && self.hi.map_or(true, |h| n <= h as u64)
    }

    pub fn is_unbounded_any(&self) -> bool {
        self.lo == 0 && self.hi.is_none()
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.hi {
            Some(h) => write!(f, "{}..{}", self.lo, h),
            None => write!(f, "{}..*", self.lo),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefKind {
    /// `->`: sibling instances of the same reference clafer must link to
    /// distinct targets.
    Set,
    /// `->>`: the distinctness check is dropped.
    Bag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// `= exp`
    Constant,
    /// `:= exp` (rejected later with a NOT-SUPPORTED diagnostic)
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantKind {
    All,
    Some,
    No,
    One,
    Lone,
}

impl QuantKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            QuantKind::All => "all",
            QuantKind::Some => "some",
            QuantKind::No => "no",
            QuantKind::One => "one",
            QuantKind::Lone => "lone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrowKind {
    /// `-->`: next-step transition
    Next,
    /// `-->>`: multi-step (until) transition
    Multi,
}

/// Constraint-level time markers: `[ initially φ ]`, `[ finally φ ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMarker {
    Initially,
    Finally,
}

/// Surface expressions; constraints and set expressions share one tree until
/// normalization sorts out boolean positions. `True` and `Until` are not
/// produced by the parser; the rewrite passes introduce them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprSrc {
    True,
    Until(Box<ExprSrc>, Box<ExprSrc>),
    Name(String, Pos),
    This(Pos),
    Join(Box<ExprSrc>, Box<ExprSrc>),
    Parent(Box<ExprSrc>),
    Dref(Box<ExprSrc>),
    Union(Box<ExprSrc>, Box<ExprSrc>),
    Diff(Box<ExprSrc>, Box<ExprSrc>),
    Inter(Box<ExprSrc>, Box<ExprSrc>),
    In(Box<ExprSrc>, Box<ExprSrc>),
    Eq(Box<ExprSrc>, Box<ExprSrc>),
    Ne(Box<ExprSrc>, Box<ExprSrc>),
    Not(Box<ExprSrc>),
    And(Box<ExprSrc>, Box<ExprSrc>),
    Or(Box<ExprSrc>, Box<ExprSrc>),
    Implies(Box<ExprSrc>, Box<ExprSrc>),
    Iff(Box<ExprSrc>, Box<ExprSrc>),
    /// Simple-form quantifier over a set: `some e`, `no e`, `one e`, `lone e`.
    Quant(QuantKind, Box<ExprSrc>),
    /// Comprehension form: `all x : e | ψ` and the counted variants.
    QuantComp(QuantKind, String, Box<ExprSrc>, Box<ExprSrc>),
    Let(String, Box<ExprSrc>, Box<ExprSrc>),
    Next(Box<ExprSrc>),
    Sometime(Box<ExprSrc>),
    Always(Box<ExprSrc>),
    Never(Box<ExprSrc>),
    /// `always P between Q and R`
    Between {
        body: Box<ExprSrc>,
        q: Box<ExprSrc>,
        r: Box<ExprSrc>,
    },
    Arrow {
        kind: ArrowKind,
        guard: Option<Box<ExprSrc>>,
        pre: Box<ExprSrc>,
        post: Box<ExprSrc>,
    },
}

impl ExprSrc {
    pub fn pos(&self) -> Pos {
        match self {
            ExprSrc::True => Pos::default(),
            ExprSrc::Until(a, _) => a.pos(),
            ExprSrc::Name(_, p) | ExprSrc::This(p) => *p,
            ExprSrc::Join(a, _)
            | ExprSrc::Parent(a)
            | ExprSrc::Dref(a)
            | ExprSrc::Union(a, _)
            | ExprSrc::Diff(a, _)
            | ExprSrc::Inter(a, _)
            | ExprSrc::In(a, _)
            | ExprSrc::Eq(a, _)
            | ExprSrc::Ne(a, _)
            | ExprSrc::Not(a)
            | ExprSrc::And(a, _)
            | ExprSrc::Or(a, _)
            | ExprSrc::Implies(a, _)
            | ExprSrc::Iff(a, _)
            | ExprSrc::Quant(_, a)
            | ExprSrc::Next(a)
            | ExprSrc::Sometime(a)
            | ExprSrc::Always(a)
            | ExprSrc::Never(a) => a.pos(),
            ExprSrc::QuantComp(_, _, a, _) | ExprSrc::Let(_, a, _) => a.pos(),
            ExprSrc::Between { body, .. } => body.pos(),
            ExprSrc::Arrow { pre, .. } => pre.pos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSrc {
    pub pos: Pos,
    pub is_assert: bool,
    pub marker: Option<TimeMarker>,
    pub body: ExprSrc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaferDecl {
    pub pos: Pos,
    pub is_abstract: bool,
    pub is_final: bool,
    pub is_initial: bool,
    pub gcard: Option<Interval>,
    pub name: String,
    pub super_name: Option<String>,
    pub reference: Option<(RefKind, String)>,
    pub cmult: Option<Interval>,
    pub initializer: Option<(InitKind, ExprSrc)>,
    pub children: Vec<ClaferDecl>,
    pub constraints: Vec<ConstraintSrc>,
}

/// A parsed model: top-level declarations plus top-level constraints, in
/// source order relative to each other is not needed, so they are kept apart.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceModel {
    pub decls: Vec<ClaferDecl>,
    pub constraints: Vec<ConstraintSrc>,
}

impl SourceModel {
    /// Clear all source positions, leaving only structure; round-trip tests
    /// compare on this.
    pub fn strip_positions(mut self) -> SourceModel {
        fn fix_expr(e: &mut ExprSrc) {
            match e {
                ExprSrc::Name(_, p) | ExprSrc::This(p) => *p = Pos::default(),
                ExprSrc::True => {}
                ExprSrc::Until(a, b)
                | ExprSrc::Join(a, b)
                | ExprSrc::Union(a, b)
                | ExprSrc::Diff(a, b)
                | ExprSrc::Inter(a, b)
                | ExprSrc::In(a, b)
                | ExprSrc::Eq(a, b)
                | ExprSrc::Ne(a, b)
                | ExprSrc::And(a, b)
                | ExprSrc::Or(a, b)
                | ExprSrc::Implies(a, b)
                | ExprSrc::Iff(a, b) => {
                    fix_expr(a);
                    fix_expr(b);
                }
                ExprSrc::Parent(a)
                | ExprSrc::Dref(a)
                | ExprSrc::Not(a)
                | ExprSrc::Quant(_, a)
                | ExprSrc::Next(a)
                | ExprSrc::Sometime(a)
                | ExprSrc::Always(a)
                | ExprSrc::Never(a) => fix_expr(a),
                ExprSrc::QuantComp(_, _, s, b) | ExprSrc::Let(_, s, b) => {
                    fix_expr(s);
                    fix_expr(b);
                }
                ExprSrc::Between { body, q, r } => {
                    fix_expr(body);
                    fix_expr(q);
                    fix_expr(r);
                }
                ExprSrc::Arrow {
                    guard, pre, post, ..
                } => {
                    if let Some(g) = guard {
                        fix_expr(g);
                    }
                    fix_expr(pre);
                    fix_expr(post);
                }
            }
        }
        fn fix_decl(d: &mut ClaferDecl) {
            d.pos = Pos::default();
            if let Some((_, e)) = &mut d.initializer {
                fix_expr(e);
            }
            for c in &mut d.constraints {
                c.pos = Pos::default();
                fix_expr(&mut c.body);
            }
            for ch in &mut d.children {
                fix_decl(ch);
            }
        }
        for d in &mut self.decls {
            fix_decl(d);
        }
        for c in &mut self.constraints {
            c.pos = Pos::default();
            fix_expr(&mut c.body);
        }
        self
    }
}

/// Name of the designated root super type every clafer extends by default.
pub const ROOT_TYPE_NAME: &str = "clafer";
/// Name of the synthetic root clafer all top-level declarations nest under.
pub const SING_NAME: &str = "Sing";

/// Apply the syntactic defaults: every declaration gets an explicit group
/// cardinality and multiplicity, and a missing super becomes the root type.
///
/// Group cardinality defaults to `0..*`. Multiplicity defaults to `0..*` for
/// abstract clafers, `1..1` for clafers whose parent has group cardinality
/// `0..*`, and `0..1` otherwise. Idempotent.
pub fn apply_defaults(mut m: SourceModel) -> SourceModel {
    // Top-level decls nest under Sing, whose group cardinality is all naturals.
    let sing_gcard = Interval::new(0, None);
    for d in &mut m.decls {
        apply_defaults_decl(d, sing_gcard);
    }
    m
}

fn apply_defaults_decl(d: &mut ClaferDecl, parent_gcard: Interval) {
    let gcard = *d.gcard.get_or_insert(Interval::new(0, None));
    if d.cmult.is_none() {
        d.cmult = Some(if d.is_abstract {
            Interval::new(0, None)
        } else if parent_gcard.is_unbounded_any() {
            Interval::new(1, Some(1))
        } else {
            Interval::new(0, Some(1))
        });
    }
    if d.super_name.is_none() {
        d.super_name = Some(ROOT_TYPE_NAME.to_string());
    }
    for c in &mut d.children {
        apply_defaults_decl(c, gcard);
    }
}

/// Pretty-print a (defaulted) model back to concrete syntax. Re-parsing the
/// output yields a structurally equal tree.
pub fn pretty_print(m: &SourceModel) -> String {
    let mut out = String::new();
    for d in &m.decls {
        print_decl(&mut out, d, 0);
    }
    for c in &m.constraints {
        print_constraint(&mut out, c, 0);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_decl(out: &mut String, d: &ClaferDecl, level: usize) {
    indent(out, level);
    if d.is_abstract {
        out.push_str("abstract ");
    }
    if d.is_final {
        out.push_str("final ");
    }
    if d.is_initial {
        out.push_str("initial ");
    }
    if let Some(g) = d.gcard {
        out.push_str(&format!("{} ", g));
    }
    out.push_str(&d.name);
    if let Some(s) = &d.super_name {
        out.push_str(&format!(" : {}", s));
    }
    if let Some((k, t)) = &d.reference {
        match k {
            RefKind::Set => out.push_str(&format!(" -> {}", t)),
            RefKind::Bag => out.push_str(&format!(" ->> {}", t)),
        }
    }
    if let Some(c) = d.cmult {
        out.push_str(&format!(" {}", c));
    }
    if let Some((k, e)) = &d.initializer {
        match k {
            InitKind::Constant => out.push_str(" = "),
            InitKind::Default => out.push_str(" := "),
        }
        out.push_str(&print_expr(e));
    }
    out.push('\n');
    for c in &d.constraints {
        print_constraint(out, c, level + 1);
    }
    for ch in &d.children {
        print_decl(out, ch, level + 1);
    }
}

fn print_constraint(out: &mut String, c: &ConstraintSrc, level: usize) {
    indent(out, level);
    if c.is_assert {
        out.push_str("assert ");
    }
    out.push_str("[ ");
    match c.marker {
        Some(TimeMarker::Initially) => out.push_str("initially "),
        Some(TimeMarker::Finally) => out.push_str("finally "),
        None => {}
    }
    out.push_str(&print_expr(&c.body));
    out.push_str(" ]\n");
}

/// Parenthesized rendering of a surface expression.
pub fn print_expr(e: &ExprSrc) -> String {
    match e {
        ExprSrc::True => "true".to_string(),
        ExprSrc::Until(a, b) => format!("({} U {})", print_expr(a), print_expr(b)),
        ExprSrc::Name(n, _) => n.clone(),
        ExprSrc::This(_) => "this".to_string(),
        ExprSrc::Join(a, b) => format!("{}.{}", print_path_leg(a), print_path_leg(b)),
        ExprSrc::Parent(a) => format!("{}.parent", print_path_leg(a)),
        ExprSrc::Dref(a) => format!("{}.dref", print_path_leg(a)),
        ExprSrc::Union(a, b) => format!("({} ++ {})", print_expr(a), print_expr(b)),
        ExprSrc::Diff(a, b) => format!("({} -- {})", print_expr(a), print_expr(b)),
        ExprSrc::Inter(a, b) => format!("({} ** {})", print_expr(a), print_expr(b)),
        ExprSrc::In(a, b) => format!("({} in {})", print_expr(a), print_expr(b)),
        ExprSrc::Eq(a, b) => format!("({} = {})", print_expr(a), print_expr(b)),
        ExprSrc::Ne(a, b) => format!("({} != {})", print_expr(a), print_expr(b)),
        ExprSrc::Not(a) => format!("(! {})", print_expr(a)),
        ExprSrc::And(a, b) => format!("({} && {})", print_expr(a), print_expr(b)),
        ExprSrc::Or(a, b) => format!("({} || {})", print_expr(a), print_expr(b)),
        ExprSrc::Implies(a, b) => format!("({} => {})", print_expr(a), print_expr(b)),
        ExprSrc::Iff(a, b) => format!("({} <=> {})", print_expr(a), print_expr(b)),
        ExprSrc::Quant(q, a) => format!("({} {})", q.keyword(), print_expr(a)),
        ExprSrc::QuantComp(q, x, s, b) => {
            format!("({} {} : {} | {})", q.keyword(), x, print_expr(s), print_expr(b))
        }
        ExprSrc::Let(x, s, b) => format!("(let {} = {} | {})", x, print_expr(s), print_expr(b)),
        ExprSrc::Next(a) => format!("(next {})", print_expr(a)),
        ExprSrc::Sometime(a) => format!("(sometime {})", print_expr(a)),
        ExprSrc::Always(a) => format!("(always {})", print_expr(a)),
        ExprSrc::Never(a) => format!("(never {})", print_expr(a)),
        ExprSrc::Between { body, q, r } => format!(
            "(always {} between {} and {})",
            print_expr(body),
            print_expr(q),
            print_expr(r)
        ),
        ExprSrc::Arrow {
            kind,
            guard,
            pre,
            post,
        } => {
            let arrow = match (kind, guard) {
                (ArrowKind::Next, None) => format!("--> {}", print_expr(post)),
                (ArrowKind::Multi, None) => format!("-->> {}", print_expr(post)),
                (ArrowKind::Next, Some(g)) => {
                    format!("-[{}]-> {}", print_expr(g), print_expr(post))
                }
                (ArrowKind::Multi, Some(g)) => {
                    format!("-[{}]->> {}", print_expr(g), print_expr(post))
                }
            };
            format!("({} {})", print_expr(pre), arrow)
        }
    }
}

fn print_path_leg(e: &ExprSrc) -> String {
    match e {
        ExprSrc::Name(..)
        | ExprSrc::This(_)
        | ExprSrc::Join(..)
        | ExprSrc::Parent(_)
        | ExprSrc::Dref(_) => print_expr(e),
        other => format!("({})", print_expr(other)),
    }
}
