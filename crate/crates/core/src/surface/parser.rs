//! Recursive descent parser over the indentation token stream.
//!
//! Prefix temporal operators (`next`, `sometime`, `always`, `never`) take the
//! rest of the enclosing expression as their operand, so
//! `never closed && cmd = motorUp` negates the whole conjunction. Transition
//! arrows are the loosest infix operators and associate to the right.

use super::lexer::{Lexer, Token, TokenKind};
use super::{
    ArrowKind, ClaferDecl, ConstraintSrc, ExprSrc, InitKind, Interval, QuantKind, RefKind,
    SourceModel, TimeMarker,
};
use crate::error::{ParseError, Pos};

pub fn parse_model(src: &str) -> Result<SourceModel, ParseError> {
    let tokens = Lexer::tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    p.model()
}

/// Parse a single constraint body (the `--goal` surface), in top-level context.
pub fn parse_goal(src: &str) -> Result<ExprSrc, ParseError> {
    let tokens = Lexer::tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    loop {
        match p.peek() {
            TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent => {
                p.bump();
            }
            TokenKind::Eof => break,
            other => {
                return Err(ParseError::Syntax {
                    pos: p.cur_pos(),
                    msg: format!("unexpected {} after goal expression", other),
                })
            }
        }
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].kind
    }

    fn peek2(&self) -> &TokenKind {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].kind
    }

    fn cur_pos(&self) -> Pos {
        self.tokens[self.pos.min(self.tokens.len() - 1)].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        if self.peek() == &kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("expected {}", kind)))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.cur_pos(),
            msg: format!("{}, found {}", what, self.peek()),
        }
    }

    fn model(&mut self) -> Result<SourceModel, ParseError> {
        let mut m = SourceModel::default();
        loop {
            match self.peek() {
                TokenKind::Eof => break,
                TokenKind::Newline => {
                    self.bump();
                }
                TokenKind::KwAssert | TokenKind::LBracket => {
                    m.constraints.push(self.constraint()?);
                }
                _ => m.decls.push(self.decl()?),
            }
        }
        Ok(m)
    }

    fn constraint(&mut self) -> Result<ConstraintSrc, ParseError> {
        let pos = self.cur_pos();
        let is_assert = self.eat(&TokenKind::KwAssert);
        self.expect(TokenKind::LBracket)?;
        let marker = if self.eat(&TokenKind::KwInitially) {
            Some(TimeMarker::Initially)
        } else if self.eat(&TokenKind::KwFinally) {
            Some(TimeMarker::Finally)
        } else {
            None
        };
        let body = self.expr()?;
        self.expect(TokenKind::RBracket)?;
        if !matches!(
            self.peek(),
            TokenKind::Newline | TokenKind::Eof | TokenKind::Dedent
        ) {
            return Err(self.unexpected("expected end of line after constraint"));
        }
        self.eat(&TokenKind::Newline);
        Ok(ConstraintSrc {
            pos,
            is_assert,
            marker,
            body,
        })
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let pos = self.cur_pos();
        let lo = match self.bump().kind {
            TokenKind::Number(n) => n,
            other => {
                return Err(ParseError::Syntax {
                    pos,
                    msg: format!("expected interval bound, found {}", other),
                })
            }
        };
        self.expect(TokenKind::DotDot)?;
        let hi = match self.peek() {
            TokenKind::Number(n) => {
                let n = *n;
                self.bump();
                Some(n)
            }
            TokenKind::Star => {
                self.bump();
                None
            }
            _ => return Err(self.unexpected("expected interval upper bound")),
        };
        if let Some(h) = hi {
            if lo > h {
                return Err(ParseError::Syntax {
                    pos,
                    msg: format!("empty interval {}..{}", lo, h),
                });
            }
        }
        Ok(Interval::new(lo, hi))
    }

    fn decl(&mut self) -> Result<ClaferDecl, ParseError> {
        let pos = self.cur_pos();
        let mut is_abstract = false;
        let mut is_final = false;
        let mut is_initial = false;
        loop {
            match self.peek() {
                TokenKind::KwAbstract if !is_abstract => {
                    self.bump();
                    is_abstract = true;
                }
                TokenKind::KwFinal if !is_final => {
                    self.bump();
                    is_final = true;
                }
                TokenKind::KwInitial if !is_initial => {
                    self.bump();
                    is_initial = true;
                }
                _ => break,
            }
        }
        let gcard = match self.peek() {
            TokenKind::KwXor => {
                self.bump();
                Some(Interval::new(1, Some(1)))
            }
            TokenKind::KwOr => {
                self.bump();
                Some(Interval::new(1, None))
            }
            TokenKind::KwMux => {
                self.bump();
                Some(Interval::new(0, Some(1)))
            }
            TokenKind::Number(_) => Some(self.interval()?),
            _ => None,
        };
        let name = match self.bump() {
            Token {
                kind: TokenKind::Ident(s),
                ..
            } => s,
            t => {
                return Err(ParseError::Syntax {
                    pos: t.pos,
                    msg: format!("expected clafer name, found {}", t.kind),
                })
            }
        };
        let super_name = if self.eat(&TokenKind::Colon) {
            match self.bump() {
                Token {
                    kind: TokenKind::Ident(s),
                    ..
                } => Some(s),
                t => {
                    return Err(ParseError::Syntax {
                        pos: t.pos,
                        msg: format!("expected super clafer name, found {}", t.kind),
                    })
                }
            }
        } else {
            None
        };
        let reference = match self.peek() {
            TokenKind::RefArrow | TokenKind::BagRefArrow => {
                let kind = if matches!(self.bump().kind, TokenKind::RefArrow) {
                    RefKind::Set
                } else {
                    RefKind::Bag
                };
                match self.bump() {
                    Token {
                        kind: TokenKind::Ident(s),
                        ..
                    } => Some((kind, s)),
                    t => {
                        return Err(ParseError::Syntax {
                            pos: t.pos,
                            msg: format!("expected reference target name, found {}", t.kind),
                        })
                    }
                }
            }
            _ => None,
        };
        let cmult = match self.peek() {
            TokenKind::Question => {
                self.bump();
                Some(Interval::new(0, Some(1)))
            }
            TokenKind::Star => {
                self.bump();
                Some(Interval::new(0, None))
            }
            TokenKind::Plus => {
                self.bump();
                Some(Interval::new(1, None))
            }
            TokenKind::Number(_) => Some(self.interval()?),
            _ => None,
        };
        let initializer = match self.peek() {
            TokenKind::Eq => {
                self.bump();
                Some((InitKind::Constant, self.expr()?))
            }
            TokenKind::ColonEq => {
                self.bump();
                Some((InitKind::Default, self.expr()?))
            }
            _ => None,
        };
        if !matches!(
            self.peek(),
            TokenKind::Newline | TokenKind::Eof | TokenKind::Dedent
        ) {
            return Err(self.unexpected("expected end of declaration line"));
        }
        self.eat(&TokenKind::Newline);
        let mut children = Vec::new();
        let mut constraints = Vec::new();
        if self.eat(&TokenKind::Indent) {
            loop {
                match self.peek() {
                    TokenKind::Dedent => {
                        self.bump();
                        break;
                    }
                    TokenKind::Eof => break,
                    TokenKind::Newline => {
                        self.bump();
                    }
                    TokenKind::KwAssert | TokenKind::LBracket => {
                        constraints.push(self.constraint()?);
                    }
                    _ => children.push(self.decl()?),
                }
            }
        }
        Ok(ClaferDecl {
            pos,
            is_abstract,
            is_final,
            is_initial,
            gcard,
            name,
            super_name,
            reference,
            cmult,
            initializer,
            children,
            constraints,
        })
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<ExprSrc, ParseError> {
        let pre = self.iff_expr()?;
        let (kind, guard) = match self.peek() {
            TokenKind::TransArrow => {
                self.bump();
                (ArrowKind::Next, None)
            }
            TokenKind::TransBagArrow => {
                self.bump();
                (ArrowKind::Multi, None)
            }
            TokenKind::GuardOpen => {
                self.bump();
                let g = self.expr()?;
                let kind = match self.bump().kind {
                    TokenKind::GuardClose => ArrowKind::Next,
                    TokenKind::GuardCloseBag => ArrowKind::Multi,
                    other => {
                        return Err(ParseError::Syntax {
                            pos: self.cur_pos(),
                            msg: format!("expected `]->` or `]->>`, found {}", other),
                        })
                    }
                };
                (kind, Some(Box::new(g)))
            }
            _ => return Ok(pre),
        };
        // right-associative: the post side may itself be a transition chain
        let post = self.expr()?;
        Ok(ExprSrc::Arrow {
            kind,
            guard,
            pre: Box::new(pre),
            post: Box::new(post),
        })
    }

    fn iff_expr(&mut self) -> Result<ExprSrc, ParseError> {
        let lhs = self.or_expr()?;
        match self.peek() {
            TokenKind::FatArrow => {
                self.bump();
                let rhs = self.iff_expr()?;
                Ok(ExprSrc::Implies(Box::new(lhs), Box::new(rhs)))
            }
            TokenKind::IffArrow => {
                self.bump();
                let rhs = self.iff_expr()?;
                Ok(ExprSrc::Iff(Box::new(lhs), Box::new(rhs)))
            }
            _ => Ok(lhs),
        }
    }

    fn or_expr(&mut self) -> Result<ExprSrc, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat(&TokenKind::PipePipe) {
            let rhs = self.and_expr()?;
            lhs = ExprSrc::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<ExprSrc, ParseError> {
        let mut lhs = self.unary_expr()?;
        while self.eat(&TokenKind::AmpAmp) {
            let rhs = self.unary_expr()?;
            lhs = ExprSrc::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<ExprSrc, ParseError> {
        match self.peek().clone() {
            TokenKind::KwNext => {
                self.bump();
                Ok(ExprSrc::Next(Box::new(self.expr()?)))
            }
            TokenKind::KwSometime => {
                self.bump();
                Ok(ExprSrc::Sometime(Box::new(self.expr()?)))
            }
            TokenKind::KwNever => {
                self.bump();
                Ok(ExprSrc::Never(Box::new(self.expr()?)))
            }
            TokenKind::KwAlways => {
                self.bump();
                let body = self.expr()?;
                if self.eat(&TokenKind::KwBetween) {
                    let q = self.expr()?;
                    self.expect(TokenKind::KwAnd)?;
                    let r = self.expr()?;
                    Ok(ExprSrc::Between {
                        body: Box::new(body),
                        q: Box::new(q),
                        r: Box::new(r),
                    })
                } else {
                    Ok(ExprSrc::Always(Box::new(body)))
                }
            }
            TokenKind::KwLet => {
                self.bump();
                let x = match self.bump() {
                    Token {
                        kind: TokenKind::Ident(s),
                        ..
                    } => s,
                    t => {
                        return Err(ParseError::Syntax {
                            pos: t.pos,
                            msg: format!("expected variable name after `let`, found {}", t.kind),
                        })
                    }
                };
                self.expect(TokenKind::Eq)?;
                let set = self.union_expr()?;
                self.expect(TokenKind::Pipe)?;
                let body = self.expr()?;
                Ok(ExprSrc::Let(x, Box::new(set), Box::new(body)))
            }
            TokenKind::KwAll => {
                self.bump();
                self.quant_comp(QuantKind::All)
            }
            TokenKind::KwSome => self.quantifier(QuantKind::Some),
            TokenKind::KwNo | TokenKind::KwNot => self.quantifier(QuantKind::No),
            TokenKind::KwOne => self.quantifier(QuantKind::One),
            TokenKind::KwLone => self.quantifier(QuantKind::Lone),
            TokenKind::Bang => {
                self.bump();
                let inner = self.unary_expr()?;
                Ok(ExprSrc::Not(Box::new(inner)))
            }
            _ => self.comparison(),
        }
    }

    /// `some`/`no`/`one`/`lone`, either the comprehension form
    /// `q x : set | body` or the simple form `q set-expr`.
    fn quantifier(&mut self, q: QuantKind) -> Result<ExprSrc, ParseError> {
        self.bump();
        if matches!(self.peek(), TokenKind::Ident(_)) && self.peek2() == &TokenKind::Colon {
            return self.quant_comp_after_kw(q);
        }
        let set = self.union_expr()?;
        Ok(ExprSrc::Quant(q, Box::new(set)))
    }

    fn quant_comp(&mut self, q: QuantKind) -> Result<ExprSrc, ParseError> {
        if !matches!(self.peek(), TokenKind::Ident(_)) || self.peek2() != &TokenKind::Colon {
            return Err(self.unexpected("expected `x : set | body` after `all`"));
        }
        self.quant_comp_after_kw(q)
    }

    fn quant_comp_after_kw(&mut self, q: QuantKind) -> Result<ExprSrc, ParseError> {
        let x = match self.bump().kind {
            TokenKind::Ident(s) => s,
            _ => unreachable!(),
        };
        self.expect(TokenKind::Colon)?;
        let set = self.union_expr()?;
        self.expect(TokenKind::Pipe)?;
        let body = self.expr()?;
        Ok(ExprSrc::QuantComp(q, x, Box::new(set), Box::new(body)))
    }

    fn comparison(&mut self) -> Result<ExprSrc, ParseError> {
        let lhs = self.union_expr()?;
        match self.peek() {
            TokenKind::KwIn => {
                self.bump();
                let rhs = self.union_expr()?;
                Ok(ExprSrc::In(Box::new(lhs), Box::new(rhs)))
            }
            TokenKind::Eq => {
                self.bump();
                let rhs = self.union_expr()?;
                Ok(ExprSrc::Eq(Box::new(lhs), Box::new(rhs)))
            }
            TokenKind::BangEq => {
                self.bump();
                let rhs = self.union_expr()?;
                Ok(ExprSrc::Ne(Box::new(lhs), Box::new(rhs)))
            }
            _ => Ok(lhs),
        }
    }

    fn union_expr(&mut self) -> Result<ExprSrc, ParseError> {
        let mut lhs = self.inter_expr()?;
        loop {
            match self.peek() {
                TokenKind::PlusPlus | TokenKind::Comma => {
                    self.bump();
                    let rhs = self.inter_expr()?;
                    lhs = ExprSrc::Union(Box::new(lhs), Box::new(rhs));
                }
                TokenKind::MinusMinus => {
                    self.bump();
                    let rhs = self.inter_expr()?;
                    lhs = ExprSrc::Diff(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn inter_expr(&mut self) -> Result<ExprSrc, ParseError> {
        let mut lhs = self.postfix_expr()?;
        while self.eat(&TokenKind::StarStar) {
            let rhs = self.postfix_expr()?;
            lhs = ExprSrc::Inter(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn postfix_expr(&mut self) -> Result<ExprSrc, ParseError> {
        let mut e = self.primary()?;
        while self.eat(&TokenKind::Dot) {
            match self.bump() {
                Token {
                    kind: TokenKind::Ident(s),
                    pos,
                } => {
                    e = ExprSrc::Join(Box::new(e), Box::new(ExprSrc::Name(s, pos)));
                }
                Token {
                    kind: TokenKind::KwParent,
                    ..
                } => {
                    e = ExprSrc::Parent(Box::new(e));
                }
                Token {
                    kind: TokenKind::KwDref,
                    ..
                } => {
                    e = ExprSrc::Dref(Box::new(e));
                }
                t => {
                    return Err(ParseError::Syntax {
                        pos: t.pos,
                        msg: format!("expected name, `parent` or `dref` after `.`, found {}", t.kind),
                    })
                }
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<ExprSrc, ParseError> {
        let pos = self.cur_pos();
        match self.peek().clone() {
            TokenKind::KwTrue => {
                self.bump();
                Ok(ExprSrc::True)
            }
            TokenKind::KwThis => {
                self.bump();
                Ok(ExprSrc::This(pos))
            }
            TokenKind::KwParent => {
                self.bump();
                Ok(ExprSrc::Parent(Box::new(ExprSrc::This(pos))))
            }
            TokenKind::KwDref => {
                self.bump();
                Ok(ExprSrc::Dref(Box::new(ExprSrc::This(pos))))
            }
            TokenKind::Ident(s) => {
                self.bump();
                Ok(ExprSrc::Name(s, pos))
            }
            TokenKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Number(_) => Err(ParseError::Syntax {
                pos,
                msg: "integer literals are not supported in expressions".into(),
            }),
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("expected expression, found {}", other),
            }),
        }
    }
}
