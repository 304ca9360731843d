//! Indentation-sensitive lexer. Leading whitespace becomes INDENT/DEDENT
//! tokens; newlines inside brackets are suppressed so constraints can span
//! lines. Tabs are rejected outright.

use crate::error::{ParseError, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Number(u32),
    // modifiers / decl keywords
    KwAbstract,
    KwFinal,
    KwInitial,
    KwXor,
    KwOr,
    KwMux,
    KwAssert,
    // constraint keywords
    KwAll,
    KwSome,
    KwNo,
    KwOne,
    KwLone,
    KwNot,
    KwLet,
    KwIn,
    KwThis,
    KwParent,
    KwDref,
    KwInitially,
    KwFinally,
    KwNext,
    KwSometime,
    KwAlways,
    KwNever,
    KwBetween,
    KwAnd,
    KwTrue,
    // punctuation
    DotDot,
    Dot,
    Comma,
    Star,
    StarStar,
    Question,
    Plus,
    PlusPlus,
    MinusMinus,
    Colon,
    ColonEq,
    Eq,
    BangEq,
    Bang,
    RefArrow,      // ->
    BagRefArrow,   // ->>
    TransArrow,    // -->
    TransBagArrow, // -->>
    GuardOpen,     // -[
    GuardClose,    // ]->
    GuardCloseBag, // ]->>
    AmpAmp,
    PipePipe,
    Pipe,
    FatArrow, // =>
    IffArrow, // <=>
    LParen,
    RParen,
    LBracket,
    RBracket,
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl std::fmt::Display for TokenKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{}`", s),
            TokenKind::Number(n) => write!(f, "number `{}`", n),
            TokenKind::Newline => write!(f, "end of line"),
            TokenKind::Indent => write!(f, "indent"),
            TokenKind::Dedent => write!(f, "dedent"),
            TokenKind::Eof => write!(f, "end of input"),
            other => write!(f, "`{}`", other.text()),
        }
    }
}

impl TokenKind {
    fn text(&self) -> &'static str {
        match self {
            TokenKind::KwAbstract => "abstract",
            TokenKind::KwFinal => "final",
            TokenKind::KwInitial => "initial",
            TokenKind::KwXor => "xor",
            TokenKind::KwOr => "or",
            TokenKind::KwMux => "mux",
            TokenKind::KwAssert => "assert",
            TokenKind::KwAll => "all",
            TokenKind::KwSome => "some",
            TokenKind::KwNo => "no",
            TokenKind::KwOne => "one",
            TokenKind::KwLone => "lone",
            TokenKind::KwNot => "not",
            TokenKind::KwLet => "let",
            TokenKind::KwIn => "in",
            TokenKind::KwThis => "this",
            TokenKind::KwParent => "parent",
            TokenKind::KwDref => "dref",
            TokenKind::KwInitially => "initially",
            TokenKind::KwFinally => "finally",
            TokenKind::KwNext => "next",
            TokenKind::KwSometime => "sometime",
            TokenKind::KwAlways => "always",
            TokenKind::KwNever => "never",
            TokenKind::KwBetween => "between",
            TokenKind::KwAnd => "and",
            TokenKind::KwTrue => "true",
            TokenKind::DotDot => "..",
            TokenKind::Dot => ".",
            TokenKind::Comma => ",",
            TokenKind::Star => "*",
            TokenKind::StarStar => "**",
            TokenKind::Question => "?",
            TokenKind::Plus => "+",
            TokenKind::PlusPlus => "++",
            TokenKind::MinusMinus => "--",
            TokenKind::Colon => ":",
            TokenKind::ColonEq => ":=",
            TokenKind::Eq => "=",
            TokenKind::BangEq => "!=",
            TokenKind::Bang => "!",
            TokenKind::RefArrow => "->",
            TokenKind::BagRefArrow => "->>",
            TokenKind::TransArrow => "-->",
            TokenKind::TransBagArrow => "-->>",
            TokenKind::GuardOpen => "-[",
            TokenKind::GuardClose => "]->",
            TokenKind::GuardCloseBag => "]->>",
            TokenKind::AmpAmp => "&&",
            TokenKind::PipePipe => "||",
            TokenKind::Pipe => "|",
            TokenKind::FatArrow => "=>",
            TokenKind::IffArrow => "<=>",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

pub struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    indent_stack: Vec<u32>,
    bracket_depth: u32,
}

fn keyword(s: &str) -> Option<TokenKind> {
    Some(match s {
        "abstract" => TokenKind::KwAbstract,
        "final" => TokenKind::KwFinal,
        "initial" => TokenKind::KwInitial,
        "xor" => TokenKind::KwXor,
        "or" => TokenKind::KwOr,
        "mux" => TokenKind::KwMux,
        "assert" => TokenKind::KwAssert,
        "all" => TokenKind::KwAll,
        "some" => TokenKind::KwSome,
        "no" => TokenKind::KwNo,
        "one" => TokenKind::KwOne,
        "lone" => TokenKind::KwLone,
        "not" => TokenKind::KwNot,
        "let" => TokenKind::KwLet,
        "in" => TokenKind::KwIn,
        "this" => TokenKind::KwThis,
        "parent" => TokenKind::KwParent,
        "dref" => TokenKind::KwDref,
        "initially" => TokenKind::KwInitially,
        "finally" => TokenKind::KwFinally,
        "next" => TokenKind::KwNext,
        "sometime" => TokenKind::KwSometime,
        "always" => TokenKind::KwAlways,
        "never" => TokenKind::KwNever,
        "between" => TokenKind::KwBetween,
        "and" => TokenKind::KwAnd,
        "true" => TokenKind::KwTrue,
        _ => return None,
    })
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
            tokens: Vec::new(),
            indent_stack: vec![0],
            bracket_depth: 0,
        }
    }

    pub fn tokenize(src: &'a str) -> Result<Vec<Token>, ParseError> {
        Lexer::new(src).run()
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if let Some(ch) = c {
            if ch == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        c
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn push(&mut self, kind: TokenKind, pos: Pos) {
        self.tokens.push(Token { kind, pos });
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Lex {
            pos: self.pos(),
            msg: msg.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        // at_line_start: measure indentation of the next significant line
        loop {
            if self.bracket_depth == 0 {
                match self.handle_line_start()? {
                    LineStart::Eof => break,
                    LineStart::Significant => {}
                }
            }
            // lex tokens until end of line (or input)
            loop {
                match self.peek() {
                    None => {
                        if self.bracket_depth > 0 {
                            return Err(self.err("unclosed bracket at end of input"));
                        }
                        self.flush_line_end();
                        break;
                    }
                    Some('\n') => {
                        self.bump();
                        if self.bracket_depth == 0 {
                            self.flush_line_end();
                            break;
                        }
                    }
                    Some(' ') => {
                        self.bump();
                    }
                    Some('\r') => {
                        self.bump();
                    }
                    Some('\t') => {
                        return Err(self.err("tab character (indent with spaces)"));
                    }
                    Some('/') => {
                        let pos = self.pos();
                        self.bump();
                        if self.peek() == Some('/') {
                            while let Some(c) = self.peek() {
                                if c == '\n' {
                                    break;
                                }
                                self.bump();
                            }
                        } else {
                            return Err(ParseError::Lex {
                                pos,
                                msg: "unexpected character `/`".into(),
                            });
                        }
                    }
                    Some(_) => self.lex_token()?,
                }
            }
            if self.peek().is_none() && self.bracket_depth == 0 {
                break;
            }
        }
        // close any open indents
        let end = self.pos();
        while self.indent_stack.len() > 1 {
            self.indent_stack.pop();
            self.push(TokenKind::Dedent, end);
        }
        self.push(TokenKind::Eof, end);
        Ok(self.tokens)
    }

    fn flush_line_end(&mut self) {
        if matches!(
            self.tokens.last().map(|t| &t.kind),
            Some(TokenKind::Newline) | Some(TokenKind::Indent) | Some(TokenKind::Dedent) | None
        ) {
            return;
        }
        let pos = self.pos();
        self.push(TokenKind::Newline, pos);
    }

    fn handle_line_start(&mut self) -> Result<LineStart, ParseError> {
        loop {
            let mut width: u32 = 0;
            loop {
                match self.peek() {
                    Some(' ') => {
                        self.bump();
                        width += 1;
                    }
                    Some('\t') => {
                        return Err(self.err("tab character (indent with spaces)"));
                    }
                    Some('\r') => {
                        self.bump();
                    }
                    _ => break,
                }
            }
            match self.peek() {
                None => return Ok(LineStart::Eof),
                Some('\n') => {
                    // blank line: no indentation effect
                    self.bump();
                    continue;
                }
                Some('/') => {
                    // comment-only line?
                    let mut look = self.chars.clone();
                    look.next();
                    if look.peek() == Some(&'/') {
                        while let Some(c) = self.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                        continue;
                    }
                }
                _ => {}
            }
            // significant line: emit indent/dedent tokens
            let cur = *self.indent_stack.last().unwrap();
            let pos = self.pos();
            if width > cur {
                self.indent_stack.push(width);
                self.push(TokenKind::Indent, pos);
            } else if width < cur {
                while *self.indent_stack.last().unwrap() > width {
                    self.indent_stack.pop();
                    self.push(TokenKind::Dedent, pos);
                }
                if *self.indent_stack.last().unwrap() != width {
                    return Err(ParseError::Indent {
                        pos,
                        msg: format!("dedent to unknown indentation level {}", width),
                    });
                }
            }
            return Ok(LineStart::Significant);
        }
    }

    fn lex_token(&mut self) -> Result<(), ParseError> {
        let pos = self.pos();
        let c = self.peek().unwrap();
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(ch) = self.peek() {
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    s.push(ch);
                    self.bump();
                } else {
                    break;
                }
            }
            let kind = keyword(&s).unwrap_or(TokenKind::Ident(s));
            self.push(kind, pos);
            return Ok(());
        }
        if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while let Some(ch) = self.peek() {
                if let Some(d) = ch.to_digit(10) {
                    n = n * 10 + d as u64;
                    if n > u32::MAX as u64 {
                        return Err(self.err("number too large"));
                    }
                    self.bump();
                } else {
                    break;
                }
            }
            self.push(TokenKind::Number(n as u32), pos);
            return Ok(());
        }
        macro_rules! tok {
            ($kind:expr, $n:expr) => {{
                for _ in 0..$n {
                    self.bump();
                }
                self.push($kind, pos);
                return Ok(());
            }};
        }
        // longest-match on operator characters
        let mut look = self.chars.clone();
        let c0 = look.next().unwrap();
        let c1 = look.next();
        let c2 = look.next();
        let c3 = look.next();
        match (c0, c1, c2, c3) {
            ('-', Some('-'), Some('>'), Some('>')) => tok!(TokenKind::TransBagArrow, 4),
            ('-', Some('-'), Some('>'), _) => tok!(TokenKind::TransArrow, 3),
            ('-', Some('>'), Some('>'), _) => tok!(TokenKind::BagRefArrow, 3),
            ('-', Some('>'), _, _) => tok!(TokenKind::RefArrow, 2),
            ('-', Some('['), _, _) => {
                self.bracket_depth += 1;
                tok!(TokenKind::GuardOpen, 2)
            }
            ('-', Some('-'), _, _) => tok!(TokenKind::MinusMinus, 2),
            (']', Some('-'), Some('>'), Some('>')) => {
                self.bracket_depth = self.bracket_depth.saturating_sub(1);
                tok!(TokenKind::GuardCloseBag, 4)
            }
            (']', Some('-'), Some('>'), _) => {
                self.bracket_depth = self.bracket_depth.saturating_sub(1);
                tok!(TokenKind::GuardClose, 3)
            }
            (']', _, _, _) => {
                self.bracket_depth = self.bracket_depth.saturating_sub(1);
                tok!(TokenKind::RBracket, 1)
            }
            ('[', _, _, _) => {
                self.bracket_depth += 1;
                tok!(TokenKind::LBracket, 1)
            }
            ('(', _, _, _) => {
                self.bracket_depth += 1;
                tok!(TokenKind::LParen, 1)
            }
            (')', _, _, _) => {
                self.bracket_depth = self.bracket_depth.saturating_sub(1);
                tok!(TokenKind::RParen, 1)
            }
            ('.', Some('.'), _, _) => tok!(TokenKind::DotDot, 2),
            ('.', _, _, _) => tok!(TokenKind::Dot, 1),
            (',', _, _, _) => tok!(TokenKind::Comma, 1),
            ('*', Some('*'), _, _) => tok!(TokenKind::StarStar, 2),
            ('*', _, _, _) => tok!(TokenKind::Star, 1),
            ('?', _, _, _) => tok!(TokenKind::Question, 1),
            ('+', Some('+'), _, _) => tok!(TokenKind::PlusPlus, 2),
            ('+', _, _, _) => tok!(TokenKind::Plus, 1),
            (':', Some('='), _, _) => tok!(TokenKind::ColonEq, 2),
            (':', _, _, _) => tok!(TokenKind::Colon, 1),
            ('=', Some('>'), _, _) => tok!(TokenKind::FatArrow, 2),
            ('=', _, _, _) => tok!(TokenKind::Eq, 1),
            ('!', Some('='), _, _) => tok!(TokenKind::BangEq, 2),
            ('!', _, _, _) => tok!(TokenKind::Bang, 1),
            ('&', Some('&'), _, _) => tok!(TokenKind::AmpAmp, 2),
            ('|', Some('|'), _, _) => tok!(TokenKind::PipePipe, 2),
            ('|', _, _, _) => tok!(TokenKind::Pipe, 1),
            ('<', Some('='), Some('>'), _) => tok!(TokenKind::IffArrow, 3),
            _ => Err(ParseError::Lex {
                pos,
                msg: format!("unexpected character `{}`", c0),
            }),
        }
    }
}

enum LineStart {
    Eof,
    Significant,
}
