//! Lexer and recursive-descent parser for program files.
//!
//! ```text
//! program  := decl* "main" "=" term
//! decl     := "type" IDENT ";" | "subtype" IDENT "<:" IDENT ";" | "const" IDENT ":" IDENT ";"
//! term     := "\" IDENT ":" type "." term | appterm
//! appterm  := appterm aterm | aterm
//! aterm    := "true" | "false" | IDENT | "{" rat term ("," rat term)* "}"
//!           | "exp" "[" NAT "]" aterm | "<" term ("," term)* ">" | aterm "#" NAT
//!           | "trust" aterm "with" "(" rat type ("," rat type)* ")" "@" rat | "(" term ")"
//! type     := btype "->" type | btype
//! btype    := btype "+" ptype | ptype
//! ptype    := atype "^" NAT | atype
//! atype    := IDENT | "Bool" | "Bool" "(" rat type ("," rat type)* ")" "@" rat | "(" type ")"
//! rat      := NAT | NAT "/" NAT
//! ```
//!
//! Identifiers may be all digits (`const 1 : 1;`), so the dice of the usual
//! examples can be written literally. Comments run from `--` to end of line.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use super::{Dist, Name, Program, Term, Type};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    BadChar(char),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("choice weights must be positive and sum to 1, got total {0}")]
    ChoiceWeights(Rat),
    #[error("distribution weights must sum to 1, got total {0}")]
    DistWeights(Rat),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },
    #[error("number too large")]
    Overflow,
    #[error("duplicate declaration of {0}")]
    Duplicate(String),
    #[error("undeclared type `{0}`")]
    UndeclaredAtom(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
}

impl ParseErrorKind {
    /// Stable short code used in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            ParseErrorKind::BadChar(_) | ParseErrorKind::Unexpected { .. } => "syntax",
            ParseErrorKind::ChoiceWeights(_) => "choice-weights",
            ParseErrorKind::DistWeights(_) => "dist-weights",
            ParseErrorKind::ZeroDenominator => "zero-denominator",
            ParseErrorKind::ZeroCount { .. } => "zero-count",
            ParseErrorKind::Overflow => "overflow",
            ParseErrorKind::Duplicate(_) => "duplicate",
            ParseErrorKind::UndeclaredAtom(_) => "undeclared-type",
            ParseErrorKind::Reserved(_) => "reserved",
        }
    }
}

const KEYWORDS: &[&str] = &[
    "type", "subtype", "const", "main", "true", "false", "exp", "trust", "with", "Bool",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(String),
    Lambda,
    Colon,
    Dot,
    Semi,
    Eq,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    LParen,
    RParen,
    Comma,
    Hash,
    At,
    Caret,
    Plus,
    Minus,
    Arrow,
    SubOf,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Nat(s) => return write!(f, "`{s}`"),
            Tok::Lambda => "`\\`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Semi => "`;`",
            Tok::Eq => "`=`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::LAngle => "`<`",
            Tok::RAngle => "`>`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Hash => "`#`",
            Tok::At => "`@`",
            Tok::Caret => "`^`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Arrow => "`->`",
            Tok::SubOf => "`<:`",
            Tok::Slash => "`/`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && next == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if word.bytes().all(|b| b.is_ascii_digit()) {
                Tok::Nat(word)
            } else {
                Tok::Ident(word)
            };
            out.push((tok, pos));
            continue;
        }
        let (tok, len) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('<', Some(':')) => (Tok::SubOf, 2),
            ('\\', _) => (Tok::Lambda, 1),
            (':', _) => (Tok::Colon, 1),
            ('.', _) => (Tok::Dot, 1),
            (';', _) => (Tok::Semi, 1),
            ('=', _) => (Tok::Eq, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBrack, 1),
            (']', _) => (Tok::RBrack, 1),
            ('<', _) => (Tok::LAngle, 1),
            ('>', _) => (Tok::RAngle, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('#', _) => (Tok::Hash, 1),
            ('@', _) => (Tok::At, 1),
            ('^', _) => (Tok::Caret, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('/', _) => (Tok::Slash, 1),
            _ => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::BadChar(c),
                })
            }
        };
        out.push((tok, pos));
        i += len;
        col += len;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Source positions mirroring the shape of a parsed term.
struct PosTree {
    pos: Pos,
    children: Vec<PosTree>,
}

impl PosTree {
    fn leaf(pos: Pos) -> PosTree {
        PosTree {
            pos,
            children: Vec::new(),
        }
    }

    fn flatten(self, out: &mut Vec<Pos>) {
        out.push(self.pos);
        for c in self.children {
            c.flatten(out);
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    atoms: HashSet<Name>,
    consts: HashSet<Name>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(toks: Vec<(Tok, Pos)>, atoms: HashSet<Name>) -> Parser {
        Parser {
            toks,
            at: 0,
            atoms,
            consts: HashSet::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        Err(ParseError {
            pos: self.pos(),
            kind,
        })
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        self.err(ParseErrorKind::Unexpected {
            expected: expected.to_string(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    /// An identifier: a non-keyword word or an all-digit word.
    fn name(&mut self, what: &str) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => self.err(ParseErrorKind::Reserved(s)),
            Tok::Ident(s) | Tok::Nat(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn nat(&mut self, what: &'static str) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Nat(s) => {
                let n: usize = s.parse().or_else(|_| self.err(ParseErrorKind::Overflow))?;
                if n == 0 {
                    return self.err(ParseErrorKind::ZeroCount { what });
                }
                self.bump();
                Ok(n)
            }
            _ => self.unexpected(what),
        }
    }

    fn rat(&mut self, allow_negative: bool) -> PResult<Rat> {
        let neg = allow_negative && *self.peek() == Tok::Minus;
        if neg {
            self.bump();
        }
        let num = match self.peek().clone() {
            Tok::Nat(s) => {
                self.bump();
                s.parse::<BigInt>().expect("digits")
            }
            _ => return self.unexpected("a rational number"),
        };
        let den = if *self.peek() == Tok::Slash {
            self.bump();
            match self.peek().clone() {
                Tok::Nat(s) => {
                    let d = s.parse::<BigInt>().expect("digits");
                    if d == BigInt::from(0) {
                        return self.err(ParseErrorKind::ZeroDenominator);
                    }
                    self.bump();
                    d
                }
                _ => return self.unexpected("a denominator"),
            }
        } else {
            BigInt::from(1)
        };
        let r = Rat::new(num, den);
        Ok(if neg { -r } else { r })
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<Type> {
        let lhs = self.btype()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.ty()?;
            Ok(Type::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn btype(&mut self) -> PResult<Type> {
        let mut parts = vec![self.ptype()?];
        while *self.peek() == Tok::Plus {
            self.bump();
            parts.push(self.ptype()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Type::sum(parts)
        })
    }

    fn ptype(&mut self) -> PResult<Type> {
        let mut t = self.atype()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let n = self.nat("a tuple length")?;
            t = Type::pow(t, n);
        }
        Ok(t)
    }

    fn atype(&mut self) -> PResult<Type> {
        if self.is_keyword("Bool") {
            self.bump();
            if *self.peek() == Tok::LParen {
                let d = self.dist_body()?;
                return Ok(Type::bool_ann(d));
            }
            return Ok(Type::plain_bool());
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let t = self.ty()?;
            self.expect(Tok::RParen)?;
            return Ok(t);
        }
        let pos = self.pos();
        let name = self.name("a type")?;
        if !self.atoms.contains(&name) {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::UndeclaredAtom(name),
            });
        }
        Ok(Type::Atom(name))
    }

    /// `"(" rat type ("," rat type)* ")" "@" rat`
    fn dist_body(&mut self) -> PResult<Dist> {
        let pos = self.pos();
        self.expect(Tok::LParen)?;
        let entries = self.dist_entries()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::At)?;
        let epsilon = self.rat(true)?;
        check_dist(&entries, pos)?;
        Ok(Dist::new(entries, epsilon))
    }

    fn dist_entries(&mut self) -> PResult<Vec<(Rat, Type)>> {
        let mut entries = Vec::new();
        loop {
            let p = self.rat(false)?;
            let t = self.ty()?;
            entries.push((p, t));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(entries);
            }
        }
    }

    // ---- terms ----

    fn term(&mut self, bound: &mut Vec<Name>) -> PResult<(Term, PosTree)> {
        if *self.peek() == Tok::Lambda {
            let pos = self.pos();
            self.bump();
            let var = self.name("a variable")?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::Dot)?;
            bound.push(var.clone());
            let body = self.term(bound);
            bound.pop();
            let (body, bpos) = body?;
            return Ok((
                Term::Abs {
                    var,
                    ty,
                    body: Box::new(body),
                },
                PosTree {
                    pos,
                    children: vec![bpos],
                },
            ));
        }
        let pos = self.pos();
        let (mut t, mut tp) = self.aterm(bound)?;
        while self.starts_aterm() {
            let (a, ap) = self.aterm(bound)?;
            t = Term::app(t, a);
            tp = PosTree {
                pos,
                children: vec![tp, ap],
            };
        }
        Ok((t, tp))
    }

    fn starts_aterm(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => s != "with" && s != "Bool" && s != "type" && s != "subtype" && s != "const" && s != "main",
            Tok::Nat(_) | Tok::LBrace | Tok::LAngle | Tok::LParen => true,
            _ => false,
        }
    }

    fn aterm(&mut self, bound: &mut Vec<Name>) -> PResult<(Term, PosTree)> {
        let pos = self.pos();
        let (mut t, mut tp) = self.primary(bound)?;
        while *self.peek() == Tok::Hash {
            self.bump();
            let j = self.nat("a projection index")?;
            t = Term::proj(t, j);
            tp = PosTree {
                pos,
                children: vec![tp],
            };
        }
        Ok((t, tp))
    }

    fn primary(&mut self, bound: &mut Vec<Name>) -> PResult<(Term, PosTree)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok((Term::True, PosTree::leaf(pos)))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok((Term::False, PosTree::leaf(pos)))
            }
            Tok::Ident(s) if s == "exp" => {
                self.bump();
                self.expect(Tok::LBrack)?;
                let n = self.nat("an experiment size")?;
                self.expect(Tok::RBrack)?;
                let (b, bp) = self.aterm(bound)?;
                Ok((
                    Term::exp(n, b),
                    PosTree {
                        pos,
                        children: vec![bp],
                    },
                ))
            }
            Tok::Ident(s) if s == "trust" => {
                self.bump();
                let (b, bp) = self.aterm(bound)?;
                self.expect_keyword("with")?;
                let d = self.dist_body()?;
                Ok((
                    Term::trust(b, d),
                    PosTree {
                        pos,
                        children: vec![bp],
                    },
                ))
            }
            Tok::Ident(_) | Tok::Nat(_) => {
                let name = self.name("a term")?;
                let t = if bound.contains(&name) || !self.consts.contains(&name) {
                    Term::Var(name)
                } else {
                    Term::Const(name)
                };
                Ok((t, PosTree::leaf(pos)))
            }
            Tok::LBrace => {
                self.bump();
                let mut branches = Vec::new();
                let mut children = Vec::new();
                loop {
                    let p = self.rat(false)?;
                    let (b, bp) = self.term(bound)?;
                    branches.push((p, b));
                    children.push(bp);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                let total: Rat = branches.iter().map(|(p, _)| p).sum();
                if !total.is_one() || branches.iter().any(|(p, _)| !p.is_positive()) {
                    return Err(ParseError {
                        pos,
                        kind: ParseErrorKind::ChoiceWeights(total),
                    });
                }
                Ok((Term::Choice(branches), PosTree { pos, children }))
            }
            Tok::LAngle => {
                self.bump();
                let mut elems = Vec::new();
                let mut children = Vec::new();
                loop {
                    let (e, ep) = self.term(bound)?;
                    elems.push(e);
                    children.push(ep);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RAngle)?;
                Ok((Term::Tuple(elems), PosTree { pos, children }))
            }
            Tok::LParen => {
                self.bump();
                let r = self.term(bound)?;
                self.expect(Tok::RParen)?;
                Ok(r)
            }
            _ => self.unexpected("a term"),
        }
    }
}

fn check_dist(entries: &[(Rat, Type)], pos: Pos) -> PResult<()> {
    let total: Rat = entries.iter().map(|(p, _)| p).sum();
    if total.is_one() {
        Ok(())
    } else {
        Err(ParseError {
            pos,
            kind: ParseErrorKind::DistWeights(total),
        })
    }
}

/// Parse a whole program file.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(lex(src)?, HashSet::new());
    let mut atoms = Vec::new();
    let mut subtypes = Vec::new();
    let mut consts = Vec::new();
    let mut edges: BTreeSet<(Name, Name)> = BTreeSet::new();

    loop {
        let decl_pos = p.pos();
        if p.is_keyword("type") {
            p.bump();
            let pos = p.pos();
            let name = p.name("a type name")?;
            p.expect(Tok::Semi)?;
            if !p.atoms.insert(name.clone()) {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::Duplicate(format!("type `{name}`")),
                });
            }
            atoms.push(name);
        } else if p.is_keyword("subtype") {
            p.bump();
            let pos_a = p.pos();
            let a = p.name("a type name")?;
            p.expect(Tok::SubOf)?;
            let pos_b = p.pos();
            let b = p.name("a type name")?;
            p.expect(Tok::Semi)?;
            for (n, pos) in [(&a, pos_a), (&b, pos_b)] {
                if !p.atoms.contains(n) {
                    return Err(ParseError {
                        pos,
                        kind: ParseErrorKind::UndeclaredAtom(n.clone()),
                    });
                }
            }
            if !edges.insert((a.clone(), b.clone())) {
                return Err(ParseError {
                    pos: decl_pos,
                    kind: ParseErrorKind::Duplicate(format!("subtype `{a} <: {b}`")),
                });
            }
            subtypes.push((a, b));
        } else if p.is_keyword("const") {
            p.bump();
            let pos = p.pos();
            let c = p.name("a constant name")?;
            p.expect(Tok::Colon)?;
            let pos_t = p.pos();
            let t = p.name("a type name")?;
            p.expect(Tok::Semi)?;
            if !p.atoms.contains(&t) {
                return Err(ParseError {
                    pos: pos_t,
                    kind: ParseErrorKind::UndeclaredAtom(t),
                });
            }
            if !p.consts.insert(c.clone()) {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::Duplicate(format!("constant `{c}`")),
                });
            }
            consts.push((c, t));
        } else {
            break;
        }
    }

    p.expect_keyword("main")?;
    p.expect(Tok::Eq)?;
    let (main, tree) = p.term(&mut Vec::new())?;
    if *p.peek() != Tok::Eof {
        return p.unexpected("end of input");
    }
    let mut positions = Vec::new();
    tree.flatten(&mut positions);
    Ok(Program {
        atoms,
        subtypes,
        consts,
        main,
        positions,
    })
}

/// Parse a standalone type over the given declared atoms.
pub fn parse_type(src: &str, atoms: &[Name]) -> Result<Type, ParseError> {
    let mut p = Parser::new(lex(src)?, atoms.iter().cloned().collect());
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.unexpected("end of input");
    }
    Ok(t)
}

/// Parse a target distribution such as `1/2 H, 1/2 T` or `(1/2 H, 1/2 T) @ 1/4`.
/// Without an `@` clause the threshold is `default_eps`.
pub fn parse_dist(src: &str, atoms: &[Name], default_eps: Rat) -> Result<Dist, ParseError> {
    let mut p = Parser::new(lex(src)?, atoms.iter().cloned().collect());
    let pos = p.pos();
    let parenthesized = *p.peek() == Tok::LParen;
    if parenthesized {
        p.bump();
    }
    let entries = p.dist_entries()?;
    if parenthesized {
        p.expect(Tok::RParen)?;
    }
    let epsilon = if *p.peek() == Tok::At {
        p.bump();
        p.rat(true)?
    } else {
        default_eps
    };
    if *p.peek() != Tok::Eof {
        return p.unexpected("end of input");
    }
    check_dist(&entries, pos)?;
    Ok(Dist::new(entries, epsilon))
}
