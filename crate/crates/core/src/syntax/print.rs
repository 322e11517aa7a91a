//! Pretty-printing in the concrete syntax accepted by the parser.

use std::fmt::{self, Display, Formatter, Write};

use super::{Dist, Term, Type};

pub fn print_term(t: &Term) -> String {
    t.to_string()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TermCtx {
    Top,
    Head,
    Atom,
}

fn write_term(f: &mut Formatter<'_>, t: &Term, ctx: TermCtx) -> fmt::Result {
    let needs_parens = match (t, ctx) {
        (_, TermCtx::Top) => false,
        (Term::Abs { .. } | Term::Exp(..) | Term::Trust(..), _) => true,
        (Term::App(..), TermCtx::Atom) => true,
        _ => false,
    };
    if needs_parens {
        f.write_char('(')?;
        write_term(f, t, TermCtx::Top)?;
        return f.write_char(')');
    }
    match t {
        Term::Var(x) | Term::Const(x) => f.write_str(x),
        Term::True => f.write_str("true"),
        Term::False => f.write_str("false"),
        Term::Abs { var, ty, body } => {
            write!(f, "\\{var}:{ty}. ")?;
            write_term(f, body, TermCtx::Top)
        }
        Term::App(fun, arg) => {
            write_term(f, fun, TermCtx::Head)?;
            f.write_char(' ')?;
            write_term(f, arg, TermCtx::Atom)
        }
        Term::Choice(bs) => {
            f.write_char('{')?;
            for (i, (p, b)) in bs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p} ")?;
                write_term(f, b, TermCtx::Top)?;
            }
            f.write_char('}')
        }
        Term::Exp(n, b) => {
            write!(f, "exp[{n}] ")?;
            write_term(f, b, TermCtx::Atom)
        }
        Term::Tuple(es) => {
            f.write_char('<')?;
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(f, e, TermCtx::Top)?;
            }
            f.write_char('>')
        }
        Term::Proj(b, j) => {
            write_term(f, b, TermCtx::Atom)?;
            write!(f, "#{j}")
        }
        Term::Trust(b, d) => {
            f.write_str("trust ")?;
            write_term(f, b, TermCtx::Atom)?;
            write!(f, " with {d}")
        }
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_term(f, self, TermCtx::Top)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TypeCtx {
    Top,
    ArrowLeft,
    Summand,
    PowBase,
}

fn write_type(f: &mut Formatter<'_>, t: &Type, ctx: TypeCtx) -> fmt::Result {
    let needs_parens = match (t, ctx) {
        (_, TypeCtx::Top) => false,
        (Type::Arrow(..), _) => true,
        (Type::Sum(_), TypeCtx::Summand | TypeCtx::PowBase) => true,
        (Type::Pow(..) | Type::Bool(Some(_)), TypeCtx::PowBase) => true,
        _ => false,
    };
    if needs_parens {
        f.write_char('(')?;
        write_type(f, t, TypeCtx::Top)?;
        return f.write_char(')');
    }
    match t {
        Type::Atom(a) => f.write_str(a),
        Type::Arrow(a, b) => {
            write_type(f, a, TypeCtx::ArrowLeft)?;
            f.write_str(" -> ")?;
            write_type(f, b, TypeCtx::Top)
        }
        Type::Sum(ts) => {
            for (i, s) in ts.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write_type(f, s, TypeCtx::Summand)?;
            }
            Ok(())
        }
        Type::Pow(a, n) => {
            write_type(f, a, TypeCtx::PowBase)?;
            write!(f, "^{n}")
        }
        Type::Bool(None) => f.write_str("Bool"),
        Type::Bool(Some(d)) => write!(f, "Bool{d}"),
    }
}

impl Display for Type {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_type(f, self, TypeCtx::Top)
    }
}

impl Display for Dist {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('(')?;
        for (i, (p, ty)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p} {ty}")?;
        }
        write!(f, ") @ {}", self.epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::Rat;

    #[test]
    fn prints_literals_and_coin() {
        assert_eq!(print_term(&Term::True), "true");
        let coin = Term::choice(vec![
            (Rat::new(1, 2), Term::constant("h")),
            (Rat::new(1, 2), Term::constant("t")),
        ]);
        assert_eq!(print_term(&coin), "{1/2 h, 1/2 t}");
    }

    #[test]
    fn parenthesizes_where_needed() {
        let a = Type::atom("A");
        let id = Term::abs("x", a.clone(), Term::var("x"));
        let t = Term::app(id.clone(), Term::app(Term::var("f"), Term::True));
        assert_eq!(print_term(&t), "(\\x:A. x) (f true)");
        let p = Term::proj(Term::exp(2, Term::constant("h")), 1);
        assert_eq!(print_term(&p), "(exp[2] h)#1");
        let ty = Type::arrow(Type::arrow(a.clone(), a.clone()), Type::pow(Type::Sum(vec![a.clone(), Type::atom("B")]), 3));
        assert_eq!(ty.to_string(), "(A -> A) -> (A + B)^3");
        let d = Dist::new(vec![(Rat::one(), a)], Rat::zero());
        assert_eq!(Type::bool_ann(d).to_string(), "Bool(1 A) @ 0");
    }
}
