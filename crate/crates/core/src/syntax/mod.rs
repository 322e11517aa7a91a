//! Terms, types and programs of the calculus, with the concrete syntax.

mod parse;
mod print;
mod subst;

pub use parse::{parse_dist, parse_program, parse_type, ParseError, ParseErrorKind, Pos};
pub use print::print_term;
pub use subst::{alpha_eq, alpha_key, free_vars, fresh_name, substitute};

use crate::rat::Rat;

pub type Name = String;

/// A term. Binders carry their type annotation; `Trust` carries the target
/// distribution and threshold it checks against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    True,
    False,
    /// A declared constant such as `h : H`.
    Const(Name),
    Abs {
        var: Name,
        ty: Type,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    /// `{p1 t1, ..., pn tn}`; weights are positive and sum to one.
    Choice(Vec<(Rat, Term)>),
    /// `exp[n] t`: run `t` n times.
    Exp(usize, Box<Term>),
    Tuple(Vec<Term>),
    /// `t#j`, 1-based.
    Proj(Box<Term>, usize),
    Trust(Box<Term>, Dist),
}

impl Term {
    pub fn var(x: impl Into<Name>) -> Term {
        Term::Var(x.into())
    }

    pub fn constant(c: impl Into<Name>) -> Term {
        Term::Const(c.into())
    }

    pub fn abs(var: impl Into<Name>, ty: Type, body: Term) -> Term {
        Term::Abs {
            var: var.into(),
            ty,
            body: Box::new(body),
        }
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn choice(branches: Vec<(Rat, Term)>) -> Term {
        Term::Choice(branches)
    }

    pub fn exp(n: usize, t: Term) -> Term {
        Term::Exp(n, Box::new(t))
    }

    pub fn proj(t: Term, j: usize) -> Term {
        Term::Proj(Box::new(t), j)
    }

    pub fn trust(t: Term, target: Dist) -> Term {
        Term::Trust(Box::new(t), target)
    }

    /// Values are booleans, constants, abstractions and tuples of values.
    pub fn is_value(&self) -> bool {
        match self {
            Term::True | Term::False | Term::Const(_) | Term::Abs { .. } => true,
            Term::Tuple(es) => es.iter().all(Term::is_value),
            _ => false,
        }
    }

    pub fn is_closed(&self) -> bool {
        free_vars(self).is_empty()
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Var(_) | Term::True | Term::False | Term::Const(_) => 0,
            Term::Abs { body, .. } => body.size(),
            Term::App(f, a) => f.size() + a.size(),
            Term::Choice(bs) => bs.iter().map(|(_, t)| t.size()).sum(),
            Term::Exp(_, t) | Term::Proj(t, _) | Term::Trust(t, _) => t.size(),
            Term::Tuple(es) => es.iter().map(Term::size).sum(),
        }
    }
}

/// A type. Sums are kept flat and duplicate-free by [`Type::sum`]; a sum of a
/// single type is that type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Atom(Name),
    Arrow(Box<Type>, Box<Type>),
    Sum(Vec<Type>),
    /// `(A)^n`: tuples of `n` elements of type `A`.
    Pow(Box<Type>, usize),
    /// `Bool(P) @ eps`. `None` is the unannotated boolean, the type of the
    /// literals `true` and `false`; it is a subtype of every annotated one.
    Bool(Option<Box<Dist>>),
}

impl Type {
    pub fn atom(name: impl Into<Name>) -> Type {
        Type::Atom(name.into())
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Type, n: usize) -> Type {
        Type::Pow(Box::new(a), n)
    }

    pub fn bool_ann(d: Dist) -> Type {
        Type::Bool(Some(Box::new(d)))
    }

    pub fn plain_bool() -> Type {
        Type::Bool(None)
    }

    /// Normalized sum: nested sums are flattened, repeated summands (up to
    /// [`Type::equiv`]) dropped keeping first occurrence, and a single
    /// remaining summand is returned bare.
    pub fn sum(tys: impl IntoIterator<Item = Type>) -> Type {
        let mut out: Vec<Type> = Vec::new();
        for t in tys {
            let parts = match t {
                Type::Sum(inner) => inner,
                other => vec![other],
            };
            for p in parts {
                if !out.iter().any(|o| o.equiv(&p)) {
                    out.push(p);
                }
            }
        }
        match out.len() {
            1 => out.pop().unwrap(),
            _ => Type::Sum(out),
        }
    }

    /// Summands of this type, viewing a non-sum as a one-summand sum.
    pub fn summands(&self) -> &[Type] {
        match self {
            Type::Sum(ts) => ts,
            other => std::slice::from_ref(other),
        }
    }

    /// Equality up to the order of summands.
    pub fn equiv(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Atom(a), Type::Atom(b)) => a == b,
            (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => a1.equiv(a2) && b1.equiv(b2),
            (Type::Sum(xs), Type::Sum(ys)) => {
                xs.len() == ys.len()
                    && xs.iter().all(|x| ys.iter().any(|y| x.equiv(y)))
                    && ys.iter().all(|y| xs.iter().any(|x| x.equiv(y)))
            }
            (Type::Pow(a, m), Type::Pow(b, n)) => m == n && a.equiv(b),
            (Type::Bool(None), Type::Bool(None)) => true,
            (Type::Bool(Some(p)), Type::Bool(Some(q))) => p.equiv(q),
            _ => false,
        }
    }

    /// Atom names mentioned anywhere in the type.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Type::Atom(a) => out.push(a),
            Type::Arrow(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Type::Sum(ts) => ts.iter().for_each(|t| t.collect_atoms(out)),
            Type::Pow(a, _) => a.collect_atoms(out),
            Type::Bool(None) => {}
            Type::Bool(Some(d)) => d.entries.iter().for_each(|(_, t)| t.collect_atoms(out)),
        }
    }
}

/// A distribution over types with a threshold: `(p1 B1, ..., pm Bm) @ eps`.
/// The same type may appear in several entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dist {
    pub entries: Vec<(Rat, Type)>,
    pub epsilon: Rat,
}

impl Dist {
    pub fn new(entries: Vec<(Rat, Type)>, epsilon: Rat) -> Dist {
        Dist { entries, epsilon }
    }

    pub fn total(&self) -> Rat {
        self.entries.iter().map(|(p, _)| p).sum()
    }

    /// Entries are nonempty, nonnegative and sum exactly to one.
    pub fn is_well_formed(&self) -> bool {
        !self.entries.is_empty()
            && self.entries.iter().all(|(p, _)| !p.is_negative())
            && self.total().is_one()
    }

    pub fn with_epsilon(mut self, epsilon: Rat) -> Dist {
        self.epsilon = epsilon;
        self
    }

    pub fn equiv(&self, other: &Dist) -> bool {
        self.epsilon == other.epsilon
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((p, a), (q, b))| p == q && a.equiv(b))
    }
}

/// A parsed program: declarations plus the `main` term.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub atoms: Vec<Name>,
    /// The declared atomic subtype relation, as (sub, super) pairs.
    pub subtypes: Vec<(Name, Name)>,
    pub consts: Vec<(Name, Name)>,
    pub main: Term,
    /// Source position of every node of `main`, in preorder.
    pub positions: Vec<Pos>,
}

impl Program {
    /// Position of the `index`-th node of `main` in preorder.
    pub fn position(&self, index: usize) -> Option<Pos> {
        self.positions.get(index).copied()
    }
}
