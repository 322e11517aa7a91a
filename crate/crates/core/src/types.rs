//! Subtyping and type assignment.
//!
//! Subtyping extends the declared atomic relation structurally: arrows are
//! contravariant in the domain, a sum is below another when every summand is
//! below some summand of the other (a non-sum counts as a one-summand sum),
//! and `(A)^m <: (B)^n` needs `A <: B` and `m >= n`. The unannotated boolean
//! sits below every annotated one, which is how `true`/`false` inhabit any
//! `Bool(P) @ eps`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::rat::Rat;
use crate::syntax::{Dist, Name, ParseError, Program, Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeErrorKind {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("unknown constant `{0}`")]
    UnknownConstant(Name),
    #[error("undeclared type `{0}`")]
    UndeclaredAtom(Name),
    #[error("cannot apply a term of type {0}")]
    NotAFunction(Type),
    #[error("argument of type {arg} is not a subtype of domain {domain}")]
    ArgumentMismatch { arg: Type, domain: Type },
    #[error("projection from a term of type {0}, which is not a tuple type")]
    NotATuple(Type),
    #[error("projection index {index} out of range for a tuple of length {len}")]
    ProjectionOutOfRange { index: usize, len: usize },
    #[error("trust applied to a term of type {0}, which is not a tuple type")]
    TrustSubject(Type),
    #[error("malformed term: {0}")]
    Malformed(String),
    #[error("malformed type: {0}")]
    MalformedType(String),
}

impl TypeErrorKind {
    pub fn code(&self) -> &'static str {
        match self {
            TypeErrorKind::UnboundVariable(_) => "unbound-variable",
            TypeErrorKind::UnknownConstant(_) => "unknown-constant",
            TypeErrorKind::UndeclaredAtom(_) => "undeclared-type",
            TypeErrorKind::NotAFunction(_) => "not-a-function",
            TypeErrorKind::ArgumentMismatch { .. } => "argument-mismatch",
            TypeErrorKind::NotATuple(_) => "not-a-tuple",
            TypeErrorKind::ProjectionOutOfRange { .. } => "projection-out-of-range",
            TypeErrorKind::TrustSubject(_) => "trust-subject",
            TypeErrorKind::Malformed(_) => "malformed-term",
            TypeErrorKind::MalformedType(_) => "malformed-type",
        }
    }
}

/// A typing error. `node` is the preorder index of the offending subterm
/// within the term that was checked, when there is one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub node: Option<usize>,
}

impl From<TypeErrorKind> for TypeError {
    fn from(kind: TypeErrorKind) -> Self {
        TypeError { kind, node: None }
    }
}

/// Declared atoms and the reflexive-transitive closure of the declared
/// atomic subtype relation.
#[derive(Debug, Clone, Default)]
pub struct SubtypeEnv {
    atoms: BTreeSet<Name>,
    edges: BTreeSet<(Name, Name)>,
    above: HashMap<Name, HashSet<Name>>,
}

impl SubtypeEnv {
    pub fn new<I, J>(atoms: I, edges: J) -> Result<SubtypeEnv, TypeError>
    where
        I: IntoIterator<Item = Name>,
        J: IntoIterator<Item = (Name, Name)>,
    {
        let atoms: BTreeSet<Name> = atoms.into_iter().collect();
        let edges: BTreeSet<(Name, Name)> = edges.into_iter().collect();
        for (a, b) in &edges {
            for n in [a, b] {
                if !atoms.contains(n) {
                    return Err(TypeErrorKind::UndeclaredAtom(n.clone()).into());
                }
            }
        }
        let mut above: HashMap<Name, HashSet<Name>> = HashMap::new();
        for a in &atoms {
            let mut seen = HashSet::from([a.clone()]);
            let mut stack = vec![a.clone()];
            while let Some(x) = stack.pop() {
                for (s, t) in &edges {
                    if *s == x && seen.insert(t.clone()) {
                        stack.push(t.clone());
                    }
                }
            }
            above.insert(a.clone(), seen);
        }
        Ok(SubtypeEnv { atoms, edges, above })
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Name> {
        self.atoms.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &(Name, Name)> {
        self.edges.iter()
    }

    pub fn is_declared(&self, atom: &str) -> bool {
        self.atoms.contains(atom)
    }

    /// Checks that every atom of `t` is declared and that its sums, tuple
    /// powers and annotations are well formed.
    pub fn validate(&self, t: &Type) -> Result<(), TypeError> {
        match t {
            Type::Atom(a) if self.atoms.contains(a) => Ok(()),
            Type::Atom(a) => Err(TypeErrorKind::UndeclaredAtom(a.clone()).into()),
            Type::Arrow(a, b) => {
                self.validate(a)?;
                self.validate(b)
            }
            Type::Sum(ts) => {
                if ts.is_empty() {
                    return Err(TypeErrorKind::MalformedType("empty sum".into()).into());
                }
                ts.iter().try_for_each(|s| self.validate(s))
            }
            Type::Pow(a, n) => {
                if *n == 0 {
                    return Err(TypeErrorKind::MalformedType("tuple power of length 0".into()).into());
                }
                self.validate(a)
            }
            Type::Bool(None) => Ok(()),
            Type::Bool(Some(d)) => self.validate_dist(d),
        }
    }

    pub fn validate_dist(&self, d: &Dist) -> Result<(), TypeError> {
        if !d.is_well_formed() {
            return Err(TypeErrorKind::MalformedType(format!(
                "distribution {d} must have nonnegative weights summing to 1"
            ))
            .into());
        }
        d.entries.iter().try_for_each(|(_, t)| self.validate(t))
    }

    fn atom_sub(&self, a: &str, b: &str) -> bool {
        a == b || self.above.get(a).is_some_and(|s| s.contains(b))
    }

    /// `a <: b`, assuming both types are valid in this environment.
    pub fn is_subtype(&self, a: &Type, b: &Type) -> bool {
        match (a, b) {
            (Type::Sum(xs), Type::Sum(ys)) => xs.iter().all(|x| ys.iter().any(|y| self.is_subtype(x, y))),
            (_, Type::Sum(ys)) => ys.iter().any(|y| self.is_subtype(a, y)),
            (Type::Sum(xs), _) => xs.iter().all(|x| self.is_subtype(x, b)),
            (Type::Atom(x), Type::Atom(y)) => self.atom_sub(x, y),
            (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) => self.is_subtype(b1, a1) && self.is_subtype(a2, b2),
            (Type::Pow(x, m), Type::Pow(y, n)) => m >= n && self.is_subtype(x, y),
            (Type::Bool(None), Type::Bool(_)) => true,
            (Type::Bool(Some(p)), Type::Bool(Some(q))) => p.equiv(q),
            _ => false,
        }
    }

    /// `a <: b`, failing on undeclared atoms.
    pub fn subtype(&self, a: &Type, b: &Type) -> Result<bool, TypeError> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(self.is_subtype(a, b))
    }
}

/// A common supertype of `tys`: the sum of the distinct types, or the type
/// itself when there is only one.
pub fn join(tys: &[Type]) -> Type {
    Type::sum(tys.iter().cloned())
}

/// Views `t` as a tuple type `(A)^n`. A sum of tuple powers is read as the
/// power of the joined element types at the shortest length, which is a
/// supertype of every summand.
pub fn as_tuple_type(t: &Type) -> Option<(Type, usize)> {
    match t {
        Type::Pow(a, n) => Some(((**a).clone(), *n)),
        Type::Sum(ts) => {
            let mut elems = Vec::with_capacity(ts.len());
            let mut len = usize::MAX;
            for s in ts {
                let (e, n) = as_tuple_type(s)?;
                elems.push(e);
                len = len.min(n);
            }
            Some((Type::sum(elems), len))
        }
        _ => None,
    }
}

/// Everything typing needs besides the variable context: the subtype
/// relation and the types of declared constants.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub subtypes: SubtypeEnv,
    consts: BTreeMap<Name, Name>,
}

impl Env {
    pub fn new<I>(subtypes: SubtypeEnv, consts: I) -> Result<Env, TypeError>
    where
        I: IntoIterator<Item = (Name, Name)>,
    {
        let mut map = BTreeMap::new();
        for (c, a) in consts {
            if !subtypes.is_declared(&a) {
                return Err(TypeErrorKind::UndeclaredAtom(a).into());
            }
            if map.insert(c.clone(), a).is_some() {
                return Err(TypeErrorKind::Malformed(format!("duplicate constant `{c}`")).into());
            }
        }
        Ok(Env { subtypes, consts: map })
    }

    pub fn from_program(p: &Program) -> Result<Env, TypeError> {
        let sub = SubtypeEnv::new(p.atoms.iter().cloned(), p.subtypes.iter().cloned())?;
        Env::new(sub, p.consts.iter().cloned())
    }

    pub fn const_type(&self, c: &str) -> Option<Type> {
        self.consts.get(c).map(|a| Type::Atom(a.clone()))
    }

    pub fn consts(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.consts.iter()
    }

    pub fn is_subtype(&self, a: &Type, b: &Type) -> bool {
        self.subtypes.is_subtype(a, b)
    }

    pub fn atom_names(&self) -> Vec<Name> {
        self.subtypes.atoms().cloned().collect()
    }
}

/// Types of free variables, innermost binding last.
#[derive(Debug, Clone, Default)]
pub struct Context(Vec<(Name, Type)>);

impl Context {
    pub fn new() -> Context {
        Context(Vec::new())
    }

    pub fn with(mut self, x: impl Into<Name>, ty: Type) -> Context {
        self.0.push((x.into(), ty));
        self
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.0.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }
}

struct Checker<'e> {
    env: &'e Env,
    ctx: Vec<(Name, Type)>,
    next: usize,
}

impl Checker<'_> {
    fn synth(&mut self, t: &Term) -> Result<Type, TypeError> {
        let node = self.next;
        self.next += 1;
        let at = |kind: TypeErrorKind| TypeError { kind, node: Some(node) };
        let validate = |ty: &Type| {
            self.env.subtypes.validate(ty).map_err(|e| TypeError {
                kind: e.kind,
                node: Some(node),
            })
        };
        match t {
            Term::Var(x) => self
                .ctx
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, ty)| ty.clone())
                .ok_or_else(|| at(TypeErrorKind::UnboundVariable(x.clone()))),
            Term::True | Term::False => Ok(Type::plain_bool()),
            Term::Const(c) => self
                .env
                .const_type(c)
                .ok_or_else(|| at(TypeErrorKind::UnknownConstant(c.clone()))),
            Term::Abs { var, ty, body } => {
                validate(ty)?;
                self.ctx.push((var.clone(), ty.clone()));
                let body_ty = self.synth(body);
                self.ctx.pop();
                Ok(Type::arrow(ty.clone(), body_ty?))
            }
            Term::App(f, a) => {
                let fun_ty = self.synth(f)?;
                let arg_ty = self.synth(a)?;
                let mut codomains = Vec::new();
                for s in fun_ty.summands() {
                    match s {
                        Type::Arrow(dom, cod) => {
                            if !self.env.is_subtype(&arg_ty, dom) {
                                return Err(at(TypeErrorKind::ArgumentMismatch {
                                    arg: arg_ty,
                                    domain: (**dom).clone(),
                                }));
                            }
                            codomains.push((**cod).clone());
                        }
                        _ => return Err(at(TypeErrorKind::NotAFunction(fun_ty.clone()))),
                    }
                }
                Ok(Type::sum(codomains))
            }
            Term::Choice(bs) => {
                if bs.is_empty() {
                    return Err(at(TypeErrorKind::Malformed("empty choice".into())));
                }
                let total: Rat = bs.iter().map(|(p, _)| p).sum();
                if !total.is_one() || bs.iter().any(|(p, _)| !p.is_positive()) {
                    return Err(at(TypeErrorKind::Malformed(format!(
                        "choice weights must be positive and sum to 1, got total {total}"
                    ))));
                }
                let mut tys = Vec::with_capacity(bs.len());
                for (_, b) in bs {
                    tys.push(self.synth(b)?);
                }
                Ok(Type::sum(tys))
            }
            Term::Exp(n, b) => {
                if *n == 0 {
                    return Err(at(TypeErrorKind::Malformed("experiment of size 0".into())));
                }
                Ok(Type::pow(self.synth(b)?, *n))
            }
            Term::Tuple(es) => {
                if es.is_empty() {
                    return Err(at(TypeErrorKind::Malformed("empty tuple".into())));
                }
                let mut tys = Vec::with_capacity(es.len());
                for e in es {
                    tys.push(self.synth(e)?);
                }
                Ok(Type::pow(join(&tys), es.len()))
            }
            Term::Proj(b, j) => {
                let ty = self.synth(b)?;
                let Some((elem, len)) = as_tuple_type(&ty) else {
                    return Err(at(TypeErrorKind::NotATuple(ty)));
                };
                if *j == 0 || *j > len {
                    return Err(at(TypeErrorKind::ProjectionOutOfRange { index: *j, len }));
                }
                Ok(elem)
            }
            Term::Trust(b, d) => {
                let ty = self.synth(b)?;
                if as_tuple_type(&ty).is_none() {
                    return Err(at(TypeErrorKind::TrustSubject(ty)));
                }
                self.env.subtypes.validate_dist(d).map_err(|e| at(e.kind))?;
                Ok(Type::bool_ann(d.clone()))
            }
        }
    }
}

/// Infers the type of `t`. Errors carry the preorder index of the offending
/// subterm.
pub fn infer(t: &Term, ctx: &Context, env: &Env) -> Result<Type, TypeError> {
    let mut checker = Checker {
        env,
        ctx: ctx.0.clone(),
        next: 0,
    };
    checker.synth(t)
}

/// Type of a closed term.
pub fn infer_closed(t: &Term, env: &Env) -> Result<Type, TypeError> {
    infer(t, &Context::new(), env)
}

/// A term annotated with its type and the typed derivations of its subterms.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedTerm {
    pub term: Term,
    pub ty: Type,
    pub children: Vec<TypedTerm>,
}

fn typed(t: &Term, ctx: &Context, env: &Env) -> Result<TypedTerm, TypeError> {
    let ty = infer(t, ctx, env)?;
    let children = match t {
        Term::Var(_) | Term::True | Term::False | Term::Const(_) => Vec::new(),
        Term::Abs { var, ty: a, body } => vec![typed(body, &ctx.clone().with(var.clone(), a.clone()), env)?],
        Term::App(f, a) => vec![typed(f, ctx, env)?, typed(a, ctx, env)?],
        Term::Choice(bs) => bs.iter().map(|(_, b)| typed(b, ctx, env)).collect::<Result<_, _>>()?,
        Term::Tuple(es) => es.iter().map(|e| typed(e, ctx, env)).collect::<Result<_, _>>()?,
        Term::Exp(_, b) | Term::Proj(b, _) | Term::Trust(b, _) => vec![typed(b, ctx, env)?],
    };
    Ok(TypedTerm {
        term: t.clone(),
        ty,
        children,
    })
}

/// A located diagnostic, as rendered by the command line tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Self {
        Diagnostic {
            code: e.kind.code().to_string(),
            message: e.kind.to_string(),
            line: e.pos.line,
            col: e.pos.col,
        }
    }
}

/// Type-checks `main` against the program's declarations.
pub fn check_program(p: &Program) -> Result<TypedTerm, Vec<Diagnostic>> {
    let to_diag = |e: TypeError| {
        let pos = e.node.and_then(|n| p.position(n)).unwrap_or_default();
        vec![Diagnostic {
            code: e.kind.code().to_string(),
            message: e.kind.to_string(),
            line: pos.line,
            col: pos.col,
        }]
    };
    let env = Env::from_program(p).map_err(to_diag)?;
    // infer first so that a failure is reported at its own node
    infer_closed(&p.main, &env).map_err(to_diag)?;
    typed(&p.main, &Context::new(), &env).map_err(to_diag)
}
