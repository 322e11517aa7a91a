use std::collections::BTreeSet;

use super::{Name, Term};

/// Free variables of `t`. Constants and booleans have none.
pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(t, &mut Vec::new(), &mut out);
    out
}

fn collect_free<'a>(t: &'a Term, bound: &mut Vec<&'a str>, out: &mut BTreeSet<Name>) {
    match t {
        Term::Var(x) => {
            if !bound.contains(&x.as_str()) {
                out.insert(x.clone());
            }
        }
        Term::True | Term::False | Term::Const(_) => {}
        Term::Abs { var, body, .. } => {
            bound.push(var);
            collect_free(body, bound, out);
            bound.pop();
        }
        Term::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
        Term::Choice(bs) => bs.iter().for_each(|(_, b)| collect_free(b, bound, out)),
        Term::Tuple(es) => es.iter().for_each(|e| collect_free(e, bound, out)),
        Term::Exp(_, s) | Term::Proj(s, _) | Term::Trust(s, _) => collect_free(s, bound, out),
    }
}

fn occurs_free(t: &Term, x: &str) -> bool {
    match t {
        Term::Var(y) => y == x,
        Term::True | Term::False | Term::Const(_) => false,
        Term::Abs { var, body, .. } => var != x && occurs_free(body, x),
        Term::App(f, a) => occurs_free(f, x) || occurs_free(a, x),
        Term::Choice(bs) => bs.iter().any(|(_, b)| occurs_free(b, x)),
        Term::Tuple(es) => es.iter().any(|e| occurs_free(e, x)),
        Term::Exp(_, s) | Term::Proj(s, _) | Term::Trust(s, _) => occurs_free(s, x),
    }
}

/// All variable names occurring in `t`, free or bound.
fn all_vars(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Var(x) => {
            out.insert(x.clone());
        }
        Term::True | Term::False | Term::Const(_) => {}
        Term::Abs { var, body, .. } => {
            out.insert(var.clone());
            all_vars(body, out);
        }
        Term::App(f, a) => {
            all_vars(f, out);
            all_vars(a, out);
        }
        Term::Choice(bs) => bs.iter().for_each(|(_, b)| all_vars(b, out)),
        Term::Tuple(es) => es.iter().for_each(|e| all_vars(e, out)),
        Term::Exp(_, s) | Term::Proj(s, _) | Term::Trust(s, _) => all_vars(s, out),
    }
}

/// `base`, or `base` followed by primes, whichever is first not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let mut name = base.to_string();
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

/// Capture-avoiding substitution `t[s/x]`. A binder that would capture a
/// free variable of `s` is renamed first.
pub fn substitute(t: &Term, s: &Term, x: &str) -> Term {
    let s_free = free_vars(s);
    subst(t, s, x, &s_free)
}

fn subst(t: &Term, s: &Term, x: &str, s_free: &BTreeSet<Name>) -> Term {
    match t {
        Term::Var(y) if y == x => s.clone(),
        Term::Var(_) | Term::True | Term::False | Term::Const(_) => t.clone(),
        Term::Abs { var, ty, body } => {
            if var == x || !occurs_free(body, x) {
                return t.clone();
            }
            if s_free.contains(var) {
                let mut avoid = s_free.clone();
                all_vars(body, &mut avoid);
                avoid.insert(x.to_string());
                let renamed = fresh_name(var, &avoid);
                let body = subst(body, &Term::Var(renamed.clone()), var, &BTreeSet::new());
                Term::Abs {
                    var: renamed,
                    ty: ty.clone(),
                    body: Box::new(subst(&body, s, x, s_free)),
                }
            } else {
                Term::Abs {
                    var: var.clone(),
                    ty: ty.clone(),
                    body: Box::new(subst(body, s, x, s_free)),
                }
            }
        }
        Term::App(f, a) => Term::App(
            Box::new(subst(f, s, x, s_free)),
            Box::new(subst(a, s, x, s_free)),
        ),
        Term::Choice(bs) => Term::Choice(
            bs.iter()
                .map(|(p, b)| (p.clone(), subst(b, s, x, s_free)))
                .collect(),
        ),
        Term::Tuple(es) => Term::Tuple(es.iter().map(|e| subst(e, s, x, s_free)).collect()),
        Term::Exp(n, b) => Term::Exp(*n, Box::new(subst(b, s, x, s_free))),
        Term::Proj(b, j) => Term::Proj(Box::new(subst(b, s, x, s_free)), *j),
        Term::Trust(b, d) => Term::Trust(Box::new(subst(b, s, x, s_free)), d.clone()),
    }
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_eq(t: &Term, u: &Term) -> bool {
    alpha(t, u, &mut Vec::new(), &mut Vec::new())
}

fn alpha<'a>(t: &'a Term, u: &'a Term, bt: &mut Vec<&'a str>, bu: &mut Vec<&'a str>) -> bool {
    match (t, u) {
        (Term::Var(x), Term::Var(y)) => {
            let ix = bt.iter().rposition(|b| b == x);
            let iy = bu.iter().rposition(|b| b == y);
            match (ix, iy) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::True, Term::True) | (Term::False, Term::False) => true,
        (Term::Const(a), Term::Const(b)) => a == b,
        (
            Term::Abs {
                var: x,
                ty: a,
                body: b1,
            },
            Term::Abs {
                var: y,
                ty: b,
                body: b2,
            },
        ) => {
            if !a.equiv(b) {
                return false;
            }
            bt.push(x);
            bu.push(y);
            let r = alpha(b1, b2, bt, bu);
            bt.pop();
            bu.pop();
            r
        }
        (Term::App(f1, a1), Term::App(f2, a2)) => alpha(f1, f2, bt, bu) && alpha(a1, a2, bt, bu),
        (Term::Choice(xs), Term::Choice(ys)) => {
            xs.len() == ys.len()
                && xs
                    .iter()
                    .zip(ys)
                    .all(|((p, a), (q, b))| p == q && alpha(a, b, bt, bu))
        }
        (Term::Tuple(xs), Term::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(a, b)| alpha(a, b, bt, bu))
        }
        (Term::Exp(m, a), Term::Exp(n, b)) => m == n && alpha(a, b, bt, bu),
        (Term::Proj(a, i), Term::Proj(b, j)) => i == j && alpha(a, b, bt, bu),
        (Term::Trust(a, p), Term::Trust(b, q)) => p.equiv(q) && alpha(a, b, bt, bu),
        _ => false,
    }
}

/// A representative of `t`'s alpha-equivalence class: bound variables are
/// renamed by binding depth. Two terms whose free variables do not start with
/// `%` are alpha-equivalent iff their keys are equal.
pub fn alpha_key(t: &Term) -> Term {
    key(t, &mut Vec::new())
}

fn key<'a>(t: &'a Term, bound: &mut Vec<&'a str>) -> Term {
    match t {
        Term::Var(x) => match bound.iter().rposition(|b| b == x) {
            Some(level) => Term::Var(format!("%{level}")),
            None => t.clone(),
        },
        Term::True | Term::False | Term::Const(_) => t.clone(),
        Term::Abs { var, ty, body } => {
            let level = bound.len();
            bound.push(var);
            let body = key(body, bound);
            bound.pop();
            Term::Abs {
                var: format!("%{level}"),
                ty: ty.clone(),
                body: Box::new(body),
            }
        }
        Term::App(f, a) => Term::App(Box::new(key(f, bound)), Box::new(key(a, bound))),
        Term::Choice(bs) => Term::Choice(bs.iter().map(|(p, b)| (p.clone(), key(b, bound))).collect()),
        Term::Tuple(es) => Term::Tuple(es.iter().map(|e| key(e, bound)).collect()),
        Term::Exp(n, b) => Term::Exp(*n, Box::new(key(b, bound))),
        Term::Proj(b, j) => Term::Proj(Box::new(key(b, bound)), *j),
        Term::Trust(b, d) => Term::Trust(Box::new(key(b, bound)), d.clone()),
    }
}
