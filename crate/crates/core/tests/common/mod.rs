//! Random closed well-typed terms over a small fixed signature.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trustlam::syntax::{Dist, Term, Type};
use trustlam::{parse_program, Env, Rat};

/// Declarations every generated term is typed against.
pub const SIGNATURE: &str = "type H; type T; type A; type B; subtype A <: B;\n\
    const h:H; const t:T; const a:A; const b:B;\n";

pub fn env() -> Env {
    let p = parse_program(&format!("{SIGNATURE} main = true")).unwrap();
    Env::from_program(&p).unwrap()
}

/// Full program source with the given main term.
pub fn program(t: &Term) -> String {
    format!("{SIGNATURE} main = {t}")
}

fn atom(n: &str) -> Type {
    Type::atom(n)
}

const CONSTS: [(&str, &str); 4] = [("h", "H"), ("t", "T"), ("a", "A"), ("b", "B")];

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_depth: usize,
    /// Bound on the product of experiment sizes along any path.
    pub exp_budget: usize,
    pub max_arity: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 8,
            exp_budget: 10,
            max_arity: 3,
        }
    }
}

pub struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    ctx: Vec<(String, Type)>,
    next_var: usize,
}

impl Gen {
    pub fn new(seed: u64, cfg: GenConfig) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            ctx: Vec::new(),
            next_var: 0,
        }
    }

    fn fresh(&mut self) -> String {
        self.next_var += 1;
        format!("v{}", self.next_var)
    }

    /// Positive weights summing to 1 with small denominators.
    pub fn weights(&mut self, k: usize) -> Vec<Rat> {
        let den = *[2i64, 3, 4, 6, 8, 12].choose(&mut self.rng).unwrap();
        let den = den.max(k as i64);
        // split den into k positive parts
        let mut cuts: Vec<i64> = (1..den).collect();
        cuts.shuffle(&mut self.rng);
        let mut cuts: Vec<i64> = cuts.into_iter().take(k - 1).collect();
        cuts.sort();
        let mut prev = 0;
        let mut out = Vec::with_capacity(k);
        for c in cuts.into_iter().chain([den]) {
            out.push(Rat::new(c - prev, den));
            prev = c;
        }
        out
    }

    fn simple_type(&mut self) -> Type {
        match self.rng.gen_range(0..7) {
            0 => atom("H"),
            1 => atom("T"),
            2 => atom("A"),
            3 => atom("B"),
            4 => Type::sum([atom("H"), atom("T")]),
            5 => Type::plain_bool(),
            _ => Type::pow(atom("H"), self.rng.gen_range(1..=2)),
        }
    }

    fn leaf(&mut self) -> (Term, Type) {
        let vars: Vec<(String, Type)> = self.ctx.clone();
        if !vars.is_empty() && self.rng.gen_bool(0.3) {
            let (x, ty) = vars.choose(&mut self.rng).unwrap().clone();
            return (Term::Var(x), ty);
        }
        match self.rng.gen_range(0..6) {
            0 => (Term::True, Type::plain_bool()),
            1 => (Term::False, Type::plain_bool()),
            _ => {
                let (c, ty) = *CONSTS.choose(&mut self.rng).unwrap();
                (Term::constant(c), atom(ty))
            }
        }
    }

    /// A term of a type that is a subtype of `ty`.
    pub fn term_of(&mut self, ty: &Type, depth: usize, budget: usize) -> Term {
        let deep = depth > 0 && self.rng.gen_bool(0.5);
        if let Some((x, _)) = self
            .ctx
            .iter()
            .rev()
            .find(|(_, t)| env_static().is_subtype(t, ty))
            .cloned()
        {
            if !deep && self.rng.gen_bool(0.5) {
                return Term::Var(x);
            }
        }
        match ty {
            Type::Atom(n) => {
                let options: Vec<&str> = CONSTS
                    .iter()
                    .filter(|(_, a)| env_static().is_subtype(&atom(a), &atom(n)))
                    .map(|(c, _)| *c)
                    .collect();
                if deep && self.rng.gen_bool(0.5) {
                    // beta redex producing the atom
                    let (arg, arg_ty) = self.term(depth - 1, budget);
                    let x = self.fresh();
                    self.ctx.push((x.clone(), arg_ty.clone()));
                    let body = self.term_of(ty, depth - 1, budget);
                    self.ctx.pop();
                    return Term::app(Term::abs(x, arg_ty, body), arg);
                }
                if deep {
                    let k = self.rng.gen_range(2..=self.cfg.max_arity);
                    let ws = self.weights(k);
                    let bs = ws.into_iter().map(|w| (w, self.term_of(ty, depth - 1, budget))).collect();
                    return Term::choice(bs);
                }
                Term::constant(*options.choose(&mut self.rng).unwrap())
            }
            Type::Bool(_) => {
                if self.rng.gen_bool(0.5) {
                    Term::True
                } else {
                    Term::False
                }
            }
            Type::Arrow(d, c) => {
                let x = self.fresh();
                self.ctx.push((x.clone(), (**d).clone()));
                let body = self.term_of(c, depth.saturating_sub(1), budget);
                self.ctx.pop();
                Term::abs(x, (**d).clone(), body)
            }
            Type::Sum(ts) => {
                if deep || self.rng.gen_bool(0.5) {
                    let k = ts.len().min(self.cfg.max_arity);
                    let ws = self.weights(k);
                    let picks: Vec<Type> = ts.choose_multiple(&mut self.rng, k).cloned().collect();
                    let d = depth.saturating_sub(1);
                    let bs = ws.into_iter().zip(picks).map(|(w, s)| (w, self.term_of(&s, d, budget))).collect();
                    Term::choice(bs)
                } else {
                    let s = ts.choose(&mut self.rng).unwrap().clone();
                    self.term_of(&s, depth, budget)
                }
            }
            Type::Pow(e, n) => {
                let d = depth.saturating_sub(1);
                if *n <= budget && self.rng.gen_bool(0.5) {
                    Term::exp(*n, self.term_of(e, d, budget / n))
                } else {
                    Term::Tuple((0..*n).map(|_| self.term_of(e, d, budget)).collect())
                }
            }
        }
    }

    fn tuple_term(&mut self, depth: usize, budget: usize) -> (Term, Type) {
        let d = depth - 1;
        if budget >= 2 && self.rng.gen_bool(0.5) {
            let n = self.rng.gen_range(1..=budget.min(4));
            let (s, ty) = self.term(d, budget / n);
            (Term::exp(n, s), Type::pow(ty, n))
        } else {
            let n = self.rng.gen_range(1..=3);
            let items: Vec<(Term, Type)> = (0..n).map(|_| self.term(d, budget)).collect();
            let ty = Type::sum(items.iter().map(|(_, t)| t.clone()));
            (Term::Tuple(items.into_iter().map(|(t, _)| t).collect()), Type::pow(ty, n))
        }
    }

    /// A target distribution over the summands of `elem`, sometimes with an
    /// unrelated extra entry.
    pub fn target_for(&mut self, elem: &Type) -> Dist {
        let mut tys: Vec<Type> = elem.summands().to_vec();
        tys.shuffle(&mut self.rng);
        tys.truncate(3);
        if self.rng.gen_bool(0.3) {
            tys.push(self.simple_type());
        }
        if self.rng.gen_bool(0.2) {
            // an entry that groups several outputs
            tys.push(Type::sum(elem.summands().iter().cloned()));
        }
        let ws = self.weights(tys.len());
        let eps = [Rat::zero(), Rat::new(1, 4), Rat::new(1, 3), Rat::new(1, 2), Rat::one()]
            .choose(&mut self.rng)
            .unwrap()
            .clone();
        Dist::new(ws.into_iter().zip(tys).collect(), eps)
    }

    /// A random closed-under-context term and its type.
    pub fn term(&mut self, depth: usize, budget: usize) -> (Term, Type) {
        if depth == 0 {
            return self.leaf();
        }
        let e = env_static();
        match self.rng.gen_range(0..10) {
            0 => self.leaf(),
            1 | 2 => {
                let k = self.rng.gen_range(2..=self.cfg.max_arity);
                let ws = self.weights(k);
                let mut bs = Vec::new();
                let mut tys = Vec::new();
                for w in ws {
                    let (b, ty) = self.term(depth - 1, budget);
                    bs.push((w, b));
                    tys.push(ty);
                }
                (Term::choice(bs), Type::sum(tys))
            }
            3 => {
                let dom = self.simple_type();
                let x = self.fresh();
                self.ctx.push((x.clone(), dom.clone()));
                let (body, cod) = self.term(depth - 1, budget);
                self.ctx.pop();
                (Term::abs(x, dom.clone(), body), Type::arrow(dom, cod))
            }
            4 | 5 => {
                // application of an abstraction, or of a choice of them
                let (arg, arg_ty) = self.term(depth - 1, budget);
                let dom = if arg_ty == atom("A") && self.rng.gen_bool(0.5) { atom("B") } else { arg_ty };
                let heads = if self.rng.gen_bool(0.7) { 1 } else { 2 };
                let mut fs = Vec::new();
                let mut cods = Vec::new();
                for _ in 0..heads {
                    let x = self.fresh();
                    self.ctx.push((x.clone(), dom.clone()));
                    let (body, cod) = self.term(depth - 1, budget);
                    self.ctx.pop();
                    fs.push(Term::abs(x, dom.clone(), body));
                    cods.push(cod);
                }
                let head = if heads == 1 {
                    fs.pop().unwrap()
                } else {
                    let ws = self.weights(heads);
                    Term::choice(ws.into_iter().zip(fs).collect())
                };
                (Term::app(head, arg), Type::sum(cods))
            }
            6 => {
                // apply a variable of arrow type if there is one
                let arrows: Vec<(String, Type, Type)> = self
                    .ctx
                    .iter()
                    .filter_map(|(x, t)| match t {
                        Type::Arrow(d, c) => Some((x.clone(), (**d).clone(), (**c).clone())),
                        _ => None,
                    })
                    .collect();
                match arrows.choose(&mut self.rng).cloned() {
                    Some((f, d, c)) => {
                        let arg = self.term_of(&d, depth - 1, budget);
                        (Term::app(Term::Var(f), arg), c)
                    }
                    None => self.tuple_term(depth, budget),
                }
            }
            7 => self.tuple_term(depth, budget),
            8 => {
                let (s, ty) = self.tuple_term(depth, budget);
                let Type::Pow(elem, n) = ty else { unreachable!() };
                let j = self.rng.gen_range(1..=n);
                (Term::proj(s, j), *elem)
            }
            _ => {
                let (s, ty) = self.tuple_term(depth, budget);
                let Type::Pow(elem, _) = ty else { unreachable!() };
                let target = self.target_for(&elem);
                debug_assert!(e.subtypes.validate_dist(&target).is_ok());
                (Term::trust(s, target.clone()), Type::bool_ann(target))
            }
        }
    }
}

fn env_static() -> &'static Env {
    static ENV: std::sync::OnceLock<Env> = std::sync::OnceLock::new();
    ENV.get_or_init(env)
}

/// A closed well-typed non-value term generated from `seed`.
pub fn closed_term(seed: u64, cfg: GenConfig) -> Term {
    let mut g = Gen::new(seed, cfg);
    loop {
        let depth = g.rng.gen_range(1..=cfg.max_depth);
        let t = g.term(depth, cfg.exp_budget).0;
        if !t.is_value() {
            return t;
        }
    }
}

/// A term whose outputs are constants or booleans, a target over their
/// types, and an experiment size in `1..=4`.
pub fn oracle_case(seed: u64) -> (Term, Dist, usize) {
    let mut g = Gen::new(seed, GenConfig { max_depth: 3, exp_budget: 2, max_arity: 3 });
    let mut pool = vec![atom("H"), atom("T"), atom("A"), atom("B"), Type::plain_bool()];
    pool.shuffle(&mut g.rng);
    let k = g.rng.gen_range(2..=3);
    let picked: Vec<Type> = pool.into_iter().take(k).collect();
    let ws = g.weights(k);
    let branches = ws
        .into_iter()
        .zip(picked.clone())
        .map(|(w, ty)| (w, g.term_of(&ty, 2, 2)))
        .collect();
    let t = Term::choice(branches);
    let mut tys = picked;
    if g.rng.gen_bool(0.3) {
        tys.push(g.simple_type());
    }
    let ws = g.weights(tys.len());
    let eps = [Rat::zero(), Rat::new(1, 4), Rat::new(1, 3), Rat::new(1, 2)]
        .choose(&mut g.rng)
        .unwrap()
        .clone();
    let n = g.rng.gen_range(1..=4);
    (t, Dist::new(ws.into_iter().zip(tys).collect(), eps), n)
}

/// A small term whose outputs are constants, of at most `k` distinct atom
/// types.
fn outcome_term(g: &mut Gen, k: usize) -> Term {
    let mut pool = vec![atom("H"), atom("T"), atom("A"), atom("B")];
    pool.shuffle(&mut g.rng);
    let picked: Vec<Type> = pool.into_iter().take(k).collect();
    let ws = g.weights(picked.len());
    let branches = ws
        .into_iter()
        .zip(picked)
        .map(|(w, ty)| (w, g.term_of(&ty, 1, 1)))
        .collect();
    Term::choice(branches)
}

/// Branches and a chooser over distinct constants for the conditional
/// construct.
pub fn conditional_case(seed: u64) -> (Vec<Term>, Term) {
    let mut g = Gen::new(seed, GenConfig { max_depth: 2, exp_budget: 1, max_arity: 2 });
    let n = g.rng.gen_range(1..=3);
    let mut labels: Vec<&str> = CONSTS.iter().map(|(c, _)| *c).collect();
    labels.shuffle(&mut g.rng);
    let ws = g.weights(n);
    let chooser = Term::choice(ws.into_iter().zip(&labels).map(|(w, c)| (w, Term::constant(*c))).collect());
    let branches = (0..n)
        .map(|_| {
            let k = g.rng.gen_range(1..=3);
            outcome_term(&mut g, k)
        })
        .collect();
    (branches, chooser)
}

/// Two independent small terms.
pub fn pair_case(seed: u64) -> (Term, Term) {
    let mut g = Gen::new(seed, GenConfig { max_depth: 2, exp_budget: 1, max_arity: 2 });
    let k1 = g.rng.gen_range(1..=3);
    let k2 = g.rng.gen_range(1..=3);
    (outcome_term(&mut g, k1), outcome_term(&mut g, k2))
}
