//! Seeded call-by-name evaluation and the runtime trust check.

use std::collections::HashMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::rat::{common_denominator, scaled_numerator, Rat};
use crate::syntax::{substitute, Dist, Term, Type};
use crate::types::{infer_closed, Env, TypeError};

/// Default step budget for [`eval`] and [`run`].
pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("no reduction applies to non-value `{0}`")]
    Stuck(Term),
    #[error("evaluation did not reach a value within {0} steps")]
    FuelExhausted(u64),
    #[error("trust check on an untypable value: {0}")]
    Type(#[from] TypeError),
}

/// Which reduction rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Beta,
    Choice,
    Exp,
    Proj,
    TrustTrue,
    TrustFalse,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::Beta => "beta",
            Rule::Choice => "choice",
            Rule::Exp => "exp",
            Rule::Proj => "proj",
            Rule::TrustTrue => "trust-true",
            Rule::TrustFalse => "trust-false",
        }
    }
}

/// One reduction step: the reduct, the probability of this alternative, and
/// the rule applied at the redex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub reduct: Term,
    pub prob: Rat,
    pub rule: Rule,
}

/// Deterministic random source for choice redexes.
#[derive(Debug, Clone)]
pub struct RngState(ChaCha8Rng);

impl RngState {
    pub fn from_seed(seed: u64) -> RngState {
        RngState(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform integer in `[0, bound)`.
    fn below(&mut self, bound: &BigUint) -> BigUint {
        match bound.to_u64() {
            Some(b) => BigUint::from(self.0.gen_range(0..b)),
            None => self.0.gen_biguint_below(bound),
        }
    }
}

/// Picks an index with probability equal to its weight. Draws a uniform
/// integer below the least common denominator of the weights and returns the
/// bucket it falls in.
pub fn sample_choice(weights: &[Rat], rng: &mut RngState) -> usize {
    assert!(!weights.is_empty(), "sample_choice needs at least one weight");
    if weights.len() == 1 {
        return 0;
    }
    let d = common_denominator(weights);
    let u = rng.below(&d);
    let mut acc = BigUint::default();
    for (i, w) in weights.iter().enumerate() {
        acc += scaled_numerator(w, &d);
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Summed mass per type, types identified up to [`Type::equiv`], in order of
/// first appearance.
fn masses(d: &Dist) -> Vec<(&Type, Rat)> {
    let mut out: Vec<(&Type, Rat)> = Vec::new();
    for (p, ty) in &d.entries {
        match out.iter_mut().find(|(t, _)| t.equiv(ty)) {
            Some((_, m)) => *m = &*m + p,
            None => out.push((ty, p.clone())),
        }
    }
    out
}

/// Total variation distance. Masses of repeated types are summed; when
/// neither support contains the other the distance is 1.
pub fn tv_distance(p: &Dist, q: &Dist) -> Rat {
    let mp = masses(p);
    let mq = masses(q);
    let mass_in = |m: &[(&Type, Rat)], ty: &Type| {
        m.iter()
            .find(|(t, _)| t.equiv(ty))
            .map_or_else(Rat::zero, |(_, r)| r.clone())
    };
    let contained = |a: &[(&Type, Rat)], b: &[(&Type, Rat)]| {
        a.iter()
            .filter(|(_, r)| r.is_positive())
            .all(|(t, _)| mass_in(b, t).is_positive())
    };
    if !contained(&mp, &mq) && !contained(&mq, &mp) {
        return Rat::one();
    }
    let diff = |ty: &Type| (mass_in(&mp, ty) - mass_in(&mq, ty)).abs();
    mp.iter()
        .chain(&mq)
        .map(|(t, _)| diff(t))
        .max()
        .unwrap_or_else(Rat::zero)
}

/// Index of the first entry of `target` whose type is a supertype of `ty`.
/// Warns when a later, non-equivalent entry would also match.
pub fn match_entry(ty: &Type, target: &Dist, env: &Env) -> Option<usize> {
    let mut hits = target
        .entries
        .iter()
        .enumerate()
        .filter(|(_, (_, b))| env.is_subtype(ty, b));
    let (first, (_, b)) = hits.next()?;
    if let Some((_, (_, other))) = hits.find(|(_, (_, o))| !o.equiv(b)) {
        log::warn!("value of type {ty} matches both {b} and {other}; grouping with {b}");
    }
    Some(first)
}

/// The distribution over `target`'s entry types encoded by `counts`, where
/// `counts[j]` values matched entry `j` out of `total`.
pub fn frequency_dist(counts: &[u64], total: u64, target: &Dist) -> Dist {
    let entries = target
        .entries
        .iter()
        .zip(counts)
        .map(|((_, ty), &k)| (Rat::new(k, total), ty.clone()))
        .collect();
    Dist::new(entries, Rat::zero())
}

/// The frequency distribution of `values` against `target`'s entry types,
/// or `None` when some value matches no entry.
pub fn empirical_dist(values: &[Term], target: &Dist, env: &Env) -> Result<Option<Dist>, TypeError> {
    let mut counts = vec![0u64; target.entries.len()];
    let mut cache: HashMap<&Term, Option<usize>> = HashMap::new();
    for v in values {
        let hit = match cache.get(v) {
            Some(hit) => *hit,
            None => {
                let hit = match_entry(&infer_closed(v, env)?, target, env);
                cache.insert(v, hit);
                hit
            }
        };
        match hit {
            Some(j) => counts[j] += 1,
            None => return Ok(None),
        }
    }
    Ok(Some(frequency_dist(&counts, values.len() as u64, target)))
}

/// Whether the tuple `values` is within `target.epsilon` of `target`.
pub fn trust_check(values: &[Term], target: &Dist, env: &Env) -> Result<bool, TypeError> {
    let dist = match empirical_dist(values, target, env)? {
        Some(d) => tv_distance(target, &d),
        None => Rat::one(),
    };
    Ok(dist <= target.epsilon)
}

/// Performs the call-by-name step of `t`. `pick` chooses the branch of the
/// choice redex, if that is the redex, given its weights.
pub fn reduce(
    t: &Term,
    env: &Env,
    pick: &mut dyn FnMut(&[Rat]) -> usize,
) -> Result<StepOutcome, MachineError> {
    let in_context = |inner: StepOutcome, wrap: &dyn Fn(Term) -> Term| StepOutcome {
        reduct: wrap(inner.reduct),
        ..inner
    };
    let det = |reduct: Term, rule: Rule| StepOutcome {
        reduct,
        prob: Rat::one(),
        rule,
    };
    match t {
        Term::App(f, a) => match &**f {
            Term::Abs { var, body, .. } => Ok(det(substitute(body, a, var), Rule::Beta)),
            _ => {
                let inner = reduce(f, env, pick)?;
                Ok(in_context(inner, &|f2| Term::App(Box::new(f2), a.clone())))
            }
        },
        Term::Choice(bs) => {
            let weights: Vec<Rat> = bs.iter().map(|(p, _)| p.clone()).collect();
            let i = pick(&weights);
            let (p, branch) = &bs[i];
            Ok(StepOutcome {
                reduct: branch.clone(),
                prob: p.clone(),
                rule: Rule::Choice,
            })
        }
        Term::Exp(n, s) => Ok(det(Term::Tuple(vec![(**s).clone(); *n]), Rule::Exp)),
        Term::Tuple(es) => {
            let Some(i) = es.iter().position(|e| !e.is_value()) else {
                return Err(MachineError::Stuck(t.clone()));
            };
            let inner = reduce(&es[i], env, pick)?;
            Ok(in_context(inner, &|e| {
                let mut es = es.clone();
                es[i] = e;
                Term::Tuple(es)
            }))
        }
        Term::Proj(s, j) => match &**s {
            Term::Tuple(es) => match j.checked_sub(1).and_then(|k| es.get(k)) {
                Some(e) => Ok(det(e.clone(), Rule::Proj)),
                None => Err(MachineError::Stuck(t.clone())),
            },
            _ => {
                let inner = reduce(s, env, pick)?;
                Ok(in_context(inner, &|s2| Term::Proj(Box::new(s2), *j)))
            }
        },
        Term::Trust(s, d) => match &**s {
            Term::Tuple(es) if s.is_value() => Ok(if trust_check(es, d, env)? {
                det(Term::True, Rule::TrustTrue)
            } else {
                det(Term::False, Rule::TrustFalse)
            }),
            _ if s.is_value() => Err(MachineError::Stuck(t.clone())),
            _ => {
                let inner = reduce(s, env, pick)?;
                Ok(in_context(inner, &|s2| Term::Trust(Box::new(s2), d.clone())))
            }
        },
        Term::Var(_) | Term::True | Term::False | Term::Const(_) | Term::Abs { .. } => {
            Err(MachineError::Stuck(t.clone()))
        }
    }
}

/// One sampled call-by-name step.
pub fn step(t: &Term, rng: &mut RngState, env: &Env) -> Result<StepOutcome, MachineError> {
    reduce(t, env, &mut |w| sample_choice(w, rng))
}

/// Every alternative of the call-by-name step of `t`, one per branch of the
/// redex. Probabilities sum to 1.
pub fn successors(t: &Term, env: &Env) -> Result<Vec<StepOutcome>, MachineError> {
    let mut arity = 1;
    let first = reduce(t, env, &mut |w| {
        arity = w.len();
        0
    })?;
    let mut out = Vec::with_capacity(arity);
    out.push(first);
    for i in 1..arity {
        out.push(reduce(t, env, &mut |_| i)?);
    }
    Ok(out)
}

/// A recorded evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub seed: u64,
    /// Each step as (term before, outcome).
    pub steps: Vec<(Term, StepOutcome)>,
    pub final_term: Term,
}

impl Trace {
    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|(_, o)| {
                json!({
                    "rule": o.rule.tag(),
                    "prob": o.prob.to_string(),
                    "term": o.reduct.to_string(),
                })
            })
            .collect();
        json!({
            "seed": self.seed,
            "steps": steps,
            "final": self.final_term.to_string(),
        })
    }
}

/// Evaluates `t` to a value with the generator seeded by `seed`, recording
/// every step.
pub fn eval(t: &Term, seed: u64, fuel: u64, env: &Env) -> Result<Trace, MachineError> {
    let mut rng = RngState::from_seed(seed);
    let mut steps = Vec::new();
    let mut cur = t.clone();
    while !cur.is_value() {
        if steps.len() as u64 >= fuel {
            return Err(MachineError::FuelExhausted(fuel));
        }
        let outcome = step(&cur, &mut rng, env)?;
        let next = outcome.reduct.clone();
        steps.push((cur, outcome));
        cur = next;
    }
    Ok(Trace {
        seed,
        steps,
        final_term: cur,
    })
}

/// Like [`eval`] without keeping the trace. Returns the value and the number
/// of steps taken.
pub fn run(t: &Term, seed: u64, fuel: u64, env: &Env) -> Result<(Term, u64), MachineError> {
    let mut rng = RngState::from_seed(seed);
    let mut cur = t.clone();
    let mut n = 0;
    while !cur.is_value() {
        if n >= fuel {
            return Err(MachineError::FuelExhausted(fuel));
        }
        cur = step(&cur, &mut rng, env)?.reduct;
        n += 1;
    }
    Ok((cur, n))
}
