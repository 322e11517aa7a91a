use std::collections::BTreeSet;

use super::{build_tree, output_distribution, AnalysisError, Limits, OutputDist};
use crate::rat::Rat;
use crate::syntax::{alpha_eq, free_vars, fresh_name, Dist, Name, Term, Type};
use crate::types::{infer_closed, Env};

/// The conditional construct for `chooser = {p1 t1, ..., pn tn}`:
/// `(\x1:S1. ... \xn:Sn. {p1 <t1, x1>, ..., pn <tn, xn>}) s1 ... sn`, where
/// `Si` is the type of `si` and the `xi` are fresh.
pub fn make_conditional(branches: &[Term], chooser: &Term, env: &Env) -> Result<Term, AnalysisError> {
    let Term::Choice(alts) = chooser else {
        return Err(AnalysisError::NotAChoice(chooser.clone()));
    };
    if alts.len() != branches.len() {
        return Err(AnalysisError::Arity {
            branches: branches.len(),
            choices: alts.len(),
        });
    }
    let mut avoid: BTreeSet<Name> = free_vars(chooser);
    for s in branches {
        avoid.extend(free_vars(s));
    }
    let mut vars = Vec::with_capacity(branches.len());
    for i in 1..=branches.len() {
        let x = fresh_name(&format!("x{i}"), &avoid);
        avoid.insert(x.clone());
        vars.push(x);
    }
    let body = Term::Choice(
        alts.iter()
            .zip(&vars)
            .map(|((p, t), x)| (p.clone(), Term::Tuple(vec![t.clone(), Term::var(x.clone())])))
            .collect(),
    );
    let mut lam = body;
    for (x, s) in vars.iter().zip(branches).rev() {
        lam = Term::abs(x.clone(), infer_closed(s, env)?, lam);
    }
    Ok(branches.iter().fold(lam, |f, s| Term::app(f, s.clone())))
}

/// Probability that branch `i` (0-based) of the conditional construct
/// outputs `u`, i.e. the probability of `u` in the output distribution of
/// `branches[i]`.
pub fn conditional_prob(
    u: &Term,
    i: usize,
    branches: &[Term],
    env: &Env,
    limits: &Limits,
) -> Result<Rat, AnalysisError> {
    let s = branches.get(i).ok_or(AnalysisError::IndexOutOfRange {
        index: i,
        len: branches.len(),
    })?;
    Ok(output_distribution(s, env, limits)?.prob_of(u))
}

/// Probability that the first component of a pair-valued output is `first`.
pub fn first_marginal(od: &OutputDist, first: &Term) -> Rat {
    od.entries
        .iter()
        .filter(|(v, _)| matches!(v, Term::Tuple(es) if es.first().is_some_and(|e| alpha_eq(e, first))))
        .map(|(_, p)| p)
        .sum()
}

/// Probability that `<t, s>` outputs `<u, v>`.
pub fn joint_prob(t: &Term, s: &Term, u: &Term, v: &Term, env: &Env, limits: &Limits) -> Result<Rat, AnalysisError> {
    let pair = Term::Tuple(vec![t.clone(), s.clone()]);
    let od = output_distribution(&pair, env, limits)?;
    Ok(od.prob_of(&Term::Tuple(vec![u.clone(), v.clone()])))
}

/// Probability that `t` outputs a value of one of the types `tys`, read off
/// the tree of `trust exp[1] t with (1 T1 + ... + Tk) @ 0`.
pub fn disjunction_prob(t: &Term, tys: &[Type], env: &Env, node_limit: usize) -> Result<Rat, AnalysisError> {
    let target = Dist::new(vec![(Rat::one(), Type::sum(tys.iter().cloned()))], Rat::zero());
    let trust = Term::trust(Term::exp(1, t.clone()), target);
    Ok(build_tree(&trust, env, node_limit)?.prob_of(&Term::True))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, parse_type};
    use crate::types::check_program;

    const SIG: &str = "type 1; type 2; type 3; type 4; type 5; type 6; type H; type T;\n\
        const 1:1; const 2:2; const 3:3; const 4:4; const 5:5; const 6:6; const h:H; const t:T;\n";

    fn term(src: &str) -> (Env, Term) {
        let p = parse_program(&format!("{SIG} main = {src}")).unwrap();
        (Env::from_program(&p).unwrap(), p.main)
    }

    #[test]
    fn construct_shape_and_types() {
        let (env, s1) = term("{1/3 1, 1/3 2, 1/3 3}");
        let (_, s2) = term("{1/3 4, 1/3 5, 1/3 6}");
        let (_, chooser) = term("{1/3 h, 2/3 t}");
        let c = make_conditional(&[s1.clone(), s2.clone()], &chooser, &env).unwrap();
        assert_eq!(
            c.to_string(),
            "(\\x1:1 + 2 + 3. \\x2:4 + 5 + 6. {1/3 <h, x1>, 2/3 <t, x2>}) {1/3 1, 1/3 2, 1/3 3} {1/3 4, 1/3 5, 1/3 6}"
        );
        let src = format!("{SIG} main = {c}");
        assert!(check_program(&parse_program(&src).unwrap()).is_ok());
        let l = Limits::default();
        let one = Term::constant("1");
        assert_eq!(conditional_prob(&one, 0, &[s1.clone(), s2.clone()], &env, &l).unwrap(), Rat::new(1, 3));
        let od = output_distribution(&c, &env, &l).unwrap();
        let h = Term::constant("h");
        assert_eq!(first_marginal(&od, &h), Rat::new(1, 3));
        assert_eq!(od.prob_of(&Term::Tuple(vec![h, one])), Rat::new(1, 9));
        assert!(matches!(
            make_conditional(&[s1], &chooser, &env),
            Err(AnalysisError::Arity { branches: 1, choices: 2 })
        ));
    }

    #[test]
    fn fresh_names_avoid_free_variables() {
        let (env, h) = term("h");
        let chooser = Term::choice(vec![(Rat::one(), Term::var("x1"))]);
        let c = make_conditional(&[h], &chooser, &env).unwrap();
        assert_eq!(free_vars(&c), BTreeSet::from(["x1".to_string()]));
        assert!(c.to_string().starts_with("(\\x1':H. {1 <x1, x1'>})"), "{c}");
    }

    #[test]
    fn joint_and_disjunction() {
        let (env, coin) = term("{1/3 h, 2/3 t}");
        let (_, third) = term("{1/3 1, 1/3 2, 1/3 3}");
        let l = Limits::default();
        let (h, one) = (Term::constant("h"), Term::constant("1"));
        assert_eq!(joint_prob(&coin, &third, &h, &one, &env, &l).unwrap(), Rat::new(1, 9));
        assert_eq!(joint_prob(&h, &one, &h, &one, &env, &l).unwrap(), Rat::one());
        let (_, die) = term("{1/6 1, 1/6 2, 1/6 3, 1/6 4, 1/6 5, 1/6 6}");
        let names = env.atom_names();
        let ty = |s: &str| parse_type(s, &names).unwrap();
        assert_eq!(disjunction_prob(&die, &[ty("1"), ty("2")], &env, 1000).unwrap(), Rat::new(1, 3));
        let all: Vec<Type> = ["1", "2", "3", "4", "5", "6"].iter().map(|s| ty(s)).collect();
        assert_eq!(disjunction_prob(&die, &all, &env, 1000).unwrap(), Rat::one());
        assert_eq!(disjunction_prob(&die, &[ty("H")], &env, 1000).unwrap(), Rat::zero());
    }
}
