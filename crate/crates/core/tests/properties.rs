mod common;

use std::collections::BTreeSet;

use common::{closed_term, env, oracle_case, program, GenConfig};
use proptest::prelude::*;
use trustlam::analysis::{count_nodes, output_distribution_via_tree, NodeCount};
use trustlam::machine::{run, step, successors, trust_check, RngState, DEFAULT_FUEL};
use trustlam::syntax::{alpha_eq, free_vars, substitute, Dist, Term, Type};
use trustlam::{
    build_tree, confidence, confidence_via_tree, infer_closed, output_distribution, parse_program, Limits, Rat,
};

fn small() -> GenConfig {
    GenConfig {
        max_depth: 3,
        exp_budget: 3,
        max_arity: 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_terms_are_closed_and_typed(seed in any::<u64>()) {
        let t = closed_term(seed, GenConfig::default());
        prop_assert!(t.is_closed());
        prop_assert!(infer_closed(&t, &env()).is_ok(), "{}", t);
    }

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let t = closed_term(seed, GenConfig::default());
        let p = parse_program(&program(&t)).unwrap();
        prop_assert_eq!(&p.main, &t);
        prop_assert!(alpha_eq(&p.main, &t));
    }

    #[test]
    fn steps_preserve_types_and_progress(seed in any::<u64>()) {
        let env = env();
        let mut cur = closed_term(seed, GenConfig::default());
        let mut ty = infer_closed(&cur, &env).unwrap();
        let mut rng = RngState::from_seed(seed);
        let mut n = 0u64;
        while !cur.is_value() {
            let o = step(&cur, &mut rng, &env);
            prop_assert!(o.is_ok(), "stuck: {}", cur);
            let next = o.unwrap().reduct;
            let next_ty = infer_closed(&next, &env).unwrap();
            prop_assert!(env.is_subtype(&next_ty, &ty), "{} : {} stepped to {} : {}", cur, ty, next, next_ty);
            cur = next;
            ty = next_ty;
            n += 1;
            prop_assert!(n < DEFAULT_FUEL);
        }
    }

    #[test]
    fn step_alternatives_sum_to_one(seed in any::<u64>()) {
        let env = env();
        let mut cur = closed_term(seed, GenConfig::default());
        let mut rng = RngState::from_seed(seed ^ 0x5eed);
        while !cur.is_value() {
            let all = successors(&cur, &env).unwrap();
            prop_assert_eq!(all.iter().map(|o| &o.prob).sum::<Rat>(), Rat::one());
            prop_assert!(all.iter().all(|o| o.prob.is_positive()));
            cur = step(&cur, &mut rng, &env).unwrap().reduct;
        }
    }

    #[test]
    fn choice_branches_are_subtypes(seed in any::<u64>()) {
        let env = env();
        let t = closed_term(seed, GenConfig::default());
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            if let Term::Choice(bs) = &t {
                let ty = infer_closed(&t, &env).unwrap();
                for (_, b) in bs {
                    let bt = infer_closed(b, &env).unwrap();
                    prop_assert!(env.is_subtype(&bt, &ty));
                    stack.push(b.clone());
                }
            }
        }
    }

    #[test]
    fn output_distribution_matches_tree(seed in any::<u64>()) {
        let env = env();
        let t = closed_term(seed, small());
        let tree = output_distribution_via_tree(&t, &env, 200_000);
        prop_assume!(tree.is_ok());
        let tree = tree.unwrap();
        let od = output_distribution(&t, &env, &Limits::default()).unwrap();
        prop_assert_eq!(od.total(), Rat::one());
        prop_assert_eq!(od.entries.len(), tree.entries.len());
        for (v, p) in &tree.entries {
            prop_assert_eq!(&od.prob_of(v), p);
        }
    }

    #[test]
    fn trust_check_ignores_order(seed in any::<u64>(), rot in 0usize..10) {
        let env = env();
        let t = closed_term(seed, small());
        let (v, _) = run(&Term::exp(5, t.clone()), seed, DEFAULT_FUEL, &env).unwrap();
        let Term::Tuple(mut es) = v else { unreachable!() };
        let ty = infer_closed(&t, &env).unwrap();
        let target = Dist::new(
            ty.summands().iter().map(|s| (Rat::new(1, ty.summands().len() as i64), s.clone())).collect(),
            Rat::new(1, 3),
        );
        let before = trust_check(&es, &target, &env).unwrap();
        let k = rot % es.len();
        es.rotate_left(k);
        es.reverse();
        prop_assert_eq!(before, trust_check(&es, &target, &env).unwrap());
    }

    #[test]
    fn substitution_free_variables(seed in any::<u64>(), x in "[uvw]", y in "[uvw]") {
        // open terms: wrap a generated term so that x occurs free
        let t = closed_term(seed, small());
        let body = Term::Tuple(vec![Term::var(x.clone()), Term::abs(y.clone(), Type::atom("H"), Term::app(Term::var(x.clone()), Term::var(y.clone()))), t]);
        let s = Term::Tuple(vec![Term::var(y.clone()), Term::var("q")]);
        let r = substitute(&body, &s, &x);
        let mut expected: BTreeSet<String> = free_vars(&body);
        expected.remove(&x);
        expected.extend(free_vars(&s));
        prop_assert_eq!(free_vars(&r), expected);
    }
}

#[test]
fn generated_corpus_is_not_trivial() {
    let env = env();
    let mut steps = 0u64;
    let mut with_trust = 0;
    let mut with_exp = 0;
    for seed in 0..300 {
        let t = closed_term(seed, GenConfig::default());
        let s = t.to_string();
        with_trust += s.contains("trust") as usize;
        with_exp += s.contains("exp[") as usize;
        steps += run(&t, seed, DEFAULT_FUEL, &env).unwrap().1;
    }
    assert!(steps > 300, "{steps}");
    assert!(with_trust > 20 && with_exp > 20, "{with_trust} {with_exp}");
}

#[test]
fn tree_node_count_formula() {
    let env = env();
    for k in 1..=3usize {
        for n in 1..=4u32 {
            let branches: Vec<(Rat, Term)> = ["h", "t", "a"][..k]
                .iter()
                .map(|c| (Rat::new(1, k as i64), Term::constant(*c)))
                .collect();
            let t = Term::exp(n as usize, Term::choice(branches));
            let expected = 2 + (1..=n).map(|j| k.pow(j)).sum::<usize>();
            assert_eq!(build_tree(&t, &env, 100_000).unwrap().len(), expected, "k={k} n={n}");
            assert_eq!(count_nodes(&t, &env, 100_000).unwrap(), NodeCount::Exact(expected as u128));
        }
    }
}

#[test]
fn shortcut_matches_tree_on_generated_terms() {
    let env = env();
    let mut checked = 0;
    let mut nontrivial = 0;
    for seed in 0..300u64 {
        let (t, target, n) = oracle_case(seed);
        let od = output_distribution(&t, &env, &Limits::default()).unwrap();
        if od.entries.len() > 3 {
            continue;
        }
        let tree = confidence_via_tree(&t, &target, n, &env, 200_000).unwrap();
        assert_eq!(confidence(&t, &target, n, &env, &Limits::default()).unwrap(), tree, "{t} {target} n={n}");
        checked += 1;
        nontrivial += (!tree.is_zero() && !tree.is_one()) as usize;
    }
    assert!(checked >= 100 && nontrivial >= 50, "{checked} {nontrivial}");
}

fn arb_type() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::atom("H")),
        Just(Type::atom("T")),
        Just(Type::atom("A")),
        Just(Type::atom("B")),
        Just(Type::plain_bool()),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::arrow(a, b)),
            prop::collection::vec(inner.clone(), 1..4).prop_map(Type::sum),
            (inner, 1usize..4).prop_map(|(a, n)| Type::pow(a, n)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn subtyping_is_reflexive(a in arb_type()) {
        prop_assert!(env().is_subtype(&a, &a));
    }

    #[test]
    fn subtyping_is_transitive(a in arb_type(), b in arb_type(), c in arb_type()) {
        let env = env();
        if env.is_subtype(&a, &b) && env.is_subtype(&b, &c) {
            prop_assert!(env.is_subtype(&a, &c), "{} <: {} <: {}", a, b, c);
        }
    }

    #[test]
    fn mutual_subtypes_differ_only_by_redundant_summands(a in arb_type(), b in arb_type()) {
        // Antisymmetry holds up to the sum normal form except when a sum has
        // a summand that is a strict subtype of another, e.g. A + B and B.
        let env = env();
        if env.is_subtype(&a, &b) && env.is_subtype(&b, &a) && !a.equiv(&b) {
            prop_assert!(has_redundant_summand(&env, &a) || has_redundant_summand(&env, &b), "{} vs {}", a, b);
        }
    }
}

fn has_redundant_summand(env: &trustlam::Env, t: &Type) -> bool {
    let here = match t {
        Type::Sum(ts) => ts
            .iter()
            .enumerate()
            .any(|(i, x)| ts.iter().enumerate().any(|(j, y)| i != j && env.is_subtype(x, y))),
        _ => false,
    };
    here || match t {
        Type::Atom(_) | Type::Bool(_) => false,
        Type::Arrow(a, b) => has_redundant_summand(env, a) || has_redundant_summand(env, b),
        Type::Sum(ts) => ts.iter().any(|s| has_redundant_summand(env, s)),
        Type::Pow(a, _) => has_redundant_summand(env, a),
    }
}

#[test]
fn antisymmetry_counterexample() {
    let env = env();
    let a_or_b = Type::sum([Type::atom("A"), Type::atom("B")]);
    let b = Type::atom("B");
    assert!(env.is_subtype(&a_or_b, &b) && env.is_subtype(&b, &a_or_b));
    assert!(!a_or_b.equiv(&b));
}
