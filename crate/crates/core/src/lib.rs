//! A typed probabilistic lambda calculus with experiments and trust checks.
//!
//! Programs declare atomic types, an atomic subtype relation and typed
//! constants, then give a `main` term. The term language has weighted choice
//! `{p1 t1, ..., pn tn}`, experiments `exp[n] t` that run `t` n times into a
//! tuple, projections, and `trust t with (q1 B1, ...) @ eps`, which reduces
//! to `true` when the tuple `t` evaluates to is within total variation
//! distance `eps` of the target distribution.
//!
//! ```
//! use trustlam::{check_program, parse_program, output_distribution, Env, Limits, Rat, Term};
//!
//! let p = parse_program("type H; type T; const h:H; const t:T; main = {1/4 h, 3/4 t}").unwrap();
//! check_program(&p).unwrap();
//! let env = Env::from_program(&p).unwrap();
//! let od = output_distribution(&p.main, &env, &Limits::default()).unwrap();
//! assert_eq!(od.prob_of(&Term::constant("t")), Rat::new(3, 4));
//! ```

pub mod analysis;
pub mod machine;
pub mod rat;
pub mod syntax;
pub mod types;

pub use analysis::{
    build_tree, compare_confidence, conditional_prob, confidence, confidence_curve, confidence_via_tree,
    disjunction_prob, joint_prob, make_conditional, output_distribution, AnalysisError, ConfidenceCurve, Limits,
    OutputDist, RTree, Verdict,
};
pub use machine::{eval, run, step, successors, tv_distance, trust_check, MachineError, RngState, Rule, Trace};
pub use rat::Rat;
pub use syntax::{parse_dist, parse_program, parse_type, print_term, Dist, Name, ParseError, Program, Term, Type};
pub use types::{check_program, infer, infer_closed, Context, Diagnostic, Env, SubtypeEnv, TypeError, TypedTerm};
