//! Exact analysis: reduction trees, output distributions, confidence values
//! and the conditional construct.

mod confidence;
mod conditional;

pub use confidence::{
    bucket_probs, compare_confidence, confidence, confidence_curve, confidence_via_tree, ConfidenceCurve,
    Verdict,
};
pub use conditional::{conditional_prob, disjunction_prob, first_marginal, joint_prob, make_conditional};

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::machine::{successors, MachineError, Rule};
use crate::rat::Rat;
use crate::syntax::{alpha_eq, alpha_key, Term};
use crate::types::{Env, TypeError};

/// Default bound on the number of tree nodes or explored states.
pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;
/// Default bound on the number of count vectors the confidence shortcut
/// enumerates for one `n`.
pub const DEFAULT_VECTOR_LIMIT: u64 = 10_000_000;

/// Resource bounds shared by the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub nodes: usize,
    pub vectors: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            nodes: DEFAULT_NODE_LIMIT,
            vectors: DEFAULT_VECTOR_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeCount {
    Exact(u128),
    AtLeast(u128),
}

impl fmt::Display for NodeCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeCount::Exact(n) => write!(f, "{n}"),
            NodeCount::AtLeast(n) => write!(f, "at least {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("node limit {limit} exceeded: the tree has {needed} nodes")]
    NodeLimit { limit: usize, needed: NodeCount },
    #[error("state limit {0} exceeded while computing the output distribution")]
    StateLimit(usize),
    #[error("n = {n} needs {vectors} count vectors, more than the limit {limit}")]
    TooManyVectors { n: usize, vectors: u128, limit: u64 },
    #[error("{branches} branches but the chooser has {choices} alternatives")]
    Arity { branches: usize, choices: usize },
    #[error("expected a choice term, got `{0}`")]
    NotAChoice(Term),
    #[error("branch index {index} out of range for {len} branches")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// A node of a reduction tree. `children` holds edge probabilities and child
/// indices; `rule` is the rule fired at this node, absent at leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RNode {
    pub term: Term,
    pub rule: Option<Rule>,
    pub children: Vec<(Rat, usize)>,
}

/// A reduction tree stored as an arena. Node 0 is the root, and every child
/// index is greater than its parent's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RTree {
    nodes: Vec<RNode>,
}

impl RTree {
    pub fn root(&self) -> &RNode {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &RNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[RNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Probability of reaching each node: the product of the edge labels on
    /// its path from the root.
    pub fn path_probs(&self) -> Vec<Rat> {
        let mut probs = vec![Rat::zero(); self.nodes.len()];
        probs[0] = Rat::one();
        for (i, node) in self.nodes.iter().enumerate() {
            for (p, c) in &node.children {
                probs[*c] = &probs[i] * p;
            }
        }
        probs
    }

    /// Leaves with their path probabilities, in index order.
    pub fn leaves(&self) -> Vec<(&Term, Rat)> {
        let probs = self.path_probs();
        self.nodes
            .iter()
            .zip(probs)
            .filter(|(n, _)| n.children.is_empty())
            .map(|(n, p)| (&n.term, p))
            .collect()
    }

    /// Total probability of the leaves alpha-equivalent to `v`.
    pub fn prob_of(&self, v: &Term) -> Rat {
        self.leaves()
            .into_iter()
            .filter(|(t, _)| alpha_eq(t, v))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph rtree {\n  node [shape=box];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!("  n{i} [label=\"{}\"];\n", dot_escape(&n.term.to_string())));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            for (p, c) in &n.children {
                out.push_str(&format!("  n{i} -> n{c} [label=\"{p}\"];\n"));
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                json!({
                    "id": i,
                    "term": n.term.to_string(),
                    "rule": n.rule.map(Rule::tag),
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(i, n)| {
                n.children
                    .iter()
                    .map(move |(p, c)| json!({"from": i, "to": c, "prob": p.to_string()}))
            })
            .collect();
        json!({"nodes": nodes, "edges": edges})
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Builds the reduction tree of `t`: every node's children are all the
/// alternatives of its call-by-name step, one per rule instance, so equal
/// reducts stay distinct children.
pub fn build_tree(t: &Term, env: &Env, node_limit: usize) -> Result<RTree, AnalysisError> {
    let mut nodes = vec![RNode {
        term: t.clone(),
        rule: None,
        children: Vec::new(),
    }];
    let mut next = 0;
    while next < nodes.len() {
        if !nodes[next].term.is_value() {
            let succ = successors(&nodes[next].term, env)?;
            if nodes.len() + succ.len() > node_limit {
                let needed = count_nodes(t, env, node_limit.saturating_mul(4))?;
                return Err(AnalysisError::NodeLimit {
                    limit: node_limit,
                    needed,
                });
            }
            nodes[next].rule = Some(succ[0].rule);
            for o in succ {
                let id = nodes.len();
                nodes[next].children.push((o.prob, id));
                nodes.push(RNode {
                    term: o.reduct,
                    rule: None,
                    children: Vec::new(),
                });
            }
        }
        next += 1;
    }
    Ok(RTree { nodes })
}

/// Number of nodes of the reduction tree of `t`, exploring at most `budget`
/// distinct subterm states.
pub fn count_nodes(t: &Term, env: &Env, budget: usize) -> Result<NodeCount, AnalysisError> {
    struct Counter<'e> {
        env: &'e Env,
        memo: HashMap<Term, u128>,
        budget: usize,
    }
    impl Counter<'_> {
        fn count(&mut self, t: &Term) -> Result<Option<u128>, AnalysisError> {
            let key = alpha_key(t);
            if let Some(n) = self.memo.get(&key) {
                return Ok(Some(*n));
            }
            if self.memo.len() >= self.budget {
                return Ok(None);
            }
            // walk deterministic chains without recursion
            let mut chain = 0u128;
            let mut cur = t.clone();
            let total = loop {
                if cur.is_value() {
                    break chain + 1;
                }
                let succ = successors(&cur, self.env)?;
                if succ.len() == 1 {
                    chain += 1;
                    cur = succ.into_iter().next().unwrap().reduct;
                    continue;
                }
                let mut sum = chain + 1;
                for o in succ {
                    match self.count(&o.reduct)? {
                        Some(n) => sum = sum.saturating_add(n),
                        None => return Ok(None),
                    }
                }
                break sum;
            };
            self.memo.insert(key, total);
            Ok(Some(total))
        }
    }
    let mut c = Counter {
        env,
        memo: HashMap::new(),
        budget,
    };
    Ok(match c.count(t)? {
        Some(n) => NodeCount::Exact(n),
        None => NodeCount::AtLeast(budget as u128),
    })
}

/// The output distribution of a term: its values, pairwise not
/// alpha-equivalent, each with positive probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDist {
    pub entries: Vec<(Term, Rat)>,
}

impl OutputDist {
    pub fn total(&self) -> Rat {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Probability of the value `v`, up to alpha-equivalence.
    pub fn prob_of(&self, v: &Term) -> Rat {
        self.entries
            .iter()
            .find(|(u, _)| alpha_eq(u, v))
            .map_or_else(Rat::zero, |(_, p)| p.clone())
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(v, p)| json!({"value": v.to_string(), "prob": p.to_string()}))
            .collect();
        json!({ "entries": entries })
    }
}

/// Accumulates weighted values, merging alpha-equivalent ones.
#[derive(Default)]
struct Merger {
    index: HashMap<Term, usize>,
    entries: Vec<(Term, Rat)>,
}

impl Merger {
    fn add(&mut self, v: &Term, p: Rat) {
        match self.index.get(&alpha_key(v)) {
            Some(&i) => self.entries[i].1 = &self.entries[i].1 + &p,
            None => {
                self.index.insert(alpha_key(v), self.entries.len());
                self.entries.push((v.clone(), p));
            }
        }
    }
}

struct DistSolver<'e> {
    env: &'e Env,
    limits: Limits,
    memo: HashMap<Term, Rc<Vec<(Term, Rat)>>>,
    explored: usize,
}

impl DistSolver<'_> {
    fn solve(&mut self, t: &Term) -> Result<Rc<Vec<(Term, Rat)>>, AnalysisError> {
        let key = alpha_key(t);
        if let Some(d) = self.memo.get(&key) {
            return Ok(Rc::clone(d));
        }
        let mut cur = t.clone();
        let result = loop {
            self.explored += 1;
            if self.explored > self.limits.nodes {
                return Err(AnalysisError::StateLimit(self.limits.nodes));
            }
            if cur.is_value() {
                break vec![(cur, Rat::one())];
            }
            if let Term::Trust(s, target) = &cur {
                if let Term::Exp(n, body) = &**s {
                    let inner = self.solve(body)?;
                    let od = OutputDist {
                        entries: (*inner).clone(),
                    };
                    let c = confidence::confidence_of_dist(&od, target, *n, self.env, &self.limits)?;
                    let f = Rat::one() - &c;
                    break [(Term::True, c), (Term::False, f)]
                        .into_iter()
                        .filter(|(_, p)| p.is_positive())
                        .collect();
                }
            }
            let succ = successors(&cur, self.env)?;
            if succ.len() == 1 {
                cur = succ.into_iter().next().unwrap().reduct;
                continue;
            }
            let mut merged = Merger::default();
            for o in succ {
                for (v, p) in self.solve(&o.reduct)?.iter() {
                    merged.add(v, p * &o.prob);
                }
            }
            break merged.entries;
        };
        let result = Rc::new(result);
        self.memo.insert(key, Rc::clone(&result));
        Ok(result)
    }
}

/// Exact output distribution of a closed well-typed term. Equal to the sum of
/// path probabilities over the leaves of its reduction tree, grouped up to
/// alpha-equivalence.
pub fn output_distribution(t: &Term, env: &Env, limits: &Limits) -> Result<OutputDist, AnalysisError> {
    let mut solver = DistSolver {
        env,
        limits: *limits,
        memo: HashMap::new(),
        explored: 0,
    };
    let entries = solver.solve(t)?;
    Ok(OutputDist {
        entries: (*entries).clone(),
    })
}

/// Output distribution read off the literal reduction tree.
pub fn output_distribution_via_tree(t: &Term, env: &Env, node_limit: usize) -> Result<OutputDist, AnalysisError> {
    let tree = build_tree(t, env, node_limit)?;
    let mut merged = Merger::default();
    for (v, p) in tree.leaves() {
        merged.add(v, p);
    }
    Ok(OutputDist {
        entries: merged.entries,
    })
}
