use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{build_tree, output_distribution, AnalysisError, Limits, OutputDist};
use crate::machine::{frequency_dist, match_entry, tv_distance};
use crate::rat::{common_denominator, scaled_numerator, Rat};
use crate::syntax::{Dist, Term};
use crate::types::{infer_closed, Env, TypeError};

/// Probability mass of `od` landing in each entry of `target` under
/// first-match grouping, plus the mass matching no entry.
pub fn bucket_probs(od: &OutputDist, target: &Dist, env: &Env) -> Result<(Vec<Rat>, Rat), TypeError> {
    let mut buckets = vec![Rat::zero(); target.entries.len()];
    let mut miss = Rat::zero();
    for (v, p) in &od.entries {
        match match_entry(&infer_closed(v, env)?, target, env) {
            Some(j) => buckets[j] = &buckets[j] + p,
            None => miss = &miss + p,
        }
    }
    Ok((buckets, miss))
}

/// Precomputed tables for the multinomial sum. Buckets with zero mass are
/// left out of the enumeration, and so is the miss bucket, since a single
/// unmatched value already fails the check.
struct Shortcut<'a> {
    target: &'a Dist,
    active: Vec<usize>,
    denom: BigUint,
    factorials: Vec<BigUint>,
    /// `powers[i][k]` is the `k`-th power of the scaled numerator of active
    /// bucket `i`.
    powers: Vec<Vec<BigUint>>,
    vector_limit: u64,
}

impl<'a> Shortcut<'a> {
    fn new(buckets: &[Rat], target: &'a Dist, n_max: usize, vector_limit: u64) -> Shortcut<'a> {
        let active: Vec<usize> = (0..buckets.len()).filter(|&j| buckets[j].is_positive()).collect();
        let denom = common_denominator(active.iter().map(|&j| &buckets[j]));
        let mut factorials = Vec::with_capacity(n_max + 1);
        factorials.push(BigUint::one());
        for k in 1..=n_max {
            let next = &factorials[k - 1] * BigUint::from(k);
            factorials.push(next);
        }
        let powers = active
            .iter()
            .map(|&j| {
                let a = scaled_numerator(&buckets[j], &denom);
                let mut row = Vec::with_capacity(n_max + 1);
                row.push(BigUint::one());
                for k in 1..=n_max {
                    let next = &row[k - 1] * &a;
                    row.push(next);
                }
                row
            })
            .collect();
        Shortcut {
            target,
            active,
            denom,
            factorials,
            powers,
            vector_limit,
        }
    }

    fn vector_count(&self, n: usize) -> u128 {
        // compositions of n into `active` parts: C(n + a - 1, a - 1)
        let a = self.active.len();
        if a == 0 {
            return 0;
        }
        let mut c = BigUint::one();
        for i in 1..a {
            c = c * BigUint::from(n + i) / BigUint::from(i);
        }
        c.to_u128().unwrap_or(u128::MAX)
    }

    fn at(&self, n: usize) -> Result<Rat, AnalysisError> {
        let vectors = self.vector_count(n);
        if vectors > u128::from(self.vector_limit) {
            return Err(AnalysisError::TooManyVectors {
                n,
                vectors,
                limit: self.vector_limit,
            });
        }
        if self.active.is_empty() {
            return Ok(Rat::zero());
        }
        let mut counts = vec![0u64; self.target.entries.len()];
        let mut ks = vec![0usize; self.active.len()];
        let mut sum = BigUint::default();
        self.enumerate(0, n, n, &mut ks, &mut counts, &mut sum);
        Ok(Rat::from_biguints(sum, self.denom.pow(n as u32)))
    }

    fn enumerate(&self, i: usize, left: usize, n: usize, ks: &mut [usize], counts: &mut [u64], sum: &mut BigUint) {
        let last = i + 1 == self.active.len();
        let range = if last { left..=left } else { 0..=left };
        for k in range {
            ks[i] = k;
            counts[self.active[i]] = k as u64;
            if last {
                let freq = frequency_dist(counts, n as u64, self.target);
                if tv_distance(self.target, &freq) <= self.target.epsilon {
                    let mut term = self.factorials[n].clone();
                    for &k in ks.iter() {
                        term /= &self.factorials[k];
                    }
                    for (row, &k) in self.powers.iter().zip(ks.iter()) {
                        term *= &row[k];
                    }
                    *sum += term;
                }
            } else {
                self.enumerate(i + 1, left - k, n, ks, counts, sum);
            }
        }
        counts[self.active[i]] = 0;
    }
}

pub(crate) fn confidence_of_dist(
    od: &OutputDist,
    target: &Dist,
    n: usize,
    env: &Env,
    limits: &Limits,
) -> Result<Rat, AnalysisError> {
    let (buckets, _) = bucket_probs(od, target, env)?;
    Shortcut::new(&buckets, target, n, limits.vectors).at(n)
}

/// Probability that `trust exp[n] t with target` reduces to `true`, by
/// summing multinomial probabilities of the passing count vectors.
pub fn confidence(t: &Term, target: &Dist, n: usize, env: &Env, limits: &Limits) -> Result<Rat, AnalysisError> {
    let od = output_distribution(t, env, limits)?;
    confidence_of_dist(&od, target, n, env, limits)
}

/// The same probability read off the literal reduction tree of
/// `trust exp[n] t with target`. Exponential in `n`.
pub fn confidence_via_tree(
    t: &Term,
    target: &Dist,
    n: usize,
    env: &Env,
    node_limit: usize,
) -> Result<Rat, AnalysisError> {
    let trust = Term::trust(Term::exp(n, t.clone()), target.clone());
    Ok(build_tree(&trust, env, node_limit)?.prob_of(&Term::True))
}

/// Confidence values of a term for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfidenceCurve {
    pub term: Term,
    pub target: Dist,
    pub points: Vec<(usize, Rat)>,
}

impl ConfidenceCurve {
    pub fn value_at(&self, n: usize) -> Option<&Rat> {
        self.points.iter().find(|(m, _)| *m == n).map(|(_, r)| r)
    }

    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|(n, r)| json!({"n": n, "value": r.to_string()}))
            .collect();
        json!({
            "term": self.term.to_string(),
            "target": self.target.to_string(),
            "points": points,
        })
    }
}

pub fn confidence_curve(
    t: &Term,
    target: &Dist,
    n_max: usize,
    env: &Env,
    limits: &Limits,
) -> Result<ConfidenceCurve, AnalysisError> {
    let od = output_distribution(t, env, limits)?;
    let (buckets, _) = bucket_probs(&od, target, env)?;
    let shortcut = Shortcut::new(&buckets, target, n_max, limits.vectors);
    let points = (1..=n_max)
        .into_par_iter()
        .map(|n| shortcut.at(n).map(|r| (n, r)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConfidenceCurve {
        term: t.clone(),
        target: target.clone(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Precedes,
    Succeeds,
    Equivalent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Precedes => "precedes",
            Verdict::Succeeds => "succeeds",
            Verdict::Equivalent => "equivalent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Number of trailing grid points [`compare_confidence`] inspects.
pub const COMPARE_POINTS: usize = 5;

/// Finite-sample reading of the confidence order: compares `f(n)/g(n)`
/// against `1 +- tol` at the last [`COMPARE_POINTS`] grid points. A zero
/// `g(n)` or mismatched grids give [`Verdict::Inconclusive`].
pub fn compare_confidence(f: &ConfidenceCurve, g: &ConfidenceCurve, tol: &Rat) -> Verdict {
    let grid = |c: &ConfidenceCurve| c.points.iter().map(|(n, _)| *n).collect::<Vec<_>>();
    if f.points.is_empty() || grid(f) != grid(g) {
        return Verdict::Inconclusive;
    }
    let start = f.points.len().saturating_sub(COMPARE_POINTS);
    let mut ratios = Vec::new();
    for ((_, a), (_, b)) in f.points[start..].iter().zip(&g.points[start..]) {
        if b.is_zero() {
            return Verdict::Inconclusive;
        }
        ratios.push(a / b);
    }
    let lo = Rat::one() - tol;
    let hi = Rat::one() + tol;
    if ratios.iter().all(|r| *r < lo) {
        Verdict::Precedes
    } else if ratios.iter().all(|r| *r > hi) {
        Verdict::Succeeds
    } else if ratios.iter().all(|r| *r >= lo && *r <= hi) {
        Verdict::Equivalent
    } else {
        Verdict::Inconclusive
    }
}
