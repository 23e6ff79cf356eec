//! Binary-relevance effectiveness metrics evaluated to a fixed depth.
//!
//! All six families score a SERP in `[0, 1]` and respect the innate ordering:
//! if one SERP is non-inferior to another at depth `k`, its score is never
//! lower. [`certify_compliance`] checks that claim exhaustively for any
//! [`Scorer`], including ones defined outside this crate.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::serp::{walk_words, Relationship, Serp};

/// Absolute tolerance under which two scores are considered equal.
pub const SCORE_TOLERANCE: f64 = 1e-12;

/// Default cap on `k` for [`certify_compliance`] (the pair space is `4^k`).
pub const DEFAULT_CERTIFY_LIMIT: usize = 12;

/// RBP user persistence, strictly inside `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Persistence(f64);

impl Persistence {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Persistence(p))
        } else {
            Err(Error::invalid(format!("RBP persistence must lie in (0, 1), got {p}")))
        }
    }

    /// `(sqrt(5) - 1) / 2`, the persistence at which `[1,0,0]` and `[0,1,1]` tie.
    pub fn golden() -> Self {
        Persistence((5f64.sqrt() - 1.0) / 2.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Prec,
    RR,
    Succ,
    Rbp(Persistence),
    AP,
    Ndcg,
}

impl Metric {
    fn prefix(self) -> String {
        match self {
            Metric::Prec => "P".into(),
            Metric::RR => "RR".into(),
            Metric::Succ => "S".into(),
            Metric::Rbp(p) => format!("RBP{}", p.value()),
            Metric::AP => "AP".into(),
            Metric::Ndcg => "NDCG".into(),
        }
    }

    /// True for families whose normalization depends on the topic's relevant count.
    pub fn needs_total_relevant(self) -> bool {
        matches!(self, Metric::AP | Metric::Ndcg)
    }
}

/// A metric family evaluated to depth `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSpec {
    pub metric: Metric,
    pub depth: usize,
}

impl MetricSpec {
    pub fn new(metric: Metric, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("metric depth must be at least 1"));
        }
        Ok(MetricSpec { metric, depth })
    }

    /// The same family at a different depth.
    pub fn at_depth(self, depth: usize) -> Result<Self> {
        MetricSpec::new(self.metric, depth)
    }

    pub fn prec(k: usize) -> Self {
        MetricSpec::new(Metric::Prec, k).expect("positive depth")
    }
    pub fn rr(k: usize) -> Self {
        MetricSpec::new(Metric::RR, k).expect("positive depth")
    }
    pub fn succ(k: usize) -> Self {
        MetricSpec::new(Metric::Succ, k).expect("positive depth")
    }
    pub fn rbp(p: f64, k: usize) -> Result<Self> {
        MetricSpec::new(Metric::Rbp(Persistence::new(p)?), k)
    }
    pub fn ap(k: usize) -> Self {
        MetricSpec::new(Metric::AP, k).expect("positive depth")
    }
    pub fn ndcg(k: usize) -> Self {
        MetricSpec::new(Metric::Ndcg, k).expect("positive depth")
    }

    /// The six-metric palette used for topic tables: RR, P, RBP(0.5), RBP(0.8), AP, NDCG.
    pub fn standard_suite(k: usize) -> Vec<MetricSpec> {
        vec![
            MetricSpec::rr(k),
            MetricSpec::prec(k),
            MetricSpec::rbp(0.5, k).expect("valid persistence"),
            MetricSpec::rbp(0.8, k).expect("valid persistence"),
            MetricSpec::ap(k),
            MetricSpec::ndcg(k),
        ]
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.metric.prefix(), self.depth)
    }
}

/// Parses `P@k`, `RR@k`, `S@k`, `RBP<p>@k`, `AP@k` and `NDCG@k`
/// (case-insensitive; `Prec`, `Succ` and `RBP(<p>)` are also accepted).
impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, depth) = s
            .trim()
            .rsplit_once('@')
            .ok_or_else(|| Error::invalid(format!("metric {s:?} is missing '@k'")))?;
        let depth: usize = depth
            .parse()
            .map_err(|_| Error::invalid(format!("bad metric depth in {s:?}")))?;
        let upper = name.to_ascii_uppercase();
        let metric = match upper.as_str() {
            "P" | "PREC" => Metric::Prec,
            "RR" => Metric::RR,
            "S" | "SUCC" => Metric::Succ,
            "AP" => Metric::AP,
            "NDCG" => Metric::Ndcg,
            _ if upper.starts_with("RBP") => {
                let p = upper[3..].trim_start_matches('(').trim_end_matches(')');
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad RBP persistence in {s:?}")))?;
                Metric::Rbp(Persistence::new(p)?)
            }
            _ => return Err(Error::invalid(format!("unknown metric {s:?}"))),
        };
        MetricSpec::new(metric, depth)
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Per-topic information needed by recall-normalized metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TopicContext {
    /// Number of relevant documents judged for the topic.
    pub total_relevant: usize,
}

impl TopicContext {
    pub fn new(total_relevant: usize) -> Self {
        TopicContext { total_relevant }
    }
}

/// Anything that assigns a score to a depth-`k` SERP.
pub trait Scorer: Sync {
    fn depth(&self) -> usize;
    fn score(&self, serp: &Serp, ctx: &TopicContext) -> Result<f64>;
}

impl Scorer for MetricSpec {
    fn depth(&self) -> usize {
        self.depth
    }

    fn score(&self, serp: &Serp, ctx: &TopicContext) -> Result<f64> {
        evaluate(self, serp, ctx)
    }
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// Scores `serp` under `metric`. SERPs shorter than the metric depth are
/// zero-padded; longer ones are truncated.
pub fn evaluate(metric: &MetricSpec, serp: &Serp, ctx: &TopicContext) -> Result<f64> {
    let k = metric.depth;
    if k == 0 {
        return Err(Error::invalid("metric depth must be at least 1"));
    }
    let serp = if serp.len() == k { serp.clone() } else { serp.resized(k) };
    let ones = serp.ones();
    if metric.metric.needs_total_relevant() && ctx.total_relevant < ones {
        return Err(Error::InvalidContext(format!(
            "{metric}: topic has {} relevant documents but the SERP holds {ones}",
            ctx.total_relevant
        )));
    }
    let ranks = || serp.iter().enumerate().filter(|(_, r)| *r).map(|(i, _)| i + 1);
    let score = match metric.metric {
        Metric::Prec => ones as f64 / k as f64,
        Metric::Succ => (ones > 0) as u8 as f64,
        Metric::RR => ranks().next().map_or(0.0, |r| 1.0 / r as f64),
        Metric::Rbp(p) => {
            let p = p.value();
            let mut weight = 1.0;
            let mut sum = 0.0;
            for r in serp.iter() {
                if r {
                    sum += weight;
                }
                weight *= p;
            }
            (1.0 - p) * sum
        }
        Metric::AP => {
            if ctx.total_relevant == 0 {
                0.0
            } else {
                let sum: f64 = ranks()
                    .enumerate()
                    .map(|(found, rank)| (found + 1) as f64 / rank as f64)
                    .sum();
                sum / ctx.total_relevant as f64
            }
        }
        Metric::Ndcg => {
            if ctx.total_relevant == 0 {
                0.0
            } else {
                let dcg: f64 = ranks().map(discount).sum();
                let ideal: f64 = (1..=ctx.total_relevant.min(k)).map(discount).sum();
                dcg / ideal
            }
        }
    };
    Ok(score)
}

/// Sign of `score(s1) - score(s2)`, with differences within
/// [`SCORE_TOLERANCE`] reported as equal.
pub fn ordering_check(metric: &MetricSpec, s1: &Serp, s2: &Serp, ctx: &TopicContext) -> Result<Ordering> {
    let a = evaluate(metric, s1, ctx)?;
    let b = evaluate(metric, s2, ctx)?;
    Ok(score_ordering(a, b))
}

pub(crate) fn score_ordering(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= SCORE_TOLERANCE {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// A SERP pair whose scores contradict their innate relationship.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub first: Serp,
    pub second: Serp,
    pub relationship: Relationship,
    pub first_score: f64,
    pub second_score: f64,
}

/// Checks every ordered SERP pair of length `k` against `scorer`.
///
/// Returns the violating pairs sorted by `(first, second)` lexicographic
/// code; an empty list means the scorer complies with the innate ordering at
/// this depth and context. `k` must not exceed [`DEFAULT_CERTIFY_LIMIT`].
pub fn certify_compliance<S: Scorer + ?Sized>(scorer: &S, k: usize, ctx: &TopicContext) -> Result<Vec<Violation>> {
    if k == 0 || k > DEFAULT_CERTIFY_LIMIT {
        return Err(Error::invalid(format!(
            "certification depth must be in 1..={DEFAULT_CERTIFY_LIMIT}, got {k}"
        )));
    }
    let n = 1u64 << k;
    let serps: Vec<Serp> = (0..n).map(|c| Serp::from_code(c, k)).collect();
    let scores = serps
        .iter()
        .map(|s| scorer.score(s, ctx))
        .collect::<Result<Vec<f64>>>()?;
    let mut violations: Vec<Violation> = (0..serps.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (serps, scores) = (&serps, &scores);
            (0..serps.len()).filter_map(move |j| {
                let rel = walk_words(serps[i].words(), serps[j].words(), k);
                let ok = match rel {
                    Relationship::Equal => (scores[i] - scores[j]).abs() <= SCORE_TOLERANCE,
                    Relationship::NonInferior => scores[i] >= scores[j] - SCORE_TOLERANCE,
                    Relationship::NonSuperior => scores[i] <= scores[j] + SCORE_TOLERANCE,
                    Relationship::NonSeparable => true,
                };
                (!ok).then(|| Violation {
                    first: serps[i].clone(),
                    second: serps[j].clone(),
                    relationship: rel,
                    first_score: scores[i],
                    second_score: scores[j],
                })
            })
        })
        .collect();
    violations.sort_by_key(|v| (v.first.code(), v.second.code()));
    Ok(violations)
}
