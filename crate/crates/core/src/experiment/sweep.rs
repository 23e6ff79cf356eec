use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::enumeration::{CategoryCounts, CountMode};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricSpec, TopicContext};
use crate::serp::walk_words;
use crate::trec::{Qrels, RunFile};

use super::compare::{build_report, classify_pairs, score_pairs, CompareConfig};
use super::{check_alpha, Prepared, SigTest, DEFAULT_ALPHA};

/// Joint outcome of the metric test and the IPSO sign test for one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgreementCategory {
    BothYes,
    BothNo,
    /// Only the metric test is significant.
    MetricYes,
    /// Only the IPSO sign test is significant.
    MetricNo,
}

impl AgreementCategory {
    pub const ALL: [AgreementCategory; 4] = [
        AgreementCategory::BothYes,
        AgreementCategory::BothNo,
        AgreementCategory::MetricYes,
        AgreementCategory::MetricNo,
    ];

    pub fn from_flags(metric_significant: bool, ipso_significant: bool) -> Self {
        match (metric_significant, ipso_significant) {
            (true, true) => AgreementCategory::BothYes,
            (false, false) => AgreementCategory::BothNo,
            (true, false) => AgreementCategory::MetricYes,
            (false, true) => AgreementCategory::MetricNo,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgreementCategory::BothYes => "both_yes",
            AgreementCategory::BothNo => "both_no",
            AgreementCategory::MetricYes => "metric_yes",
            AgreementCategory::MetricNo => "metric_no",
        }
    }
}

impl fmt::Display for AgreementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for AgreementCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

/// Grid of settings swept over every unordered run pair.
///
/// Each metric is re-evaluated at every depth in `k_values`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    pub metrics: Vec<MetricSpec>,
    pub tests: Vec<SigTest>,
    pub alpha: f64,
}

impl SweepConfig {
    pub fn new(k_values: Vec<usize>, metrics: Vec<MetricSpec>) -> Self {
        SweepConfig {
            k_values,
            metrics,
            tests: vec![SigTest::T],
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub pair_index: usize,
    pub system_a: String,
    pub system_b: String,
    pub k: usize,
    pub metric: MetricSpec,
    pub test: SigTest,
    pub effect_size: f64,
    pub metric_p: f64,
    pub ipso_p: Option<f64>,
    pub category: AgreementCategory,
}

/// Category fractions for one `(k, metric, test)` cell of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub k: usize,
    pub metric: MetricSpec,
    pub test: SigTest,
    pub pairs: usize,
    pub both_yes: f64,
    pub both_no: f64,
    pub metric_yes: f64,
    pub metric_no: f64,
    /// Pairs where the metric test is significant.
    pub metric_total: f64,
    /// Pairs where the IPSO sign test is significant.
    pub ipso_total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<SweepSummary>,
}

fn unordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn check_runs(runs: &[RunFile]) -> Result<()> {
    if runs.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 runs, got {}", runs.len())));
    }
    Ok(())
}

/// Compares every unordered run pair `(i, j)`, `i < j`, under every setting.
///
/// Rows come out ordered by pair index, then `k`, metric and test in
/// configuration order.
pub fn sweep_all_pairs(runs: &[RunFile], qrels: &Qrels, config: &SweepConfig) -> Result<SweepResult> {
    check_runs(runs)?;
    check_alpha(config.alpha)?;
    if config.k_values.is_empty() || config.metrics.is_empty() || config.tests.is_empty() {
        return Err(Error::invalid("sweep needs at least one k, metric and test"));
    }
    if config.k_values.contains(&0) {
        return Err(Error::invalid("k must be at least 1"));
    }
    let depth = *config.k_values.iter().max().expect("non-empty");
    let prepared = Prepared::new(runs, qrels, depth)?;
    let pairs = unordered_pairs(runs.len());

    let per_pair: Vec<Result<Vec<SweepRow>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_index, &(a, b))| {
            let topic_pairs = prepared.pair(a, b)?;
            let mut rows = Vec::new();
            for &k in &config.k_values {
                let classified = classify_pairs(&topic_pairs, k)?;
                for metric in &config.metrics {
                    let metric = metric.at_depth(k)?;
                    let scored = score_pairs(&topic_pairs, &metric)?;
                    for &test in &config.tests {
                        let cfg = CompareConfig {
                            k,
                            metric,
                            alpha: config.alpha,
                            test,
                        };
                        let report = build_report(
                            &runs[a].system_tag,
                            &runs[b].system_tag,
                            &cfg,
                            &topic_pairs,
                            &classified,
                            &scored,
                        )?;
                        rows.push(SweepRow {
                            pair_index,
                            system_a: report.system_a,
                            system_b: report.system_b,
                            k,
                            metric,
                            test,
                            effect_size: report.effect_size,
                            metric_p: report.metric_p,
                            ipso_p: report.ipso_p,
                            category: AgreementCategory::from_flags(
                                report.metric_significant,
                                report.ipso_p.is_some_and(|p| p < config.alpha),
                            ),
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_pair {
        rows.extend(r?);
    }
    let summaries = summarize(&rows, config, pairs.len());
    Ok(SweepResult { rows, summaries })
}

fn summarize(rows: &[SweepRow], config: &SweepConfig, n_pairs: usize) -> Vec<SweepSummary> {
    let mut out = Vec::new();
    for &k in &config.k_values {
        for metric in &config.metrics {
            for &test in &config.tests {
                let mut tally = [0usize; 4];
                for row in rows
                    .iter()
                    .filter(|r| r.k == k && r.metric.metric == metric.metric && r.test == test)
                {
                    tally[row.category as usize] += 1;
                }
                let frac = |n: usize| n as f64 / n_pairs as f64;
                out.push(SweepSummary {
                    k,
                    metric: MetricSpec {
                        metric: metric.metric,
                        depth: k,
                    },
                    test,
                    pairs: n_pairs,
                    both_yes: frac(tally[0]),
                    both_no: frac(tally[1]),
                    metric_yes: frac(tally[2]),
                    metric_no: frac(tally[3]),
                    metric_total: frac(tally[0] + tally[2]),
                    ipso_total: frac(tally[0] + tally[3]),
                });
            }
        }
    }
    out
}

/// Relationship tallies over every (topic, unordered run pair) at depth `k`.
///
/// Every judged topic answered by some run is included for every pair; a run
/// missing the topic contributes an all-zero SERP.
pub fn category_fractions(runs: &[RunFile], qrels: &Qrels, k: usize) -> Result<CategoryCounts> {
    check_runs(runs)?;
    let prepared = Prepared::new(runs, qrels, k)?;
    let partials: Vec<CategoryCounts> = unordered_pairs(runs.len())
        .par_iter()
        .map(|&(a, b)| {
            let mut counts = CategoryCounts::empty(k, CountMode::Exact);
            for t in 0..prepared.topics.len() {
                let (sa, sb) = (prepared.serp(a, t), prepared.serp(b, t));
                counts.add(walk_words(sa.words(), sb.words(), k));
            }
            counts
        })
        .collect();
    let mut total = CategoryCounts::empty(k, CountMode::Exact);
    for c in &partials {
        total.merge(c);
    }
    Ok(total)
}

/// Mean `metric` score per run over topics with relevant documents, best first.
///
/// Ties are broken by system tag.
pub fn rank_systems(runs: &[RunFile], qrels: &Qrels, metric: &MetricSpec) -> Result<Vec<(String, f64)>> {
    if runs.is_empty() {
        return Err(Error::invalid("no runs to rank"));
    }
    let prepared = Prepared::new(runs, qrels, metric.depth)?;
    let scored: Vec<usize> = (0..prepared.topics.len())
        .filter(|&t| prepared.relevant[t] > 0)
        .collect();
    if scored.is_empty() {
        return Err(Error::invalid("no topic has relevant documents to score"));
    }
    let mut ranking = runs
        .iter()
        .enumerate()
        .map(|(r, run)| {
            let mut sum = 0.0;
            for &t in &scored {
                sum += evaluate(metric, prepared.serp(r, t), &TopicContext::new(prepared.relevant[t]))?;
            }
            Ok((run.system_tag.clone(), sum / scored.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    Ok(ranking)
}

/// Tag of the run at the given percentile of a best-first ranking.
///
/// Percentile 100 is the best run and 0 the worst; positions in between are
/// rounded to the nearest rank.
pub fn select_by_percentile(ranking: &[(String, f64)], percentile: f64) -> Result<&str> {
    if ranking.is_empty() {
        return Err(Error::invalid("empty ranking"));
    }
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::invalid(format!(
            "percentile must lie in [0, 100], got {percentile}"
        )));
    }
    let pos = ((1.0 - percentile / 100.0) * (ranking.len() - 1) as f64).round() as usize;
    Ok(&ranking[pos].0)
}
