use std::fmt::Write as _;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricSpec, TopicContext};
use crate::serp::{trajectory, TopicGroup};
use crate::stats::{sign_test, TestResult};
use crate::trec::{Qrels, RunFile};

use super::{check_alpha, Prepared, SigTest, TopicPair, DEFAULT_ALPHA};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareConfig {
    pub k: usize,
    pub metric: MetricSpec,
    pub alpha: f64,
    pub test: SigTest,
}

impl CompareConfig {
    /// Student t at the default alpha, with the metric evaluated at depth `k`.
    pub fn new(k: usize, metric: MetricSpec) -> Self {
        CompareConfig {
            k,
            metric,
            alpha: DEFAULT_ALPHA,
            test: SigTest::T,
        }
    }
}

/// Topic counts per reporting group, indexed by [`TopicGroup::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GroupCounts(pub [usize; 5]);

impl GroupCounts {
    pub fn get(&self, g: TopicGroup) -> usize {
        self.0[g.index()]
    }

    pub fn add(&mut self, g: TopicGroup) {
        self.0[g.index()] += 1;
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Topics entering the corroborating sign test: `(ni, ns)`.
    pub fn separable(&self) -> (usize, usize) {
        (self.get(TopicGroup::SeparableNi), self.get(TopicGroup::SeparableNs))
    }
}

impl Serialize for GroupCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(5))?;
        for g in TopicGroup::ALL {
            map.serialize_entry(g.label(), &self.get(g))?;
        }
        map.end()
    }
}

/// Full result of one champion-vs-challenger comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub system_a: String,
    pub system_b: String,
    pub k: usize,
    pub metric: MetricSpec,
    pub test: SigTest,
    pub alpha: f64,
    /// Topics classified (and counted in `ipso_counts`).
    pub topics: usize,
    /// Topics contributing to metric means and the metric test.
    pub metric_topics: usize,
    /// Topics without relevant documents, left out of metric averaging.
    pub excluded_topics: Vec<String>,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Mean per-topic `M(B) - M(A)`.
    pub effect_size: f64,
    pub metric_test: TestResult,
    pub metric_p: f64,
    pub ipso_counts: GroupCounts,
    /// Sign test on the non-inferior vs non-superior topic counts; `None`
    /// when no topic is separable.
    pub ipso_p: Option<f64>,
    /// Dagger: the metric test is significant at `alpha`.
    pub metric_significant: bool,
    /// Double dagger: additionally corroborated by the sign test.
    pub ipso_corroborated: bool,
}

impl ComparisonReport {
    pub fn ipso_significant(&self) -> bool {
        self.ipso_p.is_some_and(|p| p < self.alpha)
    }

    /// Aligned text; significance marks are `+`/`++` in ASCII mode, dagger/double dagger otherwise.
    pub fn render_text(&self, ascii: bool) -> String {
        let (dagger, ddagger) = if ascii { ("+", "++") } else { ("\u{2020}", "\u{2021}") };
        let mark = match (self.metric_significant, self.ipso_corroborated) {
            (true, true) => format!("{dagger}{ddagger}"),
            (true, false) => dagger.to_string(),
            _ => String::new(),
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14}{} vs {} at k={}",
            "comparison", self.system_a, self.system_b, self.k
        );
        let _ = writeln!(
            s,
            "{:<14}{} ({} test, alpha={})",
            "metric", self.metric, self.test, self.alpha
        );
        let _ = writeln!(s, "{:<14}{:.4}", "mean A", self.mean_a);
        let _ = writeln!(s, "{:<14}{:.4}", "mean B", self.mean_b);
        let _ = writeln!(s, "{:<14}{:+.4}{}", "B - A", self.effect_size, mark);
        let _ = writeln!(s, "{:<14}{:.4}", "metric p", self.metric_p);
        let counts: Vec<String> = TopicGroup::ALL
            .iter()
            .map(|g| format!("{}={}", g.label(), self.ipso_counts.get(*g)))
            .collect();
        let _ = writeln!(s, "{:<14}{}", "ipso groups", counts.join(" "));
        let ipso = self.ipso_p.map_or("n/a".to_string(), |p| format!("{p:.4}"));
        let _ = writeln!(s, "{:<14}{}", "ipso p", ipso);
        s
    }
}

pub(crate) struct Classified {
    pub counts: GroupCounts,
    pub ipso: Option<TestResult>,
}

pub(crate) fn classify_pairs(pairs: &[TopicPair<'_>], k: usize) -> Result<Classified> {
    let mut counts = GroupCounts::default();
    for p in pairs {
        let traj = trajectory(&p.serp_a.resized(k), &p.serp_b.resized(k))?;
        counts.add(traj.group().expect("non-empty trajectory"));
    }
    let (ni, ns) = counts.separable();
    let ipso = if ni + ns > 0 {
        Some(sign_test(ni as u64, ns as u64)?)
    } else {
        None
    };
    Ok(Classified { counts, ipso })
}

pub(crate) struct MetricOutcome {
    pub mean_a: f64,
    pub mean_b: f64,
    pub diffs_b_minus_a: Vec<f64>,
    pub excluded: Vec<String>,
}

pub(crate) fn score_pairs(pairs: &[TopicPair<'_>], metric: &MetricSpec) -> Result<MetricOutcome> {
    let mut a_scores = Vec::new();
    let mut b_scores = Vec::new();
    let mut excluded = Vec::new();
    for p in pairs {
        if p.total_relevant == 0 {
            excluded.push(p.topic.to_string());
            continue;
        }
        let ctx = TopicContext::new(p.total_relevant);
        a_scores.push(evaluate(metric, p.serp_a, &ctx)?);
        b_scores.push(evaluate(metric, p.serp_b, &ctx)?);
    }
    if a_scores.is_empty() {
        return Err(Error::invalid("no topic has relevant documents to score"));
    }
    let n = a_scores.len() as f64;
    Ok(MetricOutcome {
        mean_a: a_scores.iter().sum::<f64>() / n,
        mean_b: b_scores.iter().sum::<f64>() / n,
        diffs_b_minus_a: b_scores.iter().zip(&a_scores).map(|(b, a)| b - a).collect(),
        excluded,
    })
}

pub(crate) fn build_report(
    system_a: &str,
    system_b: &str,
    config: &CompareConfig,
    pairs: &[TopicPair<'_>],
    classified: &Classified,
    scored: &MetricOutcome,
) -> Result<ComparisonReport> {
    let metric_test = config.test.run(&scored.diffs_b_minus_a)?;
    let metric_significant = metric_test.p_value < config.alpha;
    let ipso_p = classified.ipso.map(|r| r.p_value);
    let ipso_corroborated = metric_significant && ipso_p.is_some_and(|p| p < config.alpha);
    Ok(ComparisonReport {
        system_a: system_a.to_string(),
        system_b: system_b.to_string(),
        k: config.k,
        metric: config.metric,
        test: config.test,
        alpha: config.alpha,
        topics: pairs.len(),
        metric_topics: scored.diffs_b_minus_a.len(),
        excluded_topics: scored.excluded.clone(),
        mean_a: scored.mean_a,
        mean_b: scored.mean_b,
        effect_size: scored.mean_b - scored.mean_a,
        metric_p: metric_test.p_value,
        metric_test,
        ipso_counts: classified.counts,
        ipso_p,
        metric_significant,
        ipso_corroborated,
    })
}

/// Runs the corroboration protocol for champion `run_a` against challenger `run_b`.
pub fn compare_systems(
    run_a: &RunFile,
    run_b: &RunFile,
    qrels: &Qrels,
    config: &CompareConfig,
) -> Result<ComparisonReport> {
    check_alpha(config.alpha)?;
    if config.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let runs = [run_a.clone(), run_b.clone()];
    let prepared = Prepared::new(&runs, qrels, config.k.max(config.metric.depth))?;
    let pairs = prepared.pair(0, 1)?;
    let classified = classify_pairs(&pairs, config.k)?;
    let scored = score_pairs(&pairs, &config.metric)?;
    build_report(
        &run_a.system_tag,
        &run_b.system_tag,
        config,
        &pairs,
        &classified,
        &scored,
    )
}
