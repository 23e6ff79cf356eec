//! System-vs-system experiments built on the innate ordering.
//!
//! A comparison scores both systems with one chosen metric and tests the
//! per-topic differences. Only when that test is significant is the
//! corroborating sign test consulted: it counts the topics where one system's
//! SERP is non-inferior to the other's against those where it is
//! non-superior, ignoring equal and non-separable topics.

mod compare;
mod sweep;
mod topics;

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::serp::Serp;
use crate::stats::{self, TestResult};
use crate::trec::{Qrels, RunFile};

pub use compare::{compare_systems, CompareConfig, ComparisonReport, GroupCounts};
pub use sweep::{
    category_fractions, rank_systems, select_by_percentile, sweep_all_pairs, AgreementCategory, SweepConfig,
    SweepResult, SweepRow, SweepSummary,
};
pub use topics::{check_polarity, topic_table, write_topic_table_csv, TopicRow};

/// Default significance threshold.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Paired test applied to per-topic metric differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SigTest {
    #[default]
    T,
    Wilcoxon,
    Sign,
}

impl SigTest {
    pub fn run(self, diffs: &[f64]) -> Result<TestResult> {
        match self {
            SigTest::T => stats::t_test_paired(diffs),
            SigTest::Wilcoxon => stats::wilcoxon_signed_rank(diffs),
            SigTest::Sign => stats::sign_test_diffs(diffs),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SigTest::T => "t",
            SigTest::Wilcoxon => "wilcoxon",
            SigTest::Sign => "sign",
        }
    }
}

impl fmt::Display for SigTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SigTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t" | "student" | "ttest" => Ok(SigTest::T),
            "wilcoxon" | "w" => Ok(SigTest::Wilcoxon),
            "sign" | "s" => Ok(SigTest::Sign),
            other => Err(Error::invalid(format!(
                "unknown test {other:?} (expected t, wilcoxon or sign)"
            ))),
        }
    }
}

impl Serialize for SigTest {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Two systems' SERPs for one topic.
#[derive(Clone, Debug)]
pub(crate) struct TopicPair<'a> {
    pub topic: &'a str,
    pub serp_a: &'a Serp,
    pub serp_b: &'a Serp,
    pub total_relevant: usize,
}

/// Runs materialized once at a common depth over the qrels topics they answer.
pub(crate) struct Prepared<'r> {
    pub runs: &'r [RunFile],
    pub topics: Vec<String>,
    pub relevant: Vec<usize>,
    /// `serps[run][topic]`; `None` where the run has no list for the topic.
    serps: Vec<Vec<Option<Serp>>>,
    zeros: Serp,
}

impl<'r> Prepared<'r> {
    pub fn new(runs: &'r [RunFile], qrels: &Qrels, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        let topics: Vec<String> = qrels
            .topic_ids()
            .filter(|t| runs.iter().any(|r| r.topics.contains_key(*t)))
            .map(str::to_string)
            .collect();
        if topics.is_empty() {
            return Err(Error::invalid("runs and qrels share no topics"));
        }
        for run in runs {
            let unknown = run.topic_ids().filter(|t| !qrels.contains_topic(t)).count();
            if unknown > 0 {
                warn!("{}: {unknown} topics have no judgments and are ignored", run.system_tag);
            }
            let missing = topics.iter().filter(|t| !run.topics.contains_key(*t)).count();
            if missing > 0 {
                warn!("{}: {missing} topics missing, scored as empty SERPs", run.system_tag);
            }
        }
        let relevant = topics.iter().map(|t| qrels.relevant_count(t)).collect();
        let serps = runs
            .iter()
            .map(|run| {
                topics
                    .iter()
                    .map(|t| {
                        run.topics
                            .contains_key(t)
                            .then(|| crate::trec::serps::materialize(run, t, qrels, depth).0)
                    })
                    .collect()
            })
            .collect();
        Ok(Prepared {
            runs,
            topics,
            relevant,
            serps,
            zeros: Serp::zeros(depth),
        })
    }

    pub fn serp(&self, run: usize, topic: usize) -> &Serp {
        self.serps[run][topic].as_ref().unwrap_or(&self.zeros)
    }

    /// Topics answered by at least one of the two runs; a topic missing from
    /// one side is paired with an all-zero SERP.
    pub fn pair(&self, a: usize, b: usize) -> Result<Vec<TopicPair<'_>>> {
        let pairs: Vec<TopicPair<'_>> = (0..self.topics.len())
            .filter(|&t| self.serps[a][t].is_some() || self.serps[b][t].is_some())
            .map(|t| TopicPair {
                topic: &self.topics[t],
                serp_a: self.serp(a, t),
                serp_b: self.serp(b, t),
                total_relevant: self.relevant[t],
            })
            .collect();
        if pairs.is_empty() {
            return Err(Error::invalid(format!(
                "{} and {} share no judged topics",
                self.runs[a].system_tag, self.runs[b].system_tag
            )));
        }
        Ok(pairs)
    }
}
