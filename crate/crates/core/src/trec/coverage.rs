use serde::Serialize;

use super::{Qrels, RunFile};

/// Judgment coverage of one system's list for one topic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTopicCoverage {
    pub system: String,
    pub topic: String,
    pub retrieved: usize,
    pub unjudged: usize,
    pub first_unjudged: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub rows: Vec<RunTopicCoverage>,
    /// Fraction of (system, topic) lists holding at least one unjudged document.
    pub fraction_with_unjudged: f64,
    /// Mean rank of the first unjudged document, over lists that have one.
    pub mean_first_unjudged_rank: Option<f64>,
    /// Mean unjudged documents per 100 retrieved, over lists that have any.
    pub mean_unjudged_per_100: Option<f64>,
}

/// Coverage of every (system, topic) list in `runs` (as already truncated at parse time).
pub fn judgment_coverage(runs: &[RunFile], qrels: &Qrels) -> CoverageReport {
    let mut rows = Vec::new();
    for run in runs {
        for (topic, entries) in &run.topics {
            let mut unjudged = 0;
            let mut first = None;
            for (i, e) in entries.iter().enumerate() {
                if !qrels.is_judged(topic, &e.doc_id) {
                    unjudged += 1;
                    first.get_or_insert(i + 1);
                }
            }
            rows.push(RunTopicCoverage {
                system: run.system_tag.clone(),
                topic: topic.clone(),
                retrieved: entries.len(),
                unjudged,
                first_unjudged: first,
            });
        }
    }
    let affected: Vec<&RunTopicCoverage> = rows.iter().filter(|r| r.unjudged > 0).collect();
    let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    CoverageReport {
        fraction_with_unjudged: if rows.is_empty() {
            0.0
        } else {
            affected.len() as f64 / rows.len() as f64
        },
        mean_first_unjudged_rank: mean(
            affected
                .iter()
                .filter_map(|r| r.first_unjudged)
                .map(|x| x as f64)
                .collect(),
        ),
        mean_unjudged_per_100: mean(
            affected
                .iter()
                .map(|r| 100.0 * r.unjudged as f64 / r.retrieved as f64)
                .collect(),
        ),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec::{parse_qrels, parse_run};

    #[test]
    fn fully_judged() {
        let r = parse_run("1 Q0 a 1 2 s\n1 Q0 b 2 1 s\n".as_bytes()).unwrap();
        let q = parse_qrels("1 0 a 1\n1 0 b 0\n".as_bytes()).unwrap();
        let c = judgment_coverage(&[r], &q);
        assert_eq!(c.rows[0].first_unjudged, None);
        assert_eq!(c.rows[0].unjudged, 0);
        assert_eq!(c.fraction_with_unjudged, 0.0);
        assert_eq!(c.mean_first_unjudged_rank, None);
    }

    #[test]
    fn two_topic_fixture() {
        // topic 1: [a judged, x unjudged, b judged, y unjudged] -> first 2, 2 of 4
        // topic 2: [c judged, d judged] -> none
        let r = parse_run(
            "1 Q0 a 1 4 s\n1 Q0 x 2 3 s\n1 Q0 b 3 2 s\n1 Q0 y 4 1 s\n2 Q0 c 1 2 s\n2 Q0 d 2 1 s\n".as_bytes(),
        )
        .unwrap();
        let q = parse_qrels("1 0 a 1\n1 0 b 0\n2 0 c 0\n2 0 d 3\n".as_bytes()).unwrap();
        let c = judgment_coverage(&[r], &q);
        assert_eq!(c.fraction_with_unjudged, 0.5);
        assert_eq!(c.mean_first_unjudged_rank, Some(2.0));
        assert_eq!(c.mean_unjudged_per_100, Some(50.0));
    }
}
