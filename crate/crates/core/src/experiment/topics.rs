use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricSpec, TopicContext, SCORE_TOLERANCE};
use crate::serp::{trajectory, Serp, TopicGroup, Trajectory};
use crate::trec::{Qrels, RunFile};

use super::Prepared;

/// One line of the five-section topic table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopicRow {
    pub topic: String,
    pub serp_a: Serp,
    pub serp_b: Serp,
    pub trajectory: Trajectory,
    pub group: TopicGroup,
    /// `M(A) - M(B)` for each requested metric, in request order.
    pub score_diffs: Vec<(MetricSpec, f64)>,
}

/// Per-topic comparison of two runs, grouped and sorted for display.
pub fn topic_table(
    run_a: &RunFile,
    run_b: &RunFile,
    qrels: &Qrels,
    k: usize,
    metrics: &[MetricSpec],
) -> Result<Vec<TopicRow>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let depth = metrics.iter().map(|m| m.depth).fold(k, usize::max);
    let runs = [run_a.clone(), run_b.clone()];
    let prepared = Prepared::new(&runs, qrels, depth)?;
    let mut rows = Vec::new();
    for p in prepared.pair(0, 1)? {
        let serp_a = p.serp_a.resized(k);
        let serp_b = p.serp_b.resized(k);
        let traj = trajectory(&serp_a, &serp_b)?;
        let ctx = TopicContext::new(p.total_relevant);
        let score_diffs = metrics
            .iter()
            .map(|m| Ok((*m, evaluate(m, p.serp_a, &ctx)? - evaluate(m, p.serp_b, &ctx)?)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TopicRow {
            topic: p.topic.to_string(),
            serp_a,
            serp_b,
            group: traj.group().expect("non-empty trajectory"),
            trajectory: traj,
            score_diffs,
        });
    }
    rows.sort_by(|x, y| {
        (x.group, x.trajectory.sort_key(), &x.topic).cmp(&(y.group, y.trajectory.sort_key(), &y.topic))
    });
    Ok(rows)
}

/// Metric differences that contradict the row's separable group.
///
/// Only metrics evaluated no deeper than the trajectory are constrained.
/// Returns the offending `(metric, difference)` pairs.
pub fn check_polarity(row: &TopicRow) -> Vec<(MetricSpec, f64)> {
    let k = row.trajectory.len();
    row.score_diffs
        .iter()
        .filter(|(m, _)| m.depth <= k)
        .filter(|(_, d)| match row.group {
            TopicGroup::SeparableNi => *d < -SCORE_TOLERANCE,
            TopicGroup::SeparableNs => *d > SCORE_TOLERANCE,
            TopicGroup::Equal => d.abs() > SCORE_TOLERANCE,
            _ => false,
        })
        .copied()
        .collect()
}

/// Writes `topic,group,serp_a,serp_b,trajectory,<metric>...`.
pub fn write_topic_table_csv<W: Write>(rows: &[TopicRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "topic".to_string(),
        "group".into(),
        "serp_a".into(),
        "serp_b".into(),
        "trajectory".into(),
    ];
    if let Some(first) = rows.first() {
        header.extend(first.score_diffs.iter().map(|(m, _)| m.to_string()));
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.topic.clone(),
            row.group.to_string(),
            row.serp_a.bitstring(),
            row.serp_b.bitstring(),
            row.trajectory.to_string(),
        ];
        rec.extend(row.score_diffs.iter().map(|(_, d)| d.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec::{parse_qrels, parse_run};

    fn run(tag: &str, lists: &[(&str, &[&str])]) -> RunFile {
        let mut text = String::new();
        for (topic, docs) in lists {
            for (i, d) in docs.iter().enumerate() {
                text.push_str(&format!("{topic} Q0 {d} {} {} {tag}\n", i + 1, 100 - i));
            }
        }
        parse_run(text.as_bytes()).unwrap()
    }

    fn qrels() -> Qrels {
        let text = "t1 0 r1 1\nt1 0 r2 1\nt1 0 n1 0\nt2 0 r1 2\nt2 0 n1 0\nt3 0 r1 1\n";
        parse_qrels(text.as_bytes()).unwrap()
    }

    #[test]
    fn groups_and_ordering() {
        let a = run(
            "A",
            &[("t1", &["r1", "n1", "r2"]), ("t2", &["n1", "r1"]), ("t3", &["r1"])],
        );
        let b = run(
            "B",
            &[("t1", &["n1", "r1", "r2"]), ("t2", &["r1", "n1"]), ("t3", &["r1"])],
        );
        let metrics = MetricSpec::standard_suite(3);
        let rows = topic_table(&a, &b, &qrels(), 3, &metrics).unwrap();
        let got: Vec<(&str, TopicGroup)> = rows.iter().map(|r| (r.topic.as_str(), r.group)).collect();
        assert_eq!(
            got,
            vec![
                ("t2", TopicGroup::SeparableNs),
                ("t3", TopicGroup::Equal),
                ("t1", TopicGroup::SeparableNi)
            ]
        );
        assert_eq!(rows[2].trajectory.to_string(), "ni ni ni");
        assert_eq!(rows[2].serp_a.bitstring(), "101");
        for r in &rows {
            assert!(check_polarity(r).is_empty(), "{r:?}");
        }
        // t1: P@3 equal, RR 1 - 1/2
        assert_eq!(rows[2].score_diffs[0].1, 0.5);
        assert_eq!(rows[2].score_diffs[1].1, 0.0);
    }

    #[test]
    fn identical_runs_all_equal() {
        let a = run("A", &[("t1", &["r1", "n1"]), ("t2", &["n1", "r1"])]);
        let rows = topic_table(&a, &a, &qrels(), 2, &[MetricSpec::ap(2)]).unwrap();
        assert!(rows.iter().all(|r| r.group == TopicGroup::Equal));
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn polarity_flags_contradiction() {
        let row = TopicRow {
            topic: "x".into(),
            serp_a: "10".parse().unwrap(),
            serp_b: "01".parse().unwrap(),
            trajectory: trajectory(&"10".parse().unwrap(), &"01".parse().unwrap()).unwrap(),
            group: TopicGroup::SeparableNi,
            score_diffs: vec![(MetricSpec::prec(2), -0.5), (MetricSpec::rr(2), 0.5)],
        };
        assert_eq!(check_polarity(&row), vec![(MetricSpec::prec(2), -0.5)]);
    }

    #[test]
    fn csv_layout() {
        let a = run("A", &[("t3", &["r1"])]);
        let rows = topic_table(&a, &a, &qrels(), 1, &[MetricSpec::prec(1)]).unwrap();
        let mut buf = Vec::new();
        write_topic_table_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "topic,group,serp_a,serp_b,trajectory,P@1\nt3,==,1,1,==,0\n"
        );
    }
}
