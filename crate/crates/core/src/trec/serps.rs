use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::serp::Serp;

use super::{Qrels, RunFile};

/// Judged/unjudged document counts within one materialized SERP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TopicCoverage {
    pub judged: usize,
    pub unjudged: usize,
    /// 1-based rank of the first unjudged document, if any.
    pub first_unjudged: Option<usize>,
}

/// Depth-`k` SERPs keyed by `(system, topic)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SerpSet {
    pub k: usize,
    pub serps: BTreeMap<(String, String), Serp>,
    pub coverage: BTreeMap<(String, String), TopicCoverage>,
}

impl SerpSet {
    pub fn get(&self, system: &str, topic: &str) -> Option<&Serp> {
        self.serps.get(&(system.to_string(), topic.to_string()))
    }

    /// Merges the SERPs of another set built at the same depth.
    pub fn extend(&mut self, other: SerpSet) -> Result<()> {
        if !self.serps.is_empty() && self.k != other.k {
            return Err(Error::invalid(format!(
                "cannot merge depth {} into depth {}",
                other.k, self.k
            )));
        }
        self.k = other.k;
        self.serps.extend(other.serps);
        self.coverage.extend(other.coverage);
        Ok(())
    }

    /// Writes `system,topic,bitstring` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["system", "topic", "bitstring"])?;
        for ((system, topic), serp) in &self.serps {
            w.write_record([system.as_str(), topic.as_str(), &serp.bitstring()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Binarized depth-`k` SERP of one ranked list, with its judgment coverage.
pub(crate) fn materialize(run: &RunFile, topic: &str, qrels: &Qrels, k: usize) -> (Serp, TopicCoverage) {
    let entries = run.ranked(topic);
    let mut cov = TopicCoverage::default();
    let bits = entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, e)| match qrels.grade(topic, &e.doc_id) {
            Some(g) => {
                cov.judged += 1;
                super::binarize(g)
            }
            None => {
                cov.unjudged += 1;
                cov.first_unjudged.get_or_insert(i + 1);
                false
            }
        });
    let serp = Serp::from_bools(bits.collect::<Vec<_>>()).resized(k);
    (serp, cov)
}

pub fn build_serps(run: &RunFile, qrels: &Qrels, k: usize) -> Result<SerpSet> {
    build_serps_with(run, qrels, k, false)
}

/// Materializes a run at depth `k`. With `include_missing_topics`, qrels
/// topics the run never answered produce all-zero SERPs.
pub fn build_serps_with(run: &RunFile, qrels: &Qrels, k: usize, include_missing_topics: bool) -> Result<SerpSet> {
    if k == 0 {
        return Err(Error::invalid("SERP depth must be at least 1"));
    }
    let mut set = SerpSet {
        k,
        ..Default::default()
    };
    let mut topics: Vec<&str> = run.topic_ids().collect();
    if include_missing_topics {
        topics.extend(qrels.topic_ids().filter(|t| !run.topics.contains_key(*t)));
    }
    for topic in topics {
        let (serp, cov) = materialize(run, topic, qrels, k);
        let key = (run.system_tag.clone(), topic.to_string());
        set.serps.insert(key.clone(), serp);
        set.coverage.insert(key, cov);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec::{parse_qrels, parse_run};

    fn run(text: &str) -> RunFile {
        parse_run(text.as_bytes()).unwrap()
    }

    #[test]
    fn direct_mapping() {
        let r = run("1 Q0 d1 1 3 s\n1 Q0 d2 2 2 s\n1 Q0 d3 3 1 s\n");
        let q = parse_qrels("1 0 d1 1\n1 0 d3 2\n".as_bytes()).unwrap();
        let set = build_serps(&r, &q, 3).unwrap();
        assert_eq!(set.get("s", "1").unwrap().bitstring(), "101");
    }

    #[test]
    fn padding_and_truncation() {
        let r = run("1 Q0 d1 1 3 s\n");
        let q = parse_qrels("1 0 d1 0\n".as_bytes()).unwrap();
        assert_eq!(
            build_serps(&r, &q, 3).unwrap().get("s", "1").unwrap().bitstring(),
            "000"
        );
        let r = run("1 Q0 d1 1 3 s\n1 Q0 d2 2 2 s\n1 Q0 d3 3 1 s\n");
        let q = parse_qrels("1 0 d3 1\n".as_bytes()).unwrap();
        assert_eq!(build_serps(&r, &q, 2).unwrap().get("s", "1").unwrap().bitstring(), "00");
    }

    #[test]
    fn coverage_counts_unjudged() {
        let r = run("1 Q0 d1 1 3 s\n1 Q0 d2 2 2 s\n");
        let q = parse_qrels("1 0 d1 1\n".as_bytes()).unwrap();
        let set = build_serps(&r, &q, 2).unwrap();
        assert_eq!(set.get("s", "1").unwrap().bitstring(), "10");
        assert_eq!(
            set.coverage[&("s".to_string(), "1".to_string())],
            TopicCoverage {
                judged: 1,
                unjudged: 1,
                first_unjudged: Some(2)
            }
        );
    }

    #[test]
    fn missing_topics_only_on_request() {
        let r = run("1 Q0 d1 1 3 s\n");
        let q = parse_qrels("1 0 d1 1\n2 0 x 1\n".as_bytes()).unwrap();
        assert!(build_serps(&r, &q, 2).unwrap().get("s", "2").is_none());
        let set = build_serps_with(&r, &q, 2, true).unwrap();
        assert_eq!(set.get("s", "2").unwrap().bitstring(), "00");
        let mut out = Vec::new();
        set.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "system,topic,bitstring\ns,1,10\ns,2,00\n"
        );
    }
}
