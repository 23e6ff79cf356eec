use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::Result;

use super::parse_error;

/// Raw relevance grades keyed by topic, then document.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, HashMap<String, i32>>,
}

/// Binary relevance of a judged grade.
pub fn binarize(grade: i32) -> bool {
    grade >= 1
}

impl Qrels {
    pub fn grade(&self, topic: &str, doc: &str) -> Option<i32> {
        self.judgments.get(topic)?.get(doc).copied()
    }

    /// Binary relevance, with unjudged documents non-relevant.
    pub fn is_relevant(&self, topic: &str, doc: &str) -> bool {
        self.grade(topic, doc).is_some_and(binarize)
    }

    pub fn is_judged(&self, topic: &str, doc: &str) -> bool {
        self.grade(topic, doc).is_some()
    }

    /// Number of documents judged relevant for `topic`.
    pub fn relevant_count(&self, topic: &str) -> usize {
        self.judgments
            .get(topic)
            .map_or(0, |docs| docs.values().filter(|&&g| binarize(g)).count())
    }

    pub fn judged_count(&self, topic: &str) -> usize {
        self.judgments.get(topic).map_or(0, HashMap::len)
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn contains_topic(&self, topic: &str) -> bool {
        self.judgments.contains_key(topic)
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    parse_qrels_named(reader, "<qrels>")
}

fn parse_qrels_named<R: BufRead>(reader: R, src: &str) -> Result<Qrels> {
    let mut judgments: BTreeMap<String, HashMap<String, i32>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_error(src, lineno, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(parse_error(
                src,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade: i32 = fields[3]
            .parse()
            .map_err(|_| parse_error(src, lineno, format!("grade {:?} is not an integer", fields[3])))?;
        let docs = judgments.entry(fields[0].to_string()).or_default();
        if docs.insert(fields[2].to_string(), grade).is_some() {
            return Err(parse_error(
                src,
                lineno,
                format!("duplicate judgment for topic {} document {}", fields[0], fields[2]),
            ));
        }
    }
    Ok(Qrels { judgments })
}

pub fn read_qrels_file(path: &Path) -> Result<Qrels> {
    let file = File::open(path)?;
    parse_qrels_named(BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn grades_stored_raw() {
        let q = parse_qrels("301 0 FBIS3-1 1\n301 0 FBIS3-2 0\n\n302 0 X -2\n301 0 FBIS3-3 2\n".as_bytes()).unwrap();
        assert_eq!(q.grade("301", "FBIS3-1"), Some(1));
        assert_eq!(q.grade("301", "FBIS3-2"), Some(0));
        assert_eq!(q.grade("302", "X"), Some(-2));
        assert!(!q.is_relevant("302", "X"));
        assert!(q.is_relevant("301", "FBIS3-3"));
        assert_eq!(q.relevant_count("301"), 2);
        assert_eq!(q.judged_count("301"), 3);
        assert_eq!(q.grade("301", "nope"), None);
        assert_eq!(q.len(), 4);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_qrels("301 0 a 1\n301 0 a 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_qrels("301 0 a\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_qrels("301 0 a x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn binarization_threshold() {
        for g in -3..=4 {
            assert_eq!(binarize(g), g >= 1);
        }
    }
}
