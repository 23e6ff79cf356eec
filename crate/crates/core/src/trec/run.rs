use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::parse_error;

/// Runs are cut to this many documents per topic unless configured otherwise.
pub const DEFAULT_RUN_DEPTH: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: i64,
    pub score: f64,
}

/// One system's ranked lists, keyed by topic id.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFile {
    pub system_tag: String,
    pub topics: BTreeMap<String, Vec<RunEntry>>,
}

#[derive(Clone, Debug)]
pub struct RunParseOptions {
    /// Per-topic truncation depth; `None` keeps everything.
    pub depth: Option<usize>,
    /// Order by the rank column instead of by descending score.
    pub honor_rank: bool,
    /// Name used in error messages.
    pub source_name: String,
}

impl Default for RunParseOptions {
    fn default() -> Self {
        RunParseOptions {
            depth: Some(DEFAULT_RUN_DEPTH),
            honor_rank: false,
            source_name: "<run>".into(),
        }
    }
}

impl RunFile {
    pub fn ranked(&self, topic: &str) -> &[RunEntry] {
        self.topics.get(topic).map_or(&[], Vec::as_slice)
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    /// Writes the run back in TREC format, preserving stored ranks and scores.
    pub fn write_trec<W: Write>(&self, mut out: W) -> Result<()> {
        for (topic, entries) in &self.topics {
            for e in entries {
                writeln!(
                    out,
                    "{topic} Q0 {} {} {} {}",
                    e.doc_id, e.rank, e.score, self.system_tag
                )?;
            }
        }
        Ok(())
    }
}

pub fn parse_run<R: BufRead>(reader: R) -> Result<RunFile> {
    parse_run_with(reader, &RunParseOptions::default())
}

/// Parses a run. Lists are ordered by score descending with ties broken by
/// doc id descending (byte order), unless `honor_rank` is set.
pub fn parse_run_with<R: BufRead>(reader: R, opts: &RunParseOptions) -> Result<RunFile> {
    let src = opts.source_name.as_str();
    let mut tag: Option<String> = None;
    let mut topics: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_error(src, lineno, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(parse_error(
                src,
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank: i64 = fields[3]
            .parse()
            .map_err(|_| parse_error(src, lineno, format!("rank {:?} is not an integer", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| parse_error(src, lineno, format!("score {:?} is not a finite number", fields[4])))?;
        let (topic, doc) = (fields[0].to_string(), fields[2].to_string());
        if !seen.insert((topic.clone(), doc.clone())) {
            return Err(parse_error(
                src,
                lineno,
                format!("duplicate document {doc} for topic {topic}"),
            ));
        }
        tag.get_or_insert_with(|| fields[5].to_string());
        topics.entry(topic).or_default().push(RunEntry {
            doc_id: doc,
            rank,
            score,
        });
    }
    let system_tag = tag.ok_or_else(|| parse_error(src, 0, "run contains no entries"))?;
    for entries in topics.values_mut() {
        if opts.honor_rank {
            entries.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| b.doc_id.cmp(&a.doc_id)));
        } else {
            entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| b.doc_id.cmp(&a.doc_id)));
        }
        if let Some(depth) = opts.depth {
            entries.truncate(depth);
        }
    }
    Ok(RunFile { system_tag, topics })
}

pub fn read_run_file(path: &Path, opts: &RunParseOptions) -> Result<RunFile> {
    let file = File::open(path)?;
    let opts = RunParseOptions {
        source_name: path.display().to_string(),
        ..opts.clone()
    };
    parse_run_with(BufReader::new(file), &opts)
}

/// Reads every regular file in `dir` (sorted by file name) as a run.
pub fn read_runs_dir(dir: &Path, opts: &RunParseOptions) -> Result<Vec<RunFile>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let runs = paths
        .iter()
        .map(|p| read_run_file(p, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut tags = HashSet::new();
    for r in &runs {
        if !tags.insert(r.system_tag.as_str()) {
            return Err(Error::invalid(format!(
                "system tag {} appears in more than one run",
                r.system_tag
            )));
        }
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<RunFile> {
        parse_run(text.as_bytes())
    }

    #[test]
    fn single_line() {
        let r = parse("301 Q0 FBIS3-1 1 12.5 sysA\n").unwrap();
        assert_eq!(r.system_tag, "sysA");
        assert_eq!(
            r.ranked("301"),
            &[RunEntry {
                doc_id: "FBIS3-1".into(),
                rank: 1,
                score: 12.5
            }]
        );
    }

    #[test]
    fn score_order_with_doc_id_tie_break() {
        let text = "\
301 Q0 d1 1 5.0 s
301 Q0 d3 2 7.0 s

301 Q0 d2 3 5.0 s
301 Q0 d5 4 5.0 s
301 Q0 d4 5 1.0 s
";
        let r = parse(text).unwrap();
        let docs: Vec<&str> = r.ranked("301").iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(docs, ["d3", "d5", "d2", "d1", "d4"]);

        let opts = RunParseOptions {
            honor_rank: true,
            ..Default::default()
        };
        let r = parse_run_with(text.as_bytes(), &opts).unwrap();
        let docs: Vec<&str> = r.ranked("301").iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(docs, ["d1", "d3", "d2", "d5", "d4"]);
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let err = parse("301 Q0 d1 1 5.0 s\n301 Q0 d2 2 4.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("301 Q0 d1 1 high s\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("301 Q0 d1 1 2 s\n301 Q0 d1 2 1 s\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse("\n\n").is_err());
    }

    #[test]
    fn truncation() {
        let text: String = (0..150).map(|i| format!("7 Q0 d{i} {i} {} x\n", 1000 - i)).collect();
        assert_eq!(parse(&text).unwrap().ranked("7").len(), 100);
        let opts = RunParseOptions {
            depth: Some(10),
            ..Default::default()
        };
        assert_eq!(parse_run_with(text.as_bytes(), &opts).unwrap().ranked("7").len(), 10);
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(
            rows in proptest::collection::vec((0u8..4, 0u16..40, -1000i32..1000), 1..60)
        ) {
            let mut seen = HashSet::new();
            let text: String = rows
                .iter()
                .filter(|(t, d, _)| seen.insert((*t, *d)))
                .enumerate()
                .map(|(i, (t, d, s))| format!("{t} Q0 doc-{d} {i} {} sys\n", *s as f64 / 8.0))
                .collect();
            let parsed = parse(&text).unwrap();
            let mut out = Vec::new();
            parsed.write_trec(&mut out).unwrap();
            prop_assert_eq!(parse_run(out.as_slice()).unwrap(), parsed);
        }
    }
}
