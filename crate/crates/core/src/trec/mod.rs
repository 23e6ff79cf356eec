//! TREC run and qrels ingestion.
//!
//! Runs use the six-column format `qid Q0 docid rank score tag`; qrels use
//! `qid iter docid grade`. Judgments of 1 or more count as relevant and
//! unjudged documents are treated as non-relevant.

mod coverage;
mod qrels;
mod run;
pub(crate) mod serps;

pub use coverage::{judgment_coverage, CoverageReport, RunTopicCoverage};
pub use qrels::{binarize, parse_qrels, read_qrels_file, Qrels};
pub use run::{
    parse_run, parse_run_with, read_run_file, read_runs_dir, RunEntry, RunFile, RunParseOptions, DEFAULT_RUN_DEPTH,
};
pub use serps::{build_serps, build_serps_with, SerpSet, TopicCoverage};

use crate::error::Error;

pub(crate) fn parse_error(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}
