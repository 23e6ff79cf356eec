//! Innate pairwise SERP orderings.
//!
//! Two binary-relevance result pages of depth `k` are compared by the
//! running difference of their relevant-document counts. When one page never
//! falls behind the other, every effectiveness metric that respects
//! elementwise and positional dominance must score it at least as highly.
//! This crate implements that relation together with the machinery built on
//! top of it:
//!
//! * [`serp`]: the SERP type, the comparison relation and per-depth trajectories.
//! * [`metrics`]: Prec, RR, Succ, RBP, AP and NDCG at depth `k`, plus compliance certification.
//! * [`enumeration`]: exhaustive, dynamic-programming and Monte Carlo category counts,
//!   relationship grids, Hasse covers and Kendall correlations.
//! * [`trec`]: TREC run and qrels parsing and SERP materialization.
//! * [`stats`]: sign, Wilcoxon signed-rank and paired t tests.
//! * [`experiment`]: system-vs-system comparisons, topic tables and all-pairs sweeps.

pub mod enumeration;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod serp;
pub mod stats;
pub mod trec;

pub use enumeration::{CategoryCounts, CountMode, HasseEdges, RelationshipGrid};
pub use error::{Error, Result};
pub use experiment::{AgreementCategory, ComparisonReport, SigTest, TopicRow};
pub use metrics::{Metric, MetricSpec, Persistence, TopicContext};
pub use serp::{Relationship, Serp, TopicGroup, Trajectory};
pub use stats::TestResult;
pub use trec::{Qrels, RunFile, SerpSet};
