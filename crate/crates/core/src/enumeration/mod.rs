//! Counting, tabulating and visualizing-by-data the relationships among all
//! SERPs of a given length.

mod counts;
mod grid;
mod hasse;
mod kendall;

pub use counts::{
    dp_counts, dp_fractions, enumerate_pairs, enumerate_pairs_with_limit, sample_pairs, sample_pairs_with_workers,
    write_counts_csv, CategoryCounts, CountMode, DEFAULT_EXHAUSTIVE_LIMIT, MAX_DP_K,
};
pub use grid::{axis_order, build_grid, RelationshipGrid, MAX_GRID_K};
pub use hasse::{hasse_cover, HasseEdges, MAX_HASSE_K};
pub use kendall::{axis_kendall_tau, kendall_tau, tau_b};

use crate::metrics::TopicContext;

/// Context used when no qrels are involved: every position could be relevant.
pub fn enumeration_context(k: usize) -> TopicContext {
    TopicContext::new(k)
}
