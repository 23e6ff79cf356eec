use std::io::Write;

use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricSpec, SCORE_TOLERANCE};
use crate::serp::{walk_words, Relationship, Serp};

use super::enumeration_context;

pub const MAX_GRID_K: usize = 12;

/// All `2^k x 2^k` relationships, with axes ordered by metric score.
#[derive(Clone, Debug)]
pub struct RelationshipGrid {
    pub k: usize,
    pub rows: Vec<Serp>,
    pub cols: Vec<Serp>,
    /// Row-major: `cells[r * cols.len() + c]` relates `rows[r]` to `cols[c]`.
    pub cells: Vec<Relationship>,
}

impl RelationshipGrid {
    pub fn cell(&self, row: usize, col: usize) -> Relationship {
        self.cells[row * self.cols.len() + col]
    }

    /// Cell counts indexed like [`Relationship::ALL`].
    pub fn category_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for &c in &self.cells {
            out[c as usize] += 1;
        }
        out
    }

    /// Header row of column bitstrings, then one row per SERP with cell codes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once(String::new()).chain(self.cols.iter().map(Serp::bitstring));
        w.write_record(header)?;
        for (r, serp) in self.rows.iter().enumerate() {
            let codes = (0..self.cols.len()).map(|c| self.cell(r, c).code().to_string());
            w.write_record(std::iter::once(serp.bitstring()).chain(codes))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All SERPs of length `k` sorted by ascending score under `metric`, ties
/// (within the score tolerance) broken by ascending lexicographic order.
pub fn axis_order(metric: &MetricSpec, k: usize) -> Result<Vec<Serp>> {
    if metric.depth != k {
        return Err(Error::invalid(format!("metric {metric} does not match grid depth {k}")));
    }
    let ctx = enumeration_context(k);
    let mut scored = (0..1u64 << k)
        .map(|c| {
            let s = Serp::from_code(c, k);
            evaluate(metric, &s, &ctx).map(|v| (v, s))
        })
        .collect::<Result<Vec<(f64, Serp)>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // collapse near-equal scores into tie classes before the lexicographic tie-break
    let mut keyed = Vec::with_capacity(scored.len());
    let mut class = 0usize;
    let mut prev = f64::NEG_INFINITY;
    for (score, serp) in scored {
        if score - prev > SCORE_TOLERANCE {
            class += 1;
        }
        prev = score;
        keyed.push((class, serp));
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, s)| s).collect())
}

pub fn build_grid(k: usize, row_metric: &MetricSpec, col_metric: &MetricSpec) -> Result<RelationshipGrid> {
    if k == 0 || k > MAX_GRID_K {
        return Err(Error::invalid(format!(
            "grid depth must be in 1..={MAX_GRID_K}, got {k}"
        )));
    }
    let rows = axis_order(row_metric, k)?;
    let cols = axis_order(col_metric, k)?;
    let cells = rows
        .iter()
        .flat_map(|r| cols.iter().map(move |c| walk_words(r.words(), c.words(), k)))
        .collect();
    Ok(RelationshipGrid { k, rows, cols, cells })
}
