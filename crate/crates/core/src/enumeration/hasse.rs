use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::serp::{walk_words, Relationship, Serp};

pub const MAX_HASSE_K: usize = 8;

/// Covering relations of non-inferiority: `(better, worse)` pairs with no
/// intermediate SERP between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HasseEdges {
    pub k: usize,
    pub edges: Vec<(Serp, Serp)>,
}

impl HasseEdges {
    pub fn contains(&self, from: &Serp, to: &Serp) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    /// Whether a directed path leads from `from` to `to`.
    pub fn has_path(&self, from: &Serp, to: &Serp) -> bool {
        let mut seen = vec![false; 1 << self.k];
        let mut queue = VecDeque::from([from.code()]);
        while let Some(cur) = queue.pop_front() {
            for (a, b) in &self.edges {
                if a.code() == cur {
                    if b == to {
                        return true;
                    }
                    let c = b.code() as usize;
                    if !seen[c] {
                        seen[c] = true;
                        queue.push_back(b.code());
                    }
                }
            }
        }
        false
    }

    /// One `from,to` bitstring pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (a, b) in &self.edges {
            writeln!(out, "{a},{b}")?;
        }
        Ok(())
    }
}

/// Transitive reduction of the strict non-inferiority relation on all SERPs of length `k`.
pub fn hasse_cover(k: usize) -> Result<HasseEdges> {
    if k == 0 || k > MAX_HASSE_K {
        return Err(Error::invalid(format!(
            "Hasse depth must be in 1..={MAX_HASSE_K}, got {k}"
        )));
    }
    let n = 1usize << k;
    let words = n.div_ceil(64);
    let serps: Vec<Serp> = (0..n as u64).map(|c| Serp::from_code(c, k)).collect();
    // below[i]: SERPs strictly dominated by i; above[j]: SERPs strictly dominating j
    let mut below = vec![vec![0u64; words]; n];
    let mut above = vec![vec![0u64; words]; n];
    for i in 0..n {
        for j in 0..n {
            if walk_words(serps[i].words(), serps[j].words(), k) == Relationship::NonInferior {
                below[i][j / 64] |= 1 << (j % 64);
                above[j][i / 64] |= 1 << (i % 64);
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if (below[i][j / 64] >> (j % 64)) & 1 == 0 {
                continue;
            }
            let intermediate = below[i].iter().zip(&above[j]).any(|(x, y)| x & y != 0);
            if !intermediate {
                edges.push((serps[i].clone(), serps[j].clone()));
            }
        }
    }
    Ok(HasseEdges { k, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: &str) -> Serp {
        t.parse().unwrap()
    }

    #[test]
    fn k1_single_edge() {
        let h = hasse_cover(1).unwrap();
        assert_eq!(h.edges, vec![(s("1"), s("0"))]);
    }

    #[test]
    fn k3_structure() {
        let h = hasse_cover(3).unwrap();
        assert!(h.contains(&s("110"), &s("101")));
        assert!(!h.has_path(&s("100"), &s("011")));
        assert!(!h.has_path(&s("011"), &s("100")));
        assert!(h.has_path(&s("111"), &s("000")));
        // 110 -> 100 is implied through 101
        assert!(!h.contains(&s("110"), &s("100")));
        let mut out = Vec::new();
        h.write_edge_list(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().lines().all(|l| l.len() == 7));
    }

    #[test]
    fn edges_are_sorted_and_irredundant() {
        let h = hasse_cover(5).unwrap();
        let keys: Vec<_> = h.edges.iter().map(|(a, b)| (a.code(), b.code())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for (idx, (a, b)) in h.edges.iter().enumerate() {
            let rest = HasseEdges {
                k: 5,
                edges: h
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(_, e)| e.clone())
                    .collect(),
            };
            assert!(!rest.has_path(a, b), "{a}->{b} is implied");
        }
    }

    #[test]
    fn bounds() {
        assert!(hasse_cover(0).is_err());
        assert!(hasse_cover(9).is_err());
    }
}
