use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::serp::{walk_words, Relationship};

/// Largest `k` accepted by [`enumerate_pairs`] unless a larger limit is requested.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 15;

/// The packed-lane pair classifier holds one prefix count per byte of a `u128`.
const MAX_PACKED_K: usize = 16;

/// Largest `k` for which [`dp_counts`] fits `4^k` into a `u64`.
pub const MAX_DP_K: usize = 31;

/// Samples drawn from one random stream; the stream index is the chunk index.
const SAMPLE_CHUNK: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Exact,
    Sampled,
}

impl CountMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountMode::Exact => "exact",
            CountMode::Sampled => "sampled",
        }
    }
}

/// Tallies of ordered SERP-pair relationships.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryCounts {
    pub k: usize,
    pub equal: u64,
    pub non_inferior: u64,
    pub non_superior: u64,
    pub non_separable: u64,
    pub total: u64,
    pub mode: CountMode,
    pub sample_seed: Option<u64>,
}

#[derive(Serialize)]
struct CountsRow<'a> {
    k: usize,
    equal: u64,
    separable: u64,
    non_separable: u64,
    total: u64,
    mode: &'a str,
    seed: Option<u64>,
}

impl CategoryCounts {
    pub fn empty(k: usize, mode: CountMode) -> Self {
        CategoryCounts {
            k,
            equal: 0,
            non_inferior: 0,
            non_superior: 0,
            non_separable: 0,
            total: 0,
            mode,
            sample_seed: None,
        }
    }

    pub fn separable(&self) -> u64 {
        self.non_inferior + self.non_superior
    }

    pub fn add(&mut self, rel: Relationship) {
        self.add_n(rel, 1);
    }

    pub fn add_n(&mut self, rel: Relationship, n: u64) {
        match rel {
            Relationship::Equal => self.equal += n,
            Relationship::NonInferior => self.non_inferior += n,
            Relationship::NonSuperior => self.non_superior += n,
            Relationship::NonSeparable => self.non_separable += n,
        }
        self.total += n;
    }

    /// Sums the counts of `other` into `self`.
    pub fn merge(&mut self, other: &CategoryCounts) {
        self.equal += other.equal;
        self.non_inferior += other.non_inferior;
        self.non_superior += other.non_superior;
        self.non_separable += other.non_separable;
        self.total += other.total;
    }

    /// `(equal, separable, non-separable)` as fractions of the total.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let t = self.total as f64;
        (
            self.equal as f64 / t,
            self.separable() as f64 / t,
            self.non_separable as f64 / t,
        )
    }

    /// Percentages rounded to two decimals, as printed in summary tables.
    pub fn percent_strings(&self) -> [String; 3] {
        let (e, s, n) = self.fractions();
        [e, s, n].map(|f| format!("{:.2}", 100.0 * f))
    }

    pub fn is_consistent(&self) -> bool {
        self.equal + self.separable() + self.non_separable == self.total
    }

    fn row(&self) -> CountsRow<'_> {
        CountsRow {
            k: self.k,
            equal: self.equal,
            separable: self.separable(),
            non_separable: self.non_separable,
            total: self.total,
            mode: self.mode.as_str(),
            seed: self.sample_seed,
        }
    }
}

impl Serialize for CategoryCounts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.row().serialize(serializer)
    }
}

/// Writes `k,equal,separable,non_separable,total,mode,seed`, one row per entry.
pub fn write_counts_csv<W: Write>(out: W, rows: &[CategoryCounts]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r.row())?;
    }
    w.flush()?;
    Ok(())
}

const LANE_ONES: u128 = u128::from_le_bytes([1; 16]);
const LANE_HIGH: u128 = LANE_ONES * 0x80;

/// Prefix one-counts of a lexicographic code, one per byte lane.
///
/// `offset` lanes hold `count + 16` (unused lanes 16), plain lanes hold `count`
/// (unused lanes 0), so `offset(a) - plain(b)` never borrows across lanes and
/// every lane equals `16 + diff` at that depth.
fn packed_prefix_counts(code: u64, k: usize) -> (u128, u128) {
    let mut offset = 16 * LANE_ONES;
    let mut plain = 0u128;
    let mut count = 0u128;
    for depth in 0..k {
        count += ((code >> (k - 1 - depth)) & 1) as u128;
        offset += count << (8 * depth);
        plain += count << (8 * depth);
    }
    (offset, plain)
}

#[inline(always)]
fn packed_flags(offset_a: u128, plain_b: u128) -> (bool, bool) {
    let d = offset_a - plain_b;
    // lane > 16  <=>  lane + 111 has its high bit set
    let pos = (d + 111 * LANE_ONES) & LANE_HIGH != 0;
    // lane < 16  <=>  lane + 112 has its high bit clear
    let neg = (d + 112 * LANE_ONES) & LANE_HIGH != LANE_HIGH;
    (pos, neg)
}

/// Exact counts over all `4^k` ordered pairs, for `1 <= k <= 15`.
pub fn enumerate_pairs(k: usize) -> Result<CategoryCounts> {
    enumerate_pairs_with_limit(k, DEFAULT_EXHAUSTIVE_LIMIT)
}

/// Exact counts with a caller-chosen exhaustive limit (at most 16).
///
/// Only pairs above the diagonal are classified; the lower triangle is the
/// mirror image with non-inferior and non-superior exchanged.
pub fn enumerate_pairs_with_limit(k: usize, limit: usize) -> Result<CategoryCounts> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let limit = limit.min(MAX_PACKED_K);
    if k > limit {
        return Err(Error::ExhaustiveLimit { k, limit });
    }
    let n = 1u64 << k;
    let (offsets, plains): (Vec<u128>, Vec<u128>) = (0..n).map(|c| packed_prefix_counts(c, k)).unzip();

    let (ni, ns, nsep) = (0..n as usize)
        .into_par_iter()
        .map(|i| {
            let a = offsets[i];
            let (mut ni, mut ns, mut nsep) = (0u64, 0u64, 0u64);
            for &b in &plains[i + 1..] {
                let (pos, neg) = packed_flags(a, b);
                ni += (pos & !neg) as u64;
                ns += (neg & !pos) as u64;
                nsep += (pos & neg) as u64;
            }
            (ni, ns, nsep)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));

    Ok(CategoryCounts {
        k,
        equal: n,
        non_inferior: ni + ns,
        non_superior: ni + ns,
        non_separable: 2 * nsep,
        total: n * n,
        mode: CountMode::Exact,
        sample_seed: None,
    })
}

/// Walk states: (running difference + k, been_neg, been_pos).
fn dp_walk<T, F>(k: usize, start: T, step: F) -> Vec<[[T; 2]; 2]>
where
    T: Copy + Default + std::ops::Add<Output = T>,
    F: Fn(T, i64) -> T,
{
    let width = 2 * k + 1;
    let mut cur = vec![[[T::default(); 2]; 2]; width];
    cur[k][0][0] = start;
    for _ in 0..k {
        let mut next = vec![[[T::default(); 2]; 2]; width];
        for (idx, flags) in cur.iter().enumerate() {
            for (neg, row) in flags.iter().enumerate() {
                for (pos, &v) in row.iter().enumerate() {
                    // +1: (1,0) one way; -1: (0,1) one way; 0: (0,0) or (1,1)
                    for (delta, mult) in [(1i64, 1i64), (-1, 1), (0, 2)] {
                        let Ok(to) = usize::try_from(idx as i64 + delta) else {
                            continue;
                        };
                        if to >= width {
                            // only unreachable (zero) states sit on the border
                            continue;
                        }
                        let c = to as i64 - k as i64;
                        let nn = neg | (c < 0) as usize;
                        let np = pos | (c > 0) as usize;
                        next[to][nn][np] = next[to][nn][np] + step(v, mult);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Exact counts by dynamic programming over the running-difference walk.
pub fn dp_counts(k: usize) -> Result<CategoryCounts> {
    if k == 0 || k > MAX_DP_K {
        return Err(Error::invalid(format!("dp_counts needs 1 <= k <= {MAX_DP_K}, got {k}")));
    }
    let states = dp_walk(k, 1u64, |v, m| v * m as u64);
    let mut counts = CategoryCounts::empty(k, CountMode::Exact);
    for flags in &states {
        counts.add_n(Relationship::Equal, flags[0][0]);
        counts.add_n(Relationship::NonInferior, flags[0][1]);
        counts.add_n(Relationship::NonSuperior, flags[1][0]);
        counts.add_n(Relationship::NonSeparable, flags[1][1]);
    }
    Ok(counts)
}

/// Exact `(equal, separable, non-separable)` probabilities for uniformly random
/// pairs at any depth, from the same walk in floating point.
pub fn dp_fractions(k: usize) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let states = dp_walk(k, 1.0f64, |v, m| v * m as f64 / 4.0);
    let (mut e, mut s, mut n) = (0.0, 0.0, 0.0);
    for flags in &states {
        e += flags[0][0];
        s += flags[0][1] + flags[1][0];
        n += flags[1][1];
    }
    Ok((e, s, n))
}

/// Monte Carlo estimate using the global thread pool.
pub fn sample_pairs(k: usize, n_samples: u64, seed: u64) -> Result<CategoryCounts> {
    sample_chunks(k, n_samples, seed)
}

/// Monte Carlo estimate on a dedicated pool of `workers` threads.
///
/// The result depends only on `(k, n_samples, seed)`: samples are grouped into
/// fixed-size chunks and chunk `c` draws from ChaCha stream `c`.
pub fn sample_pairs_with_workers(k: usize, n_samples: u64, seed: u64, workers: usize) -> Result<CategoryCounts> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| sample_chunks(k, n_samples, seed))
}

fn sample_chunks(k: usize, n_samples: u64, seed: u64) -> Result<CategoryCounts> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let nwords = k.div_ceil(64);
    let chunks = n_samples.div_ceil(SAMPLE_CHUNK);
    let mut counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let start = chunk * SAMPLE_CHUNK;
            let len = SAMPLE_CHUNK.min(n_samples - start);
            let mut local = CategoryCounts::empty(k, CountMode::Sampled);
            let mut a = vec![0u64; nwords];
            let mut b = vec![0u64; nwords];
            for _ in 0..len {
                a.iter_mut().for_each(|w| *w = rng.next_u64());
                b.iter_mut().for_each(|w| *w = rng.next_u64());
                local.add(walk_words(&a, &b, k));
            }
            local
        })
        .reduce(
            || CategoryCounts::empty(k, CountMode::Sampled),
            |mut x, y| {
                x.merge(&y);
                x
            },
        );
    counts.sample_seed = Some(seed);
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serp::{compare, Serp};

    fn brute_force(k: usize) -> CategoryCounts {
        let serps: Vec<Serp> = (0..1u64 << k).map(|c| Serp::from_code(c, k)).collect();
        let mut counts = CategoryCounts::empty(k, CountMode::Exact);
        for a in &serps {
            for b in &serps {
                counts.add(compare(a, b, k).unwrap());
            }
        }
        counts
    }

    #[test]
    fn small_k_matches_brute_force() {
        for k in 1..=7 {
            assert_eq!(enumerate_pairs(k).unwrap(), brute_force(k), "k={k}");
        }
    }

    #[test]
    fn k1_and_k3() {
        let c = enumerate_pairs(1).unwrap();
        assert_eq!((c.equal, c.separable(), c.non_separable, c.total), (2, 2, 0, 4));
        let c = enumerate_pairs(3).unwrap();
        assert_eq!((c.equal, c.separable(), c.non_separable, c.total), (8, 54, 2, 64));
    }

    #[test]
    fn dp_small_cases() {
        let c = dp_counts(1).unwrap();
        assert_eq!((c.equal, c.separable(), c.non_separable), (2, 2, 0));
        assert_eq!(dp_counts(10).unwrap().equal, 1024);
        assert_eq!(dp_counts(10).unwrap().percent_strings()[2], "32.82");
        assert!(dp_counts(0).is_err());
        assert!(dp_counts(32).is_err());
    }

    #[test]
    fn dp_fractions_agree_with_counts() {
        for k in [1, 5, 12, 20] {
            let c = dp_counts(k).unwrap();
            let (e, s, n) = dp_fractions(k).unwrap();
            let (ce, cs, cn) = c.fractions();
            assert!((e - ce).abs() < 1e-12 && (s - cs).abs() < 1e-12 && (n - cn).abs() < 1e-12);
        }
    }

    #[test]
    fn limit_is_enforced() {
        assert!(matches!(
            enumerate_pairs(16),
            Err(Error::ExhaustiveLimit { k: 16, limit: 15 })
        ));
        assert!(enumerate_pairs(0).is_err());
        assert!(enumerate_pairs_with_limit(17, 20).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_pairs(12, 50_000, 7).unwrap();
        let b = sample_pairs(12, 50_000, 7).unwrap();
        let c = sample_pairs(12, 50_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.total, 50_000);
        assert!(a.is_consistent());
        assert_eq!(a.sample_seed, Some(7));
        assert!(sample_pairs(5, 0, 1).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_counts_csv(&mut out, &[enumerate_pairs(3).unwrap()]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "k,equal,separable,non_separable,total,mode,seed\n3,8,54,2,64,exact,\n"
        );
    }
}
