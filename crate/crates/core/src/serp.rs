//! Binary-relevance SERPs and the innate pairwise ordering between them.
//!
//! A SERP is compared against another by walking both vectors top-down and
//! tracking the running difference of their one-counts. If the difference is
//! never negative (and positive at least once) the first SERP is
//! non-inferior; if it takes both signs somewhere the pair is non-separable.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// A fixed-length vector of binary relevance values, `r_1` first.
///
/// Position `i` (zero based) is stored in bit `i % 64` of word `i / 64`.
/// Bits beyond `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Serp {
    words: Vec<u64>,
    len: usize,
}

impl Serp {
    /// An all-zero SERP of the given length.
    pub fn zeros(len: usize) -> Self {
        Serp {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    /// Builds a SERP from relevance values, which must each be 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut serp = Serp::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => serp.set(i, true),
                other => {
                    return Err(Error::invalid(format!(
                        "relevance at rank {} is {other}; only 0 and 1 are allowed",
                        i + 1
                    )))
                }
            }
        }
        Ok(serp)
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut serp = Serp::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                serp.set(i, true);
            }
        }
        serp
    }

    /// Builds a SERP from raw little-endian words (bit `i` of the sequence is
    /// position `i`). Bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(WORD_BITS), 0);
        let tail = len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        Serp { words, len }
    }

    /// Decodes a lexicographic code: `r_1` is the most significant of the
    /// `len` low bits. Codes `0..2^len` enumerate SERPs in lexicographic order.
    pub fn from_code(code: u64, len: usize) -> Self {
        assert!(len <= WORD_BITS, "codes only cover SERPs up to 64 positions");
        let mut serp = Serp::zeros(len);
        for i in 0..len {
            if (code >> (len - 1 - i)) & 1 == 1 {
                serp.set(i, true);
            }
        }
        serp
    }

    /// Inverse of [`Serp::from_code`].
    pub fn code(&self) -> u64 {
        assert!(self.len <= WORD_BITS, "codes only cover SERPs up to 64 positions");
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Relevance at zero-based position `i`.
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "position {i} out of range for SERP of length {}",
            self.len
        );
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number of relevant positions.
    pub fn ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of relevant positions among the first `depth`.
    pub fn prefix_ones(&self, depth: usize) -> usize {
        let depth = depth.min(self.len);
        let full = depth / WORD_BITS;
        let mut n: usize = self.words[..full].iter().map(|w| w.count_ones() as usize).sum();
        let tail = depth % WORD_BITS;
        if tail != 0 {
            n += (self.words[full] & ((1u64 << tail) - 1)).count_ones() as usize;
        }
        n
    }

    /// Truncates or zero-pads to exactly `len` positions.
    pub fn resized(&self, len: usize) -> Serp {
        Serp::from_words(self.words.clone(), len)
    }

    /// Renders as a string of `0`/`1` characters, `r_1` first.
    pub fn bitstring(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Serp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitstring())
    }
}

impl fmt::Debug for Serp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Serp[{}]", self.bitstring())
    }
}

/// Accepts either a bare bitstring (`"0110"`) or a bracketed list (`"[0,1,1,0]"`).
impl FromStr for Serp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = s.strip_prefix('[').and_then(|rest| rest.strip_suffix(']')).unwrap_or(s);
        let bits = body
            .chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(Error::invalid(format!("bad SERP character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Serp::from_bits(&bits)
    }
}

/// Lexicographic vector order, `r_1` most significant; shorter prefixes first.
impl Ord for Serp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter()).then_with(|| self.len.cmp(&other.len))
    }
}

impl PartialOrd for Serp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Serp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.bitstring())
    }
}

/// The innate relationship of a first SERP to a second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relationship {
    Equal,
    /// The first SERP is non-inferior to the second.
    NonInferior,
    /// The first SERP is non-superior to the second.
    NonSuperior,
    NonSeparable,
}

impl Relationship {
    pub const ALL: [Relationship; 4] = [
        Relationship::Equal,
        Relationship::NonInferior,
        Relationship::NonSuperior,
        Relationship::NonSeparable,
    ];

    /// Two-character code used in exported tables.
    pub fn code(self) -> &'static str {
        match self {
            Relationship::Equal => "==",
            Relationship::NonInferior => "ni",
            Relationship::NonSuperior => "ns",
            Relationship::NonSeparable => "**",
        }
    }

    /// The relationship seen from the other SERP's side.
    pub fn reversed(self) -> Relationship {
        match self {
            Relationship::NonInferior => Relationship::NonSuperior,
            Relationship::NonSuperior => Relationship::NonInferior,
            other => other,
        }
    }

    pub fn is_separable(self) -> bool {
        matches!(self, Relationship::NonInferior | Relationship::NonSuperior)
    }

    fn from_flags(been_pos: bool, been_neg: bool) -> Relationship {
        match (been_pos, been_neg) {
            (true, true) => Relationship::NonSeparable,
            (true, false) => Relationship::NonInferior,
            (false, true) => Relationship::NonSuperior,
            (false, false) => Relationship::Equal,
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Relationship::ALL
            .into_iter()
            .find(|r| r.code() == s)
            .ok_or_else(|| Error::invalid(format!("unknown relationship code {s:?}")))
    }
}

impl Serialize for Relationship {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

fn check_depth(s1: &Serp, s2: &Serp, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("comparison depth must be at least 1"));
    }
    if k > s1.len() || k > s2.len() {
        return Err(Error::invalid(format!(
            "depth {k} exceeds SERP lengths {} and {}",
            s1.len(),
            s2.len()
        )));
    }
    Ok(())
}

/// Running-difference walk over the first `k` positions of two word slices.
///
/// Only positions where the SERPs differ move the running sum, so the walk
/// visits set bits of `a ^ b` and stops as soon as both signs have been seen.
#[inline]
pub(crate) fn walk_words(a: &[u64], b: &[u64], k: usize) -> Relationship {
    let mut cumul: i64 = 0;
    let mut been_pos = false;
    let mut been_neg = false;
    let nwords = k.div_ceil(WORD_BITS);
    for w in 0..nwords {
        let remaining = k - w * WORD_BITS;
        let mask = if remaining >= WORD_BITS {
            u64::MAX
        } else {
            (1u64 << remaining) - 1
        };
        let x = a[w] & mask;
        let mut diff = (x ^ b[w]) & mask;
        while diff != 0 {
            let t = diff.trailing_zeros();
            if (x >> t) & 1 == 1 {
                cumul += 1;
            } else {
                cumul -= 1;
            }
            been_pos |= cumul > 0;
            been_neg |= cumul < 0;
            if been_pos && been_neg {
                return Relationship::NonSeparable;
            }
            diff &= diff - 1;
        }
    }
    Relationship::from_flags(been_pos, been_neg)
}

/// Innate relationship of the `k`-prefixes of `s1` and `s2`.
///
/// SERPs longer than `k` are truncated. `k` must be at least 1 and no larger
/// than either SERP; use [`Serp::resized`] to zero-pad short SERPs first.
pub fn compare(s1: &Serp, s2: &Serp, k: usize) -> Result<Relationship> {
    check_depth(s1, s2, k)?;
    Ok(walk_words(&s1.words, &s2.words, k))
}

/// Independent re-derivation of [`compare`] from explicit prefix one-counts.
///
/// Kept as a cross-check: it shares no code with the word-level walk.
pub fn prefix_dominance_oracle(s1: &Serp, s2: &Serp, k: usize) -> Result<Relationship> {
    check_depth(s1, s2, k)?;
    let counts = |s: &Serp| -> Vec<usize> {
        (0..k)
            .scan(0usize, |c, i| {
                *c += s.get(i) as usize;
                Some(*c)
            })
            .collect()
    };
    let c1 = counts(s1);
    let c2 = counts(s2);
    if (0..k).all(|i| s1.get(i) == s2.get(i)) {
        return Ok(Relationship::Equal);
    }
    let ge = c1.iter().zip(&c2).all(|(a, b)| a >= b);
    let le = c1.iter().zip(&c2).all(|(a, b)| a <= b);
    let strict_gt = c1.iter().zip(&c2).any(|(a, b)| a > b);
    let strict_lt = c1.iter().zip(&c2).any(|(a, b)| a < b);
    Ok(if ge && strict_gt {
        Relationship::NonInferior
    } else if le && strict_lt {
        Relationship::NonSuperior
    } else {
        Relationship::NonSeparable
    })
}

/// Per-depth relationships: entry `i` is the relationship at depth `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trajectory(pub Vec<Relationship>);

impl Trajectory {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Relationship> {
        self.0.last().copied()
    }

    /// Directional state held just before the first non-separable depth.
    pub fn midpoint(&self) -> Option<Relationship> {
        let first = self.0.iter().position(|&r| r == Relationship::NonSeparable)?;
        first.checked_sub(1).map(|i| self.0[i])
    }

    /// Five-way reporting group of the final depth.
    pub fn group(&self) -> Option<TopicGroup> {
        Some(match self.last()? {
            Relationship::Equal => TopicGroup::Equal,
            Relationship::NonInferior => TopicGroup::SeparableNi,
            Relationship::NonSuperior => TopicGroup::SeparableNs,
            Relationship::NonSeparable => match self.midpoint() {
                Some(Relationship::NonInferior) => TopicGroup::NonSepWithNiMidpoint,
                Some(Relationship::NonSuperior) => TopicGroup::NonSepWithNsMidpoint,
                // a walk cannot jump from equal straight to non-separable
                other => unreachable!("malformed trajectory midpoint {other:?}"),
            },
        })
    }

    /// `(number of ** entries, length of the leading == run)`.
    pub fn sort_key(&self) -> (usize, usize) {
        group_sort_key(self)
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.0.iter().map(|r| r.code()).collect()
    }
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.codes().join(" "))
    }
}

/// Relationship at every depth `1..=k` of two equal-length SERPs.
pub fn trajectory(s1: &Serp, s2: &Serp) -> Result<Trajectory> {
    if s1.len() != s2.len() {
        return Err(Error::invalid(format!(
            "trajectory needs equal-length SERPs, got {} and {}",
            s1.len(),
            s2.len()
        )));
    }
    if s1.is_empty() {
        return Err(Error::invalid("trajectory needs SERPs of length at least 1"));
    }
    let mut cumul: i64 = 0;
    let mut been_pos = false;
    let mut been_neg = false;
    let out = s1
        .iter()
        .zip(s2.iter())
        .map(|(a, b)| {
            cumul += a as i64 - b as i64;
            been_pos |= cumul > 0;
            been_neg |= cumul < 0;
            Relationship::from_flags(been_pos, been_neg)
        })
        .collect();
    Ok(Trajectory(out))
}

/// Reporting group for a topic, in display order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TopicGroup {
    NonSepWithNsMidpoint,
    SeparableNs,
    Equal,
    SeparableNi,
    NonSepWithNiMidpoint,
}

impl TopicGroup {
    pub const ALL: [TopicGroup; 5] = [
        TopicGroup::NonSepWithNsMidpoint,
        TopicGroup::SeparableNs,
        TopicGroup::Equal,
        TopicGroup::SeparableNi,
        TopicGroup::NonSepWithNiMidpoint,
    ];

    /// Position in the five-section topic table.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            TopicGroup::NonSepWithNsMidpoint => "**/ns",
            TopicGroup::SeparableNs => "ns",
            TopicGroup::Equal => "==",
            TopicGroup::SeparableNi => "ni",
            TopicGroup::NonSepWithNiMidpoint => "**/ni",
        }
    }
}

impl fmt::Display for TopicGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Assigns the pair's `k`-prefixes to one of the five reporting groups.
pub fn classify_group(s1: &Serp, s2: &Serp, k: usize) -> Result<TopicGroup> {
    check_depth(s1, s2, k)?;
    let traj = trajectory(&s1.resized(k), &s2.resized(k))?;
    Ok(traj.group().expect("non-empty trajectory"))
}

/// Within-group ordering key for topic tables.
pub fn group_sort_key(traj: &Trajectory) -> (usize, usize) {
    let red = traj.0.iter().filter(|&&r| r == Relationship::NonSeparable).count();
    let lead = traj.0.iter().take_while(|&&r| r == Relationship::Equal).count();
    (red, lead)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Relationship::*;

    fn s(text: &str) -> Serp {
        text.parse().unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&s("110"), &s("100"), 3).unwrap(), NonInferior);
        assert_eq!(compare(&s("100"), &s("011"), 3).unwrap(), NonSeparable);
        assert_eq!(compare(&s("110"), &s("101"), 3).unwrap(), NonInferior);
        assert_eq!(compare(&s("0110"), &s("0110"), 4).unwrap(), Equal);
    }

    #[test]
    fn compare_truncates_longer_serps() {
        // diverges only at rank 4
        assert_eq!(compare(&s("1001"), &s("1000"), 3).unwrap(), Equal);
        assert_eq!(compare(&s("1001"), &s("1000"), 4).unwrap(), NonInferior);
    }

    #[test]
    fn compare_rejects_bad_depth() {
        assert!(matches!(compare(&s("10"), &s("10"), 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            compare(&s("10"), &s("101"), 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(prefix_dominance_oracle(&s("110"), &s("100"), 3).unwrap(), NonInferior);
        assert_eq!(prefix_dominance_oracle(&s("101"), &s("011"), 3).unwrap(), NonInferior);
        assert_eq!(prefix_dominance_oracle(&s("100"), &s("011"), 3).unwrap(), NonSeparable);
    }

    #[test]
    fn trajectory_examples() {
        let t = trajectory(&s("0101100000"), &s("0100100110")).unwrap();
        assert_eq!(t.to_string(), "== == == ni ni ni ni ni ** **");
        assert_eq!(trajectory(&s("1"), &s("0")).unwrap().0, vec![NonInferior]);
        // running sum -1 then 0: only the negative side is ever reached
        assert_eq!(
            trajectory(&s("01"), &s("10")).unwrap().0,
            vec![NonSuperior, NonSuperior]
        );
        assert!(trajectory(&s("01"), &s("1")).is_err());
        assert!(trajectory(&Serp::zeros(0), &Serp::zeros(0)).is_err());
    }

    #[test]
    fn group_examples() {
        assert_eq!(
            classify_group(&s("100"), &s("011"), 3).unwrap(),
            TopicGroup::NonSepWithNiMidpoint
        );
        assert_eq!(
            classify_group(&s("011"), &s("100"), 3).unwrap(),
            TopicGroup::NonSepWithNsMidpoint
        );
        assert_eq!(
            classify_group(&s("110"), &s("100"), 3).unwrap(),
            TopicGroup::SeparableNi
        );
        assert_eq!(classify_group(&s("010"), &s("010"), 2).unwrap(), TopicGroup::Equal);
    }

    #[test]
    fn sort_key_examples() {
        assert_eq!(
            group_sort_key(&Trajectory(vec![Equal, Equal, NonInferior, NonSeparable])),
            (1, 2)
        );
        assert_eq!(group_sort_key(&Trajectory(vec![NonInferior; 3])), (0, 0));
        assert_eq!(
            group_sort_key(&Trajectory(vec![Equal, NonSeparable, NonSeparable])),
            (2, 1)
        );
    }

    #[test]
    fn parsing_and_codes() {
        assert_eq!(s("[1, 0, 1]"), s("101"));
        assert!("102".parse::<Serp>().is_err());
        assert!(Serp::from_bits(&[0, 2]).is_err());
        assert_eq!(Serp::from_code(0b100, 3), s("100"));
        assert_eq!(s("011").code(), 0b011);
        assert_eq!("**".parse::<Relationship>().unwrap(), NonSeparable);
        assert_eq!(s("1010").resized(6).bitstring(), "101000");
        assert_eq!(s("1011").resized(2).bitstring(), "10");
    }

    #[test]
    fn long_serps_cross_word_boundaries() {
        let mut a = vec![0u8; 130];
        let mut b = vec![0u8; 130];
        a[70] = 1;
        b[100] = 1;
        let (a, b) = (Serp::from_bits(&a).unwrap(), Serp::from_bits(&b).unwrap());
        assert_eq!(compare(&a, &b, 130).unwrap(), NonInferior);
        assert_eq!(compare(&a, &b, 64).unwrap(), Equal);
        assert_eq!(a.prefix_ones(71), 1);
        assert_eq!(a.prefix_ones(70), 0);
    }

    fn serp_pair(max_len: usize) -> impl Strategy<Value = (Serp, Serp)> {
        (1..=max_len).prop_flat_map(|k| {
            (
                proptest::collection::vec(any::<bool>(), k),
                proptest::collection::vec(any::<bool>(), k),
            )
                .prop_map(|(a, b)| (Serp::from_bools(a), Serp::from_bools(b)))
        })
    }

    proptest! {
        #[test]
        fn antisymmetry((a, b) in serp_pair(150)) {
            let k = a.len();
            prop_assert_eq!(compare(&a, &b, k).unwrap(), compare(&b, &a, k).unwrap().reversed());
        }

        #[test]
        fn matches_oracle((a, b) in serp_pair(150)) {
            let k = a.len();
            prop_assert_eq!(compare(&a, &b, k).unwrap(), prefix_dominance_oracle(&a, &b, k).unwrap());
        }

        #[test]
        fn trajectory_agrees_with_compare((a, b) in serp_pair(80)) {
            let t = trajectory(&a, &b).unwrap();
            for (i, r) in t.0.iter().enumerate() {
                prop_assert_eq!(*r, compare(&a, &b, i + 1).unwrap());
            }
        }
    }
}
