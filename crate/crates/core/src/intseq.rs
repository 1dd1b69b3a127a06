//! Eventually periodic subsets of the positive integers.
//!
//! An [`EPSet`] is a finite prefix of membership bits followed by a period
//! that repeats forever. Index `n >= 1` lives at bit position `n - 1`. An empty
//! period encodes a finite set. Values are canonicalized on construction, so
//! structural equality is set equality.
//!
//! [`gap`] and [`cogap`] are evaluated exactly from the canonical period.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntSeqError {
    #[error("index 0 is not a positive integer")]
    ZeroIndex,
    #[error("index {0} is both added and removed")]
    Overlap(u64),
    #[error("malformed set text {0:?}: expected \"prefix=<bits>;period=<bits>\"")]
    Parse(String),
}

/// A natural number or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtNat {
    Finite(u64),
    Infinite,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Finite(0);
    pub const ONE: ExtNat = ExtNat::Finite(1);

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtNat::Infinite)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Finite(v) => Some(v),
            ExtNat::Infinite => None,
        }
    }
}

impl From<u64> for ExtNat {
    fn from(v: u64) -> Self {
        ExtNat::Finite(v)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Finite(v) => write!(f, "{v}"),
            ExtNat::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtNat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "∞" => Ok(ExtNat::Infinite),
            t => t
                .parse::<u64>()
                .map(ExtNat::Finite)
                .map_err(|_| format!("not an extended natural: {s:?}")),
        }
    }
}

impl Serialize for ExtNat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtNat::Finite(v) => serializer.serialize_u64(*v),
            ExtNat::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtNat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtNatVisitor;

        impl Visitor<'_> for ExtNatVisitor {
            type Value = ExtNat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtNat, E> {
                Ok(ExtNat::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtNat, E> {
                u64::try_from(v)
                    .map(ExtNat::Finite)
                    .map_err(|_| E::custom("negative multiplicity"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtNat, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExtNatVisitor)
    }
}

/// An eventually periodic subset of `{1, 2, 3, ...}` in canonical form.
///
/// Membership of `n` is `prefix[n - 1]` for `n <= prefix.len()`, and
/// `period[(n - 1 - prefix.len()) % period.len()]` afterwards. An empty period
/// means every index past the prefix is absent.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EPSet {
    prefix: Vec<bool>,
    period: Vec<bool>,
}

impl EPSet {
    /// Builds a set from raw prefix and period bits, canonicalizing them.
    pub fn new(prefix: Vec<bool>, period: Vec<bool>) -> Self {
        let mut set = EPSet { prefix, period };
        set.canonicalize();
        set
    }

    pub fn empty() -> Self {
        EPSet::new(Vec::new(), Vec::new())
    }

    pub fn naturals() -> Self {
        EPSet::new(Vec::new(), vec![true])
    }

    /// The finite set holding exactly `elements`.
    pub fn finite<I: IntoIterator<Item = u64>>(elements: I) -> Result<Self, IntSeqError> {
        let mut prefix = Vec::new();
        for n in elements {
            let pos = bit_position(n)?;
            if prefix.len() <= pos {
                prefix.resize(pos + 1, false);
            }
            prefix[pos] = true;
        }
        Ok(EPSet::new(prefix, Vec::new()))
    }

    /// The complement of the finite set `excluded`.
    pub fn cofinite<I: IntoIterator<Item = u64>>(excluded: I) -> Result<Self, IntSeqError> {
        Ok(EPSet::finite(excluded)?.complement())
    }

    /// Parses bit strings such as `"101"` and `"01"`.
    pub fn from_bits(prefix: &str, period: &str) -> Result<Self, IntSeqError> {
        let parse = |bits: &str| -> Result<Vec<bool>, IntSeqError> {
            bits.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(IntSeqError::Parse(format!("prefix={prefix};period={period}"))),
                })
                .collect()
        };
        Ok(EPSet::new(parse(prefix)?, parse(period)?))
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn period(&self) -> &[bool] {
        &self.period
    }

    /// Length of the canonical prefix.
    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    /// Length of the canonical period; zero for finite sets.
    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn member(&self, n: u64) -> bool {
        match n.checked_sub(1) {
            Some(pos) => self.bit_at(pos as usize),
            None => false,
        }
    }

    fn bit_at(&self, pos: usize) -> bool {
        if pos < self.prefix.len() {
            self.prefix[pos]
        } else if self.period.is_empty() {
            false
        } else {
            self.period[(pos - self.prefix.len()) % self.period.len()]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.period.is_empty()
    }

    pub fn is_cofinite(&self) -> bool {
        self.period == [true]
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.period.is_empty()
    }

    pub fn complement(&self) -> EPSet {
        if self.period.is_empty() {
            let prefix = self.prefix.iter().map(|b| !b).collect();
            EPSet::new(prefix, vec![true])
        } else {
            EPSet::new(
                self.prefix.iter().map(|b| !b).collect(),
                self.period.iter().map(|b| !b).collect(),
            )
        }
    }

    /// Returns `(self ∪ add) ∖ remove`.
    pub fn finitely_change(&self, add: &[u64], remove: &[u64]) -> Result<EPSet, IntSeqError> {
        if let Some(&n) = add.iter().find(|n| remove.contains(n)) {
            return Err(IntSeqError::Overlap(n));
        }
        let touched = add
            .iter()
            .chain(remove)
            .map(|&n| bit_position(n))
            .collect::<Result<Vec<_>, _>>()?;
        let reach = touched.iter().map(|p| p + 1).max().unwrap_or(0);
        let (mut prefix, period) = self.unrolled(reach.max(self.prefix.len()));
        for &n in add {
            prefix[(n - 1) as usize] = true;
        }
        for &n in remove {
            prefix[(n - 1) as usize] = false;
        }
        Ok(EPSet::new(prefix, period))
    }

    pub fn union(&self, other: &EPSet) -> EPSet {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &EPSet) -> EPSet {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &EPSet) -> EPSet {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &EPSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Iterates over the members in increasing order; infinite for infinite sets.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let bound = if self.period.is_empty() {
            self.prefix.len() as u64
        } else {
            u64::MAX
        };
        (1..=bound).filter(move |&n| self.member(n))
    }

    /// Prefix of length `len` (at least the current one) with a period rotated to match.
    fn unrolled(&self, len: usize) -> (Vec<bool>, Vec<bool>) {
        let prefix = (0..len).map(|pos| self.bit_at(pos)).collect();
        let q = self.period.len();
        let period = (0..q).map(|k| self.bit_at(len + k)).collect();
        (prefix, period)
    }

    fn zip_with(&self, other: &EPSet, op: impl Fn(bool, bool) -> bool) -> EPSet {
        let p = self.prefix.len().max(other.prefix.len());
        let q = lcm(self.period.len().max(1), other.period.len().max(1));
        let prefix = (0..p).map(|pos| op(self.bit_at(pos), other.bit_at(pos))).collect();
        let period = (p..p + q)
            .map(|pos| op(self.bit_at(pos), other.bit_at(pos)))
            .collect();
        EPSet::new(prefix, period)
    }

    fn canonicalize(&mut self) {
        if !self.period.is_empty() {
            let root = primitive_root_len(&self.period);
            self.period.truncate(root);
            if self.period == [false] {
                self.period.clear();
            }
        }
        if self.period.is_empty() {
            while self.prefix.last() == Some(&false) {
                self.prefix.pop();
            }
            return;
        }
        while let (Some(&last), Some(&tail)) = (self.prefix.last(), self.period.last()) {
            if last != tail {
                break;
            }
            self.prefix.pop();
            self.period.rotate_right(1);
        }
    }
}

fn bit_position(n: u64) -> Result<usize, IntSeqError> {
    n.checked_sub(1)
        .map(|p| p as usize)
        .ok_or(IntSeqError::ZeroIndex)
}

/// Length of the shortest word whose repetition yields `word`, via the border table.
fn primitive_root_len(word: &[bool]) -> usize {
    let n = word.len();
    let mut border = vec![0usize; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && word[i] != word[k] {
            k = border[k - 1];
        }
        if word[i] == word[k] {
            k += 1;
        }
        border[i] = k;
    }
    let candidate = n - border[n - 1];
    if n % candidate == 0 {
        candidate
    } else {
        n
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for EPSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "prefix={};period={}",
            bits_to_string(&self.prefix),
            bits_to_string(&self.period)
        )
    }
}

impl fmt::Debug for EPSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EPSet({self})")
    }
}

impl FromStr for EPSet {
    type Err = IntSeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IntSeqError::Parse(s.to_string());
        let mut prefix = None;
        let mut period = None;
        for part in s.split(';') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let value = value.trim().trim_matches('"');
            match key.trim() {
                "prefix" if prefix.is_none() => prefix = Some(value),
                "period" if period.is_none() => period = Some(value),
                _ => return Err(bad()),
            }
        }
        let (prefix, period) = (prefix.ok_or_else(bad)?, period.ok_or_else(bad)?);
        EPSet::from_bits(prefix, period).map_err(|_| bad())
    }
}

impl Serialize for EPSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EPSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(de::Error::custom)
    }
}

impl PartialOrd for EPSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EPSet {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.prefix, &self.period).cmp(&(&other.prefix, &other.period))
    }
}

pub fn member(set: &EPSet, n: u64) -> bool {
    set.member(n)
}

pub fn complement(set: &EPSet) -> EPSet {
    set.complement()
}

pub fn finitely_change(set: &EPSet, add: &[u64], remove: &[u64]) -> Result<EPSet, IntSeqError> {
    set.finitely_change(add, remove)
}

/// `lim sup` of the number of missing integers between consecutive members.
///
/// Finite sets (including the empty set) have gap `∞`. For infinite sets the
/// lim sup is the largest gap between consecutive ones of the period read
/// cyclically, since the tail of the set is exactly that period repeated.
pub fn gap(set: &EPSet) -> ExtNat {
    let period = set.period();
    let ones: Vec<usize> = period
        .iter()
        .enumerate()
        .filter_map(|(k, &b)| b.then_some(k))
        .collect();
    let (Some(&first), Some(&last)) = (ones.first(), ones.last()) else {
        return ExtNat::Infinite;
    };
    let wrap = period.len() - last + first - 1;
    let inner = ones.windows(2).map(|w| w[1] - w[0] - 1).max().unwrap_or(0);
    ExtNat::Finite(inner.max(wrap) as u64)
}

/// Gap of the complement: the length of runs of consecutive members that keep recurring.
pub fn cogap(set: &EPSet) -> ExtNat {
    gap(&set.complement())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evens() -> EPSet {
        EPSet::from_bits("", "01").unwrap()
    }

    fn odds() -> EPSet {
        EPSet::from_bits("", "10").unwrap()
    }

    /// Gap from membership queries over a window past the prefix.
    fn scan_gap(set: &EPSet) -> ExtNat {
        let p = set.prefix_len() as u64;
        let q = set.period_len() as u64;
        let members: Vec<u64> = (p + 1..=p + 10 * (p + q).max(1))
            .filter(|&n| set.member(n))
            .collect();
        if members.len() < 2 {
            return ExtNat::Infinite;
        }
        ExtNat::Finite(members.windows(2).map(|w| w[1] - w[0] - 1).max().unwrap())
    }

    #[test]
    fn membership_examples() {
        assert!(evens().member(4));
        assert!(!evens().member(3));
        assert!(!EPSet::finite([1, 5, 9]).unwrap().member(7));
        assert!(EPSet::finite([1, 5, 9]).unwrap().member(9));
        let cof = EPSet::cofinite([3]).unwrap();
        assert!(!cof.member(3));
        assert!(cof.member(4) && cof.member(1000));
        assert!(!EPSet::naturals().member(0));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(evens().complement(), odds());
        assert_eq!(EPSet::empty().complement(), EPSet::naturals());
        let f = EPSet::finite([1, 5, 9]).unwrap();
        let c = f.complement();
        assert!(c.is_cofinite());
        assert!((1..40).all(|n| c.member(n) != [1, 5, 9].contains(&n)));
        assert_eq!(c.complement(), f);
    }

    #[test]
    fn finitely_change_examples() {
        let changed = evens().finitely_change(&[1], &[2]).unwrap();
        let expected: Vec<u64> = vec![1, 4, 6, 8, 10];
        assert_eq!(changed.iter().take(5).collect::<Vec<_>>(), expected);
        assert_eq!(
            EPSet::empty().finitely_change(&[3], &[]).unwrap(),
            EPSet::finite([3]).unwrap()
        );
        assert_eq!(evens().finitely_change(&[], &[]).unwrap(), evens());
        assert_eq!(
            evens().finitely_change(&[4], &[4]),
            Err(IntSeqError::Overlap(4))
        );
        assert_eq!(evens().finitely_change(&[0], &[]), Err(IntSeqError::ZeroIndex));
    }

    #[test]
    fn canonical_forms() {
        let a = EPSet::from_bits("0101", "0101").unwrap();
        assert_eq!(a, evens());
        assert_eq!(a.prefix_len(), 0);
        assert_eq!(a.period_len(), 2);
        let finite = EPSet::from_bits("1100", "000").unwrap();
        assert_eq!(finite.to_string(), "prefix=11;period=");
        assert_eq!(EPSet::from_bits("111", "11").unwrap(), EPSet::naturals());
        // prefix 1 then period 10 is the odds
        assert_eq!(EPSet::from_bits("1", "01").unwrap(), odds());
    }

    #[test]
    fn text_form_round_trip() {
        let s: EPSet = "prefix=101;period=01".parse().unwrap();
        assert!(s.member(1) && !s.member(2) && s.member(3) && !s.member(4) && s.member(5));
        assert_eq!(s.to_string().parse::<EPSet>().unwrap(), s);
        let finite: EPSet = "prefix=1;period=\"\"".parse().unwrap();
        assert_eq!(finite, EPSet::finite([1]).unwrap());
        assert!("prefix=12;period=0".parse::<EPSet>().is_err());
        assert!("period=0".parse::<EPSet>().is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap(&EPSet::finite([2, 7]).unwrap()), ExtNat::Infinite);
        assert_eq!(gap(&EPSet::empty()), ExtNat::Infinite);
        // brute-force scan gives 1 for the evens
        assert_eq!(scan_gap(&evens()), ExtNat::Finite(1));
        assert_eq!(gap(&evens()), ExtNat::Finite(1));
        assert_eq!(gap(&EPSet::naturals()), ExtNat::Finite(0));
    }

    #[test]
    fn cogap_examples() {
        assert_eq!(cogap(&EPSet::finite([1, 2, 3]).unwrap()), ExtNat::ZERO);
        assert_eq!(cogap(&EPSet::cofinite([2, 4]).unwrap()), ExtNat::Infinite);
        assert_eq!(scan_gap(&evens()), ExtNat::Finite(1));
        assert_eq!(cogap(&odds()), ExtNat::Finite(1));
        assert_eq!(cogap(&EPSet::naturals()), ExtNat::Infinite);
    }

    #[test]
    fn gap_wraparound() {
        // period 1000100: gaps 3 inside, 2 across the wrap
        let s = EPSet::from_bits("", "1000100").unwrap();
        assert_eq!(gap(&s), scan_gap(&s));
        assert_eq!(gap(&s), ExtNat::Finite(3));
        let t = EPSet::from_bits("11111", "0010").unwrap();
        assert_eq!(gap(&t), ExtNat::Finite(3));
        assert_eq!(cogap(&t), ExtNat::Finite(1));
    }

    #[test]
    fn ext_nat_order_and_json() {
        assert!(ExtNat::Finite(u64::MAX) < ExtNat::Infinite);
        assert_eq!(ExtNat::Finite(3).min(ExtNat::Infinite), ExtNat::Finite(3));
        assert_eq!(serde_json::to_string(&ExtNat::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<ExtNat>("7").unwrap(), ExtNat::Finite(7));
        assert_eq!(serde_json::from_str::<ExtNat>("\"inf\"").unwrap(), ExtNat::Infinite);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn raw() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
            (
                proptest::collection::vec(any::<bool>(), 0..8),
                proptest::collection::vec(any::<bool>(), 0..12),
            )
        }

        fn raw_member(prefix: &[bool], period: &[bool], n: u64) -> bool {
            let pos = (n - 1) as usize;
            if pos < prefix.len() {
                prefix[pos]
            } else if period.is_empty() {
                false
            } else {
                period[(pos - prefix.len()) % period.len()]
            }
        }

        proptest! {
            #[test]
            fn canonical_equality_matches_membership((p1, q1) in raw(), (p2, q2) in raw()) {
                let horizon = 4 * (p1.len() + q1.len() + p2.len() + q2.len()).max(1) as u64;
                let same = (1..=horizon).all(|n| raw_member(&p1, &q1, n) == raw_member(&p2, &q2, n));
                let a = EPSet::new(p1.clone(), q1.clone());
                let b = EPSet::new(p2.clone(), q2.clone());
                prop_assert_eq!(same, a == b);
                for n in 1..=horizon {
                    prop_assert_eq!(a.member(n), raw_member(&p1, &q1, n));
                }
            }

            #[test]
            fn complement_is_involution((p, q) in raw()) {
                let s = EPSet::new(p, q);
                prop_assert_eq!(s.complement().complement(), s.clone());
                prop_assert_eq!(cogap(&s), gap(&s.complement()));
            }

            #[test]
            fn gap_matches_scan((p, q) in raw()) {
                let s = EPSet::new(p, q);
                prop_assert_eq!(gap(&s), scan_gap(&s));
            }

            #[test]
            fn gap_is_finitely_insensitive(
                (p, q) in raw(),
                add in proptest::collection::vec(1u64..30, 0..4),
                remove in proptest::collection::vec(30u64..60, 0..4),
            ) {
                let s = EPSet::new(p, q);
                let changed = s.finitely_change(&add, &remove).unwrap();
                if !s.is_finite() {
                    prop_assert_eq!(gap(&changed), gap(&s));
                    prop_assert_eq!(cogap(&changed), cogap(&s));
                }
            }

            #[test]
            fn union_grows_and_gap_shrinks((p1, q1) in raw(), (p2, q2) in raw()) {
                let s = EPSet::new(p1, q1);
                let bigger = s.union(&EPSet::new(p2, q2));
                prop_assert!(s.is_subset(&bigger));
                prop_assert!(gap(&s) >= gap(&bigger));
                prop_assert!(cogap(&s) <= cogap(&bigger));
            }
        }
    }
}
