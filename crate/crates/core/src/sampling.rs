//! Seeded random generators for sets, sequences and families used by the
//! property suites.

use rand::Rng;

use crate::families::Subset;
use crate::intseq::EPSet;

/// Raw prefix and period bits, before canonicalization.
pub fn raw_bits<R: Rng>(rng: &mut R, max_prefix: usize, max_period: usize) -> (Vec<bool>, Vec<bool>) {
    let p = rng.gen_range(0..=max_prefix);
    let q = rng.gen_range(0..=max_period);
    let density: f64 = rng.gen_range(0.1..0.9);
    let prefix = (0..p).map(|_| rng.gen_bool(density)).collect();
    let period = (0..q).map(|_| rng.gen_bool(density)).collect();
    (prefix, period)
}

/// A random eventually periodic set with prefix at most 8 and period at most 12.
pub fn epset<R: Rng>(rng: &mut R) -> EPSet {
    let (prefix, period) = raw_bits(rng, 8, 12);
    EPSet::new(prefix, period)
}

/// A random superset of `s`, grown by a union and/or a finite addition.
pub fn superset<R: Rng>(rng: &mut R, s: &EPSet) -> EPSet {
    let mut out = s.clone();
    if rng.gen_bool(0.7) {
        out = out.union(&epset(rng));
    }
    if rng.gen_bool(0.5) {
        let add: Vec<u64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..40)).collect();
        out = out.finitely_change(&add, &[]).expect("nothing removed");
    }
    out
}

/// Disjoint random finite sets to add and remove.
pub fn finite_change<R: Rng>(rng: &mut R) -> (Vec<u64>, Vec<u64>) {
    let add = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(1..30)).collect();
    let remove = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(30..60)).collect();
    (add, remove)
}

pub fn subset<R: Rng>(rng: &mut R, n: usize) -> Subset {
    Subset(rng.gen::<u64>() & Subset::full(n).0)
}
