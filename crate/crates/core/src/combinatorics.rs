//! Increasing index tuples, their ranking, and the partition and projection
//! collections used throughout the symmetric algorithms.
//!
//! Tuples are 1-based. An *increasing* tuple has non-decreasing entries, so
//! the increasing `d`-tuples over `[1, n]` are exactly the `d`-element
//! multisets drawn from `n` symbols. They are always enumerated in
//! lexicographic order, and [`tuple_rank`] gives a tuple's position in that
//! order.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

/// A sequence of 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexTuple(pub Vec<usize>);

impl IndexTuple {
    pub fn new(entries: Vec<usize>) -> Self {
        IndexTuple(entries)
    }

    pub fn empty() -> Self {
        IndexTuple(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn is_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    /// The sorted representative of this tuple.
    pub fn sorted(&self) -> IndexTuple {
        let mut e = self.0.clone();
        e.sort_unstable();
        IndexTuple(e)
    }

    /// Concatenation followed by sorting, i.e. the multiset union.
    pub fn merge(&self, other: &IndexTuple) -> IndexTuple {
        let mut e = Vec::with_capacity(self.len() + other.len());
        e.extend_from_slice(&self.0);
        e.extend_from_slice(&other.0);
        e.sort_unstable();
        IndexTuple(e)
    }
}

impl From<Vec<usize>> for IndexTuple {
    fn from(v: Vec<usize>) -> Self {
        IndexTuple(v)
    }
}

impl From<&[usize]> for IndexTuple {
    fn from(v: &[usize]) -> Self {
        IndexTuple(v.to_vec())
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Shape class of a contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionClass {
    /// Exactly one of `s`, `t`, `v` is zero.
    MatrixVector,
    /// All of `s`, `t`, `v` are positive.
    MatrixMatrix,
    /// Two or more of `s`, `t`, `v` are zero.
    Degenerate,
}

/// A contraction instance: `A` has order `s + v`, `B` has order `v + t`,
/// and `C` has order `s + t`, all over dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContractionSpec {
    pub n: usize,
    pub s: usize,
    pub t: usize,
    pub v: usize,
}

impl ContractionSpec {
    pub fn new(n: usize, s: usize, t: usize, v: usize) -> Result<Self> {
        if n == 0 {
            return Err(precondition("dimension n must be at least 1"));
        }
        Ok(ContractionSpec { n, s, t, v })
    }

    /// Total number of distinct index groups, `s + t + v`.
    pub fn omega(&self) -> usize {
        self.s + self.t + self.v
    }

    /// Largest tensor order among `A`, `B`, `C`.
    pub fn kappa(&self) -> usize {
        (self.s + self.v).max(self.v + self.t).max(self.s + self.t)
    }

    pub fn order_a(&self) -> usize {
        self.s + self.v
    }

    pub fn order_b(&self) -> usize {
        self.v + self.t
    }

    pub fn order_c(&self) -> usize {
        self.s + self.t
    }

    pub fn class(&self) -> ContractionClass {
        let zeros = [self.s, self.t, self.v].iter().filter(|&&x| x == 0).count();
        match zeros {
            0 => ContractionClass::MatrixMatrix,
            1 => ContractionClass::MatrixVector,
            _ => ContractionClass::Degenerate,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        ContractionSpec { n, ..*self }
    }
}

impl fmt::Display for ContractionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} (s,t,v)=({},{},{})", self.n, self.s, self.t, self.v)
    }
}

/// Binomial coefficient `C(n, k)` as a big integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of increasing `d`-tuples over `[1, n]`, i.e. `C(n + d - 1, d)`.
pub fn count_multisets(n: u64, d: u64) -> BigUint {
    if d == 0 {
        return BigUint::one();
    }
    if n == 0 {
        return BigUint::from(0u32);
    }
    binomial(n + d - 1, d)
}

/// Machine-word binomial; `None` on overflow.
pub fn binomial_u64(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc.checked_mul(n as u128 - i)? / (i + 1);
    }
    u64::try_from(acc).ok()
}

/// Machine-word variant of [`count_multisets`]; `None` on overflow.
pub fn count_multisets_u64(n: u64, d: u64) -> Option<u64> {
    if d == 0 {
        return Some(1);
    }
    if n == 0 {
        return Some(0);
    }
    binomial_u64(n + d - 1, d)
}

pub(crate) fn count_multisets_usize(n: usize, d: usize) -> usize {
    count_multisets_u64(n as u64, d as u64)
        .and_then(|x| usize::try_from(x).ok())
        .expect("tuple space too large to index in memory")
}

pub(crate) fn factorial_u64(d: usize) -> u64 {
    (1..=d as u64).product()
}

/// The space of increasing `d`-tuples over `[1, n]`, with a precomputed
/// table for constant-time-per-entry ranking.
#[derive(Debug, Clone)]
pub struct TupleSpace {
    n: usize,
    d: usize,
    // counts[m][e] = number of increasing e-tuples over m symbols
    counts: Vec<Vec<usize>>,
}

impl TupleSpace {
    pub fn new(n: usize, d: usize) -> Self {
        let counts = (0..=n)
            .map(|m| (0..=d).map(|e| count_multisets_usize(m, e)).collect())
            .collect();
        TupleSpace { n, d, counts }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.counts[self.n][self.d]
    }

    /// Rank of an increasing tuple given as a slice; entries are not checked.
    pub(crate) fn rank_unchecked(&self, t: &[usize]) -> usize {
        let mut r = 0;
        let mut prev = 1;
        for (i, &x) in t.iter().enumerate() {
            let rest = self.d - i - 1;
            for c in prev..x {
                r += self.counts[self.n - c + 1][rest];
            }
            prev = x;
        }
        r
    }

    pub fn rank(&self, t: &[usize]) -> Result<usize> {
        self.check(t)?;
        Ok(self.rank_unchecked(t))
    }

    fn check(&self, t: &[usize]) -> Result<()> {
        if t.len() != self.d {
            return Err(precondition(format!(
                "tuple has length {}, expected {}",
                t.len(),
                self.d
            )));
        }
        if t.iter().any(|&x| x == 0 || x > self.n) {
            return Err(precondition(format!(
                "tuple {} has entries outside [1, {}]",
                IndexTuple::from(t),
                self.n
            )));
        }
        if t.windows(2).any(|w| w[0] > w[1]) {
            return Err(precondition(format!(
                "tuple {} is not increasing",
                IndexTuple::from(t)
            )));
        }
        Ok(())
    }

    pub fn unrank(&self, mut r: usize) -> Result<IndexTuple> {
        if r >= self.size() {
            return Err(precondition(format!(
                "rank {r} out of range for {} increasing {}-tuples",
                self.size(),
                self.d
            )));
        }
        let mut out = Vec::with_capacity(self.d);
        let mut c = 1;
        for i in 0..self.d {
            let rest = self.d - i - 1;
            loop {
                let block = self.counts[self.n - c + 1][rest];
                if r < block {
                    break;
                }
                r -= block;
                c += 1;
            }
            out.push(c);
        }
        Ok(IndexTuple(out))
    }

    /// All tuples in lexicographic order.
    pub fn tuples(&self) -> Vec<IndexTuple> {
        enumerate_increasing(self.n, self.d)
    }
}

/// All increasing `d`-tuples over `[1, n]` in lexicographic order.
pub fn enumerate_increasing(n: usize, d: usize) -> Vec<IndexTuple> {
    let mut out = Vec::new();
    if d == 0 {
        out.push(IndexTuple::empty());
        return out;
    }
    if n == 0 {
        return out;
    }
    let mut cur = vec![1usize; d];
    loop {
        out.push(IndexTuple(cur.clone()));
        // advance: bump the rightmost entry below n, reset the tail to it
        let mut i = d;
        while i > 0 && cur[i - 1] == n {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let x = cur[i - 1] + 1;
        for e in &mut cur[i - 1..] {
            *e = x;
        }
    }
    out
}

/// Every tuple of `[1, n]^d` in row-major (lexicographic) order.
pub fn enumerate_cube(n: usize, d: usize) -> Vec<IndexTuple> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|flat| IndexTuple(unflatten(flat, n, d)))
        .collect()
}

/// Row-major offset of a 1-based tuple in `[1, n]^d`.
pub fn flatten(t: &[usize], n: usize) -> usize {
    t.iter().fold(0, |acc, &x| acc * n + (x - 1))
}

/// Inverse of [`flatten`].
pub fn unflatten(mut flat: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for slot in out.iter_mut().rev() {
        *slot = flat % n + 1;
        flat /= n;
    }
    out
}

/// Position of an increasing tuple in the lexicographic enumeration of
/// increasing tuples over `[1, n]`.
pub fn tuple_rank(t: &IndexTuple, n: usize) -> Result<usize> {
    TupleSpace::new(n, t.len()).rank(t.entries())
}

/// Inverse of [`tuple_rank`].
pub fn tuple_unrank(r: usize, n: usize, d: usize) -> Result<IndexTuple> {
    TupleSpace::new(n, d).unrank(r)
}

/// Number of distinct permutations of `t`: `d! / prod(m_i!)` over the
/// multiplicities `m_i` of its values.
///
/// # Panics
/// If the result does not fit in a `u64`.
pub fn multiplicity_factor(t: &IndexTuple) -> u64 {
    let sorted = t.sorted();
    let mut acc: u64 = 1;
    let mut placed: u64 = 0;
    let mut i = 0;
    let e = sorted.entries();
    while i < e.len() {
        let mut j = i;
        while j < e.len() && e[j] == e[i] {
            j += 1;
        }
        let m = (j - i) as u64;
        placed += m;
        acc = acc
            .checked_mul(binomial_u64(placed, m).expect("multinomial overflow"))
            .expect("multinomial overflow");
        i = j;
    }
    acc
}

/// All `k`-subsets of `0..len` in lexicographic order.
pub(crate) fn combinations(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > len {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == len - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

/// All `C(p+q, p)` order-preserving splits of `t` into a `p`-tuple and a
/// `q`-tuple, ordered by the lexicographic choice of the positions kept in
/// the first component. Repeated entries produce repeated pairs.
pub fn partitions(t: &IndexTuple, p: usize, q: usize) -> Result<Vec<(IndexTuple, IndexTuple)>> {
    if p + q != t.len() {
        return Err(precondition(format!(
            "cannot split a {}-tuple into parts of size {p} and {q}",
            t.len()
        )));
    }
    let e = t.entries();
    Ok(combinations(e.len(), p)
        .into_iter()
        .map(|kept| {
            let mut first = Vec::with_capacity(p);
            let mut second = Vec::with_capacity(q);
            let mut k = 0;
            for (pos, &x) in e.iter().enumerate() {
                if k < kept.len() && kept[k] == pos {
                    first.push(x);
                    k += 1;
                } else {
                    second.push(x);
                }
            }
            (IndexTuple(first), IndexTuple(second))
        })
        .collect())
}

/// [`partitions`] with duplicate pairs removed, keeping first occurrences.
pub fn unique_partitions(
    t: &IndexTuple,
    p: usize,
    q: usize,
) -> Result<Vec<(IndexTuple, IndexTuple)>> {
    let mut all = partitions(t, p, q)?;
    dedup_in_order(&mut all);
    Ok(all)
}

/// The first components of [`partitions`]`(t, r, len - r)`.
pub fn projections(t: &IndexTuple, r: usize) -> Result<Vec<IndexTuple>> {
    if r > t.len() {
        return Err(precondition(format!(
            "projection size {r} exceeds tuple length {}",
            t.len()
        )));
    }
    Ok(partitions(t, r, t.len() - r)?
        .into_iter()
        .map(|(a, _)| a)
        .collect())
}

/// [`projections`] with duplicates removed, keeping first occurrences.
pub fn unique_projections(t: &IndexTuple, r: usize) -> Result<Vec<IndexTuple>> {
    let mut all = projections(t, r)?;
    dedup_in_order(&mut all);
    Ok(all)
}

fn dedup_in_order<T: Clone + Eq + std::hash::Hash>(items: &mut Vec<T>) {
    let mut seen = std::collections::HashSet::new();
    items.retain(|x| seen.insert(x.clone()));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[usize]) -> IndexTuple {
        IndexTuple::from(v)
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(count_multisets(3, 2), BigUint::from(6u32));
        assert_eq!(count_multisets(7, 0), BigUint::from(1u32));
        assert_eq!(count_multisets(2, 3), BigUint::from(4u32));
        assert_eq!(count_multisets(0, 0), BigUint::from(1u32));
        assert_eq!(count_multisets(0, 2), BigUint::from(0u32));
        // far beyond u64
        assert_eq!(count_multisets(200, 40), binomial(239, 40));
        assert!(count_multisets_u64(200, 40).is_none());
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            enumerate_increasing(2, 3),
            vec![t(&[1, 1, 1]), t(&[1, 1, 2]), t(&[1, 2, 2]), t(&[2, 2, 2])]
        );
        assert_eq!(enumerate_increasing(3, 1), vec![t(&[1]), t(&[2]), t(&[3])]);
        assert_eq!(
            enumerate_increasing(3, 2),
            vec![
                t(&[1, 1]),
                t(&[1, 2]),
                t(&[1, 3]),
                t(&[2, 2]),
                t(&[2, 3]),
                t(&[3, 3])
            ]
        );
        assert_eq!(enumerate_increasing(4, 0), vec![IndexTuple::empty()]);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(tuple_rank(&t(&[2, 2]), 3).unwrap(), 3);
        assert_eq!(tuple_unrank(0, 3, 2).unwrap(), t(&[1, 1]));
        assert!(tuple_rank(&t(&[2, 1]), 3).is_err());
        assert!(tuple_rank(&t(&[1, 4]), 3).is_err());
        assert!(tuple_unrank(6, 3, 2).is_err());
    }

    #[test]
    fn rank_round_trip_small_spaces() {
        for n in 1..=6 {
            for d in 0..=4 {
                let space = TupleSpace::new(n, d);
                let all = enumerate_increasing(n, d);
                assert_eq!(
                    BigUint::from(all.len()),
                    count_multisets(n as u64, d as u64)
                );
                for (i, tup) in all.iter().enumerate() {
                    assert_eq!(space.rank(tup.entries()).unwrap(), i);
                    assert_eq!(&space.unrank(i).unwrap(), tup);
                }
            }
        }
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity_factor(&t(&[1, 1, 2])), 3);
        assert_eq!(multiplicity_factor(&t(&[1, 1, 1])), 1);
        assert_eq!(multiplicity_factor(&t(&[1, 2, 3])), 6);
        assert_eq!(multiplicity_factor(&t(&[2, 1, 2, 1])), 6);
        assert_eq!(multiplicity_factor(&IndexTuple::empty()), 1);
    }

    #[test]
    fn multiplicities_cover_the_cube() {
        for n in 1..=5usize {
            for d in 0..=4usize {
                let total: u64 = enumerate_increasing(n, d)
                    .iter()
                    .map(multiplicity_factor)
                    .sum();
                assert_eq!(total, (n as u64).pow(d as u32));
            }
        }
    }

    #[test]
    fn partition_examples() {
        let k = t(&[1, 2, 3]);
        assert_eq!(
            partitions(&k, 1, 2).unwrap(),
            vec![
                (t(&[1]), t(&[2, 3])),
                (t(&[2]), t(&[1, 3])),
                (t(&[3]), t(&[1, 2]))
            ]
        );
        let rep = t(&[1, 1]);
        assert_eq!(
            partitions(&rep, 1, 1).unwrap(),
            vec![(t(&[1]), t(&[1])), (t(&[1]), t(&[1]))]
        );
        assert_eq!(
            unique_partitions(&rep, 1, 1).unwrap(),
            vec![(t(&[1]), t(&[1]))]
        );
        assert_eq!(partitions(&t(&[5, 5, 9]), 2, 1).unwrap().len(), 3);
        assert!(partitions(&k, 2, 2).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            projections(&t(&[1, 2, 3]), 2).unwrap(),
            vec![t(&[1, 2]), t(&[1, 3]), t(&[2, 3])]
        );
        assert_eq!(projections(&t(&[1, 1]), 1).unwrap(), vec![t(&[1]), t(&[1])]);
        assert_eq!(unique_projections(&t(&[1, 1]), 1).unwrap(), vec![t(&[1])]);
        assert_eq!(
            projections(&t(&[4, 2]), 0).unwrap(),
            vec![IndexTuple::empty()]
        );
        assert!(projections(&t(&[1]), 2).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        for flat in 0..27 {
            let e = unflatten(flat, 3, 3);
            assert_eq!(flatten(&e, 3), flat);
        }
        assert_eq!(
            enumerate_cube(2, 2),
            vec![t(&[1, 1]), t(&[1, 2]), t(&[2, 1]), t(&[2, 2])]
        );
    }

    #[test]
    fn spec_derived_quantities() {
        let s = ContractionSpec::new(3, 2, 1, 1).unwrap();
        assert_eq!(s.omega(), 4);
        assert_eq!(s.kappa(), 3);
        assert_eq!(s.class(), ContractionClass::MatrixMatrix);
        assert_eq!(
            ContractionSpec::new(3, 1, 1, 0).unwrap().class(),
            ContractionClass::MatrixVector
        );
        assert_eq!(
            ContractionSpec::new(3, 1, 0, 0).unwrap().class(),
            ContractionClass::Degenerate
        );
        assert!(ContractionSpec::new(0, 1, 1, 1).is_err());
    }
}
