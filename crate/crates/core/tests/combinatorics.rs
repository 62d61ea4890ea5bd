use proptest::prelude::*;
use tclb::combinatorics::{
    count_multisets_u64, enumerate_cube, enumerate_increasing, multiplicity_factor, partitions,
    tuple_rank, tuple_unrank, unique_partitions, IndexTuple,
};

fn factorial(k: u64) -> u64 {
    (1..=k).product()
}

fn choose(n: u64, k: u64) -> u64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Nondecreasing tuples counted by filtering the whole cube.
fn brute_increasing(n: usize, d: usize) -> usize {
    enumerate_cube(n, d)
        .iter()
        .filter(|t| t.entries().windows(2).all(|w| w[0] <= w[1]))
        .count()
}

#[test]
fn increasing_tuples_match_cube_filter() {
    for n in 1..=6 {
        for d in 0..=4 {
            let listed = enumerate_increasing(n, d);
            assert_eq!(listed.len(), brute_increasing(n, d), "n={n} d={d}");
            assert_eq!(
                listed.len() as u64,
                count_multisets_u64(n as u64, d as u64).unwrap()
            );
            assert!(
                listed.windows(2).all(|w| w[0] < w[1]),
                "lexicographic order"
            );
        }
    }
}

#[test]
fn rank_and_unrank_are_inverse() {
    for n in 1..=6 {
        for d in 0..=4 {
            for (r, t) in enumerate_increasing(n, d).iter().enumerate() {
                assert_eq!(tuple_rank(t, n).unwrap(), r);
                assert_eq!(&tuple_unrank(r, n, d).unwrap(), t);
            }
        }
    }
}

#[test]
fn multiplicities_cover_the_cube() {
    for n in 1..=6u64 {
        for d in 0..=4 {
            let total: u64 = enumerate_increasing(n as usize, d)
                .iter()
                .map(multiplicity_factor)
                .sum();
            assert_eq!(total, n.pow(d as u32));
        }
    }
}

#[test]
fn partition_counts() {
    for t in enumerate_increasing(3, 4) {
        for p in 0..=4 {
            let all = partitions(&t, p, 4 - p).unwrap();
            assert_eq!(all.len() as u64, choose(4, p as u64));
            let unique = unique_partitions(&t, p, 4 - p).unwrap();
            let distinct = t.entries().windows(2).all(|w| w[0] != w[1]);
            assert!(unique.len() <= all.len());
            assert_eq!(
                unique.len() == all.len(),
                distinct || p == 0 || p == 4,
                "{t}"
            );
        }
    }
}

proptest! {
    #[test]
    fn partitions_merge_back(entries in proptest::collection::vec(1usize..=5, 0..=6), split in 0usize..=6) {
        let mut entries = entries;
        entries.sort_unstable();
        let t = IndexTuple::new(entries);
        let p = split.min(t.len());
        for (x, y) in partitions(&t, p, t.len() - p).unwrap() {
            prop_assert_eq!(x.len(), p);
            prop_assert!(x.is_increasing() && y.is_increasing());
            prop_assert_eq!(x.merge(&y), t.clone());
        }
    }
}
