use proptest::prelude::*;
use tclb::bilinear::{build_encoding, build_full_encoding};
use tclb::combinatorics::{count_multisets_u64, ContractionClass, ContractionSpec};
use tclb::contraction::{contract_direct, contract_nonsym, count_multiplications, AlgorithmId};
use tclb::tensors::{random_symmetric, DenseTensor};

mod common;

const ALGORITHMS: [AlgorithmId; 3] = [
    AlgorithmId::Nonsym,
    AlgorithmId::Direct,
    AlgorithmId::SymPres,
];

#[test]
fn column_counts_follow_closed_forms() {
    for spec in common::specs(4, 2..=4) {
        let n = spec.n as u64;
        let cm = |d: usize| count_multisets_u64(n, d as u64).unwrap();
        let nonsym = build_encoding(AlgorithmId::Nonsym, &spec).unwrap();
        assert_eq!(nonsym.rank_cols() as u64, n.pow(spec.omega() as u32));
        let direct = build_encoding(AlgorithmId::Direct, &spec).unwrap();
        assert_eq!(
            direct.rank_cols() as u64,
            cm(spec.s) * cm(spec.t) * cm(spec.v)
        );
        let sympres = build_encoding(AlgorithmId::SymPres, &spec).unwrap();
        if spec.class() != ContractionClass::Degenerate {
            assert_eq!(sympres.rank_cols() as u64, cm(spec.omega()), "{spec}");
            let full = build_full_encoding(AlgorithmId::SymPres, &spec).unwrap();
            assert_eq!(
                full.rank_cols() as u64,
                count_multiplications(AlgorithmId::SymPres, &spec)
                    .unwrap()
                    .total()
            );
        }
    }
}

#[test]
fn canonical_encodings_are_irreducible() {
    for spec in common::specs(4, 2..=3) {
        for alg in ALGORITHMS {
            assert!(
                build_encoding(alg, &spec).unwrap().is_irreducible(),
                "{alg} {spec}"
            );
        }
    }
}

#[test]
fn encodings_reproduce_contractions() {
    for spec in common::specs(3, 2..=3) {
        let (s, t, v) = (spec.s, spec.t, spec.v);
        let a = DenseTensor::random(spec.n, s + v, 11);
        let b = DenseTensor::random(spec.n, v + t, 12);
        let enc = build_encoding(AlgorithmId::Nonsym, &spec).unwrap();
        let expected = contract_nonsym(&a, &b, &spec).unwrap();
        assert_eq!(
            enc.apply(a.values(), b.values()).unwrap(),
            expected.values()
        );

        let a = random_symmetric(spec.n, s + v, 11);
        let b = random_symmetric(spec.n, v + t, 12);
        let expected = contract_direct(&a, &b, &spec).unwrap();
        let direct = build_encoding(AlgorithmId::Direct, &spec).unwrap();
        assert_eq!(
            direct.apply(a.values(), b.values()).unwrap(),
            expected.values(),
            "{spec}"
        );
        let full = build_full_encoding(AlgorithmId::SymPres, &spec).unwrap();
        assert_eq!(
            full.apply(a.values(), b.values()).unwrap(),
            expected.values(),
            "{spec}"
        );
    }
}

fn subset_case() -> impl Strategy<Value = (ContractionSpec, Vec<bool>, Vec<bool>)> {
    (0usize..3, 2usize..=3, 0usize..=2, 0usize..=2, 0usize..=2).prop_flat_map(
        |(alg, n, s, t, v)| {
            let spec = ContractionSpec::new(n, s, t, v).unwrap();
            let cols = build_encoding(ALGORITHMS[alg], &spec).unwrap().rank_cols();
            (
                Just(spec),
                proptest::collection::vec(any::<bool>(), cols),
                proptest::collection::vec(any::<bool>(), cols),
            )
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subsets_compose((spec, x, y) in subset_case()) {
        for alg in ALGORITHMS {
            let enc = build_encoding(alg, &spec).unwrap();
            let cols = enc.rank_cols();
            let union: Vec<usize> = (0..cols).filter(|&c| x.get(c) == Some(&true) || y.get(c) == Some(&true)).collect();
            prop_assert_eq!(enc.subset(&union).unwrap().rank_cols(), union.len());

            // a subset of a subset is the subset of the composed indices
            let outer = enc.subset(&union).unwrap();
            let inner: Vec<usize> = (0..union.len()).filter(|&i| x.get(union[i]) == Some(&true)).collect();
            let composed: Vec<usize> = inner.iter().map(|&i| union[i]).collect();
            prop_assert_eq!(outer.subset(&inner).unwrap(), enc.subset(&composed).unwrap());
        }
    }
}
