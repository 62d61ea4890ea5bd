use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tclb::bilinear::build_encoding;
use tclb::combinatorics::ContractionSpec;
use tclb::contraction::AlgorithmId;
use tclb::expansion::{
    bound_direct, bound_mm, bound_sympres, brute_force_max, build_dag_naive, check_dag_expansion,
    loomis_whitney_check, matching_bounds, max_over_simplex, subset_projection_check,
    verify_expansion, BoundFamily, ExpansionBound, VerificationMode, EXHAUSTIVE_LIMIT,
};

mod common;

const ALGORITHMS: [AlgorithmId; 3] = [
    AlgorithmId::Nonsym,
    AlgorithmId::Direct,
    AlgorithmId::SymPres,
];

/// Every (algorithm, spec, bound) in the sweep whose encoding has the given
/// size class.
/// Algorithm, shape, matching bound and encoding column count.
type Cell = (AlgorithmId, ContractionSpec, ExpansionBound, usize);

fn cells(small: bool) -> Vec<Cell> {
    let mut out = Vec::new();
    for spec in common::specs(4, 2..=4) {
        for alg in ALGORITHMS {
            let cols = build_encoding(alg, &spec).unwrap().rank_cols();
            if (cols <= EXHAUSTIVE_LIMIT) != small {
                continue;
            }
            for bound in matching_bounds(alg, &spec) {
                out.push((alg, spec, bound, cols));
            }
        }
    }
    out
}

#[test]
fn exhaustive_instances_have_no_violations() {
    let cells = cells(true);
    let named = |alg: AlgorithmId, n, s, t, v| {
        cells
            .iter()
            .any(|(a, spec, _, _)| *a == alg && *spec == ContractionSpec::new(n, s, t, v).unwrap())
    };
    assert!(named(AlgorithmId::Nonsym, 2, 1, 1, 0));
    assert!(named(AlgorithmId::Direct, 2, 1, 0, 1));
    assert!(named(AlgorithmId::Direct, 2, 1, 1, 0));
    assert!(named(AlgorithmId::SymPres, 2, 1, 1, 1));
    assert!(named(AlgorithmId::SymPres, 2, 1, 0, 1));
    for (alg, spec, bound, cols) in cells {
        let enc = build_encoding(alg, &spec).unwrap();
        let report = verify_expansion(&enc, &bound, VerificationMode::Exhaustive, 0, 0).unwrap();
        assert_eq!(report.subsets_checked, 1 << cols);
        assert!(
            report.passed(),
            "{alg} {spec} {bound}: {:?}",
            report.violations
        );
    }
}

#[test]
fn sampled_instances_have_no_violations() {
    let mut per_family: Vec<(BoundFamily, Vec<Cell>)> = Vec::new();
    for cell in cells(false) {
        let family = cell.2.family();
        match per_family.iter_mut().find(|(f, _)| *f == family) {
            Some((_, list)) => list.push(cell),
            None => per_family.push((family, vec![cell])),
        }
    }
    assert_eq!(per_family.len(), 4);
    for (family, mut list) in per_family {
        // the ten smallest instances keep the run short
        list.sort_by_key(|c| c.3);
        list.truncate(10);
        assert_eq!(list.len(), 10, "{family}");
        list.par_iter().for_each(|(alg, spec, bound, _)| {
            let enc = build_encoding(*alg, spec).unwrap();
            let report = verify_expansion(&enc, bound, VerificationMode::Sampled, 2000, 7).unwrap();
            assert_eq!(report.subsets_checked, 2000);
            assert!(
                report.passed(),
                "{alg} {spec} {bound}: {:?}",
                report.violations
            );
        });
    }
}

#[test]
fn exact_counts_for_small_matrix_product() {
    let spec = ContractionSpec::new(2, 1, 1, 1).unwrap();
    let enc = build_encoding(AlgorithmId::Nonsym, &spec).unwrap();
    let report = verify_expansion(
        &enc,
        &bound_mm(2, 2, 2).unwrap(),
        VerificationMode::Exhaustive,
        0,
        0,
    )
    .unwrap();
    assert_eq!(report.subsets_checked, 256);
    assert!(report.violations.is_empty());
}

#[test]
fn bounds_are_monotone() {
    let spec = ContractionSpec::new(3, 2, 1, 1).unwrap();
    let mv = ContractionSpec::new(3, 2, 1, 0).unwrap();
    let bounds = [
        bound_mm(4, 3, 2).unwrap(),
        bound_direct(&spec),
        tclb::expansion::bound_direct_mv(&mv).unwrap(),
        bound_sympres(&spec).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for bound in bounds {
        for _ in 0..100 {
            let d = [
                rng.gen_range(0..60u64),
                rng.gen_range(0..60),
                rng.gen_range(0..60),
            ];
            let base = bound.evaluate(d[0], d[1], d[2]);
            assert!(
                bound.evaluate(d[0] + 1, d[1], d[2]) >= base,
                "{bound} {d:?}"
            );
            assert!(
                bound.evaluate(d[0], d[1] + 1, d[2]) >= base,
                "{bound} {d:?}"
            );
            assert!(
                bound.evaluate(d[0], d[1], d[2] + 1) >= base,
                "{bound} {d:?}"
            );
        }
    }
}

#[test]
fn simplex_maximum_matches_search() {
    for h in 1..=20 {
        for spec in common::specs(3, 2..=3) {
            let direct = bound_direct(&spec);
            assert_eq!(
                max_over_simplex(&direct, h).unwrap(),
                brute_force_max(&direct, h).unwrap(),
                "{spec} H={h}"
            );
            if let Ok(sympres) = bound_sympres(&spec) {
                assert!(
                    brute_force_max(&sympres, h).unwrap() <= max_over_simplex(&sympres, h).unwrap()
                );
            }
        }
        let mm = bound_mm(3, 4, 5).unwrap();
        assert_eq!(
            max_over_simplex(&mm, h).unwrap(),
            brute_force_max(&mm, h).unwrap()
        );
    }
}

/// Checks the product form by powering integers: `|V|^e <= prod |L_S|`
/// with `e = C(m-1, r-1)`.
fn product_form(size: usize, projections: &[usize], e: u32) -> (bool, bool) {
    let lhs = (size as u128).pow(e);
    let rhs: u128 = projections.iter().map(|&p| p as u128).product();
    (lhs <= rhs, lhs == rhs)
}

fn choose(n: u32, k: u32) -> u32 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn loomis_whitney_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (m, r) in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)] {
        for _ in 0..500 {
            let side = rng.gen_range(1..=4usize);
            let count = rng.gen_range(1..=30);
            let tuples: Vec<Vec<usize>> = (0..count)
                .map(|_| (0..m).map(|_| rng.gen_range(0..side)).collect())
                .collect();
            let report = loomis_whitney_check(&tuples, r).unwrap();
            assert!(report.passed(), "{m} {r} {tuples:?}");
            let (holds, _) = product_form(
                report.size,
                &report.projection_sizes,
                choose(m as u32 - 1, r as u32 - 1),
            );
            assert!(holds);
        }
    }
}

#[test]
fn loomis_whitney_is_tight_on_cubes() {
    for (m, r) in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)] {
        for side in 1..=3usize {
            let cube: Vec<Vec<usize>> = (0..side.pow(m as u32))
                .map(|x| (0..m).map(|i| x / side.pow(i as u32) % side).collect())
                .collect();
            let report = loomis_whitney_check(&cube, r).unwrap();
            let (holds, tight) = product_form(
                report.size,
                &report.projection_sizes,
                choose(m as u32 - 1, r as u32 - 1),
            );
            assert!(holds && tight, "m={m} r={r} side={side}");
            assert_eq!(report.union_size, side.pow(r as u32));
        }
    }
}

#[test]
fn loomis_whitney_on_encoding_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in common::specs(3, 2..=3) {
        for alg in ALGORITHMS {
            let enc = build_encoding(alg, &spec).unwrap();
            for _ in 0..5 {
                let cols: Vec<usize> = (0..enc.rank_cols()).filter(|_| rng.gen_bool(0.5)).collect();
                for report in subset_projection_check(&enc, &cols).unwrap() {
                    assert!(report.passed(), "{alg} {spec}");
                }
            }
        }
    }
}

#[test]
fn dag_expansion_holds_on_small_encodings() {
    for (alg, spec, bound, _) in cells(true) {
        let dag = build_dag_naive(&build_encoding(alg, &spec).unwrap());
        assert!(dag.is_topologically_ordered());
        let report = check_dag_expansion(&dag, &bound, 200, 9).unwrap();
        assert_eq!(report.subsets_checked, 200);
        assert!(
            report.passed(),
            "{alg} {spec} {bound}: {:?}",
            report.violations
        );
    }
}
